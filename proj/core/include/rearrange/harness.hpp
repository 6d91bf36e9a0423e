#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rearrange/abstraction.hpp"
#include "rearrange/baselines.hpp"
#include "rearrange/belief.hpp"
#include "rearrange/planner.hpp"
#include "rearrange/scenegen.hpp"
#include "rearrange/sensor.hpp"

namespace rearrange {

enum class Method { Hoop, Fhc, HoopDepth1, Pk, Pd };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct StepRecord {
    int t = 0;
    std::string action;
    bool success = false;
    std::string sub_goal;
    std::vector<std::pair<ObjectId, double>> belief_max;
};

struct EpisodeOutcome {
    bool ss = false;      // all objects at their goals, judged on ground truth
    double os = 0.0;      // fraction of objects at their goals
    int total_actions = 0;
    double wall_time_s = 0.0;
    std::string termination;  // done_action | step_budget | exhausted
};

struct EpisodeLog {
    std::string scene_id;
    std::string method;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    EpisodeOutcome outcome;
};

// One JSON object per line: a header record, then step records, then the
// outcome. Wall time is deliberately left out of the serialization so that a
// rerun of the same (scene, method, seed) produces a byte-identical file.
std::string to_jsonl(const EpisodeLog& log);
EpisodeLog episode_log_from_jsonl(const std::string& text);

struct RunConfig {
    Method method = Method::Hoop;
    PlannerConfig planner;
    AbstractionConfig abstraction;
    SensorConfig sensor;
    // Per-class detector parameters; loaded from sensor_params_csv when the
    // in-memory table is empty.
    std::map<std::string, ClassSensorParams> sensor_params;
    std::string sensor_params_csv;
    int step_budget = 3000;
    std::uint64_t seed = 0;
    double fhc_theta = 0.7;
    bool fhc_map_known = true;
};

// Full perception -> belief update -> abstraction -> plan -> execute loop for
// one scene. Deterministic given (scene, cfg).
EpisodeLog run_episode(const SceneInstance& scene, const RunConfig& cfg);

struct MethodSummary {
    std::string method;
    int episodes = 0;
    double ss = 0.0;            // fraction of fully rearranged episodes
    double os = 0.0;            // mean per-episode object success
    std::optional<int> ta;      // ceil(mean actions over successful runs)
};

MethodSummary metrics(const std::vector<EpisodeLog>& logs);

std::string report_csv(const std::vector<MethodSummary>& rows);
std::string report_markdown(const std::vector<MethodSummary>& rows);

// Worker count for episode parallelism: REARRANGE_WORKERS, else the hardware
// concurrency.
int worker_count_from_env();

// Runs every scene with per-episode seeds derived from cfg.seed; when out_dir
// is nonempty, writes one <scene_id>_<method>.jsonl per episode. Episode
// results are independent of the worker count.
std::vector<EpisodeLog> run_episodes(const std::vector<SceneInstance>& scenes,
                                     const RunConfig& cfg, int workers,
                                     const std::string& out_dir = "");

}  // namespace rearrange
