#pragma once
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rearrange/grid.hpp"
#include "rearrange/world.hpp"

namespace rearrange {

struct ClassSensorParams {
    std::string class_name;
    double tp = 1.0;  // true-positive probability
    double fp = 0.0;  // false-positive probability
    double r = 4.0;   // average true-positive detection distance, meters
};

struct MissingParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Factored observation: one entry (detection cell or null) per tracked object.
struct Observation {
    AgentPose robot;
    std::map<ObjectId, std::optional<Cell>> per_object;
};

struct SensorConfig {
    double sigma_cells = 1.0;  // detections snap to grid; 3*sigma gating radius
    bool perfect = false;      // PD oracle: tp=1, fp=0, delta=1
};

class SensorModel {
public:
    SensorModel(std::map<std::string, ClassSensorParams> params, SensorConfig cfg = {});

    // Loads the per-class (class, r, TP, FP) table from CSV.
    static std::map<std::string, ClassSensorParams> load_params_csv(const std::string& path);

    const ClassSensorParams& params_for(const std::string& class_name) const;

    // Samples one factored observation. Visible objects are reported at their
    // true cell with probability tp*delta; non-visible tracked objects yield a
    // false detection (uniform over the view cone within r) with probability fp.
    Observation detect(const std::vector<std::pair<ObjectId, Cell>>& visible,
                       const std::vector<std::pair<ObjectId, std::string>>& all_tracked,
                       const GridMap& map, const AgentPose& robot,
                       double sensing_range_cells, std::mt19937_64& rng) const;

    // Five-case observation likelihood for one object.
    double obs_likelihood(const std::optional<Cell>& z, const Cell& candidate,
                          const AgentPose& robot, const ClassSensorParams& params,
                          const GridMap& map, double sensing_range_cells) const;

    // In-view predicate shared by detect and obs_likelihood: cone + range + LOS.
    static bool in_view(const GridMap& map, const AgentPose& robot, const Cell& c,
                        double sensing_range_cells);

    // Precomputed visibility for one robot pose, so that evaluating the
    // likelihood over every candidate cell stays linear.
    struct ObsContext {
        AgentPose robot;
        std::vector<bool> in_view;              // per cell: cone + range + LOS
        std::map<std::string, int> cone_counts; // |V_E(r)| per class
    };
    ObsContext make_context(const GridMap& map, const AgentPose& robot,
                            double sensing_range_cells,
                            const std::vector<std::string>& classes) const;
    double obs_likelihood_ctx(const ObsContext& ctx, const std::optional<Cell>& z,
                              const Cell& candidate, const ClassSensorParams& params,
                              const GridMap& map) const;

    const SensorConfig& config() const { return cfg_; }
    void set_perfect(bool v) { cfg_.perfect = v; }

private:
    double delta_weight(const GridMap& map, const AgentPose& robot, const Cell& target,
                        double r_m) const;
    int cone_cell_count(const GridMap& map, const AgentPose& robot, double r_m) const;

    std::map<std::string, ClassSensorParams> params_;
    SensorConfig cfg_;
};

}  // namespace rearrange
