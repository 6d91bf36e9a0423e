#pragma once
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rearrange/grid.hpp"
#include "rearrange/world.hpp"

#include "json.hpp"

namespace rearrange {

struct SceneObjectSpec {
    ObjectId id = 0;
    std::string class_name;
    int footprint = 1;
    Cell start;
    Cell goal;
    friend bool operator==(const SceneObjectSpec&, const SceneObjectSpec&) = default;
};

struct SceneMetadata {
    int n_rooms = 1;
    int n_objects = 0;
    bool has_blocked_path = false;
    bool has_blocked_goal = false;
    bool has_swap = false;
    double visibility_fraction = 0.0;
    std::uint64_t seed = 0;
    friend bool operator==(const SceneMetadata&, const SceneMetadata&) = default;
};

// One serialized benchmark instance: static map, object starts and goals,
// agent start, and the flags the generator promises hold of the geometry.
struct SceneInstance {
    std::string id;
    GridMap map;
    std::vector<SceneObjectSpec> objects;  // blockers included, footprint 2
    AgentPose agent_start;
    SceneMetadata metadata;
    friend bool operator==(const SceneInstance&, const SceneInstance&) = default;
};

struct GenConfig {
    int n_rooms = 2;
    int n_objects = 5;
    bool blocked_path = false;
    bool blocked_goal = false;
    bool swap = false;
    double min_avg_displacement = 25.0;  // mean start->goal shortest path, steps
    double cross_room_fraction = 0.5;
    std::uint64_t seed = 0;
    // Optional separate floorplan seed so one layout can host several
    // placements; defaults to being derived from `seed`.
    std::optional<std::uint64_t> floorplan_seed;
};

struct ConstraintUnsatisfiable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoCutFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rectangular-partition floorplan with door gaps and receptacles, plus
// constrained object and goal placement. Deterministic given cfg.
SceneInstance generate_scene(const GenConfig& cfg);

// Places a movable 2x2 blocker on the 2x2 free square whose removal
// disconnects free space and cuts off the most object starts; the blocker's
// goal lies in the agent-reachable component. Throws NoCutFound if no such
// square exists.
SceneInstance insert_blocked_path(const SceneInstance& scene, std::mt19937_64& rng);

// Fraction of target objects inside the agent's initial view cone with line
// of sight.
double visibility_fraction(const SceneInstance& scene);

// Greedy omniscient solver used as the generator's solvability certificate:
// move any object whose goal placement is currently feasible; when stuck,
// relocate an in-the-way object to an alternate spot first.
bool scripted_solve(const SceneInstance& scene, std::vector<std::string>* trace = nullptr);

struct VerifyResult {
    bool ok = false;
    double mean_displacement = 0.0;
    double cross_room_fraction = 0.0;
    bool per_room_coverage = false;
    bool blocked_path_certificate = true;
    bool solvable = false;
    std::vector<std::string> failures;  // human-readable reasons when !ok
};

// Re-checks every generator promise from the serialized instance alone.
VerifyResult verify_scene(const SceneInstance& scene,
                          double min_avg_displacement = 25.0,
                          double min_cross_room_fraction = 0.5);

nlohmann::json scene_to_json(const SceneInstance& scene);
SceneInstance scene_from_json(const nlohmann::json& j);
void save_scene(const SceneInstance& scene, const std::string& path);
SceneInstance load_scene(const std::string& path);

// Ground-truth world seeded from the instance.
GridWorld make_world(const SceneInstance& scene, WorldConfig cfg = {},
                     std::uint64_t manip_seed = 0);

}  // namespace rearrange
