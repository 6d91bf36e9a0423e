#pragma once
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rearrange/grid.hpp"

namespace rearrange {

using ObjectId = int;

struct AgentPose {
    Cell cell;
    int heading = 0;      // {0, 90, 180, 270}
    int camera_tilt = 0;  // {-30, 0, +30}
    friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

struct WorldObject {
    ObjectId id = 0;
    std::string class_name;
    Cell cell;          // anchor; meaningless while held
    int footprint = 1;  // side length: 1 for normal objects, 2 for path blockers
    bool held = false;

    std::vector<Cell> footprint_cells() const {
        std::vector<Cell> out;
        for (int dy = 0; dy < footprint; ++dy)
            for (int dx = 0; dx < footprint; ++dx)
                out.push_back(Cell{cell.x + dx, cell.y + dy});
        return out;
    }
};

enum class ActionKind {
    MoveAhead, MoveBack, MoveLeft, MoveRight,
    RotateLeft, RotateRight, LookUp, LookDown,
    Pick, Place, Start, Done,
};

struct LowLevelAction {
    ActionKind kind = ActionKind::MoveAhead;
    ObjectId object_id = -1;  // Pick only
    Cell cell;                // Start only
    friend bool operator==(const LowLevelAction&, const LowLevelAction&) = default;
};

std::string to_string(const LowLevelAction& a);
bool is_navigation(ActionKind k);

struct StepResult {
    bool success = false;
    AgentPose agent_pose;
    std::vector<std::pair<ObjectId, Cell>> visible;
};

struct InvalidAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WorldConfig {
    double max_sensing_range_m = 4.0;
    double interaction_range_m = 2.0;
    double manip_failure_prob = 0.0;  // emulates imperfect pick/place controllers
    int rotation_step_deg = 90;
};

// Deterministic multi-room grid environment: ground truth state plus the
// low-level action interface.
class GridWorld {
public:
    GridWorld(GridMap map, AgentPose agent, std::vector<WorldObject> objects,
              WorldConfig cfg = {}, std::uint64_t manip_seed = 0);

    StepResult step(const LowLevelAction& action);

    // Objects inside the 90-degree cone, within sensing range, with line of
    // sight over static occupancy. Deterministic.
    std::vector<std::pair<ObjectId, Cell>> visible_objects() const;

    // Scripted traversal over uniformly sampled reachable cells; exports the
    // static occupancy map (unreachable pockets marked occupied) plus every
    // receptacle adjacent to reachable space.
    std::pair<GridMap, std::vector<ReceptacleInfo>> walkthrough(std::uint64_t seed = 0,
                                                                int samples = 64) const;

    const GridMap& map() const { return map_; }
    const AgentPose& agent() const { return agent_; }
    const std::vector<WorldObject>& objects() const { return objects_; }
    const WorldObject& object(ObjectId id) const;
    WorldObject& object(ObjectId id);
    std::optional<ObjectId> held_object() const;
    bool done() const { return done_; }
    const WorldConfig& config() const { return cfg_; }

    double interaction_range_cells() const {
        return map_.cells_from_meters(cfg_.interaction_range_m);
    }
    double sensing_range_cells() const {
        return map_.cells_from_meters(cfg_.max_sensing_range_m);
    }

    // Cells blocked by placed object footprints (static occupancy excluded).
    std::vector<bool> dynamic_obstacles() const;
    bool cell_blocked_by_object(const Cell& c, ObjectId ignore = -1) const;

private:
    bool try_move(const Cell& delta);
    bool try_pick(ObjectId id);
    bool try_place();

    GridMap map_;
    AgentPose agent_;
    std::vector<WorldObject> objects_;
    WorldConfig cfg_;
    std::mt19937_64 manip_rng_;
    bool done_ = false;
};

}  // namespace rearrange
