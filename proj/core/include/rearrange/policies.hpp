#pragma once
#include <optional>
#include <vector>

#include "rearrange/abstraction.hpp"
#include "rearrange/grid.hpp"
#include "rearrange/world.hpp"

namespace rearrange {

// Minimum-cost Move sequence from start to goal_cell (cost = action count,
// Euclidean heuristic, row-major neighbor order for deterministic ties).
// Strafe actions cover all four directions, so no turns are required.
// nullopt when the goal is unreachable.
std::optional<std::vector<LowLevelAction>> astar_path(const GridMap& map,
                                                      const std::vector<bool>& dynamic_obstacles,
                                                      const AgentPose& start,
                                                      const Cell& goal_cell);

// Minimal RotateLeft/RotateRight sequence (length <= 2, 180 resolved left).
std::vector<LowLevelAction> rotate_plan(int current_heading, int target_heading);

// Three-phase PickPlace executor: orient + pick, navigate to the place
// stand-cell, orient + place. Place failures fall through to the next
// place candidate; pick failures abort and are surfaced to the caller.
class PickPlaceExecutor {
public:
    enum class Status { InProgress, Succeeded, PickFailed, PlaceFailed, NoPath };

    PickPlaceExecutor(ObjectId object, Cell believed_cell,
                      std::vector<PlaceCandidate> places, bool already_held);

    // Next low-level action to run, or nullopt if the plan is finished.
    std::optional<LowLevelAction> next(const GridMap& map,
                                       const std::vector<bool>& dynamic_obstacles,
                                       const AgentPose& pose);

    // Feed back the world's result for the action just executed.
    void on_result(const LowLevelAction& action, bool success, const AgentPose& pose);

    Status status() const { return status_; }
    ObjectId object() const { return object_; }
    std::optional<Cell> placed_at() const { return placed_at_; }

private:
    enum class Phase { OrientPick, AwaitPick, NavigateToPlace, OrientPlace, AwaitPlace, Done };

    bool plan_navigation(const GridMap& map, const std::vector<bool>& dyn,
                         const AgentPose& pose);
    bool advance_place_candidate(const GridMap& map, const std::vector<bool>& dyn,
                                 const AgentPose& pose);

    ObjectId object_;
    Cell believed_cell_;
    std::vector<PlaceCandidate> places_;
    std::size_t place_idx_ = 0;
    Phase phase_;
    Status status_ = Status::InProgress;
    std::vector<LowLevelAction> queue_;
    std::size_t queue_pos_ = 0;
    int bump_count_ = 0;
    std::optional<Cell> placed_at_;
};

}  // namespace rearrange
