#include "rearrange/policies.hpp"

#include <algorithm>
#include <queue>

namespace rearrange {

namespace {

ActionKind move_kind_for(int heading, const Cell& delta) {
    if (delta == heading_dir(heading)) return ActionKind::MoveAhead;
    if (delta == heading_dir(heading + 180)) return ActionKind::MoveBack;
    if (delta == heading_dir(heading + 90)) return ActionKind::MoveRight;
    return ActionKind::MoveLeft;
}

}  // namespace

std::optional<std::vector<LowLevelAction>> astar_path(const GridMap& map,
                                                      const std::vector<bool>& dynamic_obstacles,
                                                      const AgentPose& start,
                                                      const Cell& goal_cell) {
    if (!map.free(start.cell)) return std::nullopt;
    if (start.cell == goal_cell) return std::vector<LowLevelAction>{};
    if (!map.free(goal_cell)) return std::nullopt;
    if (!dynamic_obstacles.empty() && dynamic_obstacles[map.index(goal_cell)])
        return std::nullopt;

    const std::size_t n = map.cell_count();
    std::vector<int> g(n, -1);
    std::vector<std::size_t> parent(n, SIZE_MAX);
    // (f, cell index): index in the key keeps the expansion order deterministic.
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const std::size_t si = map.index(start.cell);
    g[si] = 0;
    open.emplace(euclid(start.cell, goal_cell), si);
    static const Cell kSteps[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    while (!open.empty()) {
        const auto [f, ci] = open.top();
        open.pop();
        const Cell c = map.cell_at(ci);
        if (f > g[ci] + euclid(c, goal_cell) + 1e-9) continue;  // stale entry
        if (c == goal_cell) break;
        for (const Cell& s : kSteps) {
            const Cell nc{c.x + s.x, c.y + s.y};
            if (!map.free(nc)) continue;
            const std::size_t ni = map.index(nc);
            if (!dynamic_obstacles.empty() && dynamic_obstacles[ni]) continue;
            const int ng = g[ci] + 1;
            if (g[ni] < 0 || ng < g[ni]) {
                g[ni] = ng;
                parent[ni] = ci;
                open.emplace(ng + euclid(nc, goal_cell), ni);
            }
        }
    }
    const std::size_t gi = map.index(goal_cell);
    if (g[gi] < 0) return std::nullopt;

    std::vector<Cell> cells;
    for (std::size_t i = gi; i != si; i = parent[i]) cells.push_back(map.cell_at(i));
    cells.push_back(start.cell);
    std::reverse(cells.begin(), cells.end());

    std::vector<LowLevelAction> out;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        const Cell delta{cells[i + 1].x - cells[i].x, cells[i + 1].y - cells[i].y};
        out.push_back(LowLevelAction{move_kind_for(start.heading, delta)});
    }
    return out;
}

std::vector<LowLevelAction> rotate_plan(int current_heading, int target_heading) {
    const int diff = normalize_heading(target_heading - current_heading);
    switch (diff) {
        case 0: return {};
        case 90: return {LowLevelAction{ActionKind::RotateRight}};
        case 270: return {LowLevelAction{ActionKind::RotateLeft}};
        default:
            return {LowLevelAction{ActionKind::RotateLeft}, LowLevelAction{ActionKind::RotateLeft}};
    }
}

PickPlaceExecutor::PickPlaceExecutor(ObjectId object, Cell believed_cell,
                                     std::vector<PlaceCandidate> places, bool already_held)
    : object_(object), believed_cell_(believed_cell), places_(std::move(places)),
      phase_(already_held ? Phase::NavigateToPlace : Phase::OrientPick) {
    if (places_.empty()) {
        status_ = Status::NoPath;
        phase_ = Phase::Done;
    }
}

bool PickPlaceExecutor::plan_navigation(const GridMap& map, const std::vector<bool>& dyn,
                                        const AgentPose& pose) {
    const auto path = astar_path(map, dyn, pose, places_[place_idx_].stand);
    if (!path) return false;
    queue_ = *path;
    queue_pos_ = 0;
    return true;
}

bool PickPlaceExecutor::advance_place_candidate(const GridMap& map, const std::vector<bool>& dyn,
                                                const AgentPose& pose) {
    while (++place_idx_ < places_.size()) {
        if (plan_navigation(map, dyn, pose)) {
            phase_ = Phase::NavigateToPlace;
            return true;
        }
    }
    return false;
}

std::optional<LowLevelAction> PickPlaceExecutor::next(const GridMap& map,
                                                      const std::vector<bool>& dyn,
                                                      const AgentPose& pose) {
    if (status_ != Status::InProgress) return std::nullopt;
    switch (phase_) {
        case Phase::OrientPick: {
            const int want = heading_toward(pose.cell, believed_cell_);
            if (pose.heading != want) {
                auto turns = rotate_plan(pose.heading, want);
                return turns.front();
            }
            phase_ = Phase::AwaitPick;
            return LowLevelAction{ActionKind::Pick, object_, believed_cell_};
        }
        case Phase::NavigateToPlace: {
            if (queue_pos_ >= queue_.size()) {
                if (pose.cell == places_[place_idx_].stand) {
                    phase_ = Phase::OrientPlace;
                    return next(map, dyn, pose);
                }
                if (!plan_navigation(map, dyn, pose)) {
                    if (!advance_place_candidate(map, dyn, pose)) {
                        status_ = Status::NoPath;
                        return std::nullopt;
                    }
                }
                if (queue_pos_ >= queue_.size()) {
                    phase_ = Phase::OrientPlace;
                    return next(map, dyn, pose);
                }
            }
            return queue_[queue_pos_];
        }
        case Phase::OrientPlace: {
            const int want = heading_toward(pose.cell, places_[place_idx_].target);
            if (pose.heading != want) {
                auto turns = rotate_plan(pose.heading, want);
                return turns.front();
            }
            phase_ = Phase::AwaitPlace;
            return LowLevelAction{ActionKind::Place};
        }
        default:
            return std::nullopt;
    }
}

void PickPlaceExecutor::on_result(const LowLevelAction& action, bool success,
                                  const AgentPose& pose) {
    (void)pose;
    switch (phase_) {
        case Phase::AwaitPick:
            if (action.kind != ActionKind::Pick) return;
            if (success) {
                phase_ = Phase::NavigateToPlace;
                queue_.clear();
                queue_pos_ = 0;
            } else {
                status_ = Status::PickFailed;
                phase_ = Phase::Done;
            }
            break;
        case Phase::NavigateToPlace:
            if (is_navigation(action.kind)) {
                if (success) {
                    ++queue_pos_;
                } else {
                    // Bumped into something unexpected; replan from here. Too
                    // many bumps in one plan means the estimate is stale.
                    queue_.clear();
                    queue_pos_ = 0;
                    if (++bump_count_ > 8) {
                        status_ = Status::NoPath;
                        phase_ = Phase::Done;
                    }
                }
            }
            break;
        case Phase::AwaitPlace:
            if (action.kind != ActionKind::Place) return;
            if (success) {
                placed_at_ = places_[place_idx_].target;
                status_ = Status::Succeeded;
                phase_ = Phase::Done;
            } else {
                // Target occupied at arrival; one retry per remaining candidate.
                queue_.clear();
                queue_pos_ = 0;
                phase_ = Phase::NavigateToPlace;
                bool advanced = false;
                if (++place_idx_ < places_.size()) advanced = true;
                if (!advanced) {
                    status_ = Status::PlaceFailed;
                    phase_ = Phase::Done;
                }
            }
            break;
        default:
            break;
    }
}

}  // namespace rearrange
