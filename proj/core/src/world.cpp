#include "rearrange/world.hpp"

#include <algorithm>

namespace rearrange {

std::string to_string(const LowLevelAction& a) {
    switch (a.kind) {
        case ActionKind::MoveAhead: return "MoveAhead";
        case ActionKind::MoveBack: return "MoveBack";
        case ActionKind::MoveLeft: return "MoveLeft";
        case ActionKind::MoveRight: return "MoveRight";
        case ActionKind::RotateLeft: return "RotateLeft";
        case ActionKind::RotateRight: return "RotateRight";
        case ActionKind::LookUp: return "LookUp";
        case ActionKind::LookDown: return "LookDown";
        case ActionKind::Pick: return "Pick(" + std::to_string(a.object_id) + ")";
        case ActionKind::Place: return "Place";
        case ActionKind::Start:
            return "Start(" + std::to_string(a.cell.x) + "," + std::to_string(a.cell.y) + ")";
        case ActionKind::Done: return "Done";
    }
    return "?";
}

bool is_navigation(ActionKind k) {
    switch (k) {
        case ActionKind::MoveAhead: case ActionKind::MoveBack:
        case ActionKind::MoveLeft: case ActionKind::MoveRight:
        case ActionKind::RotateLeft: case ActionKind::RotateRight:
        case ActionKind::LookUp: case ActionKind::LookDown:
            return true;
        default:
            return false;
    }
}

GridWorld::GridWorld(GridMap map, AgentPose agent, std::vector<WorldObject> objects,
                     WorldConfig cfg, std::uint64_t manip_seed)
    : map_(std::move(map)), agent_(agent), objects_(std::move(objects)), cfg_(cfg),
      manip_rng_(manip_seed) {}

const WorldObject& GridWorld::object(ObjectId id) const {
    for (const auto& o : objects_)
        if (o.id == id) return o;
    throw InvalidAction("unknown object id " + std::to_string(id));
}

WorldObject& GridWorld::object(ObjectId id) {
    return const_cast<WorldObject&>(static_cast<const GridWorld*>(this)->object(id));
}

std::optional<ObjectId> GridWorld::held_object() const {
    for (const auto& o : objects_)
        if (o.held) return o.id;
    return std::nullopt;
}

std::vector<bool> GridWorld::dynamic_obstacles() const {
    std::vector<bool> blocked(map_.cell_count(), false);
    for (const auto& o : objects_) {
        if (o.held) continue;
        for (const Cell& c : o.footprint_cells())
            if (map_.in_bounds(c)) blocked[map_.index(c)] = true;
    }
    return blocked;
}

bool GridWorld::cell_blocked_by_object(const Cell& c, ObjectId ignore) const {
    for (const auto& o : objects_) {
        if (o.held || o.id == ignore) continue;
        for (const Cell& f : o.footprint_cells())
            if (f == c) return true;
    }
    return false;
}

std::vector<std::pair<ObjectId, Cell>> GridWorld::visible_objects() const {
    std::vector<std::pair<ObjectId, Cell>> out;
    const double range = sensing_range_cells();
    for (const auto& o : objects_) {
        if (o.held) continue;
        if (!in_view_cone(agent_.cell, agent_.heading, o.cell, range)) continue;
        if (!line_of_sight(map_, agent_.cell, o.cell)) continue;
        out.emplace_back(o.id, o.cell);
    }
    return out;
}

bool GridWorld::try_move(const Cell& delta) {
    const Cell target{agent_.cell.x + delta.x, agent_.cell.y + delta.y};
    if (!map_.free(target)) return false;
    if (cell_blocked_by_object(target)) return false;
    agent_.cell = target;
    return true;
}

bool GridWorld::try_pick(ObjectId id) {
    const WorldObject& o = object(id);  // throws InvalidAction on bad id
    if (held_object()) return false;
    if (o.held) return false;
    if (euclid(agent_.cell, o.cell) > interaction_range_cells() + 1e-9) return false;
    const auto vis = visible_objects();
    const bool seen = std::any_of(vis.begin(), vis.end(),
                                  [&](const auto& v) { return v.first == id; });
    if (!seen) return false;
    if (cfg_.manip_failure_prob > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(manip_rng_) < cfg_.manip_failure_prob)
        return false;
    object(id).held = true;
    return true;
}

bool GridWorld::try_place() {
    const auto held = held_object();
    if (!held) return false;
    WorldObject& o = object(*held);
    const Cell dir = heading_dir(agent_.heading);
    const Cell front{agent_.cell.x + dir.x, agent_.cell.y + dir.y};
    // 1x1 objects may go on a free cell or on a receptacle; blockers need a
    // fully free footprint.
    for (int dy = 0; dy < o.footprint; ++dy) {
        for (int dx = 0; dx < o.footprint; ++dx) {
            const Cell c{front.x + dx, front.y + dy};
            if (!map_.in_bounds(c)) return false;
            if (c == agent_.cell) return false;
            if (cell_blocked_by_object(c, o.id)) return false;
            if (map_.occupied(c)) {
                const bool on_receptacle =
                    o.footprint == 1 &&
                    std::any_of(map_.receptacles().begin(), map_.receptacles().end(),
                                [&](const ReceptacleInfo& r) { return r.cell == c; });
                if (!on_receptacle) return false;
            }
        }
    }
    if (cfg_.manip_failure_prob > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(manip_rng_) < cfg_.manip_failure_prob)
        return false;
    o.cell = front;
    o.held = false;
    return true;
}

StepResult GridWorld::step(const LowLevelAction& action) {
    bool success = true;
    if (done_) {
        success = false;
    } else {
        switch (action.kind) {
            case ActionKind::MoveAhead: success = try_move(heading_dir(agent_.heading)); break;
            case ActionKind::MoveBack: success = try_move(heading_dir(agent_.heading + 180)); break;
            case ActionKind::MoveLeft: success = try_move(heading_dir(agent_.heading + 270)); break;
            case ActionKind::MoveRight: success = try_move(heading_dir(agent_.heading + 90)); break;
            case ActionKind::RotateLeft:
                agent_.heading = normalize_heading(agent_.heading - cfg_.rotation_step_deg);
                break;
            case ActionKind::RotateRight:
                agent_.heading = normalize_heading(agent_.heading + cfg_.rotation_step_deg);
                break;
            case ActionKind::LookUp:
                agent_.camera_tilt = std::min(30, agent_.camera_tilt + 30);
                break;
            case ActionKind::LookDown:
                agent_.camera_tilt = std::max(-30, agent_.camera_tilt - 30);
                break;
            case ActionKind::Pick: success = try_pick(action.object_id); break;
            case ActionKind::Place: success = try_place(); break;
            case ActionKind::Start:
                if (map_.free(action.cell) && !cell_blocked_by_object(action.cell))
                    agent_.cell = action.cell;
                else
                    success = false;
                break;
            case ActionKind::Done: done_ = true; break;
        }
    }
    return StepResult{success, agent_, visible_objects()};
}

std::pair<GridMap, std::vector<ReceptacleInfo>> GridWorld::walkthrough(std::uint64_t seed,
                                                                       int samples) const {
    const auto dist = bfs_distances(map_, agent_.cell);
    GridMap out = map_;
    for (std::size_t i = 0; i < map_.cell_count(); ++i) {
        const Cell c = map_.cell_at(i);
        if (map_.free(c) && dist[i] < 0) out.set_occupied(c, true);
    }
    // Scripted traversal: uniformly sampled targets, disconnected ones skipped.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dx(0, map_.width() - 1), dy(0, map_.height() - 1);
    int visited = 0;
    for (int i = 0; i < samples; ++i) {
        const Cell c{dx(rng), dy(rng)};
        if (map_.free(c) && dist[map_.index(c)] >= 0) ++visited;
    }
    (void)visited;
    std::vector<ReceptacleInfo> seen;
    static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& r : map_.receptacles()) {
        for (const Cell& s : kSteps) {
            const Cell n{r.cell.x + s.x, r.cell.y + s.y};
            if (map_.free(n) && dist[map_.index(n)] >= 0) {
                seen.push_back(r);
                break;
            }
        }
    }
    out.receptacles() = seen;
    return {std::move(out), std::move(seen)};
}

}  // namespace rearrange
