#include "rearrange/abstraction.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace rearrange {

std::vector<bool> believed_obstacles(const BeliefState& b, const GridMap& map,
                                     double concentration_threshold) {
    std::vector<bool> blocked(map.cell_count(), false);
    for (const auto& [id, ob] : b.objects()) {
        if (ob.is_held) continue;
        if (ob.max_mass() < concentration_threshold) continue;
        const Cell anchor = ob.argmax(map);
        for (int dy = 0; dy < ob.footprint; ++dy)
            for (int dx = 0; dx < ob.footprint; ++dx) {
                const Cell c{anchor.x + dx, anchor.y + dy};
                if (map.in_bounds(c)) blocked[map.index(c)] = true;
            }
    }
    return blocked;
}

bool reachable(const GridMap& map, const std::vector<bool>& dynamic_obstacles,
               const Cell& from, const Cell& to) {
    if (!map.in_bounds(from) || !map.in_bounds(to)) return false;
    if (from == to) return map.free(from);
    const auto dist = bfs_distances(map, from, dynamic_obstacles);
    return dist[map.index(to)] >= 0;
}

namespace {

// Free reachable cell within interaction range of object_cell, closest to the
// agent along the path metric; ties broken in row-major order.
std::optional<Cell> best_stand(const GridMap& map, const std::vector<bool>& dyn,
                               const std::vector<int>& dist_from_agent, const Cell& object_cell,
                               double range_cells) {
    std::optional<Cell> best;
    int best_d = std::numeric_limits<int>::max();
    const int r = static_cast<int>(range_cells);
    for (int y = object_cell.y - r; y <= object_cell.y + r; ++y) {
        for (int x = object_cell.x - r; x <= object_cell.x + r; ++x) {
            const Cell c{x, y};
            if (!map.free(c) || c == object_cell) continue;
            if (!dyn.empty() && dyn[map.index(c)]) continue;
            if (euclid(c, object_cell) > range_cells + 1e-9) continue;
            // Picking needs the object in view, so a stand behind a wall
            // corner is useless even when it is inside the range circle.
            if (!line_of_sight(map, c, object_cell)) continue;
            const int d = dist_from_agent[map.index(c)];
            if (d < 0) continue;
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
    }
    return best;
}

}  // namespace

std::vector<PickCandidate> sample_pick_locations(const ObjectBelief& b, const GridMap& map,
                                                 const std::vector<bool>& dynamic_obstacles,
                                                 const Cell& agent_cell,
                                                 const AbstractionConfig& cfg,
                                                 std::mt19937_64& rng) {
    const auto dist = bfs_distances(map, agent_cell, dynamic_obstacles);
    std::vector<Cell> object_cells;
    if (b.max_mass() >= cfg.concentration_threshold) {
        object_cells.push_back(b.argmax(map));
    } else {
        // Weighted sampling with minimum pairwise separation.
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int k = 0; k < cfg.k_max; ++k) {
            double total = 0.0;
            for (std::size_t i = 0; i < b.prob.size(); ++i) {
                if (b.prob[i] <= 0.0) continue;
                const Cell c = map.cell_at(i);
                bool ok = true;
                for (const Cell& prev : object_cells)
                    if (euclid(c, prev) < cfg.min_separation_cells) { ok = false; break; }
                if (ok) total += b.prob[i];
            }
            if (total <= 0.0) break;
            double u = unit(rng) * total;
            Cell chosen{-1, -1};
            for (std::size_t i = 0; i < b.prob.size(); ++i) {
                if (b.prob[i] <= 0.0) continue;
                const Cell c = map.cell_at(i);
                bool ok = true;
                for (const Cell& prev : object_cells)
                    if (euclid(c, prev) < cfg.min_separation_cells) { ok = false; break; }
                if (!ok) continue;
                u -= b.prob[i];
                if (u <= 0.0) { chosen = c; break; }
            }
            if (chosen.x < 0) break;
            object_cells.push_back(chosen);
        }
    }
    std::vector<PickCandidate> out;
    for (const Cell& oc : object_cells) {
        const auto stand = best_stand(map, dynamic_obstacles, dist, oc,
                                      cfg.interaction_range_cells);
        if (stand) out.push_back(PickCandidate{*stand, oc});
    }
    return out;
}

std::vector<PlaceCandidate> sample_place_locations(const Cell& goal, int footprint,
                                                   const std::vector<ReceptacleInfo>& receptacles,
                                                   const GridMap& map,
                                                   const std::vector<bool>& dynamic_obstacles,
                                                   const Cell& agent_cell,
                                                   const AbstractionConfig& cfg) {
    const auto dist_agent = bfs_distances(map, agent_cell, dynamic_obstacles);
    static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

    // Rank alternate targets by static shortest-path distance from the goal:
    // receptacles for 1x1 objects, open 2x2 floor patches for blockers.
    std::vector<std::pair<double, Cell>> alts;
    const auto dist_goal = bfs_distances(map, goal);
    if (footprint == 1 && !receptacles.empty()) {
        for (const auto& rec : receptacles) {
            double d = std::numeric_limits<double>::max();
            for (const Cell& s : kSteps) {
                const Cell n{rec.cell.x + s.x, rec.cell.y + s.y};
                if (map.free(n) && dist_goal[map.index(n)] >= 0)
                    d = std::min(d, static_cast<double>(dist_goal[map.index(n)]));
            }
            if (d == std::numeric_limits<double>::max()) d = 1e6 + euclid(goal, rec.cell);
            alts.emplace_back(d, rec.cell);
        }
    } else if (footprint == 2) {
        for (std::size_t i = 0; i < map.cell_count(); ++i) {
            const Cell t = map.cell_at(i);
            if (std::abs(t.x - goal.x) < footprint && std::abs(t.y - goal.y) < footprint)
                continue;  // overlaps the goal patch
            bool ok = true;
            for (int dy = 0; dy < footprint && ok; ++dy)
                for (int dx = 0; dx < footprint; ++dx) {
                    const Cell c{t.x + dx, t.y + dy};
                    if (!map.free(c)) { ok = false; break; }
                }
            if (!ok) continue;
            if (dist_goal[i] < 0) continue;
            alts.emplace_back(static_cast<double>(dist_goal[i]), t);
        }
    }
    std::stable_sort(alts.begin(), alts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (footprint == 2) {
        // Keep only the nearest patches whose occupation would not disconnect
        // free space (a temporary placement must not seal anything off).
        const auto base = free_components(map, {});
        int nb = 0;
        for (int v : base) nb = std::max(nb, v + 1);
        std::vector<std::pair<double, Cell>> kept;
        for (const auto& [d, t] : alts) {
            if (static_cast<int>(kept.size()) >= cfg.alt_receptacles) break;
            std::vector<bool> blocked(map.cell_count(), false);
            for (int dy = 0; dy < footprint; ++dy)
                for (int dx = 0; dx < footprint; ++dx)
                    blocked[map.index(Cell{t.x + dx, t.y + dy})] = true;
            const auto after = free_components(map, blocked);
            int na = 0;
            for (int v : after) na = std::max(na, v + 1);
            if (na > nb) continue;
            kept.emplace_back(d, t);
        }
        alts = std::move(kept);
    }

    std::vector<Cell> targets{goal};
    for (std::size_t i = 0; i < alts.size() && static_cast<int>(i) < cfg.alt_receptacles; ++i)
        targets.push_back(alts[i].second);

    std::vector<PlaceCandidate> out;
    for (const Cell& t : targets) {
        // Footprint cells must be statically placeable (free, or a receptacle
        // for 1x1 objects).
        bool placeable = true;
        bool occupied = false;
        for (int dy = 0; dy < footprint && placeable; ++dy) {
            for (int dx = 0; dx < footprint; ++dx) {
                const Cell c{t.x + dx, t.y + dy};
                if (!map.in_bounds(c)) { placeable = false; break; }
                if (map.occupied(c)) {
                    const bool on_rec =
                        footprint == 1 &&
                        std::any_of(receptacles.begin(), receptacles.end(),
                                    [&](const ReceptacleInfo& r) { return r.cell == c; });
                    if (!on_rec) { placeable = false; break; }
                }
                if (!dynamic_obstacles.empty() && dynamic_obstacles[map.index(c)])
                    occupied = true;
            }
        }
        if (!placeable) continue;
        // Stand adjacent to the target anchor, outside the footprint.
        std::optional<Cell> stand;
        int best_d = std::numeric_limits<int>::max();
        for (const Cell& s : kSteps) {
            const Cell c{t.x + s.x, t.y + s.y};
            if (!map.free(c)) continue;
            if (c.x >= t.x && c.x < t.x + footprint && c.y >= t.y && c.y < t.y + footprint)
                continue;
            if (!dynamic_obstacles.empty() && dynamic_obstacles[map.index(c)]) continue;
            const int d = dist_agent[map.index(c)];
            if (d < 0) continue;
            if (d < best_d) { best_d = d; stand = c; }
        }
        if (!stand) continue;
        out.push_back(PlaceCandidate{*stand, t, occupied});
    }
    return out;
}

AbstractState generate_abstract_state(const BeliefState& b, const GridMap& map,
                                      const std::vector<ReceptacleInfo>& receptacles,
                                      const AgentPose& agent, const LastActionInfo& last,
                                      const AbstractState* prev, const AbstractionConfig& cfg,
                                      std::mt19937_64& rng) {
    AbstractState out;
    out.robot = agent.cell;
    out.heading = agent.heading;

    auto dyn = believed_obstacles(b, map, cfg.concentration_threshold);
    // The agent never plans through its own cell as an obstacle.
    dyn[map.index(agent.cell)] = false;

    for (const auto& [id, ob] : b.objects()) {
        AbstractObjectState s;
        s.id = id;
        s.class_name = ob.class_name;
        s.footprint = ob.footprint;
        s.goal = b.goal(id);
        s.loc = ob.argmax(map);

        // The belief collapses on every pick/place, so its flags already
        // reflect the full sub-goal outcome (a pick and a place can both land
        // between two abstraction calls). Placing anywhere other than the
        // goal leaves the task open; swaps depend on temporary placements
        // staying not-at-goal.
        s.is_held = ob.is_held;
        s.at_goal = ob.at_goal;
        (void)last;
        (void)prev;

        if (!s.is_held && !s.at_goal)
            s.picks = sample_pick_locations(ob, map, dyn, agent.cell, cfg, rng);
        s.place_locs = sample_place_locations(s.goal, s.footprint, receptacles, map, dyn,
                                              agent.cell, cfg);
        out.objects.push_back(std::move(s));
    }
    return out;
}

}  // namespace rearrange
