#include "rearrange/baselines.hpp"

#include <algorithm>
#include <limits>

namespace rearrange {

std::vector<FrontierCluster> frontier_clusters(const GridMap& map,
                                               const std::vector<CellKnowledge>& known) {
    static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::vector<bool> frontier(map.cell_count(), false);
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        if (known[i] != CellKnowledge::Free) continue;
        const Cell c = map.cell_at(i);
        for (const Cell& s : kSteps) {
            const Cell n{c.x + s.x, c.y + s.y};
            if (map.in_bounds(n) && known[map.index(n)] == CellKnowledge::Unknown) {
                frontier[i] = true;
                break;
            }
        }
    }

    std::vector<int> label(map.cell_count(), -1);
    std::vector<FrontierCluster> out;
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        if (!frontier[i] || label[i] >= 0) continue;
        FrontierCluster cluster;
        std::vector<std::size_t> stack{i};
        label[i] = static_cast<int>(out.size());
        while (!stack.empty()) {
            const std::size_t j = stack.back();
            stack.pop_back();
            const Cell c = map.cell_at(j);
            cluster.cells.push_back(c);
            for (const Cell& s : kSteps) {
                const Cell n{c.x + s.x, c.y + s.y};
                if (!map.in_bounds(n)) continue;
                const std::size_t k = map.index(n);
                if (frontier[k] && label[k] < 0) {
                    label[k] = label[j];
                    stack.push_back(k);
                }
            }
        }
        double mx = 0.0, my = 0.0;
        for (const Cell& c : cluster.cells) {
            mx += c.x;
            my += c.y;
        }
        mx /= cluster.cells.size();
        my /= cluster.cells.size();
        double best = std::numeric_limits<double>::max();
        for (const Cell& c : cluster.cells) {
            const double d = (c.x - mx) * (c.x - mx) + (c.y - my) * (c.y - my);
            if (d < best) {
                best = d;
                cluster.centroid = c;
            }
        }
        out.push_back(std::move(cluster));
    }
    return out;
}

FhcPolicy::FhcPolicy(const GridMap& map, FhcConfig cfg) : map_(map), cfg_(cfg) {
    known_.assign(map.cell_count(), CellKnowledge::Unknown);
    if (cfg_.map_known) {
        // Occupancy is given; "unknown" means object-bearing area the agent
        // has not yet swept with its camera.
        for (std::size_t i = 0; i < map.cell_count(); ++i)
            if (map.occupied(map.cell_at(i))) known_[i] = CellKnowledge::Occupied;
    }
}

void FhcPolicy::observe(const AgentPose& pose, double sensing_range_cells) {
    const double range = std::min(sensing_range_cells, cfg_.coverage_range_cells);
    known_[map_.index(pose.cell)] = map_.occupied(pose.cell) ? CellKnowledge::Occupied
                                                             : CellKnowledge::Free;
    for (const Cell& c : view_cone_cells(map_, pose.cell, pose.heading, range)) {
        if (!line_of_sight(map_, pose.cell, c)) continue;
        known_[map_.index(c)] =
            map_.occupied(c) ? CellKnowledge::Occupied : CellKnowledge::Free;
    }
}

void FhcPolicy::mark_exhausted(ObjectId object, const Cell& believed_cell) {
    exhausted_.insert({object, believed_cell});
    found_.erase(object);
}

void FhcPolicy::mark_placed(ObjectId object) {
    placed_.insert(object);
    found_.erase(object);
}

void FhcPolicy::mark_unreachable(const Cell& centroid) { unreachable_.insert(centroid); }

FhcSubGoal FhcPolicy::step(const BeliefState& b, const Cell& agent_cell) {
    for (const auto& [id, ob] : b.objects()) {
        if (placed_.count(id) || found_.count(id)) continue;
        if (ob.max_mass() <= cfg_.theta) continue;
        if (exhausted_.count({id, ob.argmax(map_)})) continue;
        found_.insert(id);
    }

    const auto dist = bfs_distances(map_, agent_cell);
    if (!found_.empty()) {
        ObjectId best = -1;
        int best_d = std::numeric_limits<int>::max();
        for (ObjectId id : found_) {
            const Cell c = b.object(id).argmax(map_);
            // Distance to the believed object cell; unreachable cells rank
            // last but stay eligible (the executor reports failure properly).
            int d = std::numeric_limits<int>::max() - 1;
            if (map_.in_bounds(c) && dist[map_.index(c)] >= 0) d = dist[map_.index(c)];
            if (d < best_d || (d == best_d && (best < 0 || id < best))) {
                best_d = d;
                best = id;
            }
        }
        FhcSubGoal g;
        g.kind = FhcSubGoal::Kind::PickPlace;
        g.object = best;
        g.object_cell = b.object(best).argmax(map_);
        g.target = b.goal(best);
        return g;
    }

    auto clusters = frontier_clusters(map_, known_);
    std::erase_if(clusters, [&](const FrontierCluster& cl) {
        return unreachable_.count(cl.centroid) > 0;
    });
    if (clusters.empty()) {
        bool remaining = false;
        for (const auto& [id, ob] : b.objects())
            if (!placed_.count(id)) remaining = true;
        if (remaining)
            throw Exhausted("no frontiers left, nothing found, objects still unplaced");
        FhcSubGoal g;
        g.kind = FhcSubGoal::Kind::Finished;
        return g;
    }
    const FrontierCluster* best = nullptr;
    int best_d = std::numeric_limits<int>::max();
    for (const auto& cl : clusters) {
        int d = std::numeric_limits<int>::max() - 1;
        if (dist[map_.index(cl.centroid)] >= 0) d = dist[map_.index(cl.centroid)];
        if (d < best_d) {
            best_d = d;
            best = &cl;
        }
    }
    FhcSubGoal g;
    g.kind = FhcSubGoal::Kind::Explore;
    g.target = best->centroid;
    return g;
}

OracleConfig make_oracle_config(OracleKind kind) {
    OracleConfig cfg;
    cfg.sensor.perfect = true;
    cfg.belief_init = kind == OracleKind::PK ? BeliefInitMode::Delta : BeliefInitMode::Uniform;
    return cfg;
}

}  // namespace rearrange
