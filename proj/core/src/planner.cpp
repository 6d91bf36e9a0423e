#include "rearrange/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rearrange {

namespace {
constexpr double kFailPenalty = 10.0;
constexpr double kUnreachablePenalty = 100.0;

int turn_count(int from, int to) {
    const int diff = normalize_heading(to - from);
    if (diff == 0) return 0;
    if (diff == 180) return 2;
    return 1;
}
}  // namespace

std::string to_string(const AbstractAction& a) {
    switch (a.kind) {
        case AbstractAction::Kind::Move:
            return "Move(" + std::to_string(a.move_to.x) + "," + std::to_string(a.move_to.y) + ")";
        case AbstractAction::Kind::Rotate:
            return "Rotate(" + std::to_string(a.angle) + ")";
        case AbstractAction::Kind::PickPlace:
            return "PickPlace(obj=" + std::to_string(a.object) + ",target=" +
                   std::to_string(a.target.x) + "," + std::to_string(a.target.y) + ")";
        case AbstractAction::Kind::Done:
            return "Done";
    }
    return "?";
}

Planner::Planner(const GridMap& map, AbstractionConfig abs_cfg, PlannerConfig cfg)
    : map_(map), abs_cfg_(abs_cfg), cfg_(cfg) {}

std::uint64_t Planner::occupancy_key(const SimState& s) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    for (const auto& o : s.objects) {
        if (o.is_held) continue;
        mix(static_cast<std::uint64_t>(map_.index(o.cell)) + 1);
        mix(static_cast<std::uint64_t>(o.footprint));
    }
    return h;
}

std::vector<bool> Planner::sim_obstacles(const SimState& s) const {
    std::vector<bool> blocked(map_.cell_count(), false);
    for (const auto& o : s.objects) {
        if (o.is_held) continue;
        for (int dy = 0; dy < o.footprint; ++dy)
            for (int dx = 0; dx < o.footprint; ++dx) {
                const Cell c{o.cell.x + dx, o.cell.y + dy};
                if (map_.in_bounds(c)) blocked[map_.index(c)] = true;
            }
    }
    return blocked;
}

const std::vector<int>& Planner::distances(const SimState& s, const Cell& from) {
    std::uint64_t key = occupancy_key(s);
    key ^= (static_cast<std::uint64_t>(map_.index(from)) + 0x9e3779b97f4a7c15ull) * 0xff51afd7ed558ccdull;
    auto it = dist_cache_.find(key);
    if (it != dist_cache_.end()) return it->second;
    auto obstacles = sim_obstacles(s);
    obstacles[map_.index(from)] = false;
    auto dist = bfs_distances(map_, from, obstacles);
    return dist_cache_.emplace(key, std::move(dist)).first->second;
}

std::optional<Cell> Planner::sim_pick_stand(const SimState& s, const SimObject& o) {
    const auto& dist = distances(s, s.robot);
    std::optional<Cell> best;
    int best_d = std::numeric_limits<int>::max();
    const int r = static_cast<int>(abs_cfg_.interaction_range_cells);
    for (int y = o.cell.y - r; y <= o.cell.y + r; ++y) {
        for (int x = o.cell.x - r; x <= o.cell.x + r; ++x) {
            const Cell c{x, y};
            if (!map_.free(c)) continue;
            if (euclid(c, o.cell) > abs_cfg_.interaction_range_cells + 1e-9) continue;
            const int d = dist[map_.index(c)];
            if (d < 0) continue;
            if (d < best_d) { best_d = d; best = c; }
        }
    }
    return best;
}

bool Planner::placeable(const SimState& s, const SimObject& o, const Cell& target) const {
    for (int dy = 0; dy < o.footprint; ++dy) {
        for (int dx = 0; dx < o.footprint; ++dx) {
            const Cell c{target.x + dx, target.y + dy};
            if (!map_.in_bounds(c)) return false;
            if (map_.occupied(c)) {
                const bool on_rec =
                    o.footprint == 1 &&
                    std::any_of(map_.receptacles().begin(), map_.receptacles().end(),
                                [&](const ReceptacleInfo& r) { return r.cell == c; });
                if (!on_rec) return false;
            }
            for (const auto& other : s.objects) {
                if (other.id == o.id || other.is_held) continue;
                if (c.x >= other.cell.x && c.x < other.cell.x + other.footprint &&
                    c.y >= other.cell.y && c.y < other.cell.y + other.footprint)
                    return false;
            }
        }
    }
    return true;
}

std::optional<Cell> Planner::sim_place_stand(const SimState& s, const SimObject& o,
                                             const Cell& target) {
    // Stand search with the object in hand.
    SimState held = s;
    for (auto& so : held.objects)
        if (so.id == o.id) so.is_held = true;
    const auto& dist = distances(held, s.robot);
    const auto obstacles = sim_obstacles(held);
    static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::optional<Cell> best;
    int best_d = std::numeric_limits<int>::max();
    for (const Cell& step : kSteps) {
        const Cell c{target.x + step.x, target.y + step.y};
        if (!map_.free(c)) continue;
        if (c.x >= target.x && c.x < target.x + o.footprint && c.y >= target.y &&
            c.y < target.y + o.footprint)
            continue;
        if (obstacles[map_.index(c)]) continue;
        const int d = dist[map_.index(c)];
        if (d < 0) continue;
        if (d < best_d) { best_d = d; best = c; }
    }
    return best;
}

std::vector<AbstractAction> Planner::enumerate_actions(const AbstractState& s) {
    std::vector<AbstractAction> out;
    for (const auto& o : s.objects) {
        if (o.at_goal) continue;
        const bool in_range =
            !o.is_held && euclid(s.robot, o.loc) <= abs_cfg_.interaction_range_cells + 1e-9;
        if (o.is_held || in_range) {
            for (const auto& pc : o.place_locs) {
                AbstractAction a;
                a.kind = AbstractAction::Kind::PickPlace;
                a.object = o.id;
                a.pick_stand = s.robot;
                a.target = pc.target;
                a.place_stand = pc.stand;
                out.push_back(a);
            }
        }
        if (!o.is_held) {
            if (in_range) {
                const int want = heading_toward(s.robot, o.loc);
                if (want != s.heading)
                    out.push_back(AbstractAction{AbstractAction::Kind::Rotate, {}, {}, want});
            }
            for (const auto& pk : o.picks) {
                if (pk.stand == s.robot) continue;
                AbstractAction a;
                a.kind = AbstractAction::Kind::Move;
                a.move_from = s.robot;
                a.move_to = pk.stand;
                out.push_back(a);
            }
        }
    }
    out.push_back(AbstractAction{AbstractAction::Kind::Done});
    return out;
}

std::vector<AbstractAction> Planner::legal_actions(const SimState& s) {
    std::vector<AbstractAction> out;
    if (s.terminal) return out;
    for (const auto& o : s.objects) {
        if (o.at_goal) continue;
        const bool in_range =
            !o.is_held && euclid(s.robot, o.cell) <= abs_cfg_.interaction_range_cells + 1e-9;
        if (o.is_held || in_range) {
            for (const Cell& t : o.place_targets) {
                if (!placeable(s, o, t)) continue;
                const auto stand = sim_place_stand(s, o, t);
                if (!stand) continue;
                AbstractAction a;
                a.kind = AbstractAction::Kind::PickPlace;
                a.object = o.id;
                a.pick_stand = s.robot;
                a.target = t;
                a.place_stand = *stand;
                out.push_back(a);
            }
        }
        if (!o.is_held) {
            if (in_range) {
                const int want = heading_toward(s.robot, o.cell);
                if (want != s.heading)
                    out.push_back(AbstractAction{AbstractAction::Kind::Rotate, {}, {}, want});
            }
            const auto stand = sim_pick_stand(s, o);
            if (stand && *stand != s.robot) {
                AbstractAction a;
                a.kind = AbstractAction::Kind::Move;
                a.move_from = s.robot;
                a.move_to = *stand;
                out.push_back(a);
            }
        }
    }
    out.push_back(AbstractAction{AbstractAction::Kind::Done});
    return out;
}

std::pair<SimState, double> Planner::step(const SimState& s, const AbstractAction& a) {
    if (s.terminal) throw IllegalAbstractAction("step on terminal abstract state");
    SimState next = s;
    double r = 0.0;
    switch (a.kind) {
        case AbstractAction::Kind::Move: {
            const auto& dist = distances(s, s.robot);
            const auto obstacles = sim_obstacles(s);
            if (!map_.free(a.move_to) || obstacles[map_.index(a.move_to)] ||
                dist[map_.index(a.move_to)] < 0) {
                r = -kUnreachablePenalty;
            } else {
                r = -static_cast<double>(dist[map_.index(a.move_to)]);
                next.robot = a.move_to;
            }
            break;
        }
        case AbstractAction::Kind::Rotate: {
            r = -static_cast<double>(turn_count(s.heading, a.angle));
            next.heading = normalize_heading(a.angle);
            break;
        }
        case AbstractAction::Kind::PickPlace: {
            SimObject* obj = nullptr;
            for (auto& o : next.objects)
                if (o.id == a.object) obj = &o;
            if (!obj) throw IllegalAbstractAction("PickPlace of unknown object");
            if (obj->at_goal) {
                r = -kFailPenalty;
                break;
            }
            const double pick_cost = obj->is_held ? 0.0 : cfg_.cost_pick;
            if (!obj->is_held &&
                euclid(s.robot, obj->cell) > abs_cfg_.interaction_range_cells + 1e-9) {
                // Out-of-range pick attempt fails, as it would in execution.
                r = -(cfg_.cost_pick + kFailPenalty);
                break;
            }
            if (!placeable(s, *obj, a.target)) {
                r = -(pick_cost + cfg_.cost_place + kFailPenalty);
                break;
            }
            const auto stand = sim_place_stand(s, *obj, a.target);
            if (!stand) {
                r = -(pick_cost + cfg_.cost_place + kFailPenalty);
                break;
            }
            SimState held = s;
            for (auto& o : held.objects)
                if (o.id == obj->id) o.is_held = true;
            const auto& dist = distances(held, s.robot);
            const int d = dist[map_.index(*stand)];
            if (d < 0) {
                r = -(pick_cost + cfg_.cost_place + kFailPenalty);
                break;
            }
            r = -(static_cast<double>(d) + pick_cost + cfg_.cost_place);
            obj->cell = a.target;
            obj->is_held = false;
            obj->at_goal = (a.target == obj->goal);
            if (obj->at_goal) r += 50.0;
            next.robot = *stand;
            break;
        }
        case AbstractAction::Kind::Done: {
            next.terminal = true;
            bool all = true;
            for (const auto& o : next.objects)
                if (!o.at_goal) all = false;
            r = all ? 50.0 : -50.0;
            break;
        }
    }
    return {std::move(next), r};
}

double Planner::reward(const SimState& s, const AbstractAction& a) {
    return step(s, a).second;
}

SimState Planner::to_sim_state(const AbstractState& s, const BeliefState& b,
                               std::mt19937_64& rng) {
    SimState out;
    out.robot = s.robot;
    out.heading = s.heading;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& o : s.objects) {
        SimObject so;
        so.id = o.id;
        so.footprint = o.footprint;
        so.is_held = o.is_held;
        so.at_goal = o.at_goal;
        so.goal = o.goal;
        for (const auto& pc : o.place_locs) so.place_targets.push_back(pc.target);
        if (o.is_held) {
            so.cell = s.robot;
        } else {
            const auto& prob = b.object(o.id).prob;
            double u = unit(rng);
            so.cell = o.loc;
            for (std::size_t i = 0; i < prob.size(); ++i) {
                if (prob[i] <= 0.0) continue;
                u -= prob[i];
                if (u <= 0.0) {
                    so.cell = map_.cell_at(i);
                    break;
                }
            }
        }
        out.objects.push_back(std::move(so));
    }
    return out;
}

SimState Planner::known_sim_state(const AbstractState& s) {
    SimState out;
    out.robot = s.robot;
    out.heading = s.heading;
    for (const auto& o : s.objects) {
        SimObject so;
        so.id = o.id;
        so.footprint = o.footprint;
        so.is_held = o.is_held;
        so.at_goal = o.at_goal;
        so.goal = o.goal;
        so.cell = o.is_held ? s.robot : o.loc;
        for (const auto& pc : o.place_locs) so.place_targets.push_back(pc.target);
        out.objects.push_back(std::move(so));
    }
    return out;
}

int Planner::select_ucb(const Node& node) const {
    for (std::size_t i = 0; i < node.actions.size(); ++i)
        if (node.n[i] == 0) return static_cast<int>(i);
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    const double logn = std::log(std::max(1, node.visits));
    for (std::size_t i = 0; i < node.actions.size(); ++i) {
        const double u = node.v[i] + cfg_.exploration_c * std::sqrt(logn / node.n[i]);
        if (u > best_v) {
            best_v = u;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double Planner::rollout(const SimState& state, int depth, std::mt19937_64& rng) {
    SimState s = state;
    double total = 0.0;
    double discount = std::pow(cfg_.gamma, depth);
    for (int d = depth; d < cfg_.depth && discount >= cfg_.epsilon; ++d) {
        if (s.terminal) break;
        const auto actions = legal_actions(s);
        if (actions.empty()) break;
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        auto [next, r] = step(s, actions[pick(rng)]);
        total += discount * r;
        s = std::move(next);
        discount *= cfg_.gamma;
    }
    return total;
}

double Planner::simulate(SimState& s, Node& node, int depth, std::mt19937_64& rng) {
    if (depth >= cfg_.depth || std::pow(cfg_.gamma, depth) < cfg_.epsilon || s.terminal)
        return 0.0;
    if (!node.expanded) {
        node.actions = legal_actions(s);
        node.n.assign(node.actions.size(), 0);
        node.v.assign(node.actions.size(), 0.0);
        node.children.resize(node.actions.size());
        node.expanded = true;
        if (node.actions.empty()) return 0.0;
        ++node.visits;
        return rollout(s, depth, rng);
    }
    if (node.actions.empty()) return 0.0;
    const int ai = select_ucb(node);
    auto [next, r] = step(s, node.actions[ai]);
    if (!node.children[ai]) node.children[ai] = std::make_unique<Node>();
    const double future = simulate(next, *node.children[ai], depth + 1, rng);
    const double ret = r + cfg_.gamma * future;
    ++node.visits;
    ++node.n[ai];
    node.v[ai] += (ret - node.v[ai]) / node.n[ai];
    return ret;
}

AbstractAction Planner::plan(const BeliefState& b, const AbstractState& s) {
    dist_cache_.clear();
    std::mt19937_64 rng(cfg_.seed);
    const auto root_actions = enumerate_actions(s);

    // Draw the determinized scenarios up front and deduplicate: with a
    // concentrated belief every draw is the same state, and splitting the
    // simulation budget across identical trees only adds noise.
    std::vector<SimState> samples;
    for (int k = 0; k < std::max(1, cfg_.root_samples); ++k) {
        SimState sample = to_sim_state(s, b, rng);
        const bool dup = std::any_of(samples.begin(), samples.end(), [&](const SimState& o) {
            if (o.objects.size() != sample.objects.size()) return false;
            for (std::size_t i = 0; i < o.objects.size(); ++i)
                if (o.objects[i].cell != sample.objects[i].cell ||
                    o.objects[i].is_held != sample.objects[i].is_held)
                    return false;
            return true;
        });
        if (!dup) samples.push_back(std::move(sample));
    }
    const int scenarios = static_cast<int>(samples.size());
    const int sims_each = std::max(1, cfg_.simulations / scenarios);

    // One tree per determinized scenario: within a tree every simulation sees
    // the same sampled object cells, so multi-step chains (Move -> PickPlace
    // -> Done) keep their value instead of being averaged against mismatched
    // samples. Averaging the root values across scenarios keeps one unlucky
    // sample from dictating the decision.
    RootStats agg;
    agg.actions = root_actions;
    agg.visits.assign(root_actions.size(), 0);
    agg.values.assign(root_actions.size(), 0.0);
    for (int k = 0; k < scenarios; ++k) {
        const SimState& sample = samples[static_cast<std::size_t>(k)];
        Node root;
        root.actions = root_actions;
        root.n.assign(root_actions.size(), 0);
        root.v.assign(root_actions.size(), 0.0);
        root.children.resize(root_actions.size());
        root.expanded = true;
        for (int i = 0; i < sims_each; ++i) {
            SimState sim = sample;
            simulate(sim, root, 0, rng);
        }
        for (std::size_t i = 0; i < root_actions.size(); ++i) {
            // Visit-weighted running mean across scenario trees.
            const int n = agg.visits[i] + root.n[i];
            if (n > 0)
                agg.values[i] =
                    (agg.values[i] * agg.visits[i] + root.v[i] * root.n[i]) / n;
            agg.visits[i] = n;
        }
        agg.total_visits += root.visits;
    }

    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < root_actions.size(); ++i) {
        if (agg.visits[i] == 0) continue;
        if (agg.values[i] > best_v) {
            best_v = agg.values[i];
            best = static_cast<int>(i);
        }
    }
    root_stats_ = std::move(agg);
    return root_actions[best];
}

}  // namespace rearrange
