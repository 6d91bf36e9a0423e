#include "rearrange/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rearrange {

Cell ObjectBelief::argmax(const GridMap& map) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < prob.size(); ++i)
        if (prob[i] > prob[best]) best = i;
    return map.cell_at(best);
}

double ObjectBelief::max_mass() const {
    return prob.empty() ? 0.0 : *std::max_element(prob.begin(), prob.end());
}

double ObjectBelief::entropy() const {
    double h = 0.0;
    for (double p : prob)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

BeliefState BeliefState::init(const GridMap& map, const std::vector<TrackedObject>& objects,
                              const std::map<ObjectId, Cell>& goals, BeliefInitMode mode,
                              const Cell& agent_start,
                              const std::map<ObjectId, Cell>& true_locations) {
    BeliefState bs;
    bs.goals_ = goals;
    bs.support_.assign(map.cell_count(), false);
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        const Cell c = map.cell_at(i);
        if (map.free(c)) bs.support_[i] = true;
    }
    for (const auto& r : map.receptacles())
        if (map.in_bounds(r.cell)) bs.support_[map.index(r.cell)] = true;

    // Uniform mass only over cells the agent could ever observe.
    const auto reach = bfs_distances(map, agent_start);
    std::vector<std::size_t> uniform_cells;
    for (std::size_t i = 0; i < map.cell_count(); ++i)
        if (map.free(map.cell_at(i)) && reach[i] >= 0) uniform_cells.push_back(i);
    if (uniform_cells.empty()) throw EmptyFreeSpace("map has no reachable free cells");

    for (const auto& obj : objects) {
        ObjectBelief b;
        b.class_name = obj.class_name;
        b.footprint = obj.footprint;
        b.prob.assign(map.cell_count(), 0.0);
        if (mode == BeliefInitMode::Delta) {
            const Cell c = true_locations.at(obj.id);
            b.prob[map.index(c)] = 1.0;
        } else {
            const double p = 1.0 / static_cast<double>(uniform_cells.size());
            for (std::size_t i : uniform_cells) b.prob[i] = p;
        }
        bs.per_object_[obj.id] = std::move(b);
    }
    return bs;
}

std::optional<ObjectId> BeliefState::held_object() const {
    for (const auto& [id, b] : per_object_)
        if (b.is_held) return id;
    return std::nullopt;
}

void BeliefState::collapse(ObjectBelief& b, const GridMap& map, const Cell& cell) {
    std::fill(b.prob.begin(), b.prob.end(), 0.0);
    b.prob[map.index(cell)] = 1.0;
}

void BeliefState::nav_update(ObjectId id, ObjectBelief& b, const std::optional<Cell>& z,
                             const SensorModel::ObsContext& ctx, const SensorModel& sensor,
                             const GridMap& map) {
    const ClassSensorParams& params = sensor.params_for(b.class_name);
    double sum = 0.0;
    for (std::size_t i = 0; i < b.prob.size(); ++i) {
        if (b.prob[i] <= 0.0) continue;
        const double lik = sensor.obs_likelihood_ctx(ctx, z, map.cell_at(i), params, map);
        b.prob[i] *= lik;
        sum += b.prob[i];
    }
    if (sum <= 0.0) {
        // Detector mismatch annihilated all mass; recover by re-uniformizing
        // over free cells and keep the episode going.
        ++zero_posterior_events_;
        std::size_t n = 0;
        for (std::size_t i = 0; i < support_.size(); ++i)
            if (support_[i]) ++n;
        const double p = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < support_.size(); ++i) b.prob[i] = support_[i] ? p : 0.0;
        return;
    }
    for (double& p : b.prob) p /= sum;
    (void)id;
}

void BeliefState::update(const BeliefActionContext& action, const Observation& z,
                         const SensorModel& sensor, const GridMap& map,
                         double sensing_range_cells, const Cell& agent_cell) {
    // One visibility context per update: the in-view mask and cone sizes are
    // shared by every object's reweighting pass.
    std::vector<std::string> classes;
    for (const auto& [id, b] : per_object_)
        if (!b.is_held) classes.push_back(b.class_name);
    const auto ctx = sensor.make_context(map, z.robot, sensing_range_cells, classes);
    for (auto& [id, b] : per_object_) {
        if (action.kind == BeliefActionKind::Pick && action.object_id == id) {
            collapse(b, map, action.cell);
            b.is_held = true;
            b.at_goal = false;
            continue;
        }
        if (action.kind == BeliefActionKind::Place && action.object_id == id) {
            collapse(b, map, action.cell);
            b.is_held = false;
            b.at_goal = (goals_.count(id) && action.cell == goals_.at(id));
            continue;
        }
        if (action.kind == BeliefActionKind::PickFailed && action.object_id == id) {
            // The object is definitely not at the attempted cell.
            const std::size_t idx = map.index(action.cell);
            double sum = 0.0;
            b.prob[idx] = 0.0;
            for (double p : b.prob) sum += p;
            if (sum <= 0.0) {
                ++zero_posterior_events_;
                std::size_t n = std::count(support_.begin(), support_.end(), true);
                const double p = 1.0 / static_cast<double>(n);
                for (std::size_t i = 0; i < support_.size(); ++i)
                    b.prob[i] = support_[i] ? p : 0.0;
            } else {
                for (double& p : b.prob) p /= sum;
            }
            continue;
        }
        if (b.is_held) {
            // A held object travels with the agent.
            collapse(b, map, agent_cell);
            continue;
        }
        auto it = z.per_object.find(id);
        const std::optional<Cell> zi = it == z.per_object.end() ? std::nullopt : it->second;
        nav_update(id, b, zi, ctx, sensor, map);
    }
}

nlohmann::json BeliefState::to_json(const GridMap& map) const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, b] : per_object_) {
        nlohmann::json cells = nlohmann::json::array();
        for (std::size_t i = 0; i < b.prob.size(); ++i) {
            if (b.prob[i] > 1e-12) {
                const Cell c = map.cell_at(i);
                cells.push_back({{"x", c.x}, {"y", c.y}, {"p", b.prob[i]}});
            }
        }
        out[std::to_string(id)] = {{"class", b.class_name},
                                   {"is_held", b.is_held},
                                   {"at_goal", b.at_goal},
                                   {"cells", std::move(cells)}};
    }
    return out;
}

}  // namespace rearrange
