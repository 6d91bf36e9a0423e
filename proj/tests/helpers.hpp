#pragma once
// Shared map builders and independent oracles for the test suite. Oracles are
// deliberately written with different algorithms than the library (plain BFS
// queues, exhaustive enumeration, joint-distribution filters) so agreement is
// meaningful.
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rearrange/belief.hpp"
#include "rearrange/grid.hpp"
#include "rearrange/sensor.hpp"
#include "rearrange/world.hpp"

namespace testutil {

using namespace rearrange;

// Map from ASCII art rows: '#' wall, '.' free, 'R' receptacle (occupied).
// rows[0] is y=0.
inline GridMap make_map(const std::vector<std::string>& rows, double cell_size = 0.25) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    GridMap m(w, h, cell_size);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const char ch = rows[y][static_cast<std::size_t>(x)];
            m.set_occupied(Cell{x, y}, ch == '#' || ch == 'R');
            if (ch == 'R')
                m.receptacles().push_back(ReceptacleInfo{"Shelf", Cell{x, y}, 0});
            if (ch != '#') m.set_room_id(Cell{x, y}, 0);
        }
    return m;
}

// Open arena of the given inner size with a 1-cell wall border.
inline GridMap open_map(int inner_w, int inner_h) {
    std::vector<std::string> rows;
    rows.push_back(std::string(static_cast<std::size_t>(inner_w + 2), '#'));
    for (int y = 0; y < inner_h; ++y)
        rows.push_back("#" + std::string(static_cast<std::size_t>(inner_w), '.') + "#");
    rows.push_back(std::string(static_cast<std::size_t>(inner_w + 2), '#'));
    return make_map(rows);
}

// Independent BFS step-count oracle (4-connected). Strafing means an optimal
// action sequence needs no rotations, so this is the A* cost oracle too.
inline std::vector<int> bfs_oracle(const GridMap& m, const std::vector<bool>& extra,
                                   const Cell& start) {
    std::vector<int> d(m.cell_count(), -1);
    if (!m.free(start)) return d;
    std::deque<Cell> q{start};
    d[m.index(start)] = 0;
    const Cell steps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (!q.empty()) {
        const Cell c = q.front();
        q.pop_front();
        for (const Cell& s : steps) {
            const Cell n{c.x + s.x, c.y + s.y};
            if (!m.free(n)) continue;
            if (!extra.empty() && extra[m.index(n)]) continue;
            if (d[m.index(n)] >= 0) continue;
            d[m.index(n)] = d[m.index(c)] + 1;
            q.push_back(n);
        }
    }
    return d;
}

// Independent connected-component count of free space.
inline int component_count_oracle(const GridMap& m, const std::vector<bool>& extra = {}) {
    std::vector<bool> seen(m.cell_count(), false);
    int count = 0;
    for (std::size_t i = 0; i < m.cell_count(); ++i) {
        const Cell c = m.cell_at(i);
        if (!m.free(c) || seen[i]) continue;
        if (!extra.empty() && extra[i]) continue;
        ++count;
        std::deque<Cell> q{c};
        seen[i] = true;
        const Cell steps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        while (!q.empty()) {
            const Cell u = q.front();
            q.pop_front();
            for (const Cell& s : steps) {
                const Cell n{u.x + s.x, u.y + s.y};
                if (!m.free(n) || seen[m.index(n)]) continue;
                if (!extra.empty() && extra[m.index(n)]) continue;
                seen[m.index(n)] = true;
                q.push_back(n);
            }
        }
    }
    return count;
}

// Random obstacle map with guaranteed free start/goal; density in [0,1].
inline GridMap random_map(int w, int h, double density, std::mt19937_64& rng) {
    GridMap m(w, h);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            m.set_occupied(Cell{x, y}, border || unit(rng) < density);
        }
    return m;
}

inline Cell random_free_cell(const GridMap& m, std::mt19937_64& rng) {
    const auto cells = m.free_cells();
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    return cells[pick(rng)];
}

// Brute-force joint Bayes filter over the cells of a small map for up to two
// objects, used to check the factored belief implementation. The joint
// distribution is maintained explicitly and marginalized for comparison.
class JointFilter {
public:
    JointFilter(const GridMap& map, std::vector<std::string> classes,
                const std::vector<double>& init_marginal)
        : map_(map), classes_(std::move(classes)) {
        for (std::size_t i = 0; i < map.cell_count(); ++i)
            if (init_marginal[i] > 0.0) support_.push_back(i);
        const std::size_t n = support_.size();
        const std::size_t k = classes_.size();
        joint_.assign(k == 1 ? n : n * n, 0.0);
        if (k == 1) {
            for (std::size_t a = 0; a < n; ++a) joint_[a] = init_marginal[support_[a]];
        } else {
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    joint_[a * n + b] =
                        init_marginal[support_[a]] * init_marginal[support_[b]];
        }
    }

    // Navigation update: multiply by the product of per-object likelihoods.
    void nav(const SensorModel& sensor, const AgentPose& robot, double range,
             const std::vector<std::optional<Cell>>& z) {
        const std::size_t n = support_.size();
        double sum = 0.0;
        for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
            double w = 1.0;
            for (std::size_t o = 0; o < classes_.size(); ++o) {
                const std::size_t cell = support_[o == 0 ? idx / (classes_.size() == 1 ? 1 : n)
                                                         : idx % n];
                w *= sensor.obs_likelihood(z[o], map_.cell_at(cell), robot,
                                           sensor.params_for(classes_[o]), map_, range);
            }
            joint_[idx] *= w;
            sum += joint_[idx];
        }
        for (double& p : joint_) p /= sum;
    }

    // Navigation reweight applied to a single object's coordinate; used to
    // mirror pick/place/failed-pick updates, where only the non-target
    // objects are reweighted by the observation.
    void nav_one(std::size_t o, const SensorModel& sensor, const AgentPose& robot,
                 double range, const std::optional<Cell>& z) {
        const std::size_t n = support_.size();
        double sum = 0.0;
        for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
            const std::size_t mine =
                classes_.size() == 1 ? idx : (o == 0 ? idx / n : idx % n);
            joint_[idx] *= sensor.obs_likelihood(z, map_.cell_at(support_[mine]), robot,
                                                 sensor.params_for(classes_[o]), map_,
                                                 range);
            sum += joint_[idx];
        }
        for (double& p : joint_) p /= sum;
    }

    // Collapse object o to a single cell (pick/place).
    void collapse(std::size_t o, const Cell& cell) {
        const std::size_t n = support_.size();
        const std::size_t target = index_of(cell);
        const std::vector<double> before = joint_;
        double sum = 0.0;
        for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
            const std::size_t mine =
                classes_.size() == 1 ? idx : (o == 0 ? idx / n : idx % n);
            if (mine != target) joint_[idx] = 0.0;
            sum += joint_[idx];
        }
        if (sum <= 0.0) {
            // The collapsed cell carried no joint mass (e.g. it was zeroed by
            // an earlier failed pick). The factored filter still produces a
            // delta for this object while leaving the others untouched, so
            // rebuild the joint from the pre-collapse marginal of the other
            // coordinate times a delta on this one.
            if (classes_.size() == 1) {
                std::fill(joint_.begin(), joint_.end(), 0.0);
                joint_[target] = 1.0;
                sum = 1.0;
            } else {
                std::vector<double> other(n, 0.0);
                for (std::size_t idx = 0; idx < before.size(); ++idx) {
                    const std::size_t theirs = o == 0 ? idx % n : idx / n;
                    other[theirs] += before[idx];
                }
                for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
                    const std::size_t mine = o == 0 ? idx / n : idx % n;
                    const std::size_t theirs = o == 0 ? idx % n : idx / n;
                    joint_[idx] = mine == target ? other[theirs] : 0.0;
                }
                sum = 0.0;
                for (double p : joint_) sum += p;
            }
        }
        for (double& p : joint_) p /= sum;
    }

    // Zero object o's mass at one cell (failed pick).
    void zero(std::size_t o, const Cell& cell) {
        const std::size_t n = support_.size();
        const std::size_t target = index_of(cell);
        double sum = 0.0;
        for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
            const std::size_t mine =
                classes_.size() == 1 ? idx : (o == 0 ? idx / n : idx % n);
            if (mine == target) joint_[idx] = 0.0;
            sum += joint_[idx];
        }
        for (double& p : joint_) p /= sum;
    }

    std::vector<double> marginal(std::size_t o) const {
        const std::size_t n = support_.size();
        std::vector<double> out(map_.cell_count(), 0.0);
        for (std::size_t idx = 0; idx < joint_.size(); ++idx) {
            const std::size_t mine =
                classes_.size() == 1 ? idx : (o == 0 ? idx / n : idx % n);
            out[support_[mine]] += joint_[idx];
        }
        return out;
    }

private:
    std::size_t index_of(const Cell& c) const {
        for (std::size_t a = 0; a < support_.size(); ++a)
            if (support_[a] == map_.index(c)) return a;
        return 0;
    }

    const GridMap& map_;
    std::vector<std::string> classes_;
    std::vector<std::size_t> support_;
    std::vector<double> joint_;
};

}  // namespace testutil
