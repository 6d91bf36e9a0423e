#include "rearrange/grid.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <set>

namespace rearrange {

int normalize_heading(int deg) {
    int h = deg % 360;
    if (h < 0) h += 360;
    return h;
}

Cell heading_dir(int heading) {
    switch (normalize_heading(heading)) {
        case 0: return Cell{1, 0};
        case 90: return Cell{0, 1};
        case 180: return Cell{-1, 0};
        case 270: return Cell{0, -1};
        default: return Cell{0, 0};
    }
}

int heading_toward(const Cell& from, const Cell& to) {
    const int dx = to.x - from.x;
    const int dy = to.y - from.y;
    if (dx == 0 && dy == 0) return 0;
    if (std::abs(dx) >= std::abs(dy)) return dx >= 0 ? 0 : 180;
    return dy >= 0 ? 90 : 270;
}

GridMap::GridMap(int width, int height, double cell_size)
    : width_(width), height_(height), cell_size_(cell_size),
      occupancy_(static_cast<std::size_t>(width) * height, false),
      room_id_(static_cast<std::size_t>(width) * height, -1) {}

int GridMap::room_count() const {
    std::set<int> ids;
    for (int id : room_id_)
        if (id >= 0) ids.insert(id);
    return static_cast<int>(ids.size());
}

std::vector<Cell> GridMap::free_cells() const {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < occupancy_.size(); ++i)
        if (!occupancy_[i]) out.push_back(cell_at(i));
    return out;
}

bool line_of_sight(const GridMap& map, const Cell& a, const Cell& b) {
    int x0 = a.x, y0 = a.y;
    const int x1 = b.x, y1 = b.y;
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (!(x0 == a.x && y0 == a.y) && !(x0 == x1 && y0 == y1)) {
            if (map.occupied(Cell{x0, y0})) return false;
        }
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x0 += sx; }
        if (e2 <= dx) { err += dx; y0 += sy; }
    }
    return true;
}

bool in_view_cone(const Cell& agent, int heading, const Cell& target, double max_dist_cells) {
    const int vx = target.x - agent.x;
    const int vy = target.y - agent.y;
    const double d2 = static_cast<double>(vx) * vx + static_cast<double>(vy) * vy;
    if (d2 > max_dist_cells * max_dist_cells) return false;
    if (vx == 0 && vy == 0) return true;
    const Cell dir = heading_dir(heading);
    const double dot = static_cast<double>(vx) * dir.x + static_cast<double>(vy) * dir.y;
    if (dot < 0) return false;
    // angle <= 45 degrees  <=>  dot^2 >= |v|^2 / 2  (dot >= 0)
    return 2.0 * dot * dot + 1e-9 >= d2;
}

std::vector<Cell> view_cone_cells(const GridMap& map, const Cell& agent, int heading,
                                  double max_dist_cells) {
    std::vector<Cell> out;
    const int r = static_cast<int>(std::ceil(max_dist_cells));
    for (int y = agent.y - r; y <= agent.y + r; ++y) {
        for (int x = agent.x - r; x <= agent.x + r; ++x) {
            const Cell c{x, y};
            if (!map.in_bounds(c)) continue;
            if (in_view_cone(agent, heading, c, max_dist_cells)) out.push_back(c);
        }
    }
    return out;
}

std::vector<int> bfs_distances(const GridMap& map, const Cell& start,
                               const std::vector<bool>& extra_obstacles) {
    std::vector<int> dist(map.cell_count(), -1);
    if (!map.free(start)) return dist;
    std::deque<Cell> queue;
    dist[map.index(start)] = 0;
    queue.push_back(start);
    static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        const int d = dist[map.index(c)];
        for (const Cell& s : kSteps) {
            const Cell n{c.x + s.x, c.y + s.y};
            if (!map.free(n)) continue;
            const std::size_t ni = map.index(n);
            if (!extra_obstacles.empty() && extra_obstacles[ni]) continue;
            if (dist[ni] >= 0) continue;
            dist[ni] = d + 1;
            queue.push_back(n);
        }
    }
    return dist;
}

std::vector<int> bfs_distances(const GridMap& map, const Cell& start) {
    return bfs_distances(map, start, {});
}

std::vector<int> free_components(const GridMap& map, const std::vector<bool>& extra_obstacles) {
    std::vector<int> comp(map.cell_count(), -1);
    int next = 0;
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        const Cell c = map.cell_at(i);
        if (!map.free(c)) continue;
        if (!extra_obstacles.empty() && extra_obstacles[i]) continue;
        if (comp[i] >= 0) continue;
        comp[i] = next;
        std::deque<Cell> queue{c};
        static const Cell kSteps[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        while (!queue.empty()) {
            const Cell u = queue.front();
            queue.pop_front();
            for (const Cell& s : kSteps) {
                const Cell n{u.x + s.x, u.y + s.y};
                if (!map.free(n)) continue;
                const std::size_t ni = map.index(n);
                if (!extra_obstacles.empty() && extra_obstacles[ni]) continue;
                if (comp[ni] >= 0) continue;
                comp[ni] = next;
                queue.push_back(n);
            }
        }
        ++next;
    }
    return comp;
}

}  // namespace rearrange
