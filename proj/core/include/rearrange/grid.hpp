#pragma once
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rearrange {

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
        return std::hash<std::uint64_t>{}(
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
            static_cast<std::uint32_t>(c.y));
    }
};

inline double euclid(const Cell& a, const Cell& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Headings are multiples of 90 degrees. dir(0) = +x, dir(90) = +y.
int normalize_heading(int deg);
Cell heading_dir(int heading);
int heading_toward(const Cell& from, const Cell& to);

struct ReceptacleInfo {
    std::string class_name;
    Cell cell;
    int room_id = 0;
    friend bool operator==(const ReceptacleInfo&, const ReceptacleInfo&) = default;
};

// 2D occupancy map of a house. occupancy=true means blocked by static
// geometry (walls, receptacles). Free cells carry a room label.
class GridMap {
public:
    GridMap() = default;
    GridMap(int width, int height, double cell_size = 0.25);

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }

    bool in_bounds(const Cell& c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    bool occupied(const Cell& c) const { return occupancy_[index(c)]; }
    bool free(const Cell& c) const { return in_bounds(c) && !occupancy_[index(c)]; }
    void set_occupied(const Cell& c, bool v) { occupancy_[index(c)] = v; }

    int room_id(const Cell& c) const { return room_id_[index(c)]; }
    void set_room_id(const Cell& c, int id) { room_id_[index(c)] = id; }
    int room_count() const;

    std::vector<ReceptacleInfo>& receptacles() { return receptacles_; }
    const std::vector<ReceptacleInfo>& receptacles() const { return receptacles_; }

    std::size_t index(const Cell& c) const {
        return static_cast<std::size_t>(c.y) * width_ + c.x;
    }
    Cell cell_at(std::size_t idx) const {
        return Cell{static_cast<int>(idx % width_), static_cast<int>(idx / width_)};
    }
    std::size_t cell_count() const { return occupancy_.size(); }

    std::vector<Cell> free_cells() const;
    double meters(double cells) const { return cells * cell_size_; }
    double cells_from_meters(double m) const { return m / cell_size_; }

    friend bool operator==(const GridMap&, const GridMap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    double cell_size_ = 0.25;
    std::vector<bool> occupancy_;
    std::vector<int> room_id_;
    std::vector<ReceptacleInfo> receptacles_;
};

// True iff no statically occupied cell lies strictly between a and b on the
// Bresenham ray (endpoints excluded).
bool line_of_sight(const GridMap& map, const Cell& a, const Cell& b);

// 90-degree cone test centered on `heading`, max distance in cells.
bool in_view_cone(const Cell& agent, int heading, const Cell& target, double max_dist_cells);

// All cells of the map inside the view cone within max_dist_cells.
std::vector<Cell> view_cone_cells(const GridMap& map, const Cell& agent, int heading,
                                  double max_dist_cells);

// BFS over free cells, 4-connected; extra_obstacles are treated as blocked.
// Returns per-cell step distance, -1 where unreachable.
std::vector<int> bfs_distances(const GridMap& map, const Cell& start,
                               const std::vector<bool>& extra_obstacles);
std::vector<int> bfs_distances(const GridMap& map, const Cell& start);

// Connected component labels of the free space (static occupancy plus
// extra_obstacles). -1 for blocked cells.
std::vector<int> free_components(const GridMap& map, const std::vector<bool>& extra_obstacles);

}  // namespace rearrange
