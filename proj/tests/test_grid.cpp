#include "doctest.h"
#include "helpers.hpp"

#include "rearrange/grid.hpp"

using namespace rearrange;
using namespace testutil;

TEST_SUITE("grid") {

TEST_CASE("heading conventions") {
    CHECK(heading_dir(0) == Cell{1, 0});
    CHECK(heading_dir(90) == Cell{0, 1});
    CHECK(heading_dir(180) == Cell{-1, 0});
    CHECK(heading_dir(270) == Cell{0, -1});
    CHECK(heading_dir(360) == Cell{1, 0});
    CHECK(heading_dir(-90) == Cell{0, -1});
    CHECK(normalize_heading(-90) == 270);
    CHECK(normalize_heading(450) == 90);

    CHECK(heading_toward(Cell{0, 0}, Cell{5, 2}) == 0);
    CHECK(heading_toward(Cell{0, 0}, Cell{-5, 2}) == 180);
    CHECK(heading_toward(Cell{0, 0}, Cell{1, 4}) == 90);
    CHECK(heading_toward(Cell{0, 0}, Cell{1, -4}) == 270);
    // |dx| == |dy| favors the x axis.
    CHECK(heading_toward(Cell{0, 0}, Cell{3, 3}) == 0);
    CHECK(heading_toward(Cell{0, 0}, Cell{0, 0}) == 0);
}

TEST_CASE("view cone half angle and range") {
    const Cell a{10, 10};
    // Straight ahead.
    CHECK(in_view_cone(a, 0, Cell{14, 10}, 8.0));
    // Behind.
    CHECK_FALSE(in_view_cone(a, 0, Cell{6, 10}, 8.0));
    // Orthogonal.
    CHECK_FALSE(in_view_cone(a, 0, Cell{10, 14}, 8.0));
    // The 45-degree boundary is inside the cone.
    CHECK(in_view_cone(a, 0, Cell{13, 13}, 8.0));
    CHECK(in_view_cone(a, 0, Cell{13, 7}, 8.0));
    // Just outside 45 degrees.
    CHECK_FALSE(in_view_cone(a, 0, Cell{13, 14}, 8.0));
    // Own cell counts.
    CHECK(in_view_cone(a, 0, a, 8.0));
    // Range cut: exactly at range in, one past out.
    CHECK(in_view_cone(a, 0, Cell{18, 10}, 8.0));
    CHECK_FALSE(in_view_cone(a, 0, Cell{19, 10}, 8.0));
    // Other headings mirror.
    CHECK(in_view_cone(a, 90, Cell{10, 14}, 8.0));
    CHECK(in_view_cone(a, 180, Cell{6, 10}, 8.0));
    CHECK(in_view_cone(a, 270, Cell{10, 6}, 8.0));
}

TEST_CASE("view_cone_cells matches the predicate") {
    const GridMap m = open_map(20, 20);
    const Cell a{5, 9};
    const auto cells = view_cone_cells(m, a, 90, 6.0);
    CHECK(!cells.empty());
    for (const Cell& c : cells) CHECK(in_view_cone(a, 90, c, 6.0));
    int predicate_count = 0;
    for (std::size_t i = 0; i < m.cell_count(); ++i)
        if (in_view_cone(a, 90, m.cell_at(i), 6.0)) ++predicate_count;
    CHECK(static_cast<int>(cells.size()) == predicate_count);
}

TEST_CASE("line of sight") {
    const GridMap m = make_map({
        "#########",
        "#.......#",
        "#...#...#",
        "#.......#",
        "#########",
    });
    // Clear straight line.
    CHECK(line_of_sight(m, Cell{1, 1}, Cell{7, 1}));
    // Wall cell in between blocks.
    CHECK_FALSE(line_of_sight(m, Cell{2, 2}, Cell{6, 2}));
    // Diagonal that passes next to the wall.
    CHECK(line_of_sight(m, Cell{1, 1}, Cell{3, 3}));
    // Endpoints are excluded: sight *to* an occupied cell is fine.
    CHECK(line_of_sight(m, Cell{3, 2}, Cell{4, 2}));
    // Same cell.
    CHECK(line_of_sight(m, Cell{1, 1}, Cell{1, 1}));
    // Around the corner through the wall.
    CHECK_FALSE(line_of_sight(m, Cell{4, 1}, Cell{4, 3}));
}

TEST_CASE("bfs distances match an independent oracle") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const GridMap m = random_map(24, 18, 0.25, rng);
        if (m.free_cells().empty()) continue;
        const Cell start = random_free_cell(m, rng);
        const auto got = bfs_distances(m, start);
        const auto want = bfs_oracle(m, {}, start);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("bfs honors extra obstacles") {
    const GridMap m = open_map(6, 1);
    std::vector<bool> extra(m.cell_count(), false);
    extra[m.index(Cell{3, 1})] = true;
    const auto d = bfs_distances(m, Cell{1, 1}, extra);
    CHECK(d[m.index(Cell{2, 1})] == 1);
    CHECK(d[m.index(Cell{3, 1})] == -1);
    CHECK(d[m.index(Cell{4, 1})] == -1);  // single row, wall of one cell seals it
}

TEST_CASE("free components match an independent count") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const GridMap m = random_map(20, 20, 0.35, rng);
        const auto comp = free_components(m, {});
        int max_label = -1;
        for (std::size_t i = 0; i < comp.size(); ++i) {
            if (m.free(m.cell_at(i)))
                CHECK(comp[i] >= 0);
            else
                CHECK(comp[i] == -1);
            max_label = std::max(max_label, comp[i]);
        }
        CHECK(max_label + 1 == component_count_oracle(m));
        // Adjacent free cells share a label.
        for (std::size_t i = 0; i < comp.size(); ++i) {
            const Cell c = m.cell_at(i);
            const Cell right{c.x + 1, c.y};
            if (m.free(c) && m.free(right)) CHECK(comp[i] == comp[m.index(right)]);
        }
    }
}

TEST_CASE("map equality and unit conversion") {
    GridMap a = open_map(4, 4);
    GridMap b = open_map(4, 4);
    CHECK(a == b);
    b.set_occupied(Cell{2, 2}, true);
    CHECK_FALSE(a == b);
    CHECK(a.meters(8.0) == doctest::Approx(2.0));
    CHECK(a.cells_from_meters(2.0) == doctest::Approx(8.0));
}

}  // TEST_SUITE
