#include "doctest.h"
#include "helpers.hpp"

#include "rearrange/policies.hpp"

using namespace rearrange;
using namespace testutil;

namespace {

// Applies a move sequence to a pose on the map, verifying each step is into a
// free cell; returns the final cell.
Cell walk(const GridMap& m, const std::vector<bool>& dyn, AgentPose pose,
          const std::vector<LowLevelAction>& plan) {
    for (const auto& a : plan) {
        Cell dir{0, 0};
        switch (a.kind) {
            case ActionKind::MoveAhead: dir = heading_dir(pose.heading); break;
            case ActionKind::MoveBack: dir = heading_dir(pose.heading + 180); break;
            case ActionKind::MoveLeft: dir = heading_dir(pose.heading + 270); break;
            case ActionKind::MoveRight: dir = heading_dir(pose.heading + 90); break;
            default: REQUIRE(false);
        }
        pose.cell = Cell{pose.cell.x + dir.x, pose.cell.y + dir.y};
        REQUIRE(m.free(pose.cell));
        if (!dyn.empty()) REQUIRE_FALSE(dyn[m.index(pose.cell)]);
    }
    return pose.cell;
}

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("astar: optimal lengths on random maps vs bfs oracle") {
    std::mt19937_64 rng(97);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const GridMap m = random_map(40, 40, 0.30, rng);
        const auto free = m.free_cells();
        if (free.size() < 2) continue;
        const Cell start = random_free_cell(m, rng);
        const Cell goal = random_free_cell(m, rng);
        const AgentPose pose{start, 90 * (trial % 4), 0};
        const auto plan = astar_path(m, {}, pose, goal);
        const auto dist = bfs_oracle(m, {}, start);
        const int want = dist[m.index(goal)];
        if (want < 0) {
            CHECK_FALSE(plan.has_value());
        } else {
            REQUIRE(plan.has_value());
            // Strafe moves make the optimal cost exactly the BFS distance.
            CHECK(static_cast<int>(plan->size()) == want);
            CHECK(walk(m, {}, pose, *plan) == goal);
        }
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("astar: start equals goal gives an empty plan") {
    const GridMap m = open_map(8, 8);
    const auto plan = astar_path(m, {}, {Cell{3, 3}, 0, 0}, Cell{3, 3});
    REQUIRE(plan.has_value());
    CHECK(plan->empty());
}

TEST_CASE("astar: dynamic obstacles block and reroute") {
    const GridMap m = make_map({
        "#######",
        "#.....#",
        "#.....#",
        "#######",
    });
    std::vector<bool> dyn(m.cell_count(), false);
    dyn[m.index(Cell{3, 1})] = true;
    const AgentPose pose{Cell{1, 1}, 0, 0};
    const auto plan = astar_path(m, dyn, pose, Cell{5, 1});
    REQUIRE(plan.has_value());
    CHECK(plan->size() == 6);  // detour through the y=2 row
    CHECK(walk(m, dyn, pose, *plan) == Cell{5, 1});
    // Seal the corridor completely.
    dyn[m.index(Cell{3, 2})] = true;
    CHECK_FALSE(astar_path(m, dyn, pose, Cell{5, 1}).has_value());
    // Goal itself blocked.
    std::vector<bool> dyn2(m.cell_count(), false);
    dyn2[m.index(Cell{5, 1})] = true;
    CHECK_FALSE(astar_path(m, dyn2, pose, Cell{5, 1}).has_value());
}

TEST_CASE("astar: deterministic output") {
    std::mt19937_64 rng(31);
    const GridMap m = random_map(30, 30, 0.2, rng);
    const AgentPose pose{random_free_cell(m, rng), 0, 0};
    const Cell goal = random_free_cell(m, rng);
    const auto a = astar_path(m, {}, pose, goal);
    const auto b = astar_path(m, {}, pose, goal);
    CHECK(a == b);
}

TEST_CASE("rotate plan uses at most two turns, 180 resolved left") {
    CHECK(rotate_plan(0, 0).empty());
    auto p = rotate_plan(0, 90);
    REQUIRE(p.size() == 1);
    CHECK(p[0].kind == ActionKind::RotateRight);
    p = rotate_plan(0, 270);
    REQUIRE(p.size() == 1);
    CHECK(p[0].kind == ActionKind::RotateLeft);
    p = rotate_plan(0, 180);
    REQUIRE(p.size() == 2);
    CHECK(p[0].kind == ActionKind::RotateLeft);
    CHECK(p[1].kind == ActionKind::RotateLeft);
    p = rotate_plan(270, 0);
    REQUIRE(p.size() == 1);
    CHECK(p[0].kind == ActionKind::RotateRight);
}

TEST_CASE("executor: happy path pick then place") {
    const GridMap m = open_map(12, 12);
    GridWorld w(m, {Cell{2, 2}, 0, 0}, {WorldObject{0, "Bowl", Cell{4, 2}}});
    const Cell target{8, 2};
    PickPlaceExecutor ex(0, Cell{4, 2}, {PlaceCandidate{Cell{7, 2}, target, false}}, false);
    int guard = 0;
    while (ex.status() == PickPlaceExecutor::Status::InProgress && guard++ < 100) {
        const auto dyn = w.dynamic_obstacles();
        const auto a = ex.next(m, dyn, w.agent());
        if (!a) break;
        const auto res = w.step(*a);
        ex.on_result(*a, res.success, res.agent_pose);
    }
    CHECK(ex.status() == PickPlaceExecutor::Status::Succeeded);
    CHECK(ex.placed_at() == std::optional<Cell>(target));
    CHECK(w.object(0).cell == target);
    CHECK_FALSE(w.object(0).held);
    CHECK(w.agent().cell == Cell{7, 2});
}

TEST_CASE("executor: pick failure is surfaced, not retried") {
    const GridMap m = open_map(12, 12);
    // The believed cell is wrong: the real object sits outside the view cone,
    // so the world rejects the pick and the executor must surface the failure.
    GridWorld w(m, {Cell{2, 2}, 0, 0}, {WorldObject{0, "Bowl", Cell{2, 10}}});
    PickPlaceExecutor ex(0, Cell{4, 2}, {PlaceCandidate{Cell{7, 2}, Cell{8, 2}, false}},
                         false);
    int guard = 0;
    while (ex.status() == PickPlaceExecutor::Status::InProgress && guard++ < 100) {
        const auto a = ex.next(m, w.dynamic_obstacles(), w.agent());
        if (!a) break;
        const auto res = w.step(*a);
        ex.on_result(*a, res.success, res.agent_pose);
    }
    CHECK(ex.status() == PickPlaceExecutor::Status::PickFailed);
    CHECK(w.held_object() == std::nullopt);
}

TEST_CASE("executor: blocked place falls through to the next candidate") {
    const GridMap m = open_map(12, 12);
    GridWorld w(m, {Cell{2, 2}, 0, 0},
                {WorldObject{0, "Bowl", Cell{4, 2}}, WorldObject{1, "Cup", Cell{8, 2}}});
    // First candidate target is occupied by object 1; second is open.
    PickPlaceExecutor ex(0, Cell{4, 2},
                         {PlaceCandidate{Cell{7, 2}, Cell{8, 2}, true},
                          PlaceCandidate{Cell{8, 5}, Cell{8, 6}, false}},
                         false);
    int guard = 0;
    while (ex.status() == PickPlaceExecutor::Status::InProgress && guard++ < 200) {
        const auto a = ex.next(m, w.dynamic_obstacles(), w.agent());
        if (!a) break;
        const auto res = w.step(*a);
        ex.on_result(*a, res.success, res.agent_pose);
    }
    CHECK(ex.status() == PickPlaceExecutor::Status::Succeeded);
    CHECK(w.object(0).cell == Cell{8, 6});
}

TEST_CASE("executor: already-held object skips the pick phase") {
    const GridMap m = open_map(12, 12);
    GridWorld w(m, {Cell{2, 2}, 0, 0}, {WorldObject{0, "Bowl", Cell{3, 2}}});
    REQUIRE(w.step({ActionKind::Pick, 0}).success);
    PickPlaceExecutor ex(0, Cell{3, 2}, {PlaceCandidate{Cell{7, 2}, Cell{8, 2}, false}},
                         true);
    int guard = 0;
    bool saw_pick = false;
    while (ex.status() == PickPlaceExecutor::Status::InProgress && guard++ < 100) {
        const auto a = ex.next(m, w.dynamic_obstacles(), w.agent());
        if (!a) break;
        saw_pick |= a->kind == ActionKind::Pick;
        const auto res = w.step(*a);
        ex.on_result(*a, res.success, res.agent_pose);
    }
    CHECK(ex.status() == PickPlaceExecutor::Status::Succeeded);
    CHECK_FALSE(saw_pick);
    CHECK(w.object(0).cell == Cell{8, 2});
}

TEST_CASE("executor: unreachable place stand reports NoPath") {
    const GridMap m = make_map({
        "#########",
        "#...#...#",
        "#...#...#",
        "#########",
    });
    GridWorld w(m, {Cell{1, 1}, 0, 0}, {WorldObject{0, "Bowl", Cell{2, 1}}});
    // Place stand on the far side of the wall: no route exists.
    PickPlaceExecutor ex(0, Cell{2, 1}, {PlaceCandidate{Cell{6, 1}, Cell{7, 1}, false}},
                         false);
    int guard = 0;
    while (ex.status() == PickPlaceExecutor::Status::InProgress && guard++ < 100) {
        const auto a = ex.next(m, w.dynamic_obstacles(), w.agent());
        if (!a) break;
        const auto res = w.step(*a);
        ex.on_result(*a, res.success, res.agent_pose);
    }
    CHECK(ex.status() == PickPlaceExecutor::Status::NoPath);
}

}  // TEST_SUITE
