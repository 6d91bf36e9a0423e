#include <benchmark/benchmark.h>

#include <random>

#include "rearrange/abstraction.hpp"
#include "rearrange/belief.hpp"
#include "rearrange/planner.hpp"
#include "rearrange/policies.hpp"
#include "rearrange/scenegen.hpp"
#include "rearrange/sensor.hpp"

using namespace rearrange;

namespace {

GridMap random_map(int w, int h, double density, std::mt19937_64& rng) {
    std::vector<std::string> rows(h, std::string(w, '.'));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1 || unit(rng) < density)
                rows[y][x] = '#';
    std::vector<std::vector<char>> grid(h, std::vector<char>(w));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) grid[y][x] = rows[y][x];
    GridMap m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (grid[y][x] == '#') m.set_occupied(Cell{x, y}, true);
    return m;
}

Cell random_free(const GridMap& m, std::mt19937_64& rng) {
    const auto free = m.free_cells();
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    return free[pick(rng)];
}

}  // namespace

static void BM_astar_40x40(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const GridMap m = random_map(40, 40, 0.25, rng);
    const Cell start = random_free(m, rng);
    const Cell goal = random_free(m, rng);
    for (auto _ : state) {
        auto p = astar_path(m, {}, AgentPose{start, 0, 0}, goal);
        benchmark::DoNotOptimize(p);
    }
}
BENCHMARK(BM_astar_40x40);

static void BM_belief_update_5obj(benchmark::State& state) {
    std::mt19937_64 rng(11);
    const GridMap m = random_map(30, 30, 0.1, rng);
    SensorModel sensor(SensorModel::load_params_csv(BENCH_DATA_DIR "/detector_classes.csv"));
    std::vector<BeliefState::TrackedObject> objs;
    std::map<ObjectId, Cell> goals;
    for (int i = 0; i < 5; ++i) {
        objs.push_back({i, "Book", 1});
        goals[i] = random_free(m, rng);
    }
    const Cell agent = random_free(m, rng);
    auto b = BeliefState::init(m, objs, goals, BeliefInitMode::Uniform, agent);
    Observation z;
    z.robot = {agent, 0, 0};
    for (int i = 0; i < 5; ++i) z.per_object[i] = std::nullopt;
    z.per_object[0] = Cell{agent.x + 2, agent.y};
    const double range = m.cells_from_meters(4.0);
    for (auto _ : state) {
        auto copy = b;
        copy.update({BeliefActionKind::Navigation}, z, sensor, m, range, agent);
        benchmark::DoNotOptimize(copy);
    }
}
BENCHMARK(BM_belief_update_5obj);

static void BM_pouct_plan(benchmark::State& state) {
    GenConfig g;
    g.n_rooms = 2;
    g.n_objects = 5;
    g.seed = 13;
    const auto scene = generate_scene(g);
    std::vector<BeliefState::TrackedObject> objs;
    std::map<ObjectId, Cell> goals, truths;
    for (const auto& o : scene.objects) {
        objs.push_back({o.id, o.class_name, o.footprint});
        goals[o.id] = o.goal;
        truths[o.id] = o.start;
    }
    const auto b = BeliefState::init(scene.map, objs, goals, BeliefInitMode::Delta,
                                     scene.agent_start.cell, truths);
    AbstractionConfig acfg;
    std::mt19937_64 rng(5);
    const auto s = generate_abstract_state(b, scene.map, scene.map.receptacles(),
                                           scene.agent_start, {}, nullptr, acfg, rng);
    PlannerConfig pcfg;
    pcfg.simulations = static_cast<int>(state.range(0));
    pcfg.seed = 17;
    for (auto _ : state) {
        Planner planner(scene.map, acfg, pcfg);
        auto a = planner.plan(b, s);
        benchmark::DoNotOptimize(a);
    }
}
BENCHMARK(BM_pouct_plan)->Arg(1000)->Arg(4000);

static void BM_generate_scene(benchmark::State& state) {
    std::uint64_t seed = 1;
    for (auto _ : state) {
        GenConfig g;
        g.n_rooms = 2;
        g.n_objects = 5;
        g.seed = seed++;
        auto s = generate_scene(g);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_generate_scene);

BENCHMARK_MAIN();
