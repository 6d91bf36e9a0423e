#include "rearrange/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "rearrange/policies.hpp"

#include "json.hpp"

namespace rearrange {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

bool is_move(ActionKind k) {
    return k == ActionKind::MoveAhead || k == ActionKind::MoveBack ||
           k == ActionKind::MoveLeft || k == ActionKind::MoveRight;
}

Cell move_dir(ActionKind k, int heading) {
    switch (k) {
        case ActionKind::MoveBack: return heading_dir(heading + 180);
        case ActionKind::MoveLeft: return heading_dir(heading + 270);
        case ActionKind::MoveRight: return heading_dir(heading + 90);
        default: return heading_dir(heading);
    }
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Hoop: return "hoop";
        case Method::Fhc: return "fhc";
        case Method::HoopDepth1: return "hoop_depth1";
        case Method::Pk: return "pk";
        case Method::Pd: return "pd";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "hoop") return Method::Hoop;
    if (s == "fhc") return Method::Fhc;
    if (s == "hoop_depth1") return Method::HoopDepth1;
    if (s == "pk") return Method::Pk;
    if (s == "pd") return Method::Pd;
    throw std::runtime_error("unknown method: " + s);
}

namespace {

// Shared episode machinery: world, walkthrough map, sensor, belief, logging.
struct EpisodeCtx {
    EpisodeCtx(const SceneInstance& scene, const RunConfig& cfg)
        : scene(scene), cfg(cfg), world(make_world(scene)) {
        auto [m, r] = world.walkthrough();
        map = std::move(m);
        receptacles = std::move(r);

        auto params = cfg.sensor_params;
        if (params.empty() && !cfg.sensor_params_csv.empty())
            params = SensorModel::load_params_csv(cfg.sensor_params_csv);

        SensorConfig scfg = cfg.sensor;
        BeliefInitMode init = BeliefInitMode::Uniform;
        if (cfg.method == Method::Pk || cfg.method == Method::Pd) {
            const auto oracle = make_oracle_config(cfg.method == Method::Pk ? OracleKind::PK
                                                                            : OracleKind::PD);
            scfg = oracle.sensor;
            init = oracle.belief_init;
        }
        sensor.emplace(std::move(params), scfg);

        std::vector<BeliefState::TrackedObject> tracked;
        std::map<ObjectId, Cell> goals, starts;
        for (const auto& o : scene.objects) {
            tracked.push_back({o.id, o.class_name, o.footprint});
            goals[o.id] = o.goal;
            starts[o.id] = o.start;
            tracked_pairs.emplace_back(o.id, o.class_name);
        }
        belief = BeliefState::init(map, tracked, goals, init, scene.agent_start.cell, starts);

        det_rng.seed(mix(cfg.seed, 17));

        log.scene_id = scene.id;
        log.method = to_string(cfg.method);
        log.seed = cfg.seed;
    }

    void observe(const BeliefActionContext& actx) {
        const Observation z =
            sensor->detect(world.visible_objects(), tracked_pairs, map, world.agent(),
                           world.sensing_range_cells(), det_rng);
        belief.update(actx, z, *sensor, map, world.sensing_range_cells(), world.agent().cell);
    }

    // Executes one low-level action, runs the matching belief update, and
    // appends the step record.
    StepResult exec(const LowLevelAction& a, const std::string& sub_goal) {
        BeliefActionContext actx;
        Cell attempted;
        std::optional<ObjectId> held_before = world.held_object();
        if (a.kind == ActionKind::Pick)
            attempted = map.in_bounds(a.cell) && map.free(a.cell)
                            ? a.cell
                            : belief.object(a.object_id).argmax(map);
        const Cell dir = heading_dir(world.agent().heading);
        const Cell front{world.agent().cell.x + dir.x, world.agent().cell.y + dir.y};

        const StepResult res = world.step(a);
        ++t;

        if (!res.success && is_move(a.kind)) {
            // Remember the cell we bumped into so path planning stops routing
            // through it. Objects move, so the memory is dropped on any
            // successful pick.
            const Cell d = move_dir(a.kind, world.agent().heading);
            const Cell hit{world.agent().cell.x + d.x, world.agent().cell.y + d.y};
            if (map.in_bounds(hit)) bumped.insert(map.index(hit));
        }
        if (a.kind == ActionKind::Pick && res.success) bumped.clear();

        if (a.kind == ActionKind::Pick) {
            if (res.success)
                actx = {BeliefActionKind::Pick, a.object_id, world.agent().cell};
            else
                actx = {BeliefActionKind::PickFailed, a.object_id, attempted};
        } else if (a.kind == ActionKind::Place && res.success && held_before) {
            actx = {BeliefActionKind::Place, *held_before, front};
        }
        observe(actx);

        StepRecord rec;
        rec.t = t;
        rec.action = rearrange::to_string(a);
        rec.success = res.success;
        rec.sub_goal = sub_goal;
        for (const auto& [id, b] : belief.objects())
            rec.belief_max.emplace_back(id, round4(b.max_mass()));
        log.steps.push_back(std::move(rec));
        return res;
    }

    std::vector<bool> obstacles() const {
        auto dyn = believed_obstacles(belief, map, cfg.abstraction.concentration_threshold);
        for (int idx : bumped) dyn[idx] = true;
        dyn[map.index(world.agent().cell)] = false;
        return dyn;
    }

    bool budget_left() const { return t < cfg.step_budget && !world.done(); }

    void finish(const std::string& termination) {
        log.outcome.termination = termination;
        log.outcome.total_actions = t;
        int placed = 0, total = 0;
        for (const auto& o : scene.objects) {
            ++total;
            const auto& w = world.object(o.id);
            if (!w.held && w.cell == o.goal) ++placed;
        }
        log.outcome.os = total > 0 ? static_cast<double>(placed) / total : 1.0;
        log.outcome.ss = placed == total;
    }

    const SceneInstance& scene;
    const RunConfig& cfg;
    GridWorld world;
    GridMap map;
    std::vector<ReceptacleInfo> receptacles;
    std::optional<SensorModel> sensor;
    BeliefState belief;
    std::vector<std::pair<ObjectId, std::string>> tracked_pairs;
    std::mt19937_64 det_rng;
    std::set<int> bumped;
    int t = 0;
    EpisodeLog log;
};

// Objects that are concentrated enough to act on; used to interrupt Move
// sub-goals when something new shows up.
std::set<ObjectId> concentrated_set(const BeliefState& b, double threshold) {
    std::set<ObjectId> out;
    for (const auto& [id, ob] : b.objects())
        if (ob.is_held || ob.at_goal || ob.max_mass() >= threshold) out.insert(id);
    return out;
}

EpisodeLog run_hoop(const SceneInstance& scene, const RunConfig& cfg) {
    EpisodeCtx ctx(scene, cfg);
    PlannerConfig pcfg = cfg.planner;
    if (cfg.method == Method::HoopDepth1) pcfg.depth = 1;
    Planner planner(ctx.map, cfg.abstraction, pcfg);
    std::mt19937_64 abs_rng(mix(cfg.seed, 23));

    ctx.observe({});
    ctx.log.outcome.termination = "step_budget";

    LastActionInfo last;
    int replans = 0;
    int stalls = 0;  // consecutive replans that executed no low-level action
    int last_t = -1;
    while (ctx.budget_left()) {
        if (ctx.t == last_t) {
            if (++stalls > 25) break;
        } else {
            stalls = 0;
        }
        last_t = ctx.t;
        const AbstractState s =
            generate_abstract_state(ctx.belief, ctx.map, ctx.receptacles, ctx.world.agent(),
                                    last, nullptr, cfg.abstraction, abs_rng);
        pcfg.seed = mix(cfg.seed, 1000 + replans);
        ++replans;
        planner.set_config(pcfg);
        const AbstractAction a = planner.plan(ctx.belief, s);
        const std::string sub_goal = rearrange::to_string(a);

        if (a.kind == AbstractAction::Kind::Done) {
            ctx.exec(LowLevelAction{ActionKind::Done}, sub_goal);
            ctx.finish("done_action");
            return ctx.log;
        }

        if (a.kind == AbstractAction::Kind::Move) {
            const auto path = astar_path(ctx.map, ctx.obstacles(), ctx.world.agent(), a.move_to);
            if (!path || path->empty()) {
                last = {ActionKind::Start, false, -1, {}};
                continue;
            }
            auto before = concentrated_set(ctx.belief, cfg.abstraction.concentration_threshold);
            for (const auto& act : *path) {
                if (!ctx.budget_left()) break;
                const auto res = ctx.exec(act, sub_goal);
                if (!res.success) break;  // bumped a surprise obstacle; replan
                // Interrupt the move as soon as a new object firms up.
                auto now = concentrated_set(ctx.belief, cfg.abstraction.concentration_threshold);
                if (now != before) break;
            }
            last = {ActionKind::MoveAhead, true, -1, {}};
            continue;
        }

        if (a.kind == AbstractAction::Kind::Rotate) {
            for (const auto& act : rotate_plan(ctx.world.agent().heading, a.angle)) {
                if (!ctx.budget_left()) break;
                ctx.exec(act, sub_goal);
            }
            last = {ActionKind::RotateLeft, true, -1, {}};
            continue;
        }

        // PickPlace: walk to the pick stand first unless already carrying.
        const bool held = ctx.belief.object(a.object).is_held;
        if (!held) {
            const auto path =
                astar_path(ctx.map, ctx.obstacles(), ctx.world.agent(), a.pick_stand);
            if (!path) {
                last = {ActionKind::Pick, false, a.object, {}};
                continue;
            }
            bool blocked = false;
            for (const auto& act : *path) {
                if (!ctx.budget_left()) break;
                if (!ctx.exec(act, sub_goal).success) { blocked = true; break; }
            }
            if (blocked || !ctx.budget_left()) {
                last = {ActionKind::MoveAhead, false, -1, {}};
                continue;
            }
        }

        // Aim the pick at the cell this stand was sampled for; the global
        // argmax can sit in a different mode of a diffuse belief.
        Cell believed = ctx.belief.object(a.object).argmax(ctx.map);
        std::vector<PlaceCandidate> places;
        for (const auto& so : s.objects)
            if (so.id == a.object) {
                places = so.place_locs;
                for (const auto& pc : so.picks)
                    if (pc.stand == a.pick_stand) believed = pc.object_cell;
            }
        std::stable_sort(places.begin(), places.end(),
                         [&](const PlaceCandidate& x, const PlaceCandidate& y) {
                             return (x.target == a.target) > (y.target == a.target);
                         });
        PickPlaceExecutor ex(a.object, believed, places, held);
        while (ex.status() == PickPlaceExecutor::Status::InProgress && ctx.budget_left()) {
            const auto act = ex.next(ctx.map, ctx.obstacles(), ctx.world.agent());
            if (!act) break;
            const auto res = ctx.exec(*act, sub_goal);
            ex.on_result(*act, res.success, ctx.world.agent());
        }
        switch (ex.status()) {
            case PickPlaceExecutor::Status::Succeeded:
                last = {ActionKind::Place, true, a.object, *ex.placed_at()};
                break;
            case PickPlaceExecutor::Status::PickFailed:
                last = {ActionKind::Pick, false, a.object, believed};
                break;
            default:
                last = {ActionKind::Place, false, a.object, {}};
                break;
        }
    }
    ctx.finish(ctx.world.done() ? "done_action" : "step_budget");
    return ctx.log;
}

EpisodeLog run_fhc(const SceneInstance& scene, const RunConfig& cfg) {
    EpisodeCtx ctx(scene, cfg);
    FhcPolicy fhc(ctx.map, FhcConfig{cfg.fhc_theta, cfg.fhc_map_known});
    fhc.observe(ctx.world.agent(), ctx.world.sensing_range_cells());
    ctx.observe({});

    std::string termination = "step_budget";
    int stalls = 0;
    int last_t = -1;
    while (ctx.budget_left()) {
        if (ctx.t == last_t) {
            if (++stalls > 50) {
                termination = "exhausted";
                break;
            }
        } else {
            stalls = 0;
        }
        last_t = ctx.t;
        FhcSubGoal g;
        try {
            g = fhc.step(ctx.belief, ctx.world.agent().cell);
        } catch (const Exhausted&) {
            termination = "exhausted";
            break;
        }
        if (g.kind == FhcSubGoal::Kind::Finished) {
            ctx.exec(LowLevelAction{ActionKind::Done}, "Finished");
            termination = "done_action";
            break;
        }

        if (g.kind == FhcSubGoal::Kind::Explore) {
            const std::string sub_goal =
                "Explore(" + std::to_string(g.target.x) + "," + std::to_string(g.target.y) + ")";
            const auto path = astar_path(ctx.map, ctx.obstacles(), ctx.world.agent(), g.target);
            if (!path) {
                fhc.mark_unreachable(g.target);
                continue;
            }
            if (path->empty()) {
                // Already on the centroid; sweep the camera so the frontier
                // around it dissolves.
                ctx.exec(LowLevelAction{ActionKind::RotateLeft}, sub_goal);
                fhc.observe(ctx.world.agent(), ctx.world.sensing_range_cells());
                continue;
            }
            for (const auto& act : *path) {
                if (!ctx.budget_left()) break;
                const auto res = ctx.exec(act, sub_goal);
                fhc.observe(ctx.world.agent(), ctx.world.sensing_range_cells());
                if (!res.success) break;
                // Stop exploring the moment something crosses the threshold.
                bool found_new = false;
                for (const auto& [id, ob] : ctx.belief.objects())
                    if (!fhc.found().count(id) && ob.max_mass() > cfg.fhc_theta &&
                        !ob.at_goal && !ob.is_held)
                        found_new = true;
                if (found_new) break;
            }
            continue;
        }

        // PickPlace of the closest found object toward its goal, no alternate
        // targets: a failed interaction permanently exhausts this location.
        const std::string sub_goal = "PickPlace(" + std::to_string(g.object) + ")";
        const auto& ob = ctx.belief.object(g.object);
        auto dyn = ctx.obstacles();
        const auto dist = bfs_distances(ctx.map, ctx.world.agent().cell, dyn);
        std::optional<Cell> stand;
        int best_d = std::numeric_limits<int>::max();
        const int r = static_cast<int>(ctx.world.interaction_range_cells());
        for (int y = g.object_cell.y - r; y <= g.object_cell.y + r; ++y)
            for (int x = g.object_cell.x - r; x <= g.object_cell.x + r; ++x) {
                const Cell c{x, y};
                if (!ctx.map.free(c) || dyn[ctx.map.index(c)]) continue;
                if (euclid(c, g.object_cell) > ctx.world.interaction_range_cells() + 1e-9)
                    continue;
                if (!line_of_sight(ctx.map, c, g.object_cell)) continue;
                const int d = dist[ctx.map.index(c)];
                if (d >= 0 && d < best_d) { best_d = d; stand = c; }
            }
        if (!stand) {
            fhc.mark_exhausted(g.object, g.object_cell);
            continue;
        }
        const auto path = astar_path(ctx.map, dyn, ctx.world.agent(), *stand);
        bool nav_failed = !path;
        if (path) {
            for (const auto& act : *path) {
                if (!ctx.budget_left()) break;
                const auto res = ctx.exec(act, sub_goal);
                fhc.observe(ctx.world.agent(), ctx.world.sensing_range_cells());
                if (!res.success) { nav_failed = true; break; }
            }
        }
        if (nav_failed) {
            fhc.mark_exhausted(g.object, g.object_cell);
            continue;
        }

        AbstractionConfig goal_only = cfg.abstraction;
        goal_only.alt_receptacles = 0;
        const auto places =
            sample_place_locations(g.target, ob.footprint, ctx.map.receptacles(), ctx.map,
                                   ctx.obstacles(), ctx.world.agent().cell, goal_only);
        PickPlaceExecutor ex(g.object, g.object_cell, places, ob.is_held);
        while (ex.status() == PickPlaceExecutor::Status::InProgress && ctx.budget_left()) {
            const auto act = ex.next(ctx.map, ctx.obstacles(), ctx.world.agent());
            if (!act) break;
            const auto res = ctx.exec(*act, sub_goal);
            fhc.observe(ctx.world.agent(), ctx.world.sensing_range_cells());
            ex.on_result(*act, res.success, ctx.world.agent());
        }
        if (ex.status() == PickPlaceExecutor::Status::Succeeded)
            fhc.mark_placed(g.object);
        else
            fhc.mark_exhausted(g.object, g.object_cell);
    }
    ctx.finish(termination);
    return ctx.log;
}

}  // namespace

EpisodeLog run_episode(const SceneInstance& scene, const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    EpisodeLog log = cfg.method == Method::Fhc ? run_fhc(scene, cfg) : run_hoop(scene, cfg);
    log.outcome.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return log;
}

std::string to_jsonl(const EpisodeLog& log) {
    std::ostringstream out;
    nlohmann::json header = {{"type", "episode"},
                             {"schema_version", 1},
                             {"scene_id", log.scene_id},
                             {"method", log.method},
                             {"seed", log.seed}};
    out << header.dump() << "\n";
    for (const auto& s : log.steps) {
        nlohmann::json bm = nlohmann::json::array();
        for (const auto& [id, m] : s.belief_max) bm.push_back({id, m});
        nlohmann::json rec = {{"type", "step"},       {"t", s.t},
                              {"action", s.action},   {"success", s.success},
                              {"sub_goal", s.sub_goal}, {"belief_max", std::move(bm)}};
        out << rec.dump() << "\n";
    }
    nlohmann::json outcome = {{"type", "outcome"},
                              {"ss", log.outcome.ss},
                              {"os", log.outcome.os},
                              {"total_actions", log.outcome.total_actions},
                              {"termination", log.outcome.termination}};
    out << outcome.dump() << "\n";
    return out.str();
}

EpisodeLog episode_log_from_jsonl(const std::string& text) {
    EpisodeLog log;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const std::string type = j.value("type", "");
        if (type == "episode") {
            if (j.value("schema_version", 0) != 1)
                throw std::runtime_error("unsupported episode log schema version");
            log.scene_id = j.value("scene_id", "");
            log.method = j.value("method", "");
            log.seed = j.value("seed", std::uint64_t{0});
        } else if (type == "step") {
            StepRecord s;
            s.t = j.at("t").get<int>();
            s.action = j.at("action").get<std::string>();
            s.success = j.at("success").get<bool>();
            s.sub_goal = j.at("sub_goal").get<std::string>();
            for (const auto& bm : j.at("belief_max"))
                s.belief_max.emplace_back(bm.at(0).get<int>(), bm.at(1).get<double>());
            log.steps.push_back(std::move(s));
        } else if (type == "outcome") {
            log.outcome.ss = j.at("ss").get<bool>();
            log.outcome.os = j.at("os").get<double>();
            log.outcome.total_actions = j.at("total_actions").get<int>();
            log.outcome.termination = j.at("termination").get<std::string>();
        }
    }
    return log;
}

MethodSummary metrics(const std::vector<EpisodeLog>& logs) {
    if (logs.empty()) throw std::runtime_error("metrics over an empty log set");
    MethodSummary m;
    m.method = logs.front().method;
    m.episodes = static_cast<int>(logs.size());
    double ss = 0.0, os = 0.0, actions = 0.0;
    int successes = 0;
    for (const auto& log : logs) {
        if (log.outcome.ss) {
            ss += 1.0;
            actions += log.outcome.total_actions;
            ++successes;
        }
        os += log.outcome.os;
    }
    m.ss = ss / logs.size();
    m.os = os / logs.size();
    if (successes > 0) m.ta = static_cast<int>(std::ceil(actions / successes));
    return m;
}

std::string report_csv(const std::vector<MethodSummary>& rows) {
    std::ostringstream out;
    out << "method,episodes,ss,os,ta\n";
    for (const auto& r : rows) {
        out << r.method << "," << r.episodes << "," << round4(r.ss) << "," << round4(r.os)
            << ",";
        if (r.ta)
            out << *r.ta;
        else
            out << "NA";
        out << "\n";
    }
    return out.str();
}

std::string report_markdown(const std::vector<MethodSummary>& rows) {
    std::ostringstream out;
    out << "| method | episodes | SS &uarr; | OS &uarr; | TA &darr; |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.method << " | " << r.episodes << " | " << round4(r.ss) << " | "
            << round4(r.os) << " | ";
        if (r.ta)
            out << *r.ta;
        else
            out << "NA";
        out << " |\n";
    }
    return out.str();
}

int worker_count_from_env() {
    if (const char* env = std::getenv("REARRANGE_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<EpisodeLog> run_episodes(const std::vector<SceneInstance>& scenes,
                                     const RunConfig& cfg, int workers,
                                     const std::string& out_dir) {
    std::vector<EpisodeLog> logs(scenes.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < scenes.size(); i = next.fetch_add(1)) {
            RunConfig episode_cfg = cfg;
            episode_cfg.seed = mix(cfg.seed, i);
            logs[i] = run_episode(scenes[i], episode_cfg);
            if (!out_dir.empty()) {
                const std::string path = out_dir + "/" + scenes[i].id + "_" +
                                         to_string(cfg.method) + ".jsonl";
                std::ofstream f(path);
                f << to_jsonl(logs[i]);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return logs;
}

}  // namespace rearrange
