#include "rearrange/scenegen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace rearrange {

namespace {

constexpr double kInteractionRangeCells = 8.0;  // 2 m at 0.25 m cells
constexpr double kSensingRangeCells = 16.0;     // 4 m at 0.25 m cells

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const std::vector<std::string>& class_pool() {
    static const std::vector<std::string> pool = {
        "AlarmClock", "Book",   "Bowl",          "Cup",        "Laptop",     "Mug",
        "Plate",      "Vase",   "Statue",        "TeddyBear",  "Pillow",     "RemoteControl",
        "SoapBottle", "Kettle", "TissueBox",     "CellPhone",
    };
    return pool;
}

struct Floorplan {
    GridMap map;
    std::vector<Cell> doors;
    int n_rooms = 0;
};

int find_root(std::vector<int>& parent, int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
}

Floorplan build_floorplan(int n_rooms, std::mt19937_64& rng) {
    int sx = 1, sy = 1;
    if (n_rooms == 2) sx = 2;
    if (n_rooms == 3) sx = 3;
    if (n_rooms == 4) { sx = 2; sy = 2; }

    const int rw = n_rooms == 1 ? 18 : 14 + static_cast<int>(rng() % 5);
    const int rh = n_rooms == 1 ? 18 : 14 + static_cast<int>(rng() % 5);

    Floorplan fp;
    fp.n_rooms = n_rooms;
    fp.map = GridMap(sx * (rw + 1) + 1, sy * (rh + 1) + 1);
    auto& map = fp.map;
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        map.set_occupied(map.cell_at(i), true);
        map.set_room_id(map.cell_at(i), -1);
    }
    auto room_x0 = [&](int cx) { return 1 + cx * (rw + 1); };
    auto room_y0 = [&](int cy) { return 1 + cy * (rh + 1); };
    for (int cy = 0; cy < sy; ++cy)
        for (int cx = 0; cx < sx; ++cx) {
            const int room = cy * sx + cx;
            for (int y = room_y0(cy); y < room_y0(cy) + rh; ++y)
                for (int x = room_x0(cx); x < room_x0(cx) + rw; ++x) {
                    map.set_occupied(Cell{x, y}, false);
                    map.set_room_id(Cell{x, y}, room);
                }
        }

    // Spanning tree over the room adjacency graph; each chosen edge becomes a
    // 2-cell door gap in the shared wall.
    struct Edge { int a, b, cx, cy; bool horizontal; };
    std::vector<Edge> edges;
    for (int cy = 0; cy < sy; ++cy)
        for (int cx = 0; cx < sx; ++cx) {
            if (cx + 1 < sx) edges.push_back({cy * sx + cx, cy * sx + cx + 1, cx, cy, true});
            if (cy + 1 < sy) edges.push_back({cy * sx + cx, (cy + 1) * sx + cx, cx, cy, false});
        }
    std::shuffle(edges.begin(), edges.end(), rng);
    std::vector<int> parent(n_rooms);
    for (int i = 0; i < n_rooms; ++i) parent[i] = i;
    for (const Edge& e : edges) {
        const int ra = find_root(parent, e.a);
        const int rb = find_root(parent, e.b);
        if (ra == rb) continue;
        parent[ra] = rb;
        if (e.horizontal) {
            const int wall_x = room_x0(e.cx) + rw;
            const int k = 2 + static_cast<int>(rng() % (rh - 5));
            for (int d = 0; d < 2; ++d) {
                const Cell c{wall_x, room_y0(e.cy) + k + d};
                map.set_occupied(c, false);
                map.set_room_id(c, e.a);
                fp.doors.push_back(c);
            }
        } else {
            const int wall_y = room_y0(e.cy) + rh;
            const int k = 2 + static_cast<int>(rng() % (rw - 5));
            for (int d = 0; d < 2; ++d) {
                const Cell c{room_x0(e.cx) + k + d, wall_y};
                map.set_occupied(c, false);
                map.set_room_id(c, e.a);
                fp.doors.push_back(c);
            }
        }
    }

    // Two wall-side receptacles per room, kept clear of doors.
    for (int cy = 0; cy < sy; ++cy)
        for (int cx = 0; cx < sx; ++cx) {
            const int room = cy * sx + cx;
            const int x0 = room_x0(cx), y0 = room_y0(cy);
            std::vector<Cell> ring;
            for (int x = x0; x < x0 + rw; ++x) {
                ring.push_back(Cell{x, y0});
                ring.push_back(Cell{x, y0 + rh - 1});
            }
            for (int y = y0 + 1; y < y0 + rh - 1; ++y) {
                ring.push_back(Cell{x0, y});
                ring.push_back(Cell{x0 + rw - 1, y});
            }
            int placed = 0;
            for (int tries = 0; tries < 60 && placed < 2; ++tries) {
                const Cell c = ring[rng() % ring.size()];
                if (!map.free(c)) continue;
                bool clear = true;
                for (const Cell& d : fp.doors)
                    if (std::max(std::abs(c.x - d.x), std::abs(c.y - d.y)) < 4) {
                        clear = false;
                        break;
                    }
                for (const auto& r : map.receptacles())
                    if (std::max(std::abs(c.x - r.cell.x), std::abs(c.y - r.cell.y)) < 3) {
                        clear = false;
                        break;
                    }
                if (!clear) continue;
                map.set_occupied(c, true);
                map.receptacles().push_back(ReceptacleInfo{"Receptacle", c, room});
                ++placed;
            }
        }
    return fp;
}

bool far_from_doors(const Cell& c, const std::vector<Cell>& doors, int min_cheb = 2) {
    for (const Cell& d : doors)
        if (std::max(std::abs(c.x - d.x), std::abs(c.y - d.y)) < min_cheb) return false;
    return true;
}

std::vector<Cell> room_candidates(const GridMap& map, int room, const std::vector<Cell>& doors) {
    std::vector<Cell> out;
    for (const Cell& c : map.free_cells())
        if (map.room_id(c) == room && far_from_doors(c, doors)) out.push_back(c);
    return out;
}

// Goal cells in the target room at shortest-path distance >= min_dist from
// start, relaxing the threshold if nothing qualifies.
std::vector<Cell> goal_candidates(const GridMap& map, const Cell& start, int room,
                                  const std::vector<Cell>& doors,
                                  const std::vector<bool>& used, int min_dist) {
    const auto dist = bfs_distances(map, start);
    for (int threshold = min_dist; threshold >= min_dist / 2; threshold -= 4) {
        std::vector<Cell> out;
        for (const Cell& c : map.free_cells()) {
            if (map.room_id(c) != room) continue;
            if (!far_from_doors(c, doors)) continue;
            if (used[map.index(c)]) continue;
            if (dist[map.index(c)] < threshold) continue;
            out.push_back(c);
        }
        if (!out.empty()) return out;
    }
    return {};
}

struct Placement {
    AgentPose agent;
    std::vector<SceneObjectSpec> objects;
};

std::optional<Placement> place_objects(const Floorplan& fp, const GenConfig& cfg,
                                       std::mt19937_64& rng) {
    const GridMap& map = fp.map;
    Placement out;

    std::vector<bool> used(map.cell_count(), false);
    auto mark = [&](const Cell& c) { used[map.index(c)] = true; };

    const auto all_free = map.free_cells();
    std::vector<Cell> agent_cells;
    for (const Cell& c : all_free)
        if (far_from_doors(c, fp.doors, 3)) agent_cells.push_back(c);
    if (agent_cells.empty()) return std::nullopt;
    out.agent.cell = agent_cells[rng() % agent_cells.size()];
    out.agent.heading = static_cast<int>(rng() % 4) * 90;
    mark(out.agent.cell);

    const int n = cfg.n_objects;
    const int n_cross =
        fp.n_rooms > 1 ? static_cast<int>(std::ceil(cfg.cross_room_fraction * n)) : 0;
    const int cross_min = 38, same_min = 16;

    for (int i = 0; i < n; ++i) {
        SceneObjectSpec o;
        o.id = i;
        o.class_name = class_pool()[rng() % class_pool().size()];
        o.footprint = 1;
        const int start_room = i % fp.n_rooms;

        if (cfg.swap && i == 1) {
            // Swap pair: the second start doubles as the first goal and vice
            // versa, so it gets the full cross-room distance constraint.
            const SceneObjectSpec& first = out.objects[0];
            const int room = fp.n_rooms > 1 ? (map.room_id(first.start) + 1 +
                                               static_cast<int>(rng() % (fp.n_rooms - 1))) %
                                                  fp.n_rooms
                                            : 0;
            const int min_dist = fp.n_rooms > 1 ? cross_min : same_min;
            auto cands = goal_candidates(map, first.start, room, fp.doors, used, min_dist);
            if (cands.empty()) return std::nullopt;
            o.start = cands[rng() % cands.size()];
            mark(o.start);
            o.goal = first.start;
            out.objects[0].goal = o.start;
            out.objects.push_back(o);
            continue;
        }

        if (cfg.blocked_goal && !cfg.blocked_path && i == 1) {
            // Start on top of the first object's goal.
            o.start = out.objects[0].goal;
        } else {
            auto cands = room_candidates(map, start_room, fp.doors);
            std::vector<Cell> open;
            for (const Cell& c : cands)
                if (!used[map.index(c)]) open.push_back(c);
            if (open.empty()) return std::nullopt;
            o.start = open[rng() % open.size()];
            mark(o.start);
        }

        if (cfg.swap && i == 0) {
            // Goal assigned when object 1 is placed.
            o.goal = o.start;
            out.objects.push_back(o);
            continue;
        }

        const bool cross = i < n_cross && fp.n_rooms > 1;
        const int goal_room =
            cross ? (start_room + 1 + static_cast<int>(rng() % (fp.n_rooms - 1))) % fp.n_rooms
                  : start_room;
        auto cands = goal_candidates(map, o.start, goal_room, fp.doors, used,
                                     cross ? cross_min : same_min);
        if (cands.empty()) return std::nullopt;
        o.goal = cands[rng() % cands.size()];
        mark(o.goal);
        out.objects.push_back(o);
    }

    // Placement-level displacement check; the caller re-verifies from the
    // serialized instance.
    double total = 0.0;
    for (const auto& o : out.objects) {
        const auto dist = bfs_distances(map, o.start);
        const int d = dist[map.index(o.goal)];
        if (d < 0) return std::nullopt;
        total += d;
    }
    if (total / out.objects.size() <= cfg.min_avg_displacement) return std::nullopt;
    return out;
}

bool overlaps(const Cell& anchor, int footprint, const Cell& c) {
    return c.x >= anchor.x && c.x < anchor.x + footprint && c.y >= anchor.y &&
           c.y < anchor.y + footprint;
}

bool square_free(const GridMap& map, const Cell& t) {
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
            if (!map.free(Cell{t.x + dx, t.y + dy})) return false;
    return true;
}

bool square_clear_of(const SceneInstance& scene, const Cell& t) {
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const Cell c{t.x + dx, t.y + dy};
            if (c == scene.agent_start.cell) return false;
            for (const auto& o : scene.objects)
                if (overlaps(o.start, o.footprint, c) || overlaps(o.goal, o.footprint, c))
                    return false;
        }
    return true;
}

int component_count(const std::vector<int>& labels) {
    int n = 0;
    for (int v : labels) n = std::max(n, v + 1);
    return n;
}

std::vector<bool> square_mask(const GridMap& map, const Cell& t) {
    std::vector<bool> m(map.cell_count(), false);
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) m[map.index(Cell{t.x + dx, t.y + dy})] = true;
    return m;
}

}  // namespace

SceneInstance insert_blocked_path(const SceneInstance& scene, std::mt19937_64& rng) {
    const GridMap& map = scene.map;
    const auto base_labels = free_components(map, {});
    const int base_n = component_count(base_labels);

    struct Candidate { Cell anchor; int cut; };
    std::vector<Candidate> cands;
    bool any_articulation = false;
    for (std::size_t i = 0; i < map.cell_count(); ++i) {
        const Cell t = map.cell_at(i);
        if (!square_free(map, t)) continue;
        const auto mask = square_mask(map, t);
        const auto labels = free_components(map, mask);
        if (component_count(labels) <= base_n) continue;
        any_articulation = true;
        if (!square_clear_of(scene, t)) continue;
        const int agent_comp = labels[map.index(scene.agent_start.cell)];
        if (agent_comp < 0) continue;
        int cut = 0;
        for (const auto& o : scene.objects)
            if (labels[map.index(o.start)] != agent_comp) ++cut;
        if (cut > 0) cands.push_back({t, cut});
    }
    if (cands.empty()) {
        throw NoCutFound(any_articulation
                             ? "articulation squares exist but none cuts off an object"
                             : "no 2x2 articulation square in free space");
    }
    const auto best = *std::max_element(
        cands.begin(), cands.end(),
        [](const Candidate& a, const Candidate& b) { return a.cut < b.cut; });

    SceneInstance out = scene;
    SceneObjectSpec blocker;
    blocker.id = static_cast<int>(out.objects.size());
    blocker.class_name = "Box";
    blocker.footprint = 2;
    blocker.start = best.anchor;

    // Blocker goal: a free, non-sealing 2x2 patch in the agent-reachable
    // component, away from the cut square.
    const auto cut_mask = square_mask(map, best.anchor);
    const auto cut_labels = free_components(map, cut_mask);
    const int agent_comp = cut_labels[map.index(scene.agent_start.cell)];
    std::optional<Cell> goal;
    for (std::size_t i = 0; i < map.cell_count() && !goal; ++i) {
        const Cell t = map.cell_at(i);
        if (!square_free(map, t)) continue;
        if (euclid(t, best.anchor) < 4.0) continue;
        if (!square_clear_of(scene, t)) continue;
        bool in_comp = true;
        for (int dy = 0; dy < 2 && in_comp; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                if (cut_labels[map.index(Cell{t.x + dx, t.y + dy})] != agent_comp) {
                    in_comp = false;
                    break;
                }
        if (!in_comp) continue;
        if (component_count(free_components(map, square_mask(map, t))) > base_n) continue;
        goal = t;
    }
    (void)rng;
    if (!goal) throw NoCutFound("no valid goal patch for the blocker");
    blocker.goal = *goal;
    out.objects.push_back(blocker);
    out.metadata.has_blocked_path = true;
    return out;
}

double visibility_fraction(const SceneInstance& scene) {
    if (scene.objects.empty()) return 0.0;
    int visible = 0;
    for (const auto& o : scene.objects) {
        if (in_view_cone(scene.agent_start.cell, scene.agent_start.heading, o.start,
                         kSensingRangeCells) &&
            line_of_sight(scene.map, scene.agent_start.cell, o.start))
            ++visible;
    }
    return static_cast<double>(visible) / scene.objects.size();
}

namespace {

struct SolveObj {
    int id;
    int footprint;
    Cell cell;
    Cell goal;
    bool at_goal = false;
};

std::vector<bool> solver_obstacles(const GridMap& map, const std::vector<SolveObj>& objs,
                                   int excl) {
    std::vector<bool> m(map.cell_count(), false);
    for (const auto& o : objs) {
        if (o.id == excl) continue;
        for (int dy = 0; dy < o.footprint; ++dy)
            for (int dx = 0; dx < o.footprint; ++dx) {
                const Cell c{o.cell.x + dx, o.cell.y + dy};
                if (map.in_bounds(c)) m[map.index(c)] = true;
            }
    }
    return m;
}

std::optional<Cell> solver_pick_stand(const GridMap& map, const std::vector<bool>& obst,
                                      const std::vector<int>& dist, const Cell& target) {
    std::optional<Cell> best;
    int best_d = std::numeric_limits<int>::max();
    const int r = static_cast<int>(kInteractionRangeCells);
    for (int y = target.y - r; y <= target.y + r; ++y)
        for (int x = target.x - r; x <= target.x + r; ++x) {
            const Cell c{x, y};
            if (!map.free(c) || obst[map.index(c)]) continue;
            if (euclid(c, target) > kInteractionRangeCells + 1e-9) continue;
            if (!line_of_sight(map, c, target)) continue;
            const int d = dist[map.index(c)];
            if (d >= 0 && d < best_d) { best_d = d; best = c; }
        }
    return best;
}

std::vector<Cell> solver_place_stands(const Cell& t, int f) {
    std::vector<Cell> out{{t.x - 1, t.y}, {t.x, t.y - 1}};
    if (f == 1) {
        out.push_back({t.x + 1, t.y});
        out.push_back({t.x, t.y + 1});
    }
    return out;
}

bool solver_placeable(const GridMap& map, const std::vector<SolveObj>& objs, int excl,
                      const Cell& t, int f) {
    for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx) {
            const Cell c{t.x + dx, t.y + dy};
            if (!map.in_bounds(c)) return false;
            if (map.occupied(c)) {
                const bool on_rec =
                    f == 1 && std::any_of(map.receptacles().begin(), map.receptacles().end(),
                                          [&](const ReceptacleInfo& r) { return r.cell == c; });
                if (!on_rec) return false;
            }
            for (const auto& o : objs)
                if (o.id != excl && overlaps(o.cell, o.footprint, c)) return false;
        }
    return true;
}

// Attempts the full pick stand -> carry -> place stand chain; on success the
// object sits at `target` and the agent at the place stand.
bool solver_move(const GridMap& map, std::vector<SolveObj>& objs, Cell& agent, int id,
                 const Cell& target) {
    SolveObj* o = nullptr;
    for (auto& s : objs)
        if (s.id == id) o = &s;
    if (!o) return false;
    if (!solver_placeable(map, objs, id, target, o->footprint)) return false;

    const auto obst_all = solver_obstacles(map, objs, -1);
    const auto dist_agent = bfs_distances(map, agent, obst_all);
    const auto stand = solver_pick_stand(map, obst_all, dist_agent, o->cell);
    if (!stand) return false;

    const auto obst_carry = solver_obstacles(map, objs, id);
    const auto dist_carry = bfs_distances(map, *stand, obst_carry);
    for (const Cell& ps : solver_place_stands(target, o->footprint)) {
        if (!map.free(ps) || obst_carry[map.index(ps)]) continue;
        if (dist_carry[map.index(ps)] < 0) continue;
        o->cell = target;
        agent = ps;
        return true;
    }
    return false;
}

}  // namespace

bool scripted_solve(const SceneInstance& scene, std::vector<std::string>* trace) {
    const GridMap& map = scene.map;
    std::vector<SolveObj> objs;
    for (const auto& s : scene.objects)
        objs.push_back(SolveObj{s.id, s.footprint, s.start, s.goal, false});
    Cell agent = scene.agent_start.cell;
    auto note = [&](const std::string& s) {
        if (trace) trace->push_back(s);
    };

    const auto base_n = component_count(free_components(map, {}));
    const int cap = 4 * static_cast<int>(objs.size()) + 8;
    for (int iter = 0; iter < cap; ++iter) {
        if (std::all_of(objs.begin(), objs.end(), [](const SolveObj& o) { return o.at_goal; }))
            return true;
        bool progress = false;
        for (auto& o : objs) {
            if (o.at_goal) continue;
            if (solver_move(map, objs, agent, o.id, o.goal)) {
                o.at_goal = true;
                progress = true;
                note("place " + std::to_string(o.id) + " at goal");
            }
        }
        if (progress) continue;

        // Stuck: relocate an object that sits on someone's pending goal, or a
        // blocker, to a free alternate spot.
        for (auto& o : objs) {
            if (o.at_goal) continue;
            bool blocking = o.footprint == 2;
            for (const auto& p : objs) {
                if (p.id == o.id || p.at_goal) continue;
                for (int dy = 0; dy < o.footprint && !blocking; ++dy)
                    for (int dx = 0; dx < o.footprint; ++dx)
                        if (overlaps(p.goal, p.footprint, Cell{o.cell.x + dx, o.cell.y + dy})) {
                            blocking = true;
                            break;
                        }
            }
            if (!blocking) continue;
            std::optional<Cell> alt;
            double alt_d = std::numeric_limits<double>::max();
            for (std::size_t i = 0; i < map.cell_count(); ++i) {
                const Cell t = map.cell_at(i);
                if (euclid(t, o.cell) < 3.0) continue;
                bool on_goal = false;
                for (const auto& p : objs) {
                    if (p.at_goal) continue;
                    for (int dy = 0; dy < o.footprint && !on_goal; ++dy)
                        for (int dx = 0; dx < o.footprint; ++dx)
                            if (overlaps(p.goal, p.footprint, Cell{t.x + dx, t.y + dy})) {
                                on_goal = true;
                                break;
                            }
                }
                if (on_goal) continue;
                if (!solver_placeable(map, objs, o.id, t, o.footprint)) continue;
                if (o.footprint == 2) {
                    bool ok = true;
                    for (int dy = 0; dy < 2 && ok; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            if (!map.free(Cell{t.x + dx, t.y + dy})) { ok = false; break; }
                    if (!ok) continue;
                    if (component_count(free_components(map, square_mask(map, t))) > base_n)
                        continue;
                }
                const double d = euclid(t, o.cell);
                if (d < alt_d) { alt_d = d; alt = t; }
            }
            if (alt && solver_move(map, objs, agent, o.id, *alt)) {
                progress = true;
                note("relocate " + std::to_string(o.id) + " to (" + std::to_string(alt->x) +
                     "," + std::to_string(alt->y) + ")");
                break;
            }
        }
        if (!progress) return false;
    }
    return false;
}

VerifyResult verify_scene(const SceneInstance& scene, double min_avg_displacement,
                          double min_cross_room_fraction) {
    VerifyResult r;
    const GridMap& map = scene.map;
    auto fail = [&](const std::string& why) { r.failures.push_back(why); };

    // Starts and goals are placeable and mutually consistent.
    for (const auto& o : scene.objects) {
        for (int dy = 0; dy < o.footprint; ++dy)
            for (int dx = 0; dx < o.footprint; ++dx) {
                if (!map.free(Cell{o.start.x + dx, o.start.y + dy}))
                    fail("start of object " + std::to_string(o.id) + " not free");
                if (!map.free(Cell{o.goal.x + dx, o.goal.y + dy}))
                    fail("goal of object " + std::to_string(o.id) + " not free");
            }
        if (o.start == o.goal) fail("object " + std::to_string(o.id) + " has start == goal");
    }
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
            const auto& a = scene.objects[i];
            const auto& b = scene.objects[j];
            for (int dy = 0; dy < a.footprint; ++dy)
                for (int dx = 0; dx < a.footprint; ++dx) {
                    const Cell c{a.start.x + dx, a.start.y + dy};
                    if (overlaps(b.start, b.footprint, c)) fail("overlapping starts");
                    const Cell g{a.goal.x + dx, a.goal.y + dy};
                    if (overlaps(b.goal, b.footprint, g)) fail("overlapping goals");
                }
        }

    // Displacement and cross-room statistics over the regular (1x1) objects.
    double total = 0.0;
    int n_small = 0, n_cross = 0;
    for (const auto& o : scene.objects) {
        if (o.footprint != 1) continue;
        const auto dist = bfs_distances(map, o.start);
        const int d = dist[map.index(o.goal)];
        if (d < 0) {
            fail("object " + std::to_string(o.id) + " goal unreachable on static map");
            continue;
        }
        total += d;
        ++n_small;
        if (map.room_id(o.start) != map.room_id(o.goal)) ++n_cross;
    }
    if (n_small > 0) {
        r.mean_displacement = total / n_small;
        r.cross_room_fraction = static_cast<double>(n_cross) / n_small;
    }
    if (r.mean_displacement <= min_avg_displacement)
        fail("mean displacement " + std::to_string(r.mean_displacement) + " below threshold");
    if (scene.metadata.n_rooms > 1 &&
        r.cross_room_fraction < min_cross_room_fraction - 1e-9)
        fail("cross-room fraction " + std::to_string(r.cross_room_fraction) + " below threshold");

    // Every room holds at least one object start or goal.
    r.per_room_coverage = true;
    for (int room = 0; room < scene.metadata.n_rooms; ++room) {
        bool covered = false;
        for (const auto& o : scene.objects)
            if (map.room_id(o.start) == room || map.room_id(o.goal) == room) {
                covered = true;
                break;
            }
        if (!covered) {
            r.per_room_coverage = false;
            fail("room " + std::to_string(room) + " has no object to move");
        }
    }

    // Blocked-path certificate: some object unreachable while the blocker
    // stands, everything reachable once it is gone.
    if (scene.metadata.has_blocked_path) {
        const SceneObjectSpec* blocker = nullptr;
        for (const auto& o : scene.objects)
            if (o.footprint == 2) { blocker = &o; break; }
        if (!blocker) {
            r.blocked_path_certificate = false;
            fail("blocked-path flag set but no 2x2 blocker present");
        } else {
            const auto mask = square_mask(map, blocker->start);
            const auto blocked_dist = bfs_distances(map, scene.agent_start.cell, mask);
            bool some_cut = false;
            for (const auto& o : scene.objects)
                if (o.id != blocker->id && blocked_dist[map.index(o.start)] < 0) some_cut = true;
            const auto open_dist = bfs_distances(map, scene.agent_start.cell);
            bool all_open = true;
            for (const auto& o : scene.objects)
                if (o.id != blocker->id &&
                    (open_dist[map.index(o.start)] < 0 || open_dist[map.index(o.goal)] < 0))
                    all_open = false;
            r.blocked_path_certificate = some_cut && all_open;
            if (!some_cut) fail("blocker does not cut off any object start");
            if (!all_open) fail("objects unreachable even without the blocker");
        }
    }

    // Flag consistency for swap and blocked-goal configurations.
    bool found_swap = false, found_on_goal = false;
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        for (std::size_t j = 0; j < scene.objects.size(); ++j) {
            if (i == j) continue;
            const auto& a = scene.objects[i];
            const auto& b = scene.objects[j];
            const bool a_on_b = overlaps(b.goal, b.footprint, a.start) ||
                                overlaps(a.start, a.footprint, b.goal);
            if (!a_on_b) continue;
            const bool mutual = overlaps(a.goal, a.footprint, b.start) ||
                                overlaps(b.start, b.footprint, a.goal);
            if (mutual)
                found_swap = true;
            else
                found_on_goal = true;
        }
    if (scene.metadata.has_swap != found_swap) fail("swap flag does not match geometry");
    if (scene.metadata.has_blocked_goal != found_on_goal)
        fail("blocked-goal flag does not match geometry");

    r.solvable = scripted_solve(scene);
    if (!r.solvable) fail("scripted solver could not complete the scene");

    r.ok = r.failures.empty();
    return r;
}

SceneInstance generate_scene(const GenConfig& cfg) {
    if (cfg.n_rooms < 1 || cfg.n_rooms > 4)
        throw ConstraintUnsatisfiable("n_rooms must be in [1,4]");
    if (cfg.n_objects < 1) throw ConstraintUnsatisfiable("n_objects must be >= 1");
    if (cfg.blocked_path && cfg.n_rooms < 2)
        throw ConstraintUnsatisfiable("blocked-path needs at least 2 rooms");

    std::vector<std::string> last_failures{"no attempt ran"};
    for (int attempt = 0; attempt < 60; ++attempt) {
        const std::uint64_t s = mix(cfg.seed, attempt);
        std::mt19937_64 fp_rng(cfg.floorplan_seed ? mix(*cfg.floorplan_seed, attempt)
                                                  : mix(s, 1));
        const Floorplan fp = build_floorplan(cfg.n_rooms, fp_rng);
        std::mt19937_64 rng(mix(s, 2));

        auto placement = place_objects(fp, cfg, rng);
        if (!placement) {
            last_failures = {"placement constraints unsatisfied"};
            continue;
        }

        SceneInstance scene;
        scene.map = fp.map;
        scene.agent_start = placement->agent;
        scene.objects = placement->objects;
        scene.metadata.n_rooms = cfg.n_rooms;
        scene.metadata.has_swap = cfg.swap;
        scene.metadata.seed = cfg.seed;

        try {
            if (cfg.blocked_path) {
                scene = insert_blocked_path(scene, rng);
                if (cfg.blocked_goal) {
                    // Blocker trap: one object sits on the blocker's goal and
                    // wants to go where the blocker currently seals.
                    const auto& blocker = scene.objects.back();
                    const auto mask = square_mask(scene.map, blocker.start);
                    const auto labels = free_components(scene.map, mask);
                    const int agent_comp = labels[scene.map.index(scene.agent_start.cell)];
                    int victim = -1;
                    for (const auto& o : scene.objects)
                        if (o.footprint == 1 && !(cfg.swap && o.id <= 1) &&
                            labels[scene.map.index(o.start)] == agent_comp) {
                            victim = o.id;
                            break;
                        }
                    if (victim < 0) { last_failures = {"no victim for blocker trap"}; continue; }
                    std::vector<Cell> sealed;
                    for (const Cell& c : scene.map.free_cells()) {
                        if (labels[scene.map.index(c)] == agent_comp ||
                            labels[scene.map.index(c)] < 0)
                            continue;
                        bool clear = true;
                        for (const auto& o : scene.objects)
                            if (o.id != victim && (overlaps(o.start, o.footprint, c) ||
                                                   overlaps(o.goal, o.footprint, c))) {
                                clear = false;
                                break;
                            }
                        if (c == scene.agent_start.cell) clear = false;
                        if (euclid(c, blocker.start) < 4.0) clear = false;
                        if (clear) sealed.push_back(c);
                    }
                    if (sealed.empty()) { last_failures = {"no sealed goal for trap victim"}; continue; }
                    for (auto& o : scene.objects)
                        if (o.id == victim) {
                            o.start = blocker.goal;
                            o.goal = sealed[rng() % sealed.size()];
                        }
                    scene.metadata.has_blocked_goal = true;
                }
            } else if (cfg.blocked_goal) {
                scene.metadata.has_blocked_goal = true;
            }
        } catch (const NoCutFound&) {
            last_failures = {"no articulation square in this floorplan"};
            continue;
        }

        scene.metadata.n_objects = static_cast<int>(scene.objects.size());
        scene.metadata.visibility_fraction = visibility_fraction(scene);

        const auto check = verify_scene(scene, cfg.min_avg_displacement,
                                        cfg.cross_room_fraction);
        if (!check.ok) {
            last_failures = check.failures;
            continue;
        }

        std::ostringstream id;
        id << "r" << cfg.n_rooms << "_o" << cfg.n_objects << "_s" << cfg.seed;
        if (cfg.blocked_path) id << "_bp";
        if (cfg.blocked_goal) id << "_bg";
        if (cfg.swap) id << "_sw";
        scene.id = id.str();
        return scene;
    }
    std::string why = "scene generation failed after bounded retries:";
    for (const auto& f : last_failures) why += " " + f + ";";
    throw ConstraintUnsatisfiable(why);
}

namespace {

std::string rle_encode_row(const GridMap& map, int y) {
    std::string out;
    int run = 0;
    char cur = 0;
    for (int x = 0; x < map.width(); ++x) {
        const char c = map.occupied(Cell{x, y}) ? '#' : '.';
        if (c == cur) {
            ++run;
        } else {
            if (run > 0) out += std::to_string(run) + cur;
            cur = c;
            run = 1;
        }
    }
    if (run > 0) out += std::to_string(run) + cur;
    return out;
}

}  // namespace

nlohmann::json scene_to_json(const SceneInstance& scene) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["id"] = scene.id;
    const GridMap& map = scene.map;
    nlohmann::json jm;
    jm["width"] = map.width();
    jm["height"] = map.height();
    jm["cell_size_m"] = map.cell_size();
    nlohmann::json occ = nlohmann::json::array();
    for (int y = 0; y < map.height(); ++y) occ.push_back(rle_encode_row(map, y));
    jm["occupancy_rle"] = std::move(occ);
    nlohmann::json rooms = nlohmann::json::array();
    for (int y = 0; y < map.height(); ++y) {
        nlohmann::json row = nlohmann::json::array();
        int run = 0, cur = -2;
        for (int x = 0; x < map.width(); ++x) {
            const int id = map.room_id(Cell{x, y});
            if (id == cur) {
                ++run;
            } else {
                if (run > 0) row.push_back({run, cur});
                cur = id;
                run = 1;
            }
        }
        if (run > 0) row.push_back({run, cur});
        rooms.push_back(std::move(row));
    }
    jm["rooms_rle"] = std::move(rooms);
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : map.receptacles())
        recs.push_back({{"class", r.class_name}, {"x", r.cell.x}, {"y", r.cell.y},
                        {"room", r.room_id}});
    jm["receptacles"] = std::move(recs);
    j["map"] = std::move(jm);
    j["agent"] = {{"x", scene.agent_start.cell.x},
                  {"y", scene.agent_start.cell.y},
                  {"heading", scene.agent_start.heading}};
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : scene.objects)
        objs.push_back({{"id", o.id},
                        {"class", o.class_name},
                        {"footprint", o.footprint},
                        {"start", {{"x", o.start.x}, {"y", o.start.y}}},
                        {"goal", {{"x", o.goal.x}, {"y", o.goal.y}}}});
    j["objects"] = std::move(objs);
    j["metadata"] = {{"n_rooms", scene.metadata.n_rooms},
                     {"n_objects", scene.metadata.n_objects},
                     {"blocked_path", scene.metadata.has_blocked_path},
                     {"blocked_goal", scene.metadata.has_blocked_goal},
                     {"swap", scene.metadata.has_swap},
                     {"visibility_fraction", scene.metadata.visibility_fraction},
                     {"seed", scene.metadata.seed}};
    return j;
}

SceneInstance scene_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != 1)
        throw std::runtime_error("unsupported scene schema version");
    SceneInstance scene;
    scene.id = j.value("id", "");
    const auto& jm = j.at("map");
    GridMap map(jm.at("width").get<int>(), jm.at("height").get<int>(),
                jm.at("cell_size_m").get<double>());
    const auto& occ = jm.at("occupancy_rle");
    for (int y = 0; y < map.height(); ++y) {
        const std::string row = occ.at(y).get<std::string>();
        int x = 0;
        std::size_t i = 0;
        while (i < row.size()) {
            int run = 0;
            while (i < row.size() && std::isdigit(static_cast<unsigned char>(row[i])))
                run = run * 10 + (row[i++] - '0');
            const char c = row[i++];
            for (int k = 0; k < run; ++k) map.set_occupied(Cell{x++, y}, c == '#');
        }
        if (x != map.width()) throw std::runtime_error("bad occupancy row length");
    }
    const auto& rooms = jm.at("rooms_rle");
    for (int y = 0; y < map.height(); ++y) {
        int x = 0;
        for (const auto& pair : rooms.at(y)) {
            const int run = pair.at(0).get<int>();
            const int id = pair.at(1).get<int>();
            for (int k = 0; k < run; ++k) map.set_room_id(Cell{x++, y}, id);
        }
        if (x != map.width()) throw std::runtime_error("bad room row length");
    }
    for (const auto& r : jm.at("receptacles"))
        map.receptacles().push_back(ReceptacleInfo{r.at("class").get<std::string>(),
                                                   Cell{r.at("x").get<int>(), r.at("y").get<int>()},
                                                   r.at("room").get<int>()});
    scene.map = std::move(map);
    scene.agent_start.cell = Cell{j.at("agent").at("x").get<int>(),
                                  j.at("agent").at("y").get<int>()};
    scene.agent_start.heading = j.at("agent").at("heading").get<int>();
    for (const auto& o : j.at("objects")) {
        SceneObjectSpec s;
        s.id = o.at("id").get<int>();
        s.class_name = o.at("class").get<std::string>();
        s.footprint = o.at("footprint").get<int>();
        s.start = Cell{o.at("start").at("x").get<int>(), o.at("start").at("y").get<int>()};
        s.goal = Cell{o.at("goal").at("x").get<int>(), o.at("goal").at("y").get<int>()};
        scene.objects.push_back(s);
    }
    const auto& md = j.at("metadata");
    scene.metadata.n_rooms = md.at("n_rooms").get<int>();
    scene.metadata.n_objects = md.at("n_objects").get<int>();
    scene.metadata.has_blocked_path = md.at("blocked_path").get<bool>();
    scene.metadata.has_blocked_goal = md.at("blocked_goal").get<bool>();
    scene.metadata.has_swap = md.at("swap").get<bool>();
    scene.metadata.visibility_fraction = md.at("visibility_fraction").get<double>();
    scene.metadata.seed = md.at("seed").get<std::uint64_t>();
    return scene;
}

void save_scene(const SceneInstance& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path);
    out << scene_to_json(scene).dump(2) << "\n";
}

SceneInstance load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    nlohmann::json j;
    in >> j;
    return scene_from_json(j);
}

GridWorld make_world(const SceneInstance& scene, WorldConfig cfg, std::uint64_t manip_seed) {
    std::vector<WorldObject> objs;
    for (const auto& o : scene.objects)
        objs.push_back(WorldObject{o.id, o.class_name, o.start, o.footprint, false});
    return GridWorld(scene.map, scene.agent_start, std::move(objs), cfg, manip_seed);
}

}  // namespace rearrange
