#include "rearrange/sensor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rearrange {

SensorModel::SensorModel(std::map<std::string, ClassSensorParams> params, SensorConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {}

std::map<std::string, ClassSensorParams> SensorModel::load_params_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sensor params file: " + path);
    std::map<std::string, ClassSensorParams> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cls, r, tp, fp;
        std::getline(ss, cls, ',');
        std::getline(ss, r, ',');
        std::getline(ss, tp, ',');
        std::getline(ss, fp, ',');
        if (first && cls == "class") { first = false; continue; }
        first = false;
        out[cls] = ClassSensorParams{cls, std::stod(tp), std::stod(fp), std::stod(r)};
    }
    return out;
}

const ClassSensorParams& SensorModel::params_for(const std::string& class_name) const {
    auto it = params_.find(class_name);
    if (it == params_.end()) throw MissingParams("no sensor params for class " + class_name);
    return it->second;
}

bool SensorModel::in_view(const GridMap& map, const AgentPose& robot, const Cell& c,
                          double sensing_range_cells) {
    return in_view_cone(robot.cell, robot.heading, c, sensing_range_cells) &&
           line_of_sight(map, robot.cell, c);
}

double SensorModel::delta_weight(const GridMap& map, const AgentPose& robot, const Cell& target,
                                 double r_m) const {
    if (cfg_.perfect) return 1.0;
    const double d_m = map.meters(euclid(robot.cell, target));
    if (d_m <= r_m) return 1.0;
    return 1.0 / d_m;
}

int SensorModel::cone_cell_count(const GridMap& map, const AgentPose& robot, double r_m) const {
    const auto cells = view_cone_cells(map, robot.cell, robot.heading,
                                       map.cells_from_meters(r_m));
    return static_cast<int>(cells.size());
}

Observation SensorModel::detect(const std::vector<std::pair<ObjectId, Cell>>& visible,
                                const std::vector<std::pair<ObjectId, std::string>>& all_tracked,
                                const GridMap& map, const AgentPose& robot,
                                double sensing_range_cells, std::mt19937_64& rng) const {
    Observation z;
    z.robot = robot;
    std::map<ObjectId, Cell> vis;
    for (const auto& [id, cell] : visible) vis[id] = cell;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const auto& [id, cls] : all_tracked) {
        const ClassSensorParams& p = params_for(cls);
        const double tp = cfg_.perfect ? 1.0 : p.tp;
        const double fp = cfg_.perfect ? 0.0 : p.fp;
        auto it = vis.find(id);
        if (it != vis.end()) {
            const double d = delta_weight(map, robot, it->second, p.r);
            if (unit(rng) < tp * d) {
                Cell rep = it->second;
                if (!cfg_.perfect && cfg_.sigma_cells > 0.0) {
                    // Localization noise at the scale assumed by the 3-sigma
                    // gate in the likelihood; without it repeated detections
                    // from one viewpoint carry no new position information.
                    std::normal_distribution<double> noise(0.0, cfg_.sigma_cells);
                    const Cell jittered{rep.x + static_cast<int>(std::lround(noise(rng))),
                                        rep.y + static_cast<int>(std::lround(noise(rng)))};
                    if (map.in_bounds(jittered)) rep = jittered;
                }
                z.per_object[id] = rep;
            } else {
                z.per_object[id] = std::nullopt;
            }
        } else {
            if (fp > 0.0 && unit(rng) < fp) {
                // Uniform false detection over the cone within r.
                auto cone = view_cone_cells(map, robot.cell, robot.heading,
                                            map.cells_from_meters(p.r));
                if (cone.empty())
                    cone = view_cone_cells(map, robot.cell, robot.heading, sensing_range_cells);
                std::uniform_int_distribution<std::size_t> pick(0, cone.size() - 1);
                z.per_object[id] = cone[pick(rng)];
            } else {
                z.per_object[id] = std::nullopt;
            }
        }
    }
    return z;
}

SensorModel::ObsContext SensorModel::make_context(const GridMap& map, const AgentPose& robot,
                                                  double sensing_range_cells,
                                                  const std::vector<std::string>& classes) const {
    ObsContext ctx;
    ctx.robot = robot;
    ctx.in_view.assign(map.cell_count(), false);
    const int r = static_cast<int>(sensing_range_cells) + 1;
    for (int y = robot.cell.y - r; y <= robot.cell.y + r; ++y) {
        for (int x = robot.cell.x - r; x <= robot.cell.x + r; ++x) {
            const Cell c{x, y};
            if (!map.in_bounds(c)) continue;
            if (in_view(map, robot, c, sensing_range_cells))
                ctx.in_view[map.index(c)] = true;
        }
    }
    for (const std::string& cls : classes) {
        if (ctx.cone_counts.count(cls)) continue;
        ctx.cone_counts[cls] = cone_cell_count(map, robot, params_for(cls).r);
    }
    return ctx;
}

double SensorModel::obs_likelihood_ctx(const ObsContext& ctx, const std::optional<Cell>& z,
                                       const Cell& candidate, const ClassSensorParams& params,
                                       const GridMap& map) const {
    const double tp = cfg_.perfect ? 1.0 : params.tp;
    const double fp = cfg_.perfect ? 0.0 : params.fp;
    const bool candidate_in_view =
        map.in_bounds(candidate) && ctx.in_view[map.index(candidate)];
    // A perfect detector has no localization noise, so its matching disc is a
    // single cell; otherwise 3 sigma.
    const double gate = cfg_.perfect ? 0.0 : 3.0 * cfg_.sigma_cells;
    if (candidate_in_view) {
        if (!z) return 1.0 - tp;
        const double d = delta_weight(map, ctx.robot, candidate, params.r);
        if (euclid(*z, candidate) <= gate + 1e-9) return d * tp;
        const int n = std::max(1, ctx.cone_counts.at(params.class_name));
        return d * fp / n;
    }
    if (!z) return 1.0 - fp;
    const double d = delta_weight(map, ctx.robot, candidate, params.r);
    const int n = std::max(1, ctx.cone_counts.at(params.class_name));
    return d * fp / n;
}

double SensorModel::obs_likelihood(const std::optional<Cell>& z, const Cell& candidate,
                                   const AgentPose& robot, const ClassSensorParams& params,
                                   const GridMap& map, double sensing_range_cells) const {
    const double tp = cfg_.perfect ? 1.0 : params.tp;
    const double fp = cfg_.perfect ? 0.0 : params.fp;
    const bool candidate_in_view = in_view(map, robot, candidate, sensing_range_cells);
    const double gate = cfg_.perfect ? 0.0 : 3.0 * cfg_.sigma_cells;
    if (candidate_in_view) {
        if (!z) return 1.0 - tp;
        const double d = delta_weight(map, robot, candidate, params.r);
        if (euclid(*z, candidate) <= gate + 1e-9) return d * tp;
        const int n = std::max(1, cone_cell_count(map, robot, params.r));
        return d * fp / n;
    }
    if (!z) return 1.0 - fp;
    const double d = delta_weight(map, robot, candidate, params.r);
    const int n = std::max(1, cone_cell_count(map, robot, params.r));
    return d * fp / n;
}

}  // namespace rearrange
