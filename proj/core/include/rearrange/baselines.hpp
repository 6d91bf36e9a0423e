#pragma once
#include <set>
#include <stdexcept>
#include <vector>

#include "rearrange/belief.hpp"
#include "rearrange/grid.hpp"
#include "rearrange/sensor.hpp"
#include "rearrange/world.hpp"

namespace rearrange {

enum class CellKnowledge { Unknown, Free, Occupied };

struct FrontierCluster {
    std::vector<Cell> cells;
    Cell centroid;  // snapped to the nearest member cell
};

// Connected components (4-connectivity) of frontier cells: known-free cells
// adjacent to at least one unknown cell.
std::vector<FrontierCluster> frontier_clusters(const GridMap& map,
                                               const std::vector<CellKnowledge>& known);

struct Exhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FhcConfig {
    double theta = 0.7;      // belief confidence threshold
    bool map_known = true;   // static occupancy given up front (default); when
                             // false the map itself starts fully unknown
    // Radius (cells) within which a viewed cell counts as covered. Kept below
    // the raw sensing range so exploration passes close enough for the
    // detector's reliable band; a glimpse from 4 m does not clear a cell.
    double coverage_range_cells = 8.0;
};

struct FhcSubGoal {
    enum class Kind { PickPlace, Explore, Finished };
    Kind kind = Kind::Finished;
    ObjectId object = -1;  // PickPlace
    Cell object_cell;      // PickPlace: believed object location
    Cell target;           // PickPlace: goal cell; Explore: frontier centroid
};

// Frontier-exploration heuristic: explore toward the closest frontier until
// an object's belief mass passes theta, then pick-and-place the closest found
// object toward its goal. Failed interactions are never retried at the same
// believed location.
class FhcPolicy {
public:
    FhcPolicy(const GridMap& map, FhcConfig cfg = {});

    // Marks the agent's current view cone (with line of sight) as observed.
    void observe(const AgentPose& pose, double sensing_range_cells);

    // Next sub-goal; throws Exhausted when no frontier remains, nothing is
    // found, and unplaced objects remain.
    FhcSubGoal step(const BeliefState& b, const Cell& agent_cell);

    void mark_exhausted(ObjectId object, const Cell& believed_cell);
    void mark_placed(ObjectId object);
    // Frontier centroids the navigator could not reach are skipped afterward.
    void mark_unreachable(const Cell& centroid);

    const std::vector<CellKnowledge>& known() const { return known_; }
    const std::set<ObjectId>& found() const { return found_; }
    const FhcConfig& config() const { return cfg_; }

private:
    const GridMap& map_;
    FhcConfig cfg_;
    std::vector<CellKnowledge> known_;
    std::set<ObjectId> found_;
    std::set<ObjectId> placed_;
    std::set<std::pair<ObjectId, Cell>> exhausted_;
    std::set<Cell> unreachable_;
};

// PK knows every initial object location; PD sees every in-view object with
// probability 1. Both run the standard hierarchical planner.
enum class OracleKind { PK, PD };

struct OracleConfig {
    BeliefInitMode belief_init = BeliefInitMode::Uniform;
    SensorConfig sensor;
};

OracleConfig make_oracle_config(OracleKind kind);

}  // namespace rearrange
