#pragma once
#include <random>
#include <vector>

#include "rearrange/belief.hpp"
#include "rearrange/grid.hpp"
#include "rearrange/world.hpp"

namespace rearrange {

struct PickCandidate {
    Cell stand;        // agent stand-cell within interaction range
    Cell object_cell;  // believed object cell it serves
    friend bool operator==(const PickCandidate&, const PickCandidate&) = default;
};

struct PlaceCandidate {
    Cell stand;   // adjacent stand-cell the agent places from
    Cell target;  // target cell (goal or alternate receptacle)
    bool target_occupied = false;
    friend bool operator==(const PlaceCandidate&, const PlaceCandidate&) = default;
};

struct AbstractObjectState {
    ObjectId id = -1;
    std::string class_name;
    int footprint = 1;
    Cell loc;  // belief argmax, for logging
    std::vector<PickCandidate> picks;
    std::vector<PlaceCandidate> place_locs;
    bool is_held = false;
    bool at_goal = false;
    Cell goal;
};

struct AbstractState {
    Cell robot;
    int heading = 0;
    std::vector<AbstractObjectState> objects;
};

struct AbstractionConfig {
    double concentration_threshold = 0.5;  // max-mass above which belief is a point estimate
    int k_max = 3;                         // pick samples for spread-out beliefs
    double min_separation_cells = 8.0;     // pairwise separation of sampled pick cells
    double interaction_range_cells = 8.0;  // 2 m at 0.25 m/cell
    int alt_receptacles = 3;               // alternate place targets near the goal
};

// Context about the previously executed low-level action, for the
// is_held/at_goal bookkeeping.
struct LastActionInfo {
    ActionKind kind = ActionKind::Start;
    bool success = false;
    ObjectId object_id = -1;  // pick target / held object at place time
    Cell placed_cell;         // where a successful place put the object
};

// Cells blocked by objects whose belief is concentrated (the agent's best
// estimate of dynamic obstacles). Held objects excluded.
std::vector<bool> believed_obstacles(const BeliefState& b, const GridMap& map,
                                     double concentration_threshold = 0.5);

bool reachable(const GridMap& map, const std::vector<bool>& dynamic_obstacles,
               const Cell& from, const Cell& to);

std::vector<PickCandidate> sample_pick_locations(const ObjectBelief& b, const GridMap& map,
                                                 const std::vector<bool>& dynamic_obstacles,
                                                 const Cell& agent_cell,
                                                 const AbstractionConfig& cfg,
                                                 std::mt19937_64& rng);

std::vector<PlaceCandidate> sample_place_locations(const Cell& goal, int footprint,
                                                   const std::vector<ReceptacleInfo>& receptacles,
                                                   const GridMap& map,
                                                   const std::vector<bool>& dynamic_obstacles,
                                                   const Cell& agent_cell,
                                                   const AbstractionConfig& cfg);

AbstractState generate_abstract_state(const BeliefState& b, const GridMap& map,
                                      const std::vector<ReceptacleInfo>& receptacles,
                                      const AgentPose& agent, const LastActionInfo& last,
                                      const AbstractState* prev, const AbstractionConfig& cfg,
                                      std::mt19937_64& rng);

}  // namespace rearrange
