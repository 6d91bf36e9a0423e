#pragma once
#include <cstdint>
#include <memory>
#include <random>
#include <unordered_map>
#include <vector>

#include "rearrange/abstraction.hpp"
#include "rearrange/belief.hpp"
#include "rearrange/grid.hpp"

namespace rearrange {

struct AbstractAction {
    enum class Kind { Move, Rotate, PickPlace, Done };
    Kind kind = Kind::Done;
    Cell move_from, move_to;  // Move
    int angle = 0;            // Rotate
    ObjectId object = -1;     // PickPlace
    Cell pick_stand;          // PickPlace: where the pick happens
    Cell target;              // PickPlace: placement target
    Cell place_stand;         // PickPlace: stand-cell for the place
    friend bool operator==(const AbstractAction&, const AbstractAction&) = default;
};

std::string to_string(const AbstractAction& a);

struct IllegalAbstractAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PlannerConfig {
    int simulations = 1000;
    int depth = 12;
    double gamma = 0.95;
    double epsilon = 0.005;        // rollout cutoff: stop once gamma^depth < epsilon
    double exploration_c = 100.0;  // scaled to the +-50 terminal rewards
    std::uint64_t seed = 0;
    double cost_pick = 1.0;
    double cost_place = 1.0;
    // Determinized root scenarios per decision. Each scenario fixes every
    // object at one sample from its belief and gets its own tree with
    // simulations/root_samples iterations; root action values are averaged
    // across scenarios. One scenario keeps within-tree transitions coherent;
    // several keep a single unlucky sample from dictating the decision.
    int root_samples = 4;
};

// Determinized abstract state used inside the search: object locations are
// fixed by the root belief sample, transitions are deterministic.
struct SimObject {
    ObjectId id = -1;
    Cell cell;
    int footprint = 1;
    bool is_held = false;
    bool at_goal = false;
    Cell goal;
    std::vector<Cell> place_targets;  // goal first, then alternates
};

struct SimState {
    Cell robot;
    int heading = 0;
    std::vector<SimObject> objects;
    bool terminal = false;
};

class Planner {
public:
    Planner(const GridMap& map, AbstractionConfig abs_cfg, PlannerConfig cfg);

    // Root abstract action set derived from the abstraction's state.
    std::vector<AbstractAction> enumerate_actions(const AbstractState& s);

    // Deterministic abstract transition; throws IllegalAbstractAction when the
    // action cannot be taken at all (e.g. Done on a terminal state twice).
    // Physically failed actions (blocked move, out-of-range pick) keep the
    // state and cost a penalty, mirroring real execution.
    std::pair<SimState, double> step(const SimState& s, const AbstractAction& a);

    double reward(const SimState& s, const AbstractAction& a);

    // POUCT: cfg.simulations iterations of sample-root-state + UCB tree
    // search with random rollouts. Returns argmax_a V(ha) at the root, ties
    // broken by lowest action index. Deterministic given cfg.seed.
    AbstractAction plan(const BeliefState& b, const AbstractState& s);

    // Uniform-random legal actions until the depth cutoff; discounted return.
    double rollout(const SimState& s, int depth, std::mt19937_64& rng);

    std::vector<AbstractAction> legal_actions(const SimState& s);
    SimState to_sim_state(const AbstractState& s, const BeliefState& b, std::mt19937_64& rng);
    SimState known_sim_state(const AbstractState& s);  // cells = belief argmax

    // Root statistics from the last plan() call, for inspection/testing.
    struct RootStats {
        std::vector<AbstractAction> actions;
        std::vector<int> visits;
        std::vector<double> values;
        int total_visits = 0;
    };
    const RootStats& last_root_stats() const { return root_stats_; }

    const PlannerConfig& config() const { return cfg_; }
    void set_config(const PlannerConfig& cfg) { cfg_ = cfg; }

private:
    struct Node {
        int visits = 0;
        bool expanded = false;
        std::vector<AbstractAction> actions;
        std::vector<int> n;
        std::vector<double> v;
        std::vector<std::unique_ptr<Node>> children;
    };

    double simulate(SimState& s, Node& node, int depth, std::mt19937_64& rng);
    int select_ucb(const Node& node) const;

    const std::vector<int>& distances(const SimState& s, const Cell& from);
    std::vector<bool> sim_obstacles(const SimState& s) const;
    std::uint64_t occupancy_key(const SimState& s) const;
    std::optional<Cell> sim_pick_stand(const SimState& s, const SimObject& o);
    std::optional<Cell> sim_place_stand(const SimState& s, const SimObject& o, const Cell& target);
    bool placeable(const SimState& s, const SimObject& o, const Cell& target) const;

    const GridMap& map_;
    AbstractionConfig abs_cfg_;
    PlannerConfig cfg_;
    RootStats root_stats_;
    std::unordered_map<std::uint64_t, std::vector<int>> dist_cache_;
};

}  // namespace rearrange
