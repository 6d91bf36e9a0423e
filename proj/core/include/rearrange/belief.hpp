#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rearrange/grid.hpp"
#include "rearrange/sensor.hpp"
#include "rearrange/world.hpp"

#include "json.hpp"

namespace rearrange {

struct EmptyFreeSpace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One object's factored belief: a distribution over cells plus flags.
// Mass may sit on free cells or on receptacle cells (objects can be placed
// on receptacles); it never sits on wall cells.
struct ObjectBelief {
    std::string class_name;
    int footprint = 1;
    std::vector<double> prob;  // indexed by GridMap cell index
    bool is_held = false;
    bool at_goal = false;

    Cell argmax(const GridMap& map) const;
    double max_mass() const;
    double entropy() const;
};

enum class BeliefInitMode { Uniform, Delta };

enum class BeliefActionKind { Navigation, Pick, Place, PickFailed };

// Sub-goal context for the executed low-level action, as the update rule
// branches on it: pick collapses to the agent cell, place to the goal cell,
// a failed pick zeroes the attempted cell.
struct BeliefActionContext {
    BeliefActionKind kind = BeliefActionKind::Navigation;
    ObjectId object_id = -1;
    Cell cell;  // agent cell (pick), placed cell (place), attempted cell (pick failed)
};

class BeliefState {
public:
    BeliefState() = default;

    struct TrackedObject {
        ObjectId id;
        std::string class_name;
        int footprint = 1;
    };

    static BeliefState init(const GridMap& map, const std::vector<TrackedObject>& objects,
                            const std::map<ObjectId, Cell>& goals, BeliefInitMode mode,
                            const Cell& agent_start,
                            const std::map<ObjectId, Cell>& true_locations = {});

    // Three-case update: navigation reweights by the observation likelihood,
    // pick and place collapse the target object's distribution; all other
    // objects receive the navigation-style update from the same observation.
    void update(const BeliefActionContext& action, const Observation& z,
                const SensorModel& sensor, const GridMap& map, double sensing_range_cells,
                const Cell& agent_cell);

    const std::map<ObjectId, ObjectBelief>& objects() const { return per_object_; }
    ObjectBelief& object(ObjectId id) { return per_object_.at(id); }
    const ObjectBelief& object(ObjectId id) const { return per_object_.at(id); }
    const std::map<ObjectId, Cell>& goals() const { return goals_; }
    Cell goal(ObjectId id) const { return goals_.at(id); }

    std::optional<ObjectId> held_object() const;
    bool zero_posterior_seen() const { return zero_posterior_events_ > 0; }
    int zero_posterior_events() const { return zero_posterior_events_; }

    nlohmann::json to_json(const GridMap& map) const;

private:
    void collapse(ObjectBelief& b, const GridMap& map, const Cell& cell);
    void nav_update(ObjectId id, ObjectBelief& b, const std::optional<Cell>& z,
                    const SensorModel::ObsContext& ctx, const SensorModel& sensor,
                    const GridMap& map);

    std::map<ObjectId, ObjectBelief> per_object_;
    std::map<ObjectId, Cell> goals_;
    std::vector<bool> support_;  // free or receptacle cells
    int zero_posterior_events_ = 0;
};

}  // namespace rearrange
