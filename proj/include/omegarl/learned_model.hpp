#pragma once

#include <utility>
#include <vector>

#include "json.hpp"

#include "omegarl/automaton.hpp"
#include "omegarl/gridworld.hpp"
#include "omegarl/rng.hpp"

namespace omegarl {

inline constexpr int kDefaultPathCap = 512;

// Transition counts and the probability estimates they induce. Counts are
// doubles so a model can also be initialized directly from ground truth
// (count = probability, visits = 1), which keeps every downstream formula
// identical between learned and exact models.
class LearnedModel {
public:
    LearnedModel(int num_states, int num_actions);

    void record(int x, int a, int x_next);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    // Visits of (x,a).
    double count(int x, int a) const { return n_[key(x, a)]; }
    // Estimated transition probability; 0 until (x,a) has been tried.
    double p(int x, int a, int x_next) const;
    // max over actions of p(x, a, x_next).
    double max_p(int x, int x_next) const;
    // States reachable from x in one hop under the estimates, ascending.
    const std::vector<int>& adjacency(int x) const { return adjacency_[x]; }

    const TransRow& row(int x, int a) const { return c_[key(x, a)]; }

    static LearnedModel from_truth(const GroundTruthMdp& mdp);

    nlohmann::json snapshot_counts() const;

private:
    std::size_t key(int x, int a) const {
        return static_cast<std::size_t>(x) * num_actions_ + a;
    }

    int num_states_;
    int num_actions_;
    std::vector<double> n_;
    std::vector<TransRow> c_;
    std::vector<std::vector<int>> adjacency_;
};

// Everything one biased-action decision computed, kept for inspection and
// tests.
struct BiasQuery {
    int x_t = -1;
    int q_t = -1;
    std::vector<int> x_goal;
    std::vector<int> x_avoid;
    std::vector<int> j_star_path;  // best path, starting at x_t; empty on fallback
    double cost = 0.0;             // product of edge estimates along j_star_path
    int hops = kInfDist;           // shortest-path length to x_goal
    int x_b = -1;                  // next waypoint
    int a_b = -1;                  // the biased action
    bool fallback = false;         // uniform-random action was drawn
    bool goal_was_random = false;  // x_goal had to be seeded randomly
};

// MDP states whose label drives the automaton from q_t into q_goal. When
// q_goal is empty the returned set is a random nonempty singleton
// (was_random reports this).
std::vector<int> x_goal_set(const GroundTruthMdp& env, const TaskBinding& binding,
                            const OmegaAutomaton& aut, int q_t, const std::vector<int>& q_goal,
                            Rng& rng, bool* was_random = nullptr);

// MDP states whose label moves the automaton somewhere other than staying at
// q_t or entering q_goal.
std::vector<int> x_avoid_set(const GroundTruthMdp& env, const TaskBinding& binding,
                             const OmegaAutomaton& aut, int q_t, const std::vector<int>& q_goal);

// Shortest hop count from x_t to any goal state over the learned adjacency,
// never stepping on avoid states, plus every path of exactly that length (up
// to cap, in deterministic order). x_t in the goal set yields hops = 0 and no
// paths; kInfDist when unreachable.
struct MinHopResult {
    int hops = kInfDist;
    std::vector<std::vector<int>> paths;
};
MinHopResult min_hop_paths(const LearnedModel& model, int x_t, const std::vector<int>& x_goal,
                           const std::vector<int>& x_avoid, int cap = kDefaultPathCap);

// Product over consecutive path edges of the best single-action estimate;
// 1.0 for paths without edges.
double path_cost(const LearnedModel& model, const std::vector<int>& path);

// The biased action at product state (x_t, q_t): picks the cheapest-risk
// shortest path towards x_goal, takes its first hop as waypoint x_b, and
// returns the action most likely to reach it. Falls back to a uniformly
// random available action when no informative path exists.
BiasQuery biased_action(const LearnedModel& model, const GroundTruthMdp& env,
                        const TaskBinding& binding, const OmegaAutomaton& aut, int x_t, int q_t,
                        const std::vector<int>& q_goal, Rng& rng, int path_cap = kDefaultPathCap);

// One-hop neighbors of x_t (learned adjacency) whose own shortest distance
// to the goal set is exactly one less than that of x_t.
std::vector<int> x_closer_set(const LearnedModel& model, int x_t,
                              const std::vector<int>& x_goal, const std::vector<int>& x_avoid);

}  // namespace omegarl
