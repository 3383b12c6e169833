#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "omegarl/automaton.hpp"
#include "omegarl/gridworld.hpp"
#include "omegarl/learned_model.hpp"
#include "omegarl/learner.hpp"
#include "omegarl/rng.hpp"

namespace omegarl {

// Refuse to materialize products above this many (x,q) states unless the
// caller raises the cap. Induced-chain analysis is not affected by it.
inline constexpr std::size_t kDefaultProductCap = 200000;

// Action distribution over one product state: (action id, probability)
// pairs. Ids follow Learner::available_actions — ground actions first, then
// one jump action per automaton state for LDBAs.
using ActionDist = std::vector<std::pair<int, double>>;
using ProductPolicy = std::function<ActionDist(int x, int q)>;

// Deterministic policy reading argmax actions off a trained Q-table.
ProductPolicy greedy_policy(const Learner& learner);

// Fully materialized product of a ground MDP with an omega automaton.
// trans[s][i] is the row for action available[s][i].
struct ExplicitPmdp {
    int num_x = 0;
    int num_q = 0;
    int num_mdp_actions = 0;
    int num_actions = 0;
    AutomatonKind kind = AutomatonKind::Dra;
    LabelConvention convention = LabelConvention::Successor;
    int initial_q = 0;
    std::vector<RabinPair> rabin_pairs;        // over automaton state ids
    std::vector<std::vector<int>> buchi_sets;  // over automaton state ids
    std::vector<int> dist_to_acc;              // per automaton state
    std::vector<std::vector<int>> available;   // per product state
    std::vector<std::vector<TransRow>> trans;  // aligned with available

    int num_states() const { return num_x * num_q; }
    int sid(int x, int q) const { return x * num_q + q; }
    int x_of(int s) const { return s / num_q; }
    int q_of(int s) const { return s % num_q; }
    const TransRow& row(int s, int action) const;
};

ExplicitPmdp build_explicit_pmdp(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                                 const TaskBinding& binding,
                                 LabelConvention convention = LabelConvention::Successor,
                                 std::size_t cap = kDefaultProductCap);

// Markov chain induced on the product by a fixed policy, carrying the
// acceptance data needed to classify its bottom SCCs.
struct InducedChain {
    int num_x = 0;
    int num_q = 0;
    int initial_q = 0;
    AutomatonKind kind = AutomatonKind::Dra;
    std::vector<RabinPair> rabin_pairs;
    std::vector<std::vector<int>> buchi_sets;
    std::vector<int> dist_to_acc;
    std::vector<TransRow> rows;  // per product state, sorted by target

    int num_states() const { return num_x * num_q; }
    int sid(int x, int q) const { return x * num_q + q; }
    int q_of(int s) const { return s % num_q; }
};

InducedChain induce_chain(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                          const TaskBinding& binding, const ProductPolicy& policy,
                          LabelConvention convention = LabelConvention::Successor);
InducedChain induce_chain(const ExplicitPmdp& pmdp, const ProductPolicy& policy);

struct SatisfactionReport {
    std::vector<double> per_state;    // absorption probability per product state
    std::vector<double> per_initial;  // per ground state x, read at (x, q0)
    double average = 0.0;             // mean of per_initial over all x
    int bscc_total = 0;
    int bscc_accepting = 0;
    std::string method;  // "direct" or "iterative"
};

SatisfactionReport satisfaction_probability(const InducedChain& chain);
SatisfactionReport satisfaction_probability(const ExplicitPmdp& pmdp, const ProductPolicy& policy);
SatisfactionReport satisfaction_probability(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                                            const TaskBinding& binding,
                                            const ProductPolicy& policy,
                                            LabelConvention convention = LabelConvention::Successor);

// Shorthand used as the learning-curve hook during training.
double average_satisfaction(const Learner& learner);

// Capped-horizon sampling proxy: a rollout counts as satisfied once it
// enters an accepting bottom SCC of the chain. Start states cycle through
// (x, q0) for every x.
double mc_average_satisfaction(const InducedChain& chain, int rollouts, std::uint64_t seed);

struct PolicyValue {
    std::vector<double> values;  // per product state
    std::string method;
};

PolicyValue policy_value(const InducedChain& chain, const RewardParams& rewards);
PolicyValue policy_value(const ExplicitPmdp& pmdp, const ProductPolicy& policy,
                         const RewardParams& rewards);

struct ModelBasedResult {
    std::vector<ActionDist> policy;   // per product state
    std::vector<double> reach_value;  // max probability of reaching a winning component
    int winning_states = 0;
    SatisfactionReport report;
};

ModelBasedResult model_based_optimal(const ExplicitPmdp& pmdp);

struct PathProbe {
    std::vector<int> path;
    double beta = 0.0;
    double eta = 0.0;
};

// Probability that the biased policy, pinned at automaton state q_t with the
// given exploration split, emits exactly this ground-state sequence. The
// greedy action comes from the caller; the bias target is recomputed from
// each prefix state. Ground-truth transition kernels throughout.
double beta_of_path(const GroundTruthMdp& env, const LearnedModel& model,
                    const TaskBinding& binding, const OmegaAutomaton& aut, int q_t,
                    const std::vector<int>& q_goal, const std::vector<int>& path,
                    double delta_b, double delta_e,
                    const std::function<int(int)>& greedy_at, std::uint64_t seed,
                    int path_cap = kDefaultPathCap);

// Same sequence probability under plain epsilon-greedy exploration.
double eta_of_path(const GroundTruthMdp& env, const std::vector<int>& path, double epsilon,
                   const std::function<int(int)>& greedy_at);

struct OneStepProbe {
    double closer_biased = 0.0;  // P(x_{t+1} one hop closer to the goal set)
    double closer_greedy = 0.0;
    double hit_biased = 0.0;  // P(x_{t+1} = x_b)
    double hit_greedy = 0.0;
    int x_b = -1;
    int a_b = -1;
    int a_star = -1;
};

// Exact one-step comparison of the biased policy against the plain
// epsilon-greedy policy with the same total exploration mass.
OneStepProbe one_step_probe(const GroundTruthMdp& env, const LearnedModel& model,
                            const TaskBinding& binding, const OmegaAutomaton& aut, int x_t,
                            int q_t, const std::vector<int>& q_goal, double delta_b,
                            double delta_e, const std::function<int(int)>& greedy_at,
                            std::uint64_t seed, int path_cap = kDefaultPathCap);

std::string report_to_json(const SatisfactionReport& report);

}  // namespace omegarl
