#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omegarl/automaton.hpp"
#include "omegarl/gridworld.hpp"
#include "omegarl/learned_model.hpp"
#include "omegarl/rng.hpp"

namespace omegarl {

struct ProductState {
    int x = 0;
    int q = 0;
    // LDBA only: accepting sets still owed in the current round.
    std::vector<int> visit_set;
};

struct RewardParams {
    double r_good = 10.0;
    double r_bad = -0.1;
    double r_deadlock = -100.0;
    double r_neutral = 0.0;
    double gamma = 0.99;

    void validate() const;
};

enum class ScheduleKind { Biased1, Biased2, Biased3, Random, Custom };

struct Schedule {
    ScheduleKind kind = ScheduleKind::Biased1;
    double alpha = 0.1;  // epsilon(e) = e^-alpha
    double beta = 0.4;   // Biased1 split between the two exploration arms
    double big_a = 0.00015;  // Biased2/3 exponential split rate
    // Custom: (from_episode, epsilon, delta_b) rows, ascending by episode;
    // the row with the largest from_episode <= e applies, delta_e = eps - db.
    std::vector<std::array<double, 3>> custom;
};

struct ScheduleValues {
    double epsilon = 0.0;
    double delta_b = 0.0;
    double delta_e = 0.0;
};

// Closed forms for episode e >= 1; throws if any value leaves [0,1].
ScheduleValues schedule_values(const Schedule& schedule, int episode);

ScheduleKind schedule_kind_from_name(const std::string& name);
std::string schedule_kind_name(ScheduleKind kind);

enum class PolicyKind { EpsilonDeltaGreedy, EpsilonGreedy, Boltzmann, Ucb1 };

struct PolicySpec {
    PolicyKind kind = PolicyKind::EpsilonDeltaGreedy;
    Schedule schedule;         // greedy family
    double temperature = 0.5;  // Boltzmann
    double ucb_c = 1.0;        // UCB1

    std::string name() const;
};

PolicyKind policy_kind_from_name(const std::string& name);

// Action values and visit counts over product states (x, q). Rows default
// to zero; product actions are the MDP actions followed by one epsilon slot
// per automaton state.
class QTable {
public:
    QTable(int num_x, int num_q, int num_mdp_actions, int num_eps_actions);

    int num_actions() const { return num_actions_; }
    int num_mdp_actions() const { return num_mdp_actions_; }

    double get(int x, int q, int a) const { return q_[key(x, q, a)]; }
    int visits(int x, int q, int a) const { return n_[key(x, q, a)]; }
    int state_visits(int x, int q) const { return ns_[skey(x, q)]; }

    double max_over(int x, int q, const std::vector<int>& avail) const;
    // Lowest action index wins ties.
    int argmax(int x, int q, const std::vector<int>& avail) const;

    // One learning-rate-1/n update towards r + gamma * max_{a'} Q(s', a').
    void update(int x, int q, int a, double r, int x_next, int q_next,
                const std::vector<int>& avail_next, double gamma);
    // Visit bookkeeping for UCB1 (select-time, separate from updates).
    void note_visit(int x, int q) { ++ns_[skey(x, q)]; }

private:
    std::size_t key(int x, int q, int a) const {
        return (static_cast<std::size_t>(x) * num_q_ + q) * num_actions_ + a;
    }
    std::size_t skey(int x, int q) const { return static_cast<std::size_t>(x) * num_q_ + q; }

    int num_q_;
    int num_actions_;
    int num_mdp_actions_;
    std::vector<double> q_;
    std::vector<int> n_;
    std::vector<int> ns_;
};

// Eq.-style exploration mix over the available actions: the greedy action
// a_star keeps 1 - (delta_b + delta_e) plus its share of the random arm; the
// biased action a_b adds delta_b on top of whatever else it earns. Pass
// a_b = -1 when no biased arm exists. Entries are nonnegative and sum to 1.
std::vector<double> action_probabilities(double delta_b, double delta_e,
                                         const std::vector<int>& avail, int a_star, int a_b);

struct EpisodeStats {
    int steps = 0;
    double total_reward = 0.0;
    bool hit_deadlock = false;
    int accept_visits = 0;
};

struct TrainRow {
    std::string run_id;
    std::string policy;
    std::uint64_t seed = 0;
    int episode = 0;
    double elapsed_s = 0.0;
    double avg_sat_prob = 0.0;
    double epsilon = 0.0;
    double delta_b = 0.0;
    double delta_e = 0.0;
};

struct LearnerConfig {
    PolicySpec policy;
    RewardParams rewards;
    int num_episodes = 5000;
    int tau = 200;           // steps per episode
    int eval_every = 250;    // snapshot cadence for the learning curve; 0 = never
    int fixed_x0 = -1;       // -1: uniform-random start each episode
    int freeze_model_after = -1;  // stop recording after this many episodes; -1 = never
    bool record_model = true;     // baselines keep recording when set, but never read it
    int path_cap = kDefaultPathCap;
    LabelConvention convention = LabelConvention::Successor;
    std::uint64_t seed = 1;
    std::string run_id = "run";
};

// One training run: owns the Q-table, the learned model, and the episode
// loop. Construction wires the environment/automaton pair through a name
// binding of their AP lists.
class Learner {
public:
    Learner(const GroundTruthMdp& env, const OmegaAutomaton& aut, const LearnerConfig& config);

    // Product actions at (x, q): the environment's moves plus, for LDBAs,
    // one epsilon action per epsilon successor of q (id = |A| + target).
    std::vector<int> available_actions(int x, int q) const;

    double reward(int q_next, bool is_deadlock) const;

    // Draws one action: greedy arm with probability 1-eps, uniform arm with
    // delta_e, biased arm with delta_b (the biased action is only computed
    // when that arm is drawn). Baselines use their own rules.
    int select_action(const ProductState& s, int episode, Rng& rng);

    EpisodeStats run_episode(int episode, Rng& rng);

    // Runs all episodes; rows carry the learning curve. The satisfaction
    // probability of the intermediate greedy policies comes from the
    // caller-supplied hook (the evaluator lives one module up).
    using EvalHook = std::function<double(const Learner&)>;
    std::vector<TrainRow> train(const EvalHook& eval_hook = {});

    // Greedy action at (x, q), lowest index on ties.
    int greedy_action(int x, int q) const;

    const QTable& q_table() const { return q_; }
    const LearnedModel& model() const { return model_; }
    const GroundTruthMdp& env() const { return env_; }
    const OmegaAutomaton& automaton() const { return aut_; }
    const TaskBinding& binding() const { return binding_; }
    const LearnerConfig& config() const { return config_; }
    const BiasQuery& last_bias_query() const { return last_bias_; }

private:
    int biased_product_action(const ProductState& s, Rng& rng);
    int labeled_successor(int q, Symbol sym) const;

    const GroundTruthMdp& env_;
    const OmegaAutomaton& aut_;
    LearnerConfig config_;
    TaskBinding binding_;
    LearnedModel model_;
    QTable q_;
    BiasQuery last_bias_;
};

}  // namespace omegarl
