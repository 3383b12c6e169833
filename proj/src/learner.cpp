#include "omegarl/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "omegarl/errors.hpp"

namespace omegarl {

void RewardParams::validate() const {
    if (!(r_good > 0.0)) throw ValidationError("accepting reward must be positive");
    if (!(r_deadlock < r_bad && r_bad < r_neutral && r_neutral <= 0.0))
        throw ValidationError(
            "rewards must satisfy deadlock < bad < neutral <= 0 (got " +
            std::to_string(r_deadlock) + ", " + std::to_string(r_bad) + ", " +
            std::to_string(r_neutral) + ")");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ValidationError("discount must lie in [0,1), got " + std::to_string(gamma));
}

namespace {

void check_unit_range(double v, const char* what, int episode) {
    if (v < -1e-12 || v > 1.0 + 1e-12)
        throw ValidationError(std::string(what) + " = " + std::to_string(v) +
                              " outside [0,1] at episode " + std::to_string(episode));
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

ScheduleValues schedule_values(const Schedule& schedule, int episode) {
    if (episode < 1) throw ValidationError("episode indices start at 1");
    ScheduleValues v;
    const double e = static_cast<double>(episode);
    if (schedule.kind == ScheduleKind::Custom) {
        if (schedule.custom.empty())
            throw ValidationError("custom schedule needs at least one row");
        const std::array<double, 3>* row = &schedule.custom.front();
        for (const auto& candidate : schedule.custom)
            if (candidate[0] <= e) row = &candidate;
        v.epsilon = (*row)[1];
        v.delta_b = (*row)[2];
        v.delta_e = v.epsilon - v.delta_b;
    } else {
        v.epsilon = std::pow(e, -schedule.alpha);
        switch (schedule.kind) {
            case ScheduleKind::Biased1: {
                const double random_share = std::pow(e, -schedule.beta);
                v.delta_e = v.epsilon * random_share;
                v.delta_b = (1.0 - random_share) * v.epsilon;
                break;
            }
            case ScheduleKind::Biased2:
            case ScheduleKind::Biased3: {
                const double g = episode < 100 ? 1.0 - 0.9 * std::exp(-schedule.big_a * e)
                                               : 1.0 - 0.1 * std::exp(-schedule.big_a * e);
                v.delta_e = g * v.epsilon;
                v.delta_b = (1.0 - g) * v.epsilon;
                break;
            }
            case ScheduleKind::Random:
                v.delta_e = v.epsilon;
                v.delta_b = 0.0;
                break;
            case ScheduleKind::Custom:
                break;  // handled above
        }
    }
    check_unit_range(v.epsilon, "epsilon", episode);
    check_unit_range(v.delta_b, "delta_b", episode);
    check_unit_range(v.delta_e, "delta_e", episode);
    v.epsilon = clamp01(v.epsilon);
    v.delta_b = clamp01(v.delta_b);
    v.delta_e = clamp01(v.delta_e);
    return v;
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "biased1") return ScheduleKind::Biased1;
    if (name == "biased2") return ScheduleKind::Biased2;
    if (name == "biased3") return ScheduleKind::Biased3;
    if (name == "random") return ScheduleKind::Random;
    if (name == "custom") return ScheduleKind::Custom;
    throw ValidationError("unknown schedule '" + name +
                          "' (expected biased1|biased2|biased3|random|custom)");
}

std::string schedule_kind_name(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::Biased1: return "biased1";
        case ScheduleKind::Biased2: return "biased2";
        case ScheduleKind::Biased3: return "biased3";
        case ScheduleKind::Random: return "random";
        case ScheduleKind::Custom: return "custom";
    }
    return "?";
}

std::string PolicySpec::name() const {
    switch (kind) {
        case PolicyKind::EpsilonDeltaGreedy: return "eps-delta-" + schedule_kind_name(schedule.kind);
        case PolicyKind::EpsilonGreedy: return "eps-greedy";
        case PolicyKind::Boltzmann: return "boltzmann";
        case PolicyKind::Ucb1: return "ucb1";
    }
    return "?";
}

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "eps-delta-greedy") return PolicyKind::EpsilonDeltaGreedy;
    if (name == "eps-greedy") return PolicyKind::EpsilonGreedy;
    if (name == "boltzmann") return PolicyKind::Boltzmann;
    if (name == "ucb1") return PolicyKind::Ucb1;
    throw ValidationError("unknown policy '" + name +
                          "' (expected eps-delta-greedy|eps-greedy|boltzmann|ucb1)");
}

QTable::QTable(int num_x, int num_q, int num_mdp_actions, int num_eps_actions)
    : num_q_(num_q),
      num_actions_(num_mdp_actions + num_eps_actions),
      num_mdp_actions_(num_mdp_actions),
      q_(static_cast<std::size_t>(num_x) * num_q * (num_mdp_actions + num_eps_actions), 0.0),
      n_(q_.size(), 0),
      ns_(static_cast<std::size_t>(num_x) * num_q, 0) {}

double QTable::max_over(int x, int q, const std::vector<int>& avail) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a : avail) best = std::max(best, q_[key(x, q, a)]);
    return best;
}

int QTable::argmax(int x, int q, const std::vector<int>& avail) const {
    int best_a = avail.front();
    double best = q_[key(x, q, best_a)];
    for (int a : avail) {
        const double v = q_[key(x, q, a)];
        if (v > best) {
            best = v;
            best_a = a;
        }
    }
    return best_a;
}

void QTable::update(int x, int q, int a, double r, int x_next, int q_next,
                    const std::vector<int>& avail_next, double gamma) {
    const std::size_t k = key(x, q, a);
    const int n = ++n_[k];
    const double target = r + gamma * max_over(x_next, q_next, avail_next);
    q_[k] += (target - q_[k]) / static_cast<double>(n);
}

std::vector<double> action_probabilities(double delta_b, double delta_e,
                                         const std::vector<int>& avail, int a_star, int a_b) {
    if (avail.empty()) throw ValidationError("no available actions");
    if (a_b < 0 && delta_b != 0.0)
        throw ValidationError("a biased share requires a biased action");
    const double eps = delta_b + delta_e;
    const double random_share = delta_e / static_cast<double>(avail.size());
    std::vector<double> probs(avail.size(), random_share);
    for (std::size_t i = 0; i < avail.size(); ++i) {
        if (avail[i] == a_star) probs[i] += 1.0 - eps;
        if (avail[i] == a_b) probs[i] += delta_b;
    }
    return probs;
}

Learner::Learner(const GroundTruthMdp& env, const OmegaAutomaton& aut, const LearnerConfig& config)
    : env_(env),
      aut_(aut),
      config_(config),
      binding_(bind_labels(env.aps, aut.aps)),
      model_(env.num_states, env.num_actions()),
      q_(env.num_states, aut.num_states, env.num_actions(),
         aut.kind == AutomatonKind::Ldba ? aut.num_states : 0) {
    if (!aut.indexed)
        throw ValidationError("automaton must be pruned and indexed before training");
    config_.rewards.validate();
    if (config_.tau < 1) throw ValidationError("episode horizon must be at least 1");
    if (config_.num_episodes < 0) throw ValidationError("episode count cannot be negative");
    if (config_.fixed_x0 >= env.num_states)
        throw ValidationError("fixed start state out of range");
}

std::vector<int> Learner::available_actions(int x, int q) const {
    std::vector<int> avail = env_.available[x];
    if (aut_.kind == AutomatonKind::Ldba)
        for (int t : aut_.epsilon_edges[q]) avail.push_back(env_.num_actions() + t);
    return avail;
}

double Learner::reward(int q_next, bool is_deadlock) const {
    const RewardParams& rp = config_.rewards;
    if (aut_.kind == AutomatonKind::Dra) {
        if (aut_.in_good_union(q_next)) return rp.r_good;
        if (aut_.in_bad_union(q_next)) return rp.r_bad;
    } else {
        for (int j = 0; j < aut_.num_buchi_sets(); ++j)
            if (aut_.in_buchi_set(j, q_next)) return rp.r_good;
    }
    if (is_deadlock) return rp.r_deadlock;
    return rp.r_neutral;
}

int Learner::biased_product_action(const ProductState& s, Rng& rng) {
    std::vector<int> q_goal = aut_.kind == AutomatonKind::Dra
                                  ? aut_.goal_states(s.q)
                                  : aut_.goal_states(s.q, s.visit_set, rng);
    if (aut_.kind == AutomatonKind::Ldba) {
        // An epsilon jump straight into the goal set beats any movement.
        for (int t : aut_.epsilon_edges[s.q]) {
            if (std::binary_search(q_goal.begin(), q_goal.end(), t)) {
                last_bias_ = BiasQuery{};
                last_bias_.x_t = s.x;
                last_bias_.q_t = s.q;
                last_bias_.a_b = env_.num_actions() + t;
                return last_bias_.a_b;
            }
        }
    }
    last_bias_ = biased_action(model_, env_, binding_, aut_, s.x, s.q, q_goal, rng,
                               config_.path_cap);
    return last_bias_.a_b;
}

int Learner::select_action(const ProductState& s, int episode, Rng& rng) {
    const std::vector<int> avail = available_actions(s.x, s.q);
    const PolicySpec& policy = config_.policy;
    switch (policy.kind) {
        case PolicyKind::EpsilonDeltaGreedy:
        case PolicyKind::EpsilonGreedy: {
            const ScheduleValues v = schedule_values(policy.schedule, episode);
            const double delta_b = policy.kind == PolicyKind::EpsilonGreedy ? 0.0 : v.delta_b;
            const double delta_e =
                policy.kind == PolicyKind::EpsilonGreedy ? v.epsilon : v.delta_e;
            const double u = rng.uniform01();
            if (u < 1.0 - (delta_b + delta_e)) return q_.argmax(s.x, s.q, avail);
            if (u < 1.0 - delta_b) return avail[rng.uniform_index(avail.size())];
            return biased_product_action(s, rng);
        }
        case PolicyKind::Boltzmann: {
            if (policy.temperature <= 1e-12) return q_.argmax(s.x, s.q, avail);
            const double top = q_.max_over(s.x, s.q, avail);
            std::vector<double> w(avail.size());
            for (std::size_t i = 0; i < avail.size(); ++i)
                w[i] = std::exp((q_.get(s.x, s.q, avail[i]) - top) / policy.temperature);
            return avail[rng.sample_weights(w)];
        }
        case PolicyKind::Ucb1: {
            for (int a : avail)
                if (q_.visits(s.x, s.q, a) == 0) return a;
            const double log_n = std::log(static_cast<double>(q_.state_visits(s.x, s.q)));
            int best_a = avail.front();
            double best = -std::numeric_limits<double>::infinity();
            for (int a : avail) {
                const double bonus =
                    policy.ucb_c * std::sqrt(2.0 * log_n / q_.visits(s.x, s.q, a));
                const double v = q_.get(s.x, s.q, a) + bonus;
                if (v > best) {
                    best = v;
                    best_a = a;
                }
            }
            return best_a;
        }
    }
    return avail.front();
}

int Learner::labeled_successor(int q, Symbol sym) const {
    if (aut_.kind == AutomatonKind::Dra) return aut_.step_dra(q, sym);
    int found = -1;
    for (const auto& e : aut_.edges[q]) {
        if (e.label.eval(sym)) {
            found = e.to;
            break;
        }
    }
    if (found < 0)
        throw MalformedAutomatonError("state " + std::to_string(q) +
                                      " has no labeled transition for the observed symbol");
    return found;
}

EpisodeStats Learner::run_episode(int episode, Rng& rng) {
    EpisodeStats stats;
    ProductState s;
    s.x = config_.fixed_x0 >= 0 ? config_.fixed_x0
                                : static_cast<int>(rng.uniform_index(env_.num_states));
    s.q = aut_.initial;
    if (aut_.kind == AutomatonKind::Ldba) s.visit_set = aut_.full_visit_set();
    const bool record =
        config_.record_model &&
        (config_.freeze_model_after < 0 || episode <= config_.freeze_model_after);

    for (int t = 0; t < config_.tau; ++t) {
        q_.note_visit(s.x, s.q);
        const int a = select_action(s, episode, rng);
        int x_next = s.x;
        int q_next;
        if (a >= env_.num_actions()) {
            q_next = a - env_.num_actions();  // epsilon jump: x stays put
        } else {
            x_next = env_.sample_next(s.x, a, rng);
            if (record) model_.record(s.x, a, x_next);
            const int labeled_x =
                config_.convention == LabelConvention::Source ? s.x : x_next;
            q_next = labeled_successor(s.q, binding_.remap(env_.label_of(labeled_x)));
        }
        const bool dead = aut_.deadlocked(q_next);
        const double r = reward(q_next, dead);
        q_.update(s.x, s.q, a, r, x_next, q_next, available_actions(x_next, q_next),
                  config_.rewards.gamma);
        stats.total_reward += r;
        ++stats.steps;
        bool accepted = false;
        if (aut_.kind == AutomatonKind::Dra) {
            accepted = aut_.in_good_union(q_next);
        } else {
            for (int j = 0; j < aut_.num_buchi_sets() && !accepted; ++j)
                accepted = aut_.in_buchi_set(j, q_next);
            s.visit_set = aut_.update_visit_set(s.visit_set, q_next);
        }
        if (accepted) ++stats.accept_visits;
        s.x = x_next;
        s.q = q_next;
        if (dead) {
            stats.hit_deadlock = true;
            break;
        }
    }
    return stats;
}

std::vector<TrainRow> Learner::train(const EvalHook& eval_hook) {
    std::vector<TrainRow> rows;
    Rng rng(config_.seed);
    const auto start = std::chrono::steady_clock::now();
    for (int e = 1; e <= config_.num_episodes; ++e) {
        run_episode(e, rng);
        const bool snapshot =
            config_.eval_every > 0 &&
            (e % config_.eval_every == 0 || e == config_.num_episodes);
        if (!snapshot) continue;
        TrainRow row;
        row.run_id = config_.run_id;
        row.policy = config_.policy.name();
        row.seed = config_.seed;
        row.episode = e;
        row.elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.avg_sat_prob = eval_hook ? eval_hook(*this) : 0.0;
        if (config_.policy.kind == PolicyKind::EpsilonDeltaGreedy ||
            config_.policy.kind == PolicyKind::EpsilonGreedy) {
            const ScheduleValues v = schedule_values(config_.policy.schedule, e);
            row.epsilon = v.epsilon;
            row.delta_b = config_.policy.kind == PolicyKind::EpsilonGreedy ? 0.0 : v.delta_b;
            row.delta_e = config_.policy.kind == PolicyKind::EpsilonGreedy ? v.epsilon : v.delta_e;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int Learner::greedy_action(int x, int q) const {
    return q_.argmax(x, q, available_actions(x, q));
}

}  // namespace omegarl
