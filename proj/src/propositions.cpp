#include "omegarl/propositions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <utility>

#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

constexpr double kSlack = 1e-9;

// Small connected-ish MDP over 5-9 states and 2-3 actions, everything
// available everywhere. Two distinct states carry the location atoms "g" and
// "h". Concentrated rows put most mass on one successor, which makes the
// stronger hypotheses attainable.
GroundTruthMdp random_env(Rng& rng, bool concentrated) {
    GroundTruthMdp env;
    const int n = 5 + static_cast<int>(rng.uniform_index(5));
    const int k = 2 + static_cast<int>(rng.uniform_index(2));
    env.num_states = n;
    for (int a = 0; a < k; ++a) env.action_names.push_back("a" + std::to_string(a));
    env.available.resize(n);
    env.trans.assign(n, std::vector<TransRow>(k));
    std::vector<int> pool(n);
    for (int x = 0; x < n; ++x) {
        for (int a = 0; a < k; ++a) env.available[x].push_back(a);
        for (int a = 0; a < k; ++a) {
            const int d = 2 + static_cast<int>(rng.uniform_index(2));
            for (int i = 0; i < n; ++i) pool[i] = i;
            for (int i = 0; i < d; ++i)
                std::swap(pool[i], pool[i + rng.uniform_index(n - i)]);
            TransRow row;
            if (concentrated) {
                const double main = rng.uniform(0.8, 0.95);
                row.emplace_back(pool[0], main);
                for (int i = 1; i < d; ++i)
                    row.emplace_back(pool[i], (1.0 - main) / (d - 1));
            } else {
                std::vector<double> w(d);
                double total = 0.0;
                for (int i = 0; i < d; ++i) {
                    w[i] = 0.05 + rng.uniform01();
                    total += w[i];
                }
                for (int i = 0; i < d; ++i) row.emplace_back(pool[i], w[i] / total);
            }
            std::sort(row.begin(), row.end());
            env.trans[x][a] = std::move(row);
        }
    }
    env.aps = {{"g", true}, {"h", true}};
    env.labels.assign(n, 0);
    const int xg = static_cast<int>(rng.uniform_index(n));
    int xh = static_cast<int>(rng.uniform_index(n - 1));
    if (xh >= xg) ++xh;
    env.labels[xg] |= 1ULL;
    env.labels[xh] |= 2ULL;
    return env;
}

// Three tiny tasks over the atoms g/h: reach g; reach g then h; reach g
// while avoiding h.
OmegaAutomaton bank_automaton(int which) {
    OmegaAutomaton aut;
    aut.aps = {{"g", true}, {"h", true}};
    auto g = [] { return LabelExpr::atom(0); };
    auto h = [] { return LabelExpr::atom(1); };
    auto add = [&aut](int from, LabelExpr label, int to) {
        aut.edges[from].push_back(AutomatonEdge{std::move(label), to, true});
    };
    switch (which % 3) {
        case 0:
            aut.num_states = 2;
            aut.edges.resize(2);
            aut.epsilon_edges.resize(2);
            add(0, LabelExpr::negate(g()), 0);
            add(0, g(), 1);
            add(1, LabelExpr::make_true(), 1);
            aut.rabin_pairs = {RabinPair{{1}, {}}};
            break;
        case 1:
            aut.num_states = 3;
            aut.edges.resize(3);
            aut.epsilon_edges.resize(3);
            add(0, LabelExpr::negate(g()), 0);
            add(0, g(), 1);
            add(1, LabelExpr::negate(h()), 1);
            add(1, h(), 2);
            add(2, LabelExpr::make_true(), 2);
            aut.rabin_pairs = {RabinPair{{2}, {}}};
            break;
        default:
            aut.num_states = 3;
            aut.edges.resize(3);
            aut.epsilon_edges.resize(3);
            add(0, LabelExpr::conj(LabelExpr::negate(g()), LabelExpr::negate(h())), 0);
            add(0, g(), 1);
            add(0, LabelExpr::conj(LabelExpr::negate(g()), h()), 2);
            add(1, LabelExpr::make_true(), 1);
            add(2, LabelExpr::make_true(), 2);
            aut.rabin_pairs = {RabinPair{{1}, {2}}};
            break;
    }
    detail::validate_automaton(aut);
    return prune_and_index(std::move(aut));
}

struct Instance {
    GroundTruthMdp env;
    OmegaAutomaton aut;
    TaskBinding binding;
    LearnedModel model{1, 1};
    std::vector<int> greedy;  // fixed greedy arm per ground state
    std::vector<int> q_goal;
    int x_t = -1;
    int q_t = 0;
    std::uint64_t probe_seed = 0;
    BiasQuery bias;
    std::vector<std::vector<int>> paths;  // all min-hop paths from x_t
};

int biased_arm_at(const Instance& inst, int x) {
    Rng rng(Rng::derive(inst.probe_seed, static_cast<std::uint64_t>(x)));
    return biased_action(inst.model, inst.env, inst.binding, inst.aut, x, inst.q_t, inst.q_goal,
                         rng)
        .a_b;
}

// Draws environments until the start state has 1-4 hops to go and the full
// min-hop path set is enumerable.
bool make_instance(std::uint64_t case_seed, int which_aut, Instance& inst) {
    Rng rng(case_seed);
    for (int attempt = 0; attempt < 64; ++attempt) {
        GroundTruthMdp env = random_env(rng, rng.uniform01() < 0.5);
        OmegaAutomaton aut = bank_automaton(which_aut);
        TaskBinding binding = bind_labels(env.aps, aut.aps);
        LearnedModel model = LearnedModel::from_truth(env);
        const int q_t = aut.initial;
        std::vector<int> q_goal = aut.goal_states(q_t);
        const std::uint64_t probe_seed = Rng::derive(case_seed, 4242, attempt);
        const int x_t = static_cast<int>(rng.uniform_index(env.num_states));
        Rng bias_rng(Rng::derive(probe_seed, static_cast<std::uint64_t>(x_t)));
        BiasQuery bias = biased_action(model, env, binding, aut, x_t, q_t, q_goal, bias_rng);
        if (bias.fallback || bias.goal_was_random) continue;
        if (bias.hops < 1 || bias.hops > 4) continue;
        MinHopResult mh = min_hop_paths(model, x_t, bias.x_goal, bias.x_avoid);
        if (mh.paths.empty() || static_cast<int>(mh.paths.size()) >= kDefaultPathCap) continue;

        inst.greedy.resize(env.num_states);
        for (int x = 0; x < env.num_states; ++x)
            inst.greedy[x] = env.available[x][rng.uniform_index(env.available[x].size())];
        inst.env = std::move(env);
        inst.aut = std::move(aut);
        inst.binding = binding;
        inst.model = std::move(model);
        inst.q_goal = std::move(q_goal);
        inst.x_t = x_t;
        inst.q_t = q_t;
        inst.probe_seed = probe_seed;
        inst.bias = std::move(bias);
        inst.paths = std::move(mh.paths);
        return true;
    }
    return false;
}

// Per-state action distributions, aligned with env.available[x].
std::vector<std::vector<double>> policy_rows(const Instance& inst, double delta_b, double delta_e,
                                             bool biased) {
    std::vector<std::vector<double>> rows(inst.env.num_states);
    for (int x = 0; x < inst.env.num_states; ++x)
        rows[x] = action_probabilities(delta_b, delta_e, inst.env.available[x], inst.greedy[x],
                                       biased ? biased_arm_at(inst, x) : -1);
    return rows;
}

// Exact probability of every ground-state sequence of the given length,
// found by expanding the full action/successor tree.
std::map<std::vector<int>, double> sequence_masses(const GroundTruthMdp& env,
                                                   const std::vector<std::vector<double>>& rows,
                                                   int x_t, int depth) {
    std::map<std::vector<int>, double> out;
    std::vector<int> seq{x_t};
    std::function<void(int, int, double)> walk = [&](int x, int left, double mass) {
        if (left == 0) {
            out[seq] += mass;
            return;
        }
        const auto& avail = env.available[x];
        for (std::size_t i = 0; i < avail.size(); ++i) {
            if (rows[x][i] <= 0.0) continue;
            for (const auto& [x2, p] : env.trans[x][avail[i]]) {
                if (p <= 0.0) continue;
                seq.push_back(x2);
                walk(x2, left - 1, mass * rows[x][i] * p);
                seq.pop_back();
            }
        }
    };
    walk(x_t, depth, 1.0);
    return out;
}

double mass_of(const std::map<std::vector<int>, double>& masses, const std::vector<int>& path) {
    const auto it = masses.find(path);
    return it == masses.end() ? 0.0 : it->second;
}

int path_index(const Instance& inst) {
    for (std::size_t j = 0; j < inst.paths.size(); ++j)
        if (inst.paths[j] == inst.bias.j_star_path) return static_cast<int>(j);
    return -1;
}

struct CaseOutcome {
    bool met = false;
    bool held = false;
};

CaseOutcome prop1_case(std::uint64_t case_seed, int which_aut) {
    Rng rng(case_seed);
    const GroundTruthMdp env = random_env(rng, rng.uniform01() < 0.5);
    const OmegaAutomaton aut = bank_automaton(which_aut);
    const TaskBinding binding = bind_labels(env.aps, aut.aps);
    const LearnedModel model = LearnedModel::from_truth(env);
    const ExplicitPmdp pmdp = build_explicit_pmdp(env, aut, binding);
    const int n = pmdp.num_states();

    const double eps = rng.uniform(0.05, 0.95);
    const double delta_b = eps * rng.uniform01();
    const double delta_e = eps - delta_b;
    const std::uint64_t probe_seed = Rng::derive(case_seed, 99);

    // The biased arm is a property of the product state and is shared by the
    // policy and its improvement.
    std::vector<int> arm(n);
    for (int x = 0; x < env.num_states; ++x) {
        for (int q = 0; q < aut.num_states; ++q) {
            Rng bias_rng(Rng::derive(probe_seed, static_cast<std::uint64_t>(x),
                                     static_cast<std::uint64_t>(q)));
            arm[pmdp.sid(x, q)] =
                biased_action(model, env, binding, aut, x, q, aut.goal_states(q), bias_rng).a_b;
        }
    }
    std::vector<int> greedy0(n);
    for (int s = 0; s < n; ++s) {
        const auto& avail = env.available[pmdp.x_of(s)];
        greedy0[s] = avail[rng.uniform_index(avail.size())];
    }

    const RewardParams rewards;
    auto rows_for = [&](const std::vector<int>& greedy) {
        std::vector<ActionDist> rows(n);
        for (int s = 0; s < n; ++s) {
            const auto& avail = env.available[pmdp.x_of(s)];
            const std::vector<double> mu =
                action_probabilities(delta_b, delta_e, avail, greedy[s], arm[s]);
            for (std::size_t i = 0; i < avail.size(); ++i) rows[s].emplace_back(avail[i], mu[i]);
        }
        return rows;
    };

    const std::vector<ActionDist> mu0 = rows_for(greedy0);
    const PolicyValue u0 = policy_value(
        pmdp, [&mu0, &pmdp](int x, int q) { return mu0[pmdp.sid(x, q)]; }, rewards);

    std::vector<char> q_good(pmdp.num_q, 0), q_bad(pmdp.num_q, 0);
    for (const auto& pair : pmdp.rabin_pairs) {
        for (int q : pair.good) q_good[q] = 1;
        for (int q : pair.bad) q_bad[q] = 1;
    }
    std::vector<double> q_reward(pmdp.num_q);
    for (int q = 0; q < pmdp.num_q; ++q) {
        if (q_good[q])
            q_reward[q] = rewards.r_good;
        else if (q_bad[q])
            q_reward[q] = rewards.r_bad;
        else if (pmdp.dist_to_acc[q] == kInfDist)
            q_reward[q] = rewards.r_deadlock;
        else
            q_reward[q] = rewards.r_neutral;
    }

    std::vector<int> greedy1(n);
    for (int s = 0; s < n; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        int pick = -1;
        for (std::size_t i = 0; i < pmdp.available[s].size(); ++i) {
            double qa = 0.0;
            for (const auto& [t, p] : pmdp.trans[s][i])
                qa += p * (q_reward[pmdp.q_of(t)] + rewards.gamma * u0.values[t]);
            if (qa > best) {
                best = qa;
                pick = pmdp.available[s][i];
            }
        }
        greedy1[s] = pick;
    }

    const std::vector<ActionDist> mu1 = rows_for(greedy1);
    const PolicyValue u1 = policy_value(
        pmdp, [&mu1, &pmdp](int x, int q) { return mu1[pmdp.sid(x, q)]; }, rewards);

    CaseOutcome out;
    out.met = true;
    out.held = true;
    for (int s = 0; s < n; ++s)
        if (u1.values[s] < u0.values[s] - kSlack) out.held = false;
    return out;
}

CaseOutcome one_step_case(std::uint64_t case_seed, int which_aut, bool require_dominant_row) {
    Instance inst;
    if (!make_instance(case_seed, which_aut, inst)) return {};
    Rng rng(Rng::derive(case_seed, 7));
    const double eps = rng.uniform(0.2, 1.0);
    const double delta_b = eps * rng.uniform(0.1, 1.0);
    const double delta_e = eps - delta_b;

    const std::function<int(int)> greedy_fn = [&inst](int x) { return inst.greedy[x]; };
    const OneStepProbe probe =
        one_step_probe(inst.env, inst.model, inst.binding, inst.aut, inst.x_t, inst.q_t,
                       inst.q_goal, delta_b, delta_e, greedy_fn, inst.probe_seed);
    const std::vector<int> closer =
        x_closer_set(inst.model, inst.x_t, inst.bias.x_goal, inst.bias.x_avoid);

    CaseOutcome out;
    bool met = delta_b > 0.0 && !inst.bias.fallback &&
               std::find(closer.begin(), closer.end(), inst.bias.x_b) != closer.end();
    if (met && require_dominant_row) {
        // the biased action must beat the best average row into the closer set
        double bound = 0.0;
        for (int x2 : closer) {
            double avg = 0.0;
            for (int a : inst.env.available[inst.x_t]) avg += inst.env.prob(inst.x_t, a, x2);
            avg /= static_cast<double>(inst.env.available[inst.x_t].size());
            bound = std::max(bound, avg);
        }
        for (int x2 : closer)
            if (inst.env.prob(inst.x_t, inst.bias.a_b, x2) < bound) {
                met = false;
                break;
            }
    }
    out.met = met;
    if (!met) return out;
    if (require_dominant_row)
        out.held = probe.closer_biased >= probe.closer_greedy - kSlack;
    else
        out.held = probe.hit_biased >= probe.hit_greedy - kSlack;
    return out;
}

CaseOutcome path_case(std::uint64_t case_seed, int which_aut, int which, int index) {
    Instance inst;
    if (!make_instance(case_seed, which_aut, inst)) return {};
    const int t_star = inst.bias.hops;
    const int j_star = path_index(inst);
    if (j_star < 0) return {};
    Rng rng(Rng::derive(case_seed, 7));
    const std::function<int(int)> greedy_fn = [&inst](int x) { return inst.greedy[x]; };

    auto beta_all = [&](double delta_b, double delta_e) {
        std::vector<double> out(inst.paths.size());
        for (std::size_t j = 0; j < inst.paths.size(); ++j)
            out[j] = beta_of_path(inst.env, inst.model, inst.binding, inst.aut, inst.q_t,
                                  inst.q_goal, inst.paths[j], delta_b, delta_e, greedy_fn,
                                  inst.probe_seed);
        return out;
    };

    CaseOutcome out;
    if (which == 4) {
        double delta_b, delta_e;
        if (index % 2 == 0) {
            delta_b = 1.0;
            delta_e = 0.0;
        } else {
            const double eps = rng.uniform(0.2, 1.0);
            delta_b = eps * rng.uniform01();
            delta_e = eps - delta_b;
        }
        const std::vector<double> beta = beta_all(delta_b, delta_e);
        out.met = beta[j_star] >= *std::max_element(beta.begin(), beta.end());
        if (!out.met) return out;
        const auto masses =
            sequence_masses(inst.env, policy_rows(inst, delta_b, delta_e, true), inst.x_t, t_star);
        double best = 0.0;
        for (const auto& path : inst.paths) best = std::max(best, mass_of(masses, path));
        out.held = mass_of(masses, inst.paths[j_star]) >= best - kSlack;
        return out;
    }

    const double eps = rng.uniform(0.2, 1.0);
    std::vector<double> eta(inst.paths.size());
    for (std::size_t j = 0; j < inst.paths.size(); ++j)
        eta[j] = eta_of_path(inst.env, inst.paths[j], eps, greedy_fn);

    // widest bias first: scan the split grid from delta_b = eps down to 0
    double delta_b = -1.0, delta_e = 0.0;
    for (int m = 16; m >= 0; --m) {
        const double db = eps * m / 16.0;
        const double de = eps - db;
        if (which == 5) {
            const double beta_star =
                beta_of_path(inst.env, inst.model, inst.binding, inst.aut, inst.q_t, inst.q_goal,
                             inst.paths[j_star], db, de, greedy_fn, inst.probe_seed);
            if (beta_star >= *std::max_element(eta.begin(), eta.end())) {
                delta_b = db;
                delta_e = de;
                break;
            }
        } else {
            const std::vector<double> beta = beta_all(db, de);
            double beta_sum = 0.0, eta_sum = 0.0;
            for (std::size_t j = 0; j < inst.paths.size(); ++j) {
                beta_sum += beta[j];
                eta_sum += eta[j];
            }
            if (beta_sum >= eta_sum) {
                delta_b = db;
                delta_e = de;
                break;
            }
        }
    }
    out.met = delta_b >= 0.0;
    if (!out.met) return out;

    const auto masses_b =
        sequence_masses(inst.env, policy_rows(inst, delta_b, delta_e, true), inst.x_t, t_star);
    const auto masses_g =
        sequence_masses(inst.env, policy_rows(inst, 0.0, eps, false), inst.x_t, t_star);
    if (which == 5) {
        double best_g = 0.0;
        for (const auto& path : inst.paths) best_g = std::max(best_g, mass_of(masses_g, path));
        out.held = mass_of(masses_b, inst.paths[j_star]) >= best_g - kSlack;
    } else {
        double sum_b = 0.0, sum_g = 0.0;
        for (const auto& path : inst.paths) {
            sum_b += mass_of(masses_b, path);
            sum_g += mass_of(masses_g, path);
        }
        out.held = sum_b >= sum_g - kSlack;
    }
    return out;
}

}  // namespace

PropositionReport proposition_check(int which, int instances, std::uint64_t seed) {
    if (which < 1 || which > 6)
        throw ValidationError("proposition index must lie in 1..6, got " + std::to_string(which));
    if (instances <= 0) throw ValidationError("instance count must be positive");

    PropositionReport rep;
    rep.prop = which;
    rep.instances = instances;
    for (int i = 0; i < instances; ++i) {
        const std::uint64_t case_seed =
            Rng::derive(seed, static_cast<std::uint64_t>(which), static_cast<std::uint64_t>(i));
        const int which_aut = i % 3;
        CaseOutcome out;
        switch (which) {
            case 1:
                out = prop1_case(case_seed, which_aut);
                break;
            case 2:
                out = one_step_case(case_seed, which_aut, true);
                break;
            case 3:
                out = one_step_case(case_seed, which_aut, false);
                break;
            default:
                out = path_case(case_seed, which_aut, which, i);
                break;
        }
        if (out.met) {
            ++rep.hypothesis_met;
            if (out.held)
                ++rep.conclusion_held;
            else
                ++rep.failed;
        }
    }
    return rep;
}

}  // namespace omegarl
