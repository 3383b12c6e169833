#include "omegarl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "omegarl/errors.hpp"
#include "oracles.hpp"

using namespace omegarl;

namespace {

GroundTruthMdp corridor() {
    return load_mdp_file(oracle::fixture("envs/corridor_i.json"));
}

OmegaAutomaton reach_exit() {
    return prune_and_index(
        load_automaton_file(oracle::fixture("automata/reach_exit.json")));
}

// Single-atom reach automaton: q0 waits for `ap`, q1 accepts forever.
OmegaAutomaton make_reach_aut(const std::string& ap) {
    nlohmann::json doc = {
        {"kind", "dra"},
        {"num_states", 2},
        {"initial", 0},
        {"aps", {{{"name", ap}, {"is_location", true}}}},
        {"edges",
         {
             {{"from", 0}, {"label", "!0"}, {"to", 0}},
             {{"from", 0}, {"label", "0"}, {"to", 1}},
             {{"from", 1}, {"label", "t"}, {"to", 1}},
         }},
        {"rabin_pairs", {{{"good", {1}}, {"bad", nlohmann::json::array()}}}},
    };
    return prune_and_index(load_native(doc));
}

// exit1 accepts, exit2 is a silent dead end.
OmegaAutomaton reach_or_die() {
    nlohmann::json doc = {
        {"kind", "dra"},
        {"num_states", 3},
        {"initial", 0},
        {"aps",
         {{{"name", "exit1"}, {"is_location", true}},
          {{"name", "exit2"}, {"is_location", true}}}},
        {"edges",
         {
             {{"from", 0}, {"label", "!0 & !1"}, {"to", 0}},
             {{"from", 0}, {"label", "0"}, {"to", 1}},
             {{"from", 0}, {"label", "1 & !0"}, {"to", 2}},
             {{"from", 1}, {"label", "t"}, {"to", 1}},
             {{"from", 2}, {"label", "t"}, {"to", 2}},
         }},
        {"rabin_pairs", {{{"good", {1}}, {"bad", nlohmann::json::array()}}}},
    };
    return prune_and_index(load_native(doc));
}

// Birth-death walk on 0..4 with absorbing ends; climbs with probability 0.6.
GroundTruthMdp gambler_env() {
    nlohmann::json doc = {
        {"num_states", 5},
        {"actions", {"play"}},
        {"available", {{0}, {0}, {0}, {0}, {0}}},
        {"aps", {{{"name", "win"}, {"is_location", true}}}},
        {"trans",
         {
             {{"x", 0}, {"a", 0}, {"probs", {{"0", 1.0}}}},
             {{"x", 1}, {"a", 0}, {"probs", {{"0", 0.4}, {"2", 0.6}}}},
             {{"x", 2}, {"a", 0}, {"probs", {{"1", 0.4}, {"3", 0.6}}}},
             {{"x", 3}, {"a", 0}, {"probs", {{"2", 0.4}, {"4", 0.6}}}},
             {{"x", 4}, {"a", 0}, {"probs", {{"4", 1.0}}}},
         }},
        {"labels", {{"4", {"win"}}}},
    };
    return load_explicit(doc);
}

ProductPolicy single_action_policy() {
    return [](int, int) { return ActionDist{{0, 1.0}}; };
}

oracle::Chain to_oracle_chain(const InducedChain& chain) {
    const int n = chain.num_states();
    oracle::Chain c;
    c.p.assign(n, std::vector<double>(n, 0.0));
    for (int s = 0; s < n; ++s)
        for (const auto& [t, p] : chain.rows[s]) c.p[s][t] += p;
    return c;
}

// Good-states marking for a single Rabin pair with an empty bad set.
std::vector<char> accepting_states(const InducedChain& chain) {
    std::vector<char> good_q(chain.num_q, 0);
    for (const auto& pair : chain.rabin_pairs)
        for (int q : pair.good) good_q[q] = 1;
    std::vector<char> out(chain.num_states(), 0);
    for (int s = 0; s < chain.num_states(); ++s) out[s] = good_q[chain.q_of(s)];
    return out;
}

constexpr double kH1 = 0.41538461538461535;  // 27/65
constexpr double kH2 = 0.69230769230769229;  // 45/65
constexpr double kH3 = 0.87692307692307692;  // 57/65

}  // namespace

TEST_CASE("greedy_policy reads argmax actions off the learner") {
    auto env = corridor();
    auto aut = reach_exit();
    LearnerConfig cfg;
    cfg.num_episodes = 0;
    Learner l(env, aut, cfg);
    auto pol = greedy_policy(l);
    auto at_exit = pol(0, 0);
    REQUIRE(at_exit.size() == 1);
    CHECK(at_exit[0].first == 0);
    CHECK(at_exit[0].second == 1.0);
    auto interior = pol(3, 1);
    REQUIRE(interior.size() == 1);
    CHECK(interior[0].first == 0);  // zero table: lowest index
}

TEST_CASE("explicit product wires labels by the chosen convention") {
    auto env = corridor();
    auto aut = reach_exit();
    auto binding = bind_labels(env.aps, aut.aps);

    auto succ = build_explicit_pmdp(env, aut, binding);
    REQUIRE(succ.num_states() == 14);
    CHECK(succ.num_q == 2);
    CHECK(succ.num_actions == 2);
    CHECK(succ.initial_q == 0);

    // (E, q0) with action `right` lands on Exit1, whose label fires q0->q1.
    const int s_e = succ.sid(5, 0);
    CHECK(succ.available[s_e] == std::vector<int>{0, 1});
    CHECK(succ.row(s_e, 1) == TransRow{{succ.sid(6, 1), 1.0}});

    // (C, q0) with `left`: both successors are unlabeled, q stays.
    const int s_c = succ.sid(3, 0);
    CHECK(succ.row(s_c, 0) == TransRow{{succ.sid(2, 0), 0.9}, {succ.sid(4, 0), 0.1}});

    // Source convention reads the departure state's (empty) label instead.
    auto src = build_explicit_pmdp(env, aut, binding, LabelConvention::Source);
    CHECK(src.row(s_e, 1) == TransRow{{src.sid(6, 0), 1.0}});
    // ... and on the exit itself the source label fires immediately.
    CHECK(src.row(src.sid(6, 0), 0) == TransRow{{src.sid(6, 1), 1.0}});

    // exits expose only their self-loop action
    CHECK(succ.available[succ.sid(0, 0)] == std::vector<int>{0});
    CHECK_THROWS_AS(succ.row(succ.sid(0, 0), 1), ValidationError);
}

TEST_CASE("the product cap refuses oversized materializations") {
    auto env = corridor();
    auto aut = reach_exit();
    auto binding = bind_labels(env.aps, aut.aps);
    try {
        build_explicit_pmdp(env, aut, binding, LabelConvention::Successor, 10);
        FAIL("expected ProductCapError");
    } catch (const ProductCapError& e) {
        CHECK(e.num_states == 14);
        CHECK(e.cap_value == 10);
    }
    CHECK_NOTHROW(build_explicit_pmdp(env, aut, binding, LabelConvention::Successor, 14));
}

TEST_CASE("LDBA products expose epsilon jumps as extra actions") {
    LabelingSpec spec;
    spec.cells[0] = "a";
    spec.cells[8] = "b";
    auto grid = generate(3, 3, spec, 5);
    auto ldba = prune_and_index(
        load_automaton_file(oracle::fixture("automata/round_robin.json")));
    auto binding = bind_labels(grid.aps, ldba.aps);

    auto pmdp = build_explicit_pmdp(grid, ldba, binding);
    CHECK(pmdp.num_actions == 9 + 4);
    const int s = pmdp.sid(4, 0);
    // q0 has one epsilon edge to q1: jump id 9 + 1.
    CHECK(std::count(pmdp.available[s].begin(), pmdp.available[s].end(), 10) == 1);
    CHECK(pmdp.row(s, 10) == TransRow{{pmdp.sid(4, 1), 1.0}});
    // no jumps inside the deterministic part
    for (int a : pmdp.available[pmdp.sid(4, 1)]) CHECK(a < 9);
}

TEST_CASE("induce_chain validates the policy") {
    auto env = corridor();
    auto aut = reach_exit();
    auto binding = bind_labels(env.aps, aut.aps);

    SECTION("mass must sum to one") {
        auto bad = [](int, int) { return ActionDist{{0, 0.5}}; };
        CHECK_THROWS_AS(induce_chain(env, aut, binding, bad), ValidationError);
    }
    SECTION("mass on an unavailable action") {
        auto bad = [](int, int) { return ActionDist{{1, 1.0}}; };
        CHECK_THROWS_AS(induce_chain(env, aut, binding, bad), ValidationError);
    }
    SECTION("jump actions need a matching epsilon edge") {
        auto bad = [](int, int) { return ActionDist{{2, 1.0}}; };  // id beyond MDP actions
        CHECK_THROWS_AS(induce_chain(env, aut, binding, bad), ValidationError);
    }
    SECTION("unindexed automaton") {
        auto raw = load_automaton_file(oracle::fixture("automata/reach_exit.json"));
        CHECK_THROWS_AS(induce_chain(env, raw, binding, single_action_policy()),
                        ValidationError);
    }
}

TEST_CASE("satisfaction probability solves the gambler's-ruin absorption") {
    auto env = gambler_env();
    auto aut = make_reach_aut("win");
    auto binding = bind_labels(env.aps, aut.aps);

    auto report = satisfaction_probability(env, aut, binding, single_action_policy());
    REQUIRE(report.per_initial.size() == 5);
    CHECK(report.method == "direct");
    CHECK(report.per_initial[0] == Catch::Approx(0.0).margin(1e-9));
    CHECK(report.per_initial[1] == Catch::Approx(kH1).margin(1e-9));
    CHECK(report.per_initial[2] == Catch::Approx(kH2).margin(1e-9));
    CHECK(report.per_initial[3] == Catch::Approx(kH3).margin(1e-9));
    CHECK(report.per_initial[4] == Catch::Approx(1.0).margin(1e-9));
    CHECK(report.average == Catch::Approx(0.59692307692307691).margin(1e-9));
    // bottom SCCs: lose at 0 on either automaton level, win at (4, q1)
    CHECK(report.bscc_total == 3);
    CHECK(report.bscc_accepting == 2);

    // full agreement with the dense reference solver
    auto chain = induce_chain(env, aut, binding, single_action_policy());
    auto want = oracle::chain_satisfaction(to_oracle_chain(chain), accepting_states(chain));
    for (int s = 0; s < chain.num_states(); ++s)
        CHECK(report.per_state[s] == Catch::Approx(want[s]).margin(1e-9));
}

TEST_CASE("satisfaction probability switches to sweeps on huge chains") {
    // A long chain that funnels into the labeled cell: 25001 ground states
    // times two automaton states crosses the direct-solver threshold.
    GroundTruthMdp env;
    env.num_states = 25001;
    env.action_names = {"down"};
    env.available.assign(env.num_states, {0});
    env.trans.resize(env.num_states);
    for (int x = 0; x < env.num_states; ++x) {
        env.trans[x].resize(1);
        env.trans[x][0] = x == 0 ? TransRow{{0, 1.0}} : TransRow{{x - 1, 1.0}};
    }
    env.aps = {{"goal", true}};
    env.labels.assign(env.num_states, 0);
    env.labels[0] = 1;

    auto aut = make_reach_aut("goal");
    auto binding = bind_labels(env.aps, aut.aps);
    auto report = satisfaction_probability(env, aut, binding, single_action_policy());
    CHECK(report.method == "iterative");
    CHECK(report.average == Catch::Approx(1.0).margin(1e-6));
    CHECK(report.per_initial[12345] == Catch::Approx(1.0).margin(1e-6));
    CHECK(report.per_initial[25000] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("Monte-Carlo proxy tracks the exact satisfaction average") {
    auto env = gambler_env();
    auto aut = make_reach_aut("win");
    auto binding = bind_labels(env.aps, aut.aps);
    auto chain = induce_chain(env, aut, binding, single_action_policy());

    const double mc = mc_average_satisfaction(chain, 5000, 9);
    CHECK(std::abs(mc - 0.59692307692307691) <= 0.05);
    CHECK(mc_average_satisfaction(chain, 5000, 9) == mc);  // seeded
    CHECK_THROWS_AS(mc_average_satisfaction(chain, 0, 9), ValidationError);
}

TEST_CASE("policy_value matches a dense discounted-reward solve") {
    auto env = corridor();
    auto aut = reach_exit();
    auto binding = bind_labels(env.aps, aut.aps);

    ProductPolicy mixed = [&env](int x, int) {
        if (env.available[x].size() == 1) return ActionDist{{0, 1.0}};
        return ActionDist{{0, 0.5}, {1, 0.5}};
    };
    auto chain = induce_chain(env, aut, binding, mixed);
    RewardParams rewards;
    auto pv = policy_value(chain, rewards);
    REQUIRE(pv.values.size() == 14);
    CHECK(pv.method == "direct");

    // independent solve: v = P(r + gamma v) with r read off the target's
    // automaton half (accepting -> r_good, else neutral; no bad or dead
    // states in this product)
    const int n = chain.num_states();
    auto c = to_oracle_chain(chain);
    std::vector<double> r(n, 0.0);
    for (int s = 0; s < n; ++s) r[s] = chain.q_of(s) == 1 ? rewards.r_good : 0.0;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            a[s][t] = -rewards.gamma * c.p[s][t];
            b[s] += c.p[s][t] * r[t];
        }
        a[s][s] += 1.0;
    }
    auto want = oracle::solve_dense(std::move(a), std::move(b));
    for (int s = 0; s < n; ++s) CHECK(pv.values[s] == Catch::Approx(want[s]).margin(1e-8));

    // the accepting self-loops earn the geometric series r_good / (1-gamma)
    CHECK(pv.values[chain.sid(6, 1)] ==
          Catch::Approx(rewards.r_good / (1.0 - rewards.gamma)).margin(1e-6));

    auto pmdp = build_explicit_pmdp(env, aut, binding);
    auto pv2 = policy_value(pmdp, mixed, rewards);
    for (int s = 0; s < n; ++s) CHECK(pv2.values[s] == Catch::Approx(pv.values[s]).margin(1e-12));
}

TEST_CASE("model_based_optimal matches exhaustive policy enumeration") {
    auto env = corridor();
    auto binding_aut = [&](const OmegaAutomaton& aut) {
        return bind_labels(env.aps, aut.aps);
    };

    SECTION("both exits accept: everything wins") {
        auto aut = reach_exit();
        auto pmdp = build_explicit_pmdp(env, aut, binding_aut(aut));
        auto result = model_based_optimal(pmdp);
        CHECK(result.winning_states == 2);  // the two accepting exit loops
        for (double v : result.reach_value) CHECK(v == Catch::Approx(1.0).margin(1e-9));
        CHECK(result.report.average == Catch::Approx(1.0).margin(1e-9));
    }

    SECTION("exit1 accepts, exit2 kills: optimum equals the enumeration max") {
        auto aut = reach_or_die();
        auto binding = binding_aut(aut);
        auto pmdp = build_explicit_pmdp(env, aut, binding);
        auto result = model_based_optimal(pmdp);

        // every deterministic stationary ground policy: one action for each
        // of A..E (exits have a single action)
        double best = 0.0;
        for (int mask = 0; mask < 32; ++mask) {
            ProductPolicy pol = [mask](int x, int) {
                if (x == 0 || x == 6) return ActionDist{{0, 1.0}};
                return ActionDist{{(mask >> (x - 1)) & 1, 1.0}};
            };
            auto chain = induce_chain(env, aut, binding, pol);
            auto sat = oracle::chain_satisfaction(to_oracle_chain(chain),
                                                  accepting_states(chain));
            double avg = 0.0;
            for (int x = 0; x < env.num_states; ++x) avg += sat[chain.sid(x, 0)];
            avg /= env.num_states;
            best = std::max(best, avg);

            // cross-validate the library solver on every one of these chains
            auto lib = satisfaction_probability(chain);
            for (int s = 0; s < chain.num_states(); ++s)
                CHECK(lib.per_state[s] == Catch::Approx(sat[s]).margin(1e-9));
        }
        CHECK(best < 1.0);
        CHECK(result.report.average == Catch::Approx(best).margin(1e-9));
        // optimal policy beats or ties every enumerated one everywhere
        CHECK(result.winning_states == 2);
    }
}

TEST_CASE("report_to_json serializes the headline numbers") {
    auto env = gambler_env();
    auto aut = make_reach_aut("win");
    auto binding = bind_labels(env.aps, aut.aps);
    auto report = satisfaction_probability(env, aut, binding, single_action_policy());

    auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc.at("method") == "direct");
    CHECK(doc.at("avg").get<double>() == Catch::Approx(report.average));
    CHECK(doc.at("bsccs").at("total") == 3);
    CHECK(doc.at("bsccs").at("accepting") == 2);
    CHECK(doc.at("per_state").at("1").get<double>() == Catch::Approx(kH1).margin(1e-9));
    CHECK(doc.at("per_state").size() == 5);
}

TEST_CASE("path probabilities under the biased and uniform explorers") {
    auto env = corridor();
    auto aut = reach_exit();
    auto binding = bind_labels(env.aps, aut.aps);
    auto model = LearnedModel::from_truth(env);
    const std::vector<int> q_goal = aut.goal_states(0);
    auto greedy0 = [](int) { return 0; };

    const std::vector<int> right = {3, 4, 5, 6};
    const std::vector<int> left = {3, 2, 1, 0};

    SECTION("pure bias walks the per-state waypoints") {
        // towards Exit1: 0.51 * 0.9 * 1.0
        CHECK(beta_of_path(env, model, binding, aut, 0, q_goal, right, 1.0, 0.0,
                           greedy0, 7) == Catch::Approx(0.459).margin(1e-12));
        // towards Exit2 the bias still points right at C: 0.49 * 0.6 * 0.6
        CHECK(beta_of_path(env, model, binding, aut, 0, q_goal, left, 1.0, 0.0,
                           greedy0, 7) == Catch::Approx(0.1764).margin(1e-12));
    }

    SECTION("pure uniform matches the averaged kernel") {
        // (0.1+0.51)/2 * (0.2+0.9)/2 * (0.3+1.0)/2
        CHECK(eta_of_path(env, right, 1.0, greedy0) ==
              Catch::Approx(0.1090375).margin(1e-12));
    }

    SECTION("pure greedy multiplies the greedy kernel") {
        CHECK(eta_of_path(env, right, 0.0, greedy0) ==
              Catch::Approx(0.1 * 0.2 * 0.3).margin(1e-12));
        CHECK(beta_of_path(env, model, binding, aut, 0, q_goal, right, 0.0, 0.0,
                           greedy0, 7) == Catch::Approx(0.1 * 0.2 * 0.3).margin(1e-12));
    }

    SECTION("beta equals the per-step exploration mixture at random splits") {
        Rng rng(2718);
        for (int trial = 0; trial < 25; ++trial) {
            const double eps = rng.uniform01();
            const double db = eps * rng.uniform01();
            const double de = eps - db;
            const std::uint64_t seed = 1000 + trial;
            for (const auto& path : {right, left}) {
                const double got = beta_of_path(env, model, binding, aut, 0, q_goal,
                                                path, db, de, greedy0, seed);
                double want = 1.0;
                for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                    const int x = path[i];
                    Rng arm_rng(Rng::derive(seed, static_cast<std::uint64_t>(x)));
                    auto bias = biased_action(model, env, binding, aut, x, 0, q_goal,
                                              arm_rng);
                    auto mu = action_probabilities(db, de, env.available[x], 0,
                                                   bias.a_b);
                    double step = 0.0;
                    for (std::size_t k = 0; k < env.available[x].size(); ++k)
                        step += mu[k] * env.prob(x, env.available[x][k], path[i + 1]);
                    want *= step;
                }
                CHECK(got == Catch::Approx(want).margin(1e-12));
            }
        }
    }

    SECTION("validation") {
        CHECK_THROWS_AS(beta_of_path(env, model, binding, aut, 0, q_goal, right, 0.7,
                                     0.7, greedy0, 7),
                        ValidationError);
        auto greedy1 = [](int) { return 1; };
        // action 1 is unavailable on the exit that starts this path
        const std::vector<int> from_exit = {0, 0};
        CHECK_THROWS_AS(eta_of_path(env, from_exit, 0.5, greedy1), ValidationError);
        CHECK_THROWS_AS(beta_of_path(env, model, binding, aut, 0, q_goal, from_exit,
                                     0.1, 0.1, greedy1, 7),
                        ValidationError);
    }
}

TEST_CASE("one_step_probe compares the two explorers exactly") {
    auto greedy0 = [](int) { return 0; };

    SECTION("corridor (i) from C") {
        auto env = corridor();
        auto aut = reach_exit();
        auto binding = bind_labels(env.aps, aut.aps);
        auto model = LearnedModel::from_truth(env);
        auto probe = one_step_probe(env, model, binding, aut, 3, 0,
                                    aut.goal_states(0), 0.3, 0.2, greedy0, 7);
        CHECK(probe.x_b == 4);
        CHECK(probe.a_b == 1);
        CHECK(probe.a_star == 0);
        // both actions always move to an adjacent, closer state here
        CHECK(probe.closer_biased == Catch::Approx(1.0).margin(1e-12));
        CHECK(probe.closer_greedy == Catch::Approx(1.0).margin(1e-12));
        // mu_b = (0.6, 0.4), mu_g = (0.75, 0.25) against P(.|C) into D
        CHECK(probe.hit_biased == Catch::Approx(0.264).margin(1e-12));
        CHECK(probe.hit_greedy == Catch::Approx(0.2025).margin(1e-12));
    }

    SECTION("corridor (ii) from D: the bias beats uniform exploration") {
        auto env = load_mdp_file(oracle::fixture("envs/corridor_ii.json"));
        auto aut = reach_exit();
        auto binding = bind_labels(env.aps, aut.aps);
        auto model = LearnedModel::from_truth(env);
        auto probe = one_step_probe(env, model, binding, aut, 4, 0,
                                    aut.goal_states(0), 0.4, 0.2, greedy0, 7);
        CHECK(probe.x_b == 5);
        CHECK(probe.a_b == 1);
        // only E is closer; P(D,left,E)=0, P(D,right,E)=0.7
        CHECK(probe.closer_biased == Catch::Approx(0.35).margin(1e-12));
        CHECK(probe.closer_greedy == Catch::Approx(0.21).margin(1e-12));
        CHECK(probe.hit_biased == Catch::Approx(0.35).margin(1e-12));
        CHECK(probe.hit_greedy == Catch::Approx(0.21).margin(1e-12));
        CHECK(probe.closer_biased > probe.closer_greedy);
    }
}
