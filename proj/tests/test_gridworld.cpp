#include "omegarl/gridworld.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "omegarl/errors.hpp"
#include "oracles.hpp"

using namespace omegarl;

namespace {

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

int ap_index(const GroundTruthMdp& mdp, const std::string& name) {
    for (std::size_t i = 0; i < mdp.aps.size(); ++i)
        if (mdp.aps[i].name == name) return static_cast<int>(i);
    return -1;
}

}  // namespace

TEST_CASE("corridor fixture loads with the expected dynamics") {
    auto mdp = load_mdp_file(oracle::fixture("envs/corridor_i.json"));
    REQUIRE(mdp.num_states == 7);
    REQUIRE(mdp.num_actions() == 2);
    CHECK(mdp.width == 0);

    // exits keep a single self-loop action
    CHECK(mdp.available[0] == std::vector<int>{0});
    CHECK(mdp.available[6] == std::vector<int>{0});
    CHECK(mdp.prob(0, 0, 0) == 1.0);

    // interior rows as authored
    CHECK(mdp.prob(3, 0, 2) == 0.9);
    CHECK(mdp.prob(3, 0, 4) == 0.1);
    CHECK(mdp.prob(3, 1, 2) == 0.49);
    CHECK(mdp.prob(3, 1, 4) == 0.51);
    CHECK(mdp.prob(5, 1, 6) == 1.0);
    CHECK(mdp.prob(3, 0, 5) == 0.0);
    CHECK_FALSE(mdp.is_available(0, 1));
    CHECK(mdp.is_available(3, 1));

    // labels: state 0 carries exit2, state 6 carries exit1
    const int e1 = ap_index(mdp, "exit1");
    const int e2 = ap_index(mdp, "exit2");
    REQUIRE(e1 >= 0);
    REQUIRE(e2 >= 0);
    CHECK(mdp.label_of(0) == (1ULL << e2));
    CHECK(mdp.label_of(6) == (1ULL << e1));
    CHECK(mdp.label_of(3) == 0);

    CHECK(mdp.name_of(3) == "C");
}

TEST_CASE("explicit loader validates its input") {
    auto base = read_json(oracle::fixture("envs/corridor_i.json"));

    SECTION("row must sum to one") {
        auto doc = base;
        doc["trans"][2]["probs"]["1"] = 0.5;
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
    SECTION("negative probability") {
        auto doc = base;
        doc["trans"][2]["probs"]["1"] = -0.1;
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
    SECTION("transition for an unavailable action") {
        auto doc = base;
        doc["trans"].push_back({{"x", 0}, {"a", 1}, {"probs", {{"0", 1.0}}}});
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
    SECTION("successor out of range") {
        auto doc = base;
        doc["trans"][2]["probs"]["99"] = 0.0;
        CHECK_THROWS(load_explicit(doc));
    }
    SECTION("two location atoms on one state") {
        auto doc = base;
        doc["labels"]["3"] = {"exit1", "exit2"};
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
    SECTION("available action with no transition row") {
        auto doc = base;
        doc["trans"].erase(2);
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
    SECTION("unknown label name") {
        auto doc = base;
        doc["labels"]["3"] = {"mystery"};
        CHECK_THROWS_AS(load_explicit(doc), ValidationError);
    }
}

TEST_CASE("generated grids are deterministic in the seed") {
    LabelingSpec spec;
    spec.cells[99] = "goal";
    spec.obstacles = {44, 45};

    auto a = generate(10, 10, spec, 7);
    auto b = generate(10, 10, spec, 7);
    auto c = generate(10, 10, spec, 8);

    REQUIRE(a.num_states == 100);
    CHECK(save_explicit(a) == save_explicit(b));
    CHECK(save_explicit(a) != save_explicit(c));
}

TEST_CASE("generated grid structure: availability, stochasticity, labels") {
    LabelingSpec spec;
    spec.cells[0] = "a";
    spec.cells[99] = "b";
    spec.obstacles = {55};
    auto mdp = generate(10, 10, spec, 123);

    REQUIRE(mdp.width == 10);
    REQUIRE(mdp.height == 10);
    REQUIRE(mdp.num_actions() == 9);
    CHECK(mdp.action_names[kActIdle] == "idle");

    for (int x = 0; x < mdp.num_states; ++x) {
        const int col = x % 10, row = x / 10;
        const bool on_edge = col == 0 || col == 9 || row == 0 || row == 9;
        const bool corner = (col == 0 || col == 9) && (row == 0 || row == 9);

        // idle is always available and deterministic
        CHECK(mdp.is_available(x, kActIdle));
        CHECK(mdp.prob(x, kActIdle, x) == 1.0);

        // count: corners have 3 moves + idle, edges 5 + idle, interior
        // 8 + idle minus the one dropped move.
        const int avail = static_cast<int>(mdp.available[x].size());
        if (corner) {
            CHECK(avail == 4);
        } else if (on_edge) {
            CHECK(avail == 6);
        } else {
            CHECK(avail == 8);
        }

        for (int a : mdp.available[x]) {
            if (a == kActIdle) continue;
            // row sums to one over in-grid states
            double sum = 0.0, best = 0.0;
            for (int y = 0; y < mdp.num_states; ++y) {
                const double p = mdp.prob(x, a, y);
                sum += p;
                best = std::max(best, p);
                if (p > 0.0) {
                    // only Moore neighbors can receive mass
                    const int dc = std::abs(y % 10 - col);
                    const int dr = std::abs(y / 10 - row);
                    CHECK(dc <= 1);
                    CHECK(dr <= 1);
                }
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
            // the intended cell dominates
            CHECK(best >= 0.7);
            CHECK(best <= 0.8);
        }
    }

    // labels land where requested; obstacles share the plain "obs" atom
    const int ia = ap_index(mdp, "a");
    const int ib = ap_index(mdp, "b");
    const int io = ap_index(mdp, "obs");
    REQUIRE(ia >= 0);
    REQUIRE(ib >= 0);
    REQUIRE(io >= 0);
    CHECK(mdp.aps[ia].is_location);
    CHECK_FALSE(mdp.aps[io].is_location);
    CHECK(mdp.label_of(0) == (1ULL << ia));
    CHECK(mdp.label_of(99) == (1ULL << ib));
    CHECK(mdp.label_of(55) == (1ULL << io));
    CHECK(mdp.label_of(50) == 0);
}

TEST_CASE("generate rejects degenerate dimensions") {
    LabelingSpec spec;
    CHECK_THROWS_AS(generate(1, 5, spec, 0), ValidationError);
    CHECK_THROWS_AS(generate(5, 1, spec, 0), ValidationError);
    CHECK_THROWS_AS(generate(0, 0, spec, 0), ValidationError);
}

TEST_CASE("generate rejects labels on out-of-range cells") {
    LabelingSpec spec;
    spec.cells[100] = "a";
    CHECK_THROWS_AS(generate(10, 10, spec, 0), ValidationError);
}

TEST_CASE("sample_next matches the transition row to 3 sigma") {
    auto mdp = load_mdp_file(oracle::fixture("envs/corridor_i.json"));
    Rng rng(2024);
    const int kDraws = 20000;
    std::map<int, long long> counts;
    for (int i = 0; i < kDraws; ++i) counts[mdp.sample_next(3, 1, rng)]++;
    CHECK(counts.size() == 2);
    CHECK(oracle::within_3sigma(counts[2], kDraws, 0.49));
    CHECK(oracle::within_3sigma(counts[4], kDraws, 0.51));
}

TEST_CASE("explicit save/load round-trip is lossless") {
    LabelingSpec spec;
    spec.cells[8] = "goal";
    spec.obstacles = {4};
    auto mdp = generate(3, 3, spec, 42);
    auto back = load_explicit(save_explicit(mdp));
    CHECK(save_explicit(back) == save_explicit(mdp));
    CHECK(back.width == 3);
    CHECK(back.labels == mdp.labels);
}

TEST_CASE("parse_labeling reads cells and obstacles") {
    nlohmann::json doc = {
        {"cells", {{"99", "r1"}, {"0", "r2"}}},
        {"obstacles", {44, 45}},
    };
    auto spec = parse_labeling(doc);
    CHECK(spec.cells.at(99) == "r1");
    CHECK(spec.cells.at(0) == "r2");
    CHECK(spec.obstacles == std::vector<int>{44, 45});

    // obstacles optional
    auto spec2 = parse_labeling(nlohmann::json{{"cells", {{"5", "g"}}}});
    CHECK(spec2.obstacles.empty());
}

TEST_CASE("bind_labels maps environment atoms into automaton indices") {
    std::vector<AtomicProposition> env = {
        {"exit1", true}, {"exit2", true}, {"dust", false}};
    std::vector<AtomicProposition> aut = {{"exit2", true}, {"exit1", true}};

    auto binding = bind_labels(env, aut);
    REQUIRE(binding.env_to_aut.size() == 3);
    CHECK(binding.env_to_aut[0] == 1);
    CHECK(binding.env_to_aut[1] == 0);
    CHECK(binding.env_to_aut[2] == -1);  // unmentioned atom dropped

    CHECK(binding.remap(1ULL << 0) == (1ULL << 1));
    CHECK(binding.remap(1ULL << 1) == (1ULL << 0));
    CHECK(binding.remap(1ULL << 2) == 0);
    CHECK(binding.remap((1ULL << 0) | (1ULL << 2)) == (1ULL << 1));
}

TEST_CASE("bind_labels rejects automaton atoms missing from the environment") {
    std::vector<AtomicProposition> env = {{"exit1", true}};
    std::vector<AtomicProposition> aut = {{"exit1", true}, {"ghost", true}};
    CHECK_THROWS_AS(bind_labels(env, aut), ValidationError);
}

TEST_CASE("bind_labels rejects location/plain kind mismatches") {
    std::vector<AtomicProposition> env = {{"obs", false}};
    std::vector<AtomicProposition> aut = {{"obs", true}};
    CHECK_THROWS_AS(bind_labels(env, aut), ValidationError);
}
