#include "omegarl/propositions.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "omegarl/errors.hpp"

using namespace omegarl;

TEST_CASE("all six policy guarantees hold on randomized instances") {
    const int which = GENERATE(1, 2, 3, 4, 5, 6);
    CAPTURE(which);
    auto report = proposition_check(which, 50, 2024);
    CHECK(report.prop == which);
    CHECK(report.instances == 50);
    CHECK(report.failed == 0);
    // The checks must actually exercise the guarantee, not skip everything.
    CHECK(report.hypothesis_met > 0);
    CHECK(report.conclusion_held == report.hypothesis_met);
    CHECK(report.hypothesis_met <= report.instances);
}

TEST_CASE("proposition checks are deterministic in the seed") {
    auto a = proposition_check(3, 20, 99);
    auto b = proposition_check(3, 20, 99);
    CHECK(a.hypothesis_met == b.hypothesis_met);
    CHECK(a.conclusion_held == b.conclusion_held);
    CHECK(a.failed == b.failed);

    auto c = proposition_check(3, 20, 100);
    // different draws; only the outcome (no failures) must agree
    CHECK(c.failed == 0);
}

TEST_CASE("proposition_check validates its arguments") {
    CHECK_THROWS_AS(proposition_check(0, 10, 1), ValidationError);
    CHECK_THROWS_AS(proposition_check(7, 10, 1), ValidationError);
    CHECK_THROWS_AS(proposition_check(3, 0, 1), ValidationError);
    CHECK_THROWS_AS(proposition_check(3, -5, 1), ValidationError);
}
