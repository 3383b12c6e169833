#include "omegarl/symbols.hpp"

#include <algorithm>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "omegarl/errors.hpp"

using namespace omegarl;

namespace {

Symbol mask(std::initializer_list<int> bits) {
    Symbol s = 0;
    for (int b : bits) s |= (1ULL << b);
    return s;
}

std::vector<AtomicProposition> aps_2loc_1plain() {
    return {{"a", true}, {"b", true}, {"obs", false}};
}

}  // namespace

TEST_CASE("label expressions evaluate over symbol bitmasks") {
    auto t = parse_label_expr("t");
    auto f = parse_label_expr("f");
    CHECK(t.eval(0));
    CHECK(t.eval(mask({0, 1})));
    CHECK_FALSE(f.eval(0));
    CHECK_FALSE(f.eval(mask({3})));

    auto atom = parse_label_expr("2");
    CHECK(atom.eval(mask({2})));
    CHECK(atom.eval(mask({0, 2})));
    CHECK_FALSE(atom.eval(mask({0, 1})));

    auto neg = parse_label_expr("!1");
    CHECK(neg.eval(0));
    CHECK_FALSE(neg.eval(mask({1})));
}

TEST_CASE("label parser honours precedence: ! binds over &, & over |") {
    // !0 & 1 | 2  ==  ((!0) & 1) | 2
    auto e = parse_label_expr("!0 & 1 | 2");
    CHECK(e.eval(mask({1})));        // !0 & 1 holds
    CHECK(e.eval(mask({2})));        // right disjunct
    CHECK(e.eval(mask({0, 2})));     // right disjunct despite 0
    CHECK_FALSE(e.eval(mask({0, 1})));
    CHECK_FALSE(e.eval(0));

    // parentheses flip the reading
    auto g = parse_label_expr("!0 & (1 | 2)");
    CHECK(g.eval(mask({2})));
    CHECK_FALSE(g.eval(mask({0, 2})));

    // double negation
    auto d = parse_label_expr("!!3");
    CHECK(d.eval(mask({3})));
    CHECK_FALSE(d.eval(0));
}

TEST_CASE("label expression to_string round-trips through the parser") {
    const char* samples[] = {
        "t", "f", "0", "!5", "0 & !1", "0 | 1 | 2", "(0 | 1) & !2",
        "!(0 & 1)", "!0 & !1 & !2",
    };
    for (const char* s : samples) {
        auto parsed = parse_label_expr(s);
        auto again = parse_label_expr(parsed.to_string());
        // Compare by truth table over the first 6 atoms.
        for (Symbol sym = 0; sym < (1ULL << 6); ++sym) {
            CHECK(parsed.eval(sym) == again.eval(sym));
        }
    }
}

TEST_CASE("label parser rejects malformed input") {
    CHECK_THROWS_AS(parse_label_expr(""), ParseError);
    CHECK_THROWS_AS(parse_label_expr("&"), ParseError);
    CHECK_THROWS_AS(parse_label_expr("0 &"), ParseError);
    CHECK_THROWS_AS(parse_label_expr("(0 | 1"), ParseError);
    CHECK_THROWS_AS(parse_label_expr("0 1"), ParseError);
    CHECK_THROWS_AS(parse_label_expr("x"), ParseError);
    CHECK_THROWS_AS(parse_label_expr("0)"), ParseError);
}

TEST_CASE("feasibility: at most one location atom per symbol") {
    auto aps = aps_2loc_1plain();
    CHECK(is_feasible_symbol(0, aps));
    CHECK(is_feasible_symbol(mask({0}), aps));
    CHECK(is_feasible_symbol(mask({1}), aps));
    CHECK(is_feasible_symbol(mask({2}), aps));
    CHECK(is_feasible_symbol(mask({0, 2}), aps));
    CHECK_FALSE(is_feasible_symbol(mask({0, 1}), aps));
    CHECK_FALSE(is_feasible_symbol(mask({0, 1, 2}), aps));
}

TEST_CASE("feasible symbol enumeration is the documented cross product") {
    auto aps = aps_2loc_1plain();
    auto syms = enumerate_feasible_symbols(aps);
    // (empty or one of 2 locations) x (2 valuations of obs) = 6
    REQUIRE(syms.size() == 6);
    std::set<Symbol> expect = {0,        mask({2}),    mask({0}),
                               mask({0, 2}), mask({1}), mask({1, 2})};
    CHECK(std::set<Symbol>(syms.begin(), syms.end()) == expect);
    for (Symbol s : syms) CHECK(is_feasible_symbol(s, aps));

    // no duplicates
    std::sort(syms.begin(), syms.end());
    CHECK(std::adjacent_find(syms.begin(), syms.end()) == syms.end());
}

TEST_CASE("feasible symbol enumeration with only plain atoms is a power set") {
    std::vector<AtomicProposition> aps = {{"p", false}, {"q", false}};
    auto syms = enumerate_feasible_symbols(aps);
    REQUIRE(syms.size() == 4);
    std::set<Symbol> got(syms.begin(), syms.end());
    CHECK(got == std::set<Symbol>({0, 1, 2, 3}));
}

TEST_CASE("feasible symbol enumeration rejects too many plain atoms") {
    std::vector<AtomicProposition> aps;
    for (std::size_t i = 0; i <= kMaxPlainAps; ++i) {
        aps.push_back({"p" + std::to_string(i), false});
    }
    CHECK_THROWS_AS(enumerate_feasible_symbols(aps), ValidationError);
}

TEST_CASE("max_atom reports the largest referenced index") {
    CHECK(parse_label_expr("t").max_atom() == -1);
    CHECK(parse_label_expr("3").max_atom() == 3);
    CHECK(parse_label_expr("0 & !7 | 2").max_atom() == 7);
}
