#pragma once

#include <cstdint>

#include "omegarl/evaluator.hpp"

namespace omegarl {

// Outcome of replaying one guarantee over randomized small instances. Each
// instance first evaluates the guarantee's hypothesis exactly; only when it
// holds is the conclusion checked, so `failed` counts genuine violations.
struct PropositionReport {
    int prop = 0;
    int instances = 0;
    int hypothesis_met = 0;
    int conclusion_held = 0;  // among hypothesis-met instances
    int failed = 0;           // hypothesis met but conclusion violated
};

// Exhaustively checks one of the six policy guarantees (1: policy
// improvement; 2-3: one-step progress; 4-6: path-generation odds) on
// `instances` randomized environments. All probabilities come from exact
// enumeration, never sampling.
PropositionReport proposition_check(int which, int instances, std::uint64_t seed);

}  // namespace omegarl
