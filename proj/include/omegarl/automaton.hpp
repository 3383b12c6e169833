#pragma once

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "omegarl/rng.hpp"
#include "omegarl/symbols.hpp"

namespace omegarl {

enum class AutomatonKind { Dra, Ldba };

// Which end of a product transition supplies the label that advances the
// automaton. Successor (the default) fires a guard when the move lands on a
// labeled state.
enum class LabelConvention { Successor, Source };

// Hop distance "unreachable" marker.
inline constexpr int kInfDist = std::numeric_limits<int>::max();

struct AutomatonEdge {
    LabelExpr label;
    int to = 0;
    // Set by prune_and_index: true iff some feasible symbol satisfies label.
    bool feasible = true;
};

// One Rabin acceptance pair: visit `good` infinitely often while visiting
// `bad` only finitely often.
struct RabinPair {
    std::vector<int> good;
    std::vector<int> bad;
};

struct OmegaAutomaton {
    AutomatonKind kind = AutomatonKind::Dra;
    int num_states = 0;
    int initial = 0;
    std::vector<AtomicProposition> aps;
    // Labeled transitions, indexed by source state.
    std::vector<std::vector<AutomatonEdge>> edges;
    // Per-source epsilon successors; only meaningful for LDBAs, where they
    // jump from the nondeterministic to the deterministic part.
    std::vector<std::vector<int>> epsilon_edges;
    std::vector<RabinPair> rabin_pairs;        // DRA acceptance
    std::vector<std::vector<int>> buchi_sets;  // LDBA acceptance sets F_j

    // Populated by prune_and_index().
    bool indexed = false;
    bool satisfiable = true;
    // Hops to acceptance over feasible edges. For LDBAs this is the max over
    // the per-set distances (infinite iff some set is unreachable).
    std::vector<int> dist_to_acc;
    // LDBA only: dist_to_set[j][q] = hops from q to the set F_j.
    std::vector<std::vector<int>> dist_to_set;

    int num_buchi_sets() const { return static_cast<int>(buchi_sets.size()); }
    bool in_good_union(int q) const;
    bool in_bad_union(int q) const;
    bool in_buchi_set(int j, int q) const;

    // The unique labeled successor. Throws MalformedAutomatonError if no
    // edge matches (non-total transition function).
    int step_dra(int q, Symbol sym) const;
    // Labeled successor(s) plus epsilon successors (LDBA); for a DRA this is
    // the singleton {step_dra(q, sym)}.
    std::vector<int> step(int q, Symbol sym) const;

    // States one feasible hop from q whose distance-to-acceptance is exactly
    // one less; at distance zero, the accepting states one hop away (the
    // revisit target). Empty when q is at infinite distance.
    std::vector<int> goal_states(int q) const;
    // LDBA variant: draws one pending set index from visit_set (uniform via
    // rng) and computes the same set against that set's distances, with
    // epsilon successors included when they reduce the distance.
    std::vector<int> goal_states(int q, const std::vector<int>& visit_set, Rng& rng) const;

    std::vector<int> full_visit_set() const;
    // Drops every set index whose F_j contains q_reached; resets to the full
    // set once all have been visited.
    std::vector<int> update_visit_set(const std::vector<int>& visit_set, int q_reached) const;

    // True when acceptance became unreachable from q (over feasible edges).
    bool deadlocked(int q) const;
};

// HOA v1 subset: HOA:/States:/Start:/AP:/Acceptance:/acc-name: headers,
// state-based acceptance, `[label] dest` edges. Acceptance must be a
// disjunction of Fin(2i)&Inf(2i+1) pairs (Rabin) or a conjunction of Inf
// sets (generalized Buchi). APs default to location atoms; names listed in
// plain_aps are unconstrained.
OmegaAutomaton parse_hoa(const std::string& text,
                         const std::vector<std::string>& plain_aps = {});

namespace detail {
// Structural checks shared by every ingestion path: id ranges, AP bounds,
// epsilon-edge placement, and labeled-transition determinism over all
// feasible symbols.
void validate_automaton(const OmegaAutomaton& aut);
}  // namespace detail

OmegaAutomaton load_native(const nlohmann::json& doc);
nlohmann::json save_native(const OmegaAutomaton& aut);
// Dispatches on extension: .hoa -> parse_hoa, otherwise native JSON.
OmegaAutomaton load_automaton_file(const std::string& path,
                                   const std::vector<std::string>& plain_aps = {});

// Flags each edge feasible iff some feasible symbol satisfies its label,
// then computes hop distances to acceptance by reverse breadth-first search
// (multi-source from the union of good sets for a DRA; per accepting set,
// with epsilon edges, for an LDBA). Marks the automaton unsatisfiable when
// the initial state cannot reach acceptance; that is a warning for callers,
// not an error.
OmegaAutomaton prune_and_index(OmegaAutomaton aut);

}  // namespace omegarl
