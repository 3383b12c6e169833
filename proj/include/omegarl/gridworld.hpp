#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "omegarl/rng.hpp"
#include "omegarl/symbols.hpp"

namespace omegarl {

// Grid action ids. The eight moves come first; idle is always available and
// deterministic.
inline constexpr int kActLeft = 0;
inline constexpr int kActRight = 1;
inline constexpr int kActUp = 2;
inline constexpr int kActDown = 3;
inline constexpr int kActUpLeft = 4;
inline constexpr int kActUpRight = 5;
inline constexpr int kActDownLeft = 6;
inline constexpr int kActDownRight = 7;
inline constexpr int kActIdle = 8;

// Sparse probability row: (successor, probability) pairs, successors unique.
using TransRow = std::vector<std::pair<int, double>>;

// The ground-truth environment. The learner only ever samples it; estimated
// dynamics live in LearnedModel.
struct GroundTruthMdp {
    // Grid dimensions; 0x0 for explicit (non-grid) models.
    int width = 0;
    int height = 0;
    int num_states = 0;
    std::vector<std::string> action_names;
    std::vector<std::string> state_names;  // optional; empty -> "s<i>"
    // Per state, the available action ids in ascending order.
    std::vector<std::vector<int>> available;
    // trans[x][a]; empty row iff a is unavailable at x.
    std::vector<std::vector<TransRow>> trans;
    // Environment-side AP list and per-state labels over it.
    std::vector<AtomicProposition> aps;
    std::vector<Symbol> labels;
    std::uint64_t seed = 0;

    int num_actions() const { return static_cast<int>(action_names.size()); }
    bool is_available(int x, int a) const;
    double prob(int x, int a, int x_next) const;
    int sample_next(int x, int a, Rng& rng) const;
    Symbol label_of(int x) const { return labels[x]; }
    std::string name_of(int x) const;
};

// Which cells carry which location atom, plus obstacle cells that share the
// plain atom "obs".
struct LabelingSpec {
    std::map<int, std::string> cells;
    std::vector<int> obstacles;
};

LabelingSpec parse_labeling(const nlohmann::json& doc);

// Seeded grid construction: every state keeps idle plus its in-grid moves;
// interior states lose one uniformly drawn non-idle action; each remaining
// move hits its intended cell with probability drawn from [0.7, 0.8] and
// spreads the rest over the other in-grid Moore neighbors by normalized
// uniform draws. Pure function of (dims, labeling, seed).
GroundTruthMdp generate(int width, int height, const LabelingSpec& labeling, std::uint64_t seed);

GroundTruthMdp load_explicit(const nlohmann::json& doc);
nlohmann::json save_explicit(const GroundTruthMdp& mdp);
GroundTruthMdp load_mdp_file(const std::string& path);

// Renames environment labels into an automaton's AP index space. Entries for
// environment atoms the automaton does not mention are dropped.
struct TaskBinding {
    std::vector<int> env_to_aut;  // env AP index -> automaton AP index or -1

    Symbol remap(Symbol env_sym) const {
        Symbol out = 0;
        for (std::size_t i = 0; i < env_to_aut.size(); ++i)
            if (((env_sym >> i) & 1ULL) && env_to_aut[i] >= 0) out |= 1ULL << env_to_aut[i];
        return out;
    }
};

TaskBinding bind_labels(const std::vector<AtomicProposition>& env_aps,
                        const std::vector<AtomicProposition>& automaton_aps);

}  // namespace omegarl
