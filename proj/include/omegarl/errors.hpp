#pragma once

#include <stdexcept>
#include <string>

namespace omegarl {

// Bad inputs: malformed files, schema violations, inconsistent configs.
// The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Textual parse failure with a position (1-based line, 0 when unknown).
struct ParseError : ValidationError {
    ParseError(const std::string& msg, int line_ = 0, int col_ = 0)
        : ValidationError(line_ > 0 ? "line " + std::to_string(line_) +
                                          (col_ > 0 ? ":" + std::to_string(col_) : "") +
                                          ": " + msg
                                    : msg),
          line(line_),
          col(col_) {}
    int line;
    int col;
};

// A structurally broken automaton: nondeterminism on a feasible symbol,
// missing transition at step time, dangling state ids.
struct MalformedAutomatonError : ValidationError {
    using ValidationError::ValidationError;
};

// Refusal to materialize an explicit product above the configured state cap.
struct ProductCapError : ValidationError {
    ProductCapError(std::size_t states, std::size_t cap)
        : ValidationError("explicit product would have " + std::to_string(states) +
                          " states, above the configured cap of " + std::to_string(cap)),
          num_states(states),
          cap_value(cap) {}
    std::size_t num_states;
    std::size_t cap_value;
};

}  // namespace omegarl
