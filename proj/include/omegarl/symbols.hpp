#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace omegarl {

// One atomic proposition. Location atoms model "the robot is in cell i" and
// are mutually exclusive in any physically emittable symbol; plain atoms
// (e.g. "obs") carry no such constraint.
struct AtomicProposition {
    std::string name;
    bool is_location = true;
};

// A symbol is the set of atomic propositions that hold simultaneously,
// encoded as a bitmask over the owning automaton's AP list (max 64 APs).
using Symbol = std::uint64_t;

inline constexpr std::size_t kMaxAps = 64;

inline bool symbol_has(Symbol sym, int ap_index) {
    return (sym >> ap_index) & 1ULL;
}

// Boolean guard over symbols: t | f | atom | ! | & | '|', as used by both
// HOA edge labels and the native JSON format.
class LabelExpr {
public:
    enum class Kind { True, False, Atom, Not, And, Or };

    static LabelExpr make_true() { return LabelExpr(Kind::True); }
    static LabelExpr make_false() { return LabelExpr(Kind::False); }
    static LabelExpr atom(int index);
    static LabelExpr negate(LabelExpr operand);
    static LabelExpr conj(LabelExpr lhs, LabelExpr rhs);
    static LabelExpr disj(LabelExpr lhs, LabelExpr rhs);

    LabelExpr(const LabelExpr& other) { *this = other; }
    LabelExpr& operator=(const LabelExpr& other);
    LabelExpr(LabelExpr&&) noexcept = default;
    LabelExpr& operator=(LabelExpr&&) noexcept = default;

    Kind kind() const { return kind_; }
    int atom_index() const { return atom_; }

    bool eval(Symbol sym) const;
    // Largest atom index referenced, -1 if none.
    int max_atom() const;
    std::string to_string() const;

private:
    explicit LabelExpr(Kind k) : kind_(k) {}

    Kind kind_;
    int atom_ = -1;
    std::unique_ptr<LabelExpr> lhs_;
    std::unique_ptr<LabelExpr> rhs_;
};

// Parses the HOA label-expression grammar: 't', 'f', '!', '&', '|',
// parentheses and integer AP references. Throws ParseError.
LabelExpr parse_label_expr(const std::string& text);

// A symbol is feasible iff it contains at most one location atom; plain
// atoms are unconstrained.
bool is_feasible_symbol(Symbol sym, const std::vector<AtomicProposition>& aps);

// All feasible symbols: {empty} U {each single location atom}, crossed with
// every valuation of the plain atoms. Plain-atom count is capped (the cross
// product is 2^n); throws ValidationError beyond the cap.
std::vector<Symbol> enumerate_feasible_symbols(const std::vector<AtomicProposition>& aps);

inline constexpr std::size_t kMaxPlainAps = 10;

}  // namespace omegarl
