#include "omegarl/symbols.hpp"

#include <algorithm>
#include <cctype>

#include "omegarl/errors.hpp"

namespace omegarl {

LabelExpr LabelExpr::atom(int index) {
    LabelExpr e(Kind::Atom);
    e.atom_ = index;
    return e;
}

LabelExpr LabelExpr::negate(LabelExpr operand) {
    LabelExpr e(Kind::Not);
    e.lhs_ = std::make_unique<LabelExpr>(std::move(operand));
    return e;
}

LabelExpr LabelExpr::conj(LabelExpr lhs, LabelExpr rhs) {
    LabelExpr e(Kind::And);
    e.lhs_ = std::make_unique<LabelExpr>(std::move(lhs));
    e.rhs_ = std::make_unique<LabelExpr>(std::move(rhs));
    return e;
}

LabelExpr LabelExpr::disj(LabelExpr lhs, LabelExpr rhs) {
    LabelExpr e(Kind::Or);
    e.lhs_ = std::make_unique<LabelExpr>(std::move(lhs));
    e.rhs_ = std::make_unique<LabelExpr>(std::move(rhs));
    return e;
}

LabelExpr& LabelExpr::operator=(const LabelExpr& other) {
    if (this == &other) return *this;
    kind_ = other.kind_;
    atom_ = other.atom_;
    lhs_ = other.lhs_ ? std::make_unique<LabelExpr>(*other.lhs_) : nullptr;
    rhs_ = other.rhs_ ? std::make_unique<LabelExpr>(*other.rhs_) : nullptr;
    return *this;
}

bool LabelExpr::eval(Symbol sym) const {
    switch (kind_) {
        case Kind::True: return true;
        case Kind::False: return false;
        case Kind::Atom: return symbol_has(sym, atom_);
        case Kind::Not: return !lhs_->eval(sym);
        case Kind::And: return lhs_->eval(sym) && rhs_->eval(sym);
        case Kind::Or: return lhs_->eval(sym) || rhs_->eval(sym);
    }
    return false;
}

int LabelExpr::max_atom() const {
    int m = kind_ == Kind::Atom ? atom_ : -1;
    if (lhs_) m = std::max(m, lhs_->max_atom());
    if (rhs_) m = std::max(m, rhs_->max_atom());
    return m;
}

std::string LabelExpr::to_string() const {
    switch (kind_) {
        case Kind::True: return "t";
        case Kind::False: return "f";
        case Kind::Atom: return std::to_string(atom_);
        case Kind::Not: {
            const bool wrap = lhs_->kind_ == Kind::And || lhs_->kind_ == Kind::Or;
            return wrap ? "!(" + lhs_->to_string() + ")" : "!" + lhs_->to_string();
        }
        case Kind::And: {
            auto side = [](const LabelExpr& e) {
                return e.kind_ == Kind::Or ? "(" + e.to_string() + ")" : e.to_string();
            };
            return side(*lhs_) + " & " + side(*rhs_);
        }
        case Kind::Or: return lhs_->to_string() + " | " + rhs_->to_string();
    }
    return "f";
}

namespace {

// Recursive-descent parser for the HOA boolean grammar:
//   or   := and ('|' and)*
//   and  := unary ('&' unary)*
//   unary:= '!' unary | '(' or ')' | 't' | 'f' | integer
class LabelParser {
public:
    explicit LabelParser(const std::string& text) : text_(text) {}

    LabelExpr parse() {
        LabelExpr e = parse_or();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("trailing characters in label expression '" + text_ + "'", 0,
                             static_cast<int>(pos_) + 1);
        return e;
    }

private:
    LabelExpr parse_or() {
        LabelExpr lhs = parse_and();
        while (peek() == '|') {
            ++pos_;
            lhs = LabelExpr::disj(std::move(lhs), parse_and());
        }
        return lhs;
    }

    LabelExpr parse_and() {
        LabelExpr lhs = parse_unary();
        while (peek() == '&') {
            ++pos_;
            lhs = LabelExpr::conj(std::move(lhs), parse_unary());
        }
        return lhs;
    }

    LabelExpr parse_unary() {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError("unexpected end of label expression '" + text_ + "'");
        char c = text_[pos_];
        if (c == '!') {
            ++pos_;
            return LabelExpr::negate(parse_unary());
        }
        if (c == '(') {
            ++pos_;
            LabelExpr e = parse_or();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')')
                throw ParseError("missing ')' in label expression '" + text_ + "'", 0,
                                 static_cast<int>(pos_) + 1);
            ++pos_;
            return e;
        }
        if (c == 't' && !std::isdigit(static_cast<unsigned char>(peek_at(pos_ + 1)))) {
            ++pos_;
            return LabelExpr::make_true();
        }
        if (c == 'f' && !std::isdigit(static_cast<unsigned char>(peek_at(pos_ + 1)))) {
            ++pos_;
            return LabelExpr::make_false();
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            return LabelExpr::atom(std::stoi(text_.substr(start, pos_ - start)));
        }
        throw ParseError(std::string("unexpected character '") + c + "' in label expression '" +
                             text_ + "'",
                         0, static_cast<int>(pos_) + 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    char peek_at(std::size_t i) const { return i < text_.size() ? text_[i] : '\0'; }

    const std::string& text_;
    std::size_t pos_ = 0;
};

}  // namespace

LabelExpr parse_label_expr(const std::string& text) { return LabelParser(text).parse(); }

bool is_feasible_symbol(Symbol sym, const std::vector<AtomicProposition>& aps) {
    int locations = 0;
    for (std::size_t i = 0; i < aps.size(); ++i)
        if (aps[i].is_location && symbol_has(sym, static_cast<int>(i)) && ++locations > 1)
            return false;
    return true;
}

std::vector<Symbol> enumerate_feasible_symbols(const std::vector<AtomicProposition>& aps) {
    if (aps.size() > kMaxAps)
        throw ValidationError("AP list exceeds " + std::to_string(kMaxAps) + " atoms");
    std::vector<int> locations;
    std::vector<int> plain;
    for (std::size_t i = 0; i < aps.size(); ++i)
        (aps[i].is_location ? locations : plain).push_back(static_cast<int>(i));
    if (plain.size() > kMaxPlainAps)
        throw ValidationError("feasibility enumeration supports at most " +
                              std::to_string(kMaxPlainAps) + " plain atoms, got " +
                              std::to_string(plain.size()));

    std::vector<Symbol> bases;
    bases.push_back(0);
    for (int loc : locations) bases.push_back(1ULL << loc);

    std::vector<Symbol> result;
    const std::size_t combos = 1ULL << plain.size();
    result.reserve(bases.size() * combos);
    for (Symbol base : bases) {
        for (std::size_t mask = 0; mask < combos; ++mask) {
            Symbol sym = base;
            for (std::size_t b = 0; b < plain.size(); ++b)
                if ((mask >> b) & 1ULL) sym |= 1ULL << plain[b];
            result.push_back(sym);
        }
    }
    return result;
}

}  // namespace omegarl
