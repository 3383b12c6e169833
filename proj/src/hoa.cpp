#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "omegarl/automaton.hpp"
#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

// One Fin(n) / Inf(n) atom of the acceptance formula.
struct AccTerm {
    bool is_fin = false;
    int set = 0;
};

struct AccNode {
    enum class Kind { Term, And, Or };
    Kind kind = Kind::Term;
    AccTerm term;
    std::vector<AccNode> children;
};

// Parses the HOA acceptance formula grammar:
//   disj := conj ('|' conj)* ; conj := atom ('&' atom)* ;
//   atom := Fin '(' n ')' | Inf '(' n ')' | '(' disj ')'
class AccFormulaParser {
public:
    AccFormulaParser(const std::string& text, int line) : text_(text), line_(line) {}

    AccNode parse() {
        AccNode n = parse_disj();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters in acceptance formula");
        return n;
    }

private:
    AccNode parse_disj() {
        AccNode n = parse_conj();
        while (peek() == '|') {
            ++pos_;
            AccNode rhs = parse_conj();
            if (n.kind != AccNode::Kind::Or) {
                AccNode parent;
                parent.kind = AccNode::Kind::Or;
                parent.children.push_back(std::move(n));
                n = std::move(parent);
            }
            n.children.push_back(std::move(rhs));
        }
        return n;
    }

    AccNode parse_conj() {
        AccNode n = parse_atom();
        while (peek() == '&') {
            ++pos_;
            AccNode rhs = parse_atom();
            if (n.kind != AccNode::Kind::And) {
                AccNode parent;
                parent.kind = AccNode::Kind::And;
                parent.children.push_back(std::move(n));
                n = std::move(parent);
            }
            n.children.push_back(std::move(rhs));
        }
        return n;
    }

    AccNode parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of acceptance formula");
        if (text_[pos_] == '(') {
            ++pos_;
            AccNode n = parse_disj();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')') fail("missing ')' in acceptance formula");
            ++pos_;
            return n;
        }
        const bool fin = text_.compare(pos_, 3, "Fin") == 0;
        const bool inf = text_.compare(pos_, 3, "Inf") == 0;
        if (!fin && !inf)
            fail("unsupported acceptance formula (only Fin/Inf over sets is recognized)");
        pos_ += 3;
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '(') fail("expected '(' after Fin/Inf");
        ++pos_;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '!')
            fail("negated acceptance sets are not supported");
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("expected acceptance-set number");
        const int set = std::stoi(text_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != ')') fail("missing ')' after acceptance set");
        ++pos_;
        AccNode n;
        n.kind = AccNode::Kind::Term;
        n.term = {fin, set};
        return n;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(msg, line_, static_cast<int>(pos_) + 1);
    }

    const std::string& text_;
    int line_;
    std::size_t pos_ = 0;
};

void flatten(const AccNode& n, AccNode::Kind kind, std::vector<const AccNode*>& out) {
    if (n.kind == kind) {
        for (const auto& c : n.children) flatten(c, kind, out);
    } else {
        out.push_back(&n);
    }
}

// Cursor over one line of text.
class LineScanner {
public:
    LineScanner(const std::string& text, int line) : text_(text), line_(line) {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool done() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    int read_int(const std::string& what) {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_)
            throw ParseError("expected " + what, line_, static_cast<int>(pos_) + 1);
        return std::stoi(text_.substr(start, pos_ - start));
    }

    std::string read_quoted() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '"')
            throw ParseError("expected quoted string", line_, static_cast<int>(pos_) + 1);
        ++pos_;
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '"') ++pos_;
        if (pos_ >= text_.size())
            throw ParseError("unterminated quoted string", line_, static_cast<int>(start));
        std::string out = text_.substr(start, pos_ - start);
        ++pos_;
        return out;
    }

    // Reads "{a b c}" as a list of ints.
    std::vector<int> read_set() {
        std::vector<int> out;
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '{')
            throw ParseError("expected '{'", line_, static_cast<int>(pos_) + 1);
        ++pos_;
        while (true) {
            skip_ws();
            if (pos_ >= text_.size())
                throw ParseError("unterminated acceptance-set list", line_);
            if (text_[pos_] == '}') {
                ++pos_;
                return out;
            }
            out.push_back(read_int("acceptance-set number"));
        }
    }

    // Reads "[...]" and returns the inside.
    std::string read_bracketed() {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '[')
            throw ParseError("expected '['", line_, static_cast<int>(pos_) + 1);
        ++pos_;
        std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ']') ++pos_;
        if (pos_ >= text_.size()) throw ParseError("missing ']' in edge label", line_);
        std::string out = text_.substr(start, pos_ - start);
        ++pos_;
        return out;
    }

    std::string rest() {
        skip_ws();
        return text_.substr(pos_);
    }

private:
    const std::string& text_;
    int line_;
    std::size_t pos_ = 0;
};

}  // namespace

OmegaAutomaton parse_hoa(const std::string& text, const std::vector<std::string>& plain_aps) {
    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
            start = end + 1;
        }
    }

    OmegaAutomaton aut;
    bool saw_hoa = false, saw_states = false, saw_start = false, saw_ap = false, saw_acc = false;
    int num_acc_sets = 0;
    AccNode acc_formula;
    std::size_t i = 0;

    auto is_blank = [](const std::string& s) {
        for (char c : s)
            if (!std::isspace(static_cast<unsigned char>(c))) return false;
        return true;
    };

    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const int lineno = static_cast<int>(i) + 1;
        if (is_blank(line)) continue;
        LineScanner sc(line, lineno);
        if (sc.rest() == "--BODY--") break;
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw ParseError("expected 'key: value' header item", lineno);
        std::string key = line.substr(0, colon);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        const std::string value = line.substr(colon + 1);
        LineScanner vs(value, lineno);
        if (key == "HOA") {
            if (vs.rest() != "v1") throw ParseError("only HOA v1 is supported", lineno);
            saw_hoa = true;
        } else if (key == "States") {
            aut.num_states = vs.read_int("state count");
            saw_states = true;
        } else if (key == "Start") {
            aut.initial = vs.read_int("start state");
            saw_start = true;
            if (!vs.done())
                throw ParseError("multiple or conjoined start states are not supported", lineno);
        } else if (key == "AP") {
            const int count = vs.read_int("AP count");
            for (int k = 0; k < count; ++k) aut.aps.push_back({vs.read_quoted(), true});
            if (!vs.done()) throw ParseError("more AP names than declared", lineno);
            saw_ap = true;
        } else if (key == "Acceptance") {
            num_acc_sets = vs.read_int("acceptance-set count");
            acc_formula = AccFormulaParser(vs.rest(), lineno).parse();
            saw_acc = true;
        } else if (key == "acc-name" || key == "name" || key == "tool" || key == "properties") {
            // informational; ignored
        } else {
            throw ParseError("unsupported header item '" + key + ":'", lineno);
        }
    }
    if (i >= lines.size()) throw ParseError("missing --BODY-- marker", static_cast<int>(lines.size()));
    if (!saw_hoa) throw ParseError("missing 'HOA: v1' header", 1);
    if (!saw_states || !saw_start || !saw_ap || !saw_acc)
        throw ParseError("header must declare States:, Start:, AP: and Acceptance:",
                         static_cast<int>(i) + 1);
    if (aut.num_states <= 0)
        throw ParseError("automaton needs at least one state", static_cast<int>(i) + 1);

    // Classify the acceptance formula as Rabin pairs or generalized Buchi.
    std::vector<const AccNode*> disjuncts;
    flatten(acc_formula, AccNode::Kind::Or, disjuncts);
    std::vector<std::pair<int, int>> pair_sets;  // (fin set, inf set) per Rabin pair
    std::vector<int> inf_only_sets;
    bool any_fin = false;
    bool shape_ok = true;
    for (const AccNode* d : disjuncts) {
        std::vector<const AccNode*> terms;
        flatten(*d, AccNode::Kind::And, terms);
        int fin = -1, inf = -1;
        for (const AccNode* t : terms) {
            if (t->kind != AccNode::Kind::Term) {
                shape_ok = false;
                break;
            }
            if (t->term.is_fin) {
                any_fin = true;
                if (fin >= 0) shape_ok = false;
                fin = t->term.set;
            } else {
                if (inf >= 0 && disjuncts.size() > 1) shape_ok = false;
                inf = t->term.set;
                inf_only_sets.push_back(t->term.set);
            }
        }
        if (!shape_ok) break;
        if (fin >= 0 && inf >= 0 && terms.size() == 2) {
            pair_sets.emplace_back(fin, inf);
        } else if (fin >= 0) {
            shape_ok = false;  // Fin without matching Inf (or extra terms)
        }
    }
    if (!any_fin && disjuncts.size() > 1) shape_ok = false;  // disjunction of Inf sets
    if (!shape_ok || (any_fin && pair_sets.size() != disjuncts.size()))
        throw ParseError(
            "unsupported acceptance: expected a disjunction of Fin(i)&Inf(j) pairs or a "
            "conjunction of Inf sets",
            1);

    std::vector<std::vector<int>> acc_members(num_acc_sets);

    // Body: State: blocks with [label] dest edges.
    int current = -1;
    std::vector<char> seen_state(aut.num_states, 0);
    aut.edges.resize(aut.num_states);
    aut.epsilon_edges.resize(aut.num_states);
    ++i;
    bool ended = false;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const int lineno = static_cast<int>(i) + 1;
        if (is_blank(line)) continue;
        LineScanner sc(line, lineno);
        if (sc.rest() == "--END--") {
            ended = true;
            break;
        }
        if (line.rfind("State:", 0) == 0) {
            std::string after = line.substr(6);
            LineScanner body(after, lineno);
            if (body.peek() == '[')
                throw ParseError("state-labeled (implicit) bodies are not supported", lineno);
            current = body.read_int("state id");
            if (current < 0 || current >= aut.num_states)
                throw ParseError("state id " + std::to_string(current) + " out of range", lineno);
            if (seen_state[current])
                throw ParseError("state " + std::to_string(current) + " declared twice", lineno);
            seen_state[current] = 1;
            if (body.peek() == '"') body.read_quoted();
            if (body.peek() == '{') {
                for (int s : body.read_set()) {
                    if (s < 0 || s >= num_acc_sets)
                        throw ParseError("acceptance set " + std::to_string(s) + " out of range",
                                         lineno);
                    acc_members[s].push_back(current);
                }
            }
            if (!body.done()) throw ParseError("trailing characters after state declaration", lineno);
            continue;
        }
        if (sc.peek() == '[') {
            if (current < 0) throw ParseError("edge before any 'State:' declaration", lineno);
            const std::string label_text = sc.read_bracketed();
            LabelExpr label = [&] {
                try {
                    return parse_label_expr(label_text);
                } catch (const ParseError& ex) {
                    throw ParseError(std::string("bad edge label: ") + ex.what(), lineno);
                }
            }();
            const int dest = sc.read_int("destination state");
            if (sc.peek() == '{')
                throw ParseError("transition-based acceptance is not supported", lineno);
            if (!sc.done())
                throw ParseError("expected a single destination state per edge", lineno);
            aut.edges[current].push_back({std::move(label), dest});
            continue;
        }
        throw ParseError("expected 'State:', a '[label] dest' edge, or --END--", lineno);
    }
    if (!ended) throw ParseError("missing --END-- marker", static_cast<int>(lines.size()));

    if (any_fin) {
        aut.kind = AutomatonKind::Dra;
        for (const auto& [fin, inf] : pair_sets) {
            if (fin >= num_acc_sets || inf >= num_acc_sets)
                throw ParseError("acceptance formula references set beyond declared count", 1);
            aut.rabin_pairs.push_back({acc_members[inf], acc_members[fin]});
        }
    } else {
        aut.kind = AutomatonKind::Ldba;
        std::sort(inf_only_sets.begin(), inf_only_sets.end());
        for (std::size_t k = 0; k < inf_only_sets.size(); ++k)
            if (inf_only_sets[k] != static_cast<int>(k))
                throw ParseError("generalized-Buchi formula must mention each set exactly once", 1);
        for (int s : inf_only_sets) aut.buchi_sets.push_back(acc_members[s]);
    }

    for (const std::string& name : plain_aps) {
        bool found = false;
        for (auto& ap : aut.aps) {
            if (ap.name == name) {
                ap.is_location = false;
                found = true;
            }
        }
        if (!found)
            throw ValidationError("plain AP '" + name + "' does not appear in the automaton");
    }

    detail::validate_automaton(aut);
    return aut;
}

}  // namespace omegarl
