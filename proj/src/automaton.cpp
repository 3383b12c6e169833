#include "omegarl/automaton.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <iterator>

#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

bool contains(const std::vector<int>& xs, int v) {
    return std::find(xs.begin(), xs.end(), v) != xs.end();
}

std::string symbol_to_string(Symbol sym, const std::vector<AtomicProposition>& aps) {
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < aps.size(); ++i) {
        if (!symbol_has(sym, static_cast<int>(i))) continue;
        if (!first) out += ", ";
        out += aps[i].name;
        first = false;
    }
    return out + "}";
}

// Hop distances to `targets` by reverse BFS over feasible labeled edges,
// optionally including epsilon edges.
std::vector<int> distances_to(const OmegaAutomaton& aut, const std::vector<int>& targets,
                              bool with_epsilon) {
    std::vector<std::vector<int>> rev(aut.num_states);
    for (int q = 0; q < aut.num_states; ++q) {
        for (const auto& e : aut.edges[q])
            if (e.feasible) rev[e.to].push_back(q);
        if (with_epsilon)
            for (int t : aut.epsilon_edges[q]) rev[t].push_back(q);
    }
    std::vector<int> dist(aut.num_states, kInfDist);
    std::deque<int> frontier;
    for (int t : targets) {
        if (dist[t] != kInfDist) continue;
        dist[t] = 0;
        frontier.push_back(t);
    }
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop_front();
        for (int u : rev[v]) {
            if (dist[u] != kInfDist) continue;
            dist[u] = dist[v] + 1;
            frontier.push_back(u);
        }
    }
    return dist;
}

void check_state(int q, int num_states, const std::string& what) {
    if (q < 0 || q >= num_states)
        throw ValidationError(what + " refers to state " + std::to_string(q) + ", valid range 0.." +
                              std::to_string(num_states - 1));
}

}  // namespace

namespace detail {

void validate_automaton(const OmegaAutomaton& aut) {
    if (aut.num_states <= 0) throw ValidationError("automaton needs at least one state");
    if (aut.edges.size() != static_cast<std::size_t>(aut.num_states) ||
        aut.epsilon_edges.size() != static_cast<std::size_t>(aut.num_states))
        throw ValidationError("edge tables must have exactly one row per state");
    check_state(aut.initial, aut.num_states, "initial state");
    if (aut.aps.size() > kMaxAps)
        throw ValidationError("AP list exceeds " + std::to_string(kMaxAps) + " atoms");
    for (std::size_t i = 0; i < aut.aps.size(); ++i)
        for (std::size_t j = i + 1; j < aut.aps.size(); ++j)
            if (aut.aps[i].name == aut.aps[j].name)
                throw ValidationError("duplicate atomic proposition '" + aut.aps[i].name + "'");

    for (int q = 0; q < aut.num_states; ++q) {
        for (const auto& e : aut.edges[q]) {
            check_state(e.to, aut.num_states, "edge from state " + std::to_string(q));
            if (e.label.max_atom() >= static_cast<int>(aut.aps.size()))
                throw ValidationError("edge label from state " + std::to_string(q) +
                                      " references atom " + std::to_string(e.label.max_atom()) +
                                      " beyond the AP list");
        }
        for (int t : aut.epsilon_edges[q])
            check_state(t, aut.num_states, "epsilon edge from state " + std::to_string(q));
    }

    if (aut.kind == AutomatonKind::Dra) {
        for (int q = 0; q < aut.num_states; ++q)
            if (!aut.epsilon_edges[q].empty())
                throw ValidationError("deterministic Rabin automaton cannot carry epsilon edges");
        for (const auto& pair : aut.rabin_pairs) {
            for (int g : pair.good) check_state(g, aut.num_states, "Rabin good set");
            for (int b : pair.bad) check_state(b, aut.num_states, "Rabin bad set");
        }
    } else {
        if (aut.buchi_sets.empty())
            throw ValidationError("limit-deterministic automaton needs at least one accepting set");
        for (const auto& fj : aut.buchi_sets)
            for (int s : fj) check_state(s, aut.num_states, "accepting set");
        // The deterministic part is the forward closure (over labeled edges)
        // of all epsilon targets and accepting states; epsilon edges may only
        // originate outside it.
        std::vector<char> det(aut.num_states, 0);
        std::deque<int> frontier;
        auto seed = [&](int q) {
            if (!det[q]) {
                det[q] = 1;
                frontier.push_back(q);
            }
        };
        for (int q = 0; q < aut.num_states; ++q)
            for (int t : aut.epsilon_edges[q]) seed(t);
        for (const auto& fj : aut.buchi_sets)
            for (int s : fj) seed(s);
        while (!frontier.empty()) {
            const int q = frontier.front();
            frontier.pop_front();
            for (const auto& e : aut.edges[q]) seed(e.to);
        }
        for (int q = 0; q < aut.num_states; ++q)
            if (det[q] && !aut.epsilon_edges[q].empty())
                throw ValidationError("epsilon edge from state " + std::to_string(q) +
                                      " originates inside the deterministic part");
    }

    // Determinism of labeled transitions, exhaustively over feasible symbols.
    const std::vector<Symbol> symbols = enumerate_feasible_symbols(aut.aps);
    for (int q = 0; q < aut.num_states; ++q) {
        for (Symbol sym : symbols) {
            int matches = 0;
            for (const auto& e : aut.edges[q])
                if (e.label.eval(sym)) ++matches;
            if (matches > 1)
                throw MalformedAutomatonError(
                    "state " + std::to_string(q) + " has " + std::to_string(matches) +
                    " transitions enabled on symbol " + symbol_to_string(sym, aut.aps));
        }
    }
}

}  // namespace detail

bool OmegaAutomaton::in_good_union(int q) const {
    for (const auto& pair : rabin_pairs)
        if (contains(pair.good, q)) return true;
    return false;
}

bool OmegaAutomaton::in_bad_union(int q) const {
    for (const auto& pair : rabin_pairs)
        if (contains(pair.bad, q)) return true;
    return false;
}

bool OmegaAutomaton::in_buchi_set(int j, int q) const {
    return contains(buchi_sets[j], q);
}

int OmegaAutomaton::step_dra(int q, Symbol sym) const {
    int found = -1;
    for (const auto& e : edges[q]) {
        if (!e.label.eval(sym)) continue;
        if (found >= 0)
            throw MalformedAutomatonError("state " + std::to_string(q) +
                                          " has multiple transitions enabled on symbol " +
                                          symbol_to_string(sym, aps));
        found = e.to;
    }
    if (found < 0)
        throw MalformedAutomatonError("state " + std::to_string(q) +
                                      " has no transition enabled on symbol " +
                                      symbol_to_string(sym, aps));
    return found;
}

std::vector<int> OmegaAutomaton::step(int q, Symbol sym) const {
    if (kind == AutomatonKind::Dra) return {step_dra(q, sym)};
    std::vector<int> out;
    for (const auto& e : edges[q])
        if (e.label.eval(sym)) out.push_back(e.to);
    for (int t : epsilon_edges[q])
        if (!contains(out, t)) out.push_back(t);
    return out;
}

std::vector<int> OmegaAutomaton::goal_states(int q) const {
    if (kind != AutomatonKind::Dra)
        throw ValidationError("goal states for an LDBA need the pending-set overload");
    const int d = dist_to_acc[q];
    std::vector<int> out;
    if (d == kInfDist) return out;
    for (const auto& e : edges[q]) {
        if (!e.feasible) continue;
        const bool take = d > 0 ? dist_to_acc[e.to] == d - 1 : in_good_union(e.to);
        if (take && !contains(out, e.to)) out.push_back(e.to);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> OmegaAutomaton::goal_states(int q, const std::vector<int>& visit_set,
                                             Rng& rng) const {
    if (kind == AutomatonKind::Dra) return goal_states(q);
    const std::vector<int> vs = visit_set.empty() ? full_visit_set() : visit_set;
    const int j = vs[rng.uniform_index(vs.size())];
    const std::vector<int>& dist = dist_to_set[j];
    const int d = dist[q];
    std::vector<int> out;
    if (d == kInfDist) return out;
    auto take = [&](int to) { return d > 0 ? dist[to] == d - 1 : in_buchi_set(j, to); };
    for (const auto& e : edges[q])
        if (e.feasible && take(e.to) && !contains(out, e.to)) out.push_back(e.to);
    for (int t : epsilon_edges[q])
        if (take(t) && !contains(out, t)) out.push_back(t);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> OmegaAutomaton::full_visit_set() const {
    std::vector<int> out(buchi_sets.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = static_cast<int>(j);
    return out;
}

std::vector<int> OmegaAutomaton::update_visit_set(const std::vector<int>& visit_set,
                                                  int q_reached) const {
    std::vector<int> out;
    for (int j : visit_set)
        if (!in_buchi_set(j, q_reached)) out.push_back(j);
    if (out.empty()) return full_visit_set();
    return out;
}

bool OmegaAutomaton::deadlocked(int q) const { return dist_to_acc[q] == kInfDist; }

OmegaAutomaton prune_and_index(OmegaAutomaton aut) {
    detail::validate_automaton(aut);
    for (auto& targets : aut.epsilon_edges) {
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    }
    const std::vector<Symbol> symbols = enumerate_feasible_symbols(aut.aps);
    for (auto& per_state : aut.edges) {
        for (auto& e : per_state) {
            e.feasible = false;
            for (Symbol sym : symbols) {
                if (e.label.eval(sym)) {
                    e.feasible = true;
                    break;
                }
            }
        }
    }

    aut.dist_to_set.clear();
    if (aut.kind == AutomatonKind::Dra) {
        std::vector<int> targets;
        for (const auto& pair : aut.rabin_pairs)
            for (int g : pair.good)
                if (!contains(targets, g)) targets.push_back(g);
        aut.dist_to_acc = distances_to(aut, targets, false);
    } else {
        aut.dist_to_set.reserve(aut.buchi_sets.size());
        for (const auto& fj : aut.buchi_sets)
            aut.dist_to_set.push_back(distances_to(aut, fj, true));
        aut.dist_to_acc.assign(aut.num_states, 0);
        for (int q = 0; q < aut.num_states; ++q) {
            int worst = 0;
            for (const auto& dist : aut.dist_to_set) {
                if (dist[q] == kInfDist) {
                    worst = kInfDist;
                    break;
                }
                worst = std::max(worst, dist[q]);
            }
            aut.dist_to_acc[q] = worst;
        }
    }
    aut.satisfiable = aut.dist_to_acc[aut.initial] != kInfDist;
    aut.indexed = true;
    return aut;
}

OmegaAutomaton load_native(const nlohmann::json& doc) {
    OmegaAutomaton aut;
    try {
        const std::string kind = doc.at("kind").get<std::string>();
        if (kind == "dra")
            aut.kind = AutomatonKind::Dra;
        else if (kind == "ldba")
            aut.kind = AutomatonKind::Ldba;
        else
            throw ValidationError("unknown automaton kind '" + kind + "'");
        aut.num_states = doc.at("num_states").get<int>();
        aut.initial = doc.at("initial").get<int>();
        for (const auto& ap : doc.at("aps"))
            aut.aps.push_back(
                {ap.at("name").get<std::string>(), ap.value("is_location", true)});
        if (aut.num_states <= 0) throw ValidationError("automaton needs at least one state");
        aut.edges.resize(aut.num_states);
        aut.epsilon_edges.resize(aut.num_states);
        for (const auto& e : doc.at("edges")) {
            const int from = e.at("from").get<int>();
            check_state(from, aut.num_states, "edge source");
            aut.edges[from].push_back(
                {parse_label_expr(e.at("label").get<std::string>()), e.at("to").get<int>()});
        }
        if (aut.kind == AutomatonKind::Dra) {
            for (const auto& p : doc.at("rabin_pairs"))
                aut.rabin_pairs.push_back({p.at("good").get<std::vector<int>>(),
                                           p.at("bad").get<std::vector<int>>()});
        } else {
            aut.buchi_sets = doc.at("buchi_sets").get<std::vector<std::vector<int>>>();
            for (const auto& e : doc.value("epsilon_edges", nlohmann::json::array())) {
                const int from = e.at("from").get<int>();
                check_state(from, aut.num_states, "epsilon edge source");
                aut.epsilon_edges[from].push_back(e.at("to").get<int>());
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("automaton document: ") + ex.what());
    }
    detail::validate_automaton(aut);
    return aut;
}

nlohmann::json save_native(const OmegaAutomaton& aut) {
    nlohmann::json doc;
    doc["kind"] = aut.kind == AutomatonKind::Dra ? "dra" : "ldba";
    doc["num_states"] = aut.num_states;
    doc["initial"] = aut.initial;
    doc["aps"] = nlohmann::json::array();
    for (const auto& ap : aut.aps)
        doc["aps"].push_back({{"name", ap.name}, {"is_location", ap.is_location}});
    doc["edges"] = nlohmann::json::array();
    for (int q = 0; q < aut.num_states; ++q)
        for (const auto& e : aut.edges[q])
            doc["edges"].push_back({{"from", q}, {"label", e.label.to_string()}, {"to", e.to}});
    if (aut.kind == AutomatonKind::Dra) {
        doc["rabin_pairs"] = nlohmann::json::array();
        for (const auto& p : aut.rabin_pairs)
            doc["rabin_pairs"].push_back({{"good", p.good}, {"bad", p.bad}});
    } else {
        doc["buchi_sets"] = aut.buchi_sets;
        doc["epsilon_edges"] = nlohmann::json::array();
        for (int q = 0; q < aut.num_states; ++q)
            for (int t : aut.epsilon_edges[q])
                doc["epsilon_edges"].push_back({{"from", q}, {"to", t}});
    }
    return doc;
}

OmegaAutomaton load_automaton_file(const std::string& path,
                                   const std::vector<std::string>& plain_aps) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open automaton file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".hoa")
        return parse_hoa(text, plain_aps);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("automaton file '" + path + "': " + ex.what());
    }
    if (!plain_aps.empty())
        throw ValidationError("plain-AP overrides apply to HOA input only; the native format "
                              "carries is_location flags");
    return load_native(doc);
}

}  // namespace omegarl
