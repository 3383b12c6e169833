#include "omegarl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <utility>

#include <Eigen/Sparse>

#include "json.hpp"
#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

int labeled_step(const OmegaAutomaton& aut, int q, Symbol sym) {
    if (aut.kind == AutomatonKind::Dra) return aut.step_dra(q, sym);
    for (const auto& e : aut.edges[q])
        if (e.label.eval(sym)) return e.to;
    throw MalformedAutomatonError("automaton state " + std::to_string(q) +
                                  " has no transition for an observed label");
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Iterative Tarjan. Components come out numbered in reverse topological
// order: every cross-component edge points to a lower component id.
struct SccResult {
    std::vector<int> comp;
    int count = 0;
};

SccResult tarjan_scc(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    SccResult res;
    res.comp.assign(n, -1);
    std::vector<int> index(n, -1), low(n, 0), stack;
    std::vector<char> on_stack(n, 0);
    stack.reserve(n);
    struct Frame {
        int v;
        std::size_t i;
    };
    std::vector<Frame> call;
    int next_index = 0;
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            Frame& f = call.back();
            const int v = f.v;
            if (f.i == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            bool descended = false;
            while (f.i < adj[v].size()) {
                const int w = adj[v][f.i++];
                if (index[w] == -1) {
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            if (low[v] == index[v]) {
                const int c = res.count++;
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    res.comp[w] = c;
                    if (w == v) break;
                }
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    return res;
}

struct ChainClasses {
    SccResult scc;
    std::vector<char> bottom;     // per component
    std::vector<char> accepting;  // per component; meaningful for bottom ones
    int bottom_count = 0;
    int accepting_count = 0;
};

ChainClasses classify_bsccs(const InducedChain& chain) {
    const int n = chain.num_states();
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s) {
        adj[s].reserve(chain.rows[s].size());
        for (const auto& [t, p] : chain.rows[s])
            if (p > 0.0) adj[s].push_back(t);
    }
    ChainClasses out;
    out.scc = tarjan_scc(adj);
    out.bottom.assign(out.scc.count, 1);
    for (int s = 0; s < n; ++s)
        for (int t : adj[s])
            if (out.scc.comp[t] != out.scc.comp[s]) out.bottom[out.scc.comp[s]] = 0;

    out.accepting.assign(out.scc.count, 0);
    if (chain.kind == AutomatonKind::Dra) {
        const int pairs = static_cast<int>(chain.rabin_pairs.size());
        std::vector<std::vector<char>> in_good(pairs), in_bad(pairs);
        for (int i = 0; i < pairs; ++i) {
            in_good[i].assign(chain.num_q, 0);
            in_bad[i].assign(chain.num_q, 0);
            for (int q : chain.rabin_pairs[i].good) in_good[i][q] = 1;
            for (int q : chain.rabin_pairs[i].bad) in_bad[i][q] = 1;
        }
        std::vector<std::vector<char>> good(out.scc.count, std::vector<char>(pairs, 0));
        std::vector<std::vector<char>> bad(out.scc.count, std::vector<char>(pairs, 0));
        for (int s = 0; s < n; ++s) {
            const int c = out.scc.comp[s];
            if (!out.bottom[c]) continue;
            const int q = chain.q_of(s);
            for (int i = 0; i < pairs; ++i) {
                if (in_good[i][q]) good[c][i] = 1;
                if (in_bad[i][q]) bad[c][i] = 1;
            }
        }
        for (int c = 0; c < out.scc.count; ++c) {
            if (!out.bottom[c]) continue;
            for (int i = 0; i < pairs; ++i) {
                if (good[c][i] && !bad[c][i]) {
                    out.accepting[c] = 1;
                    break;
                }
            }
        }
    } else {
        const int sets = static_cast<int>(chain.buchi_sets.size());
        std::vector<std::vector<char>> in_set(sets);
        for (int j = 0; j < sets; ++j) {
            in_set[j].assign(chain.num_q, 0);
            for (int q : chain.buchi_sets[j]) in_set[j][q] = 1;
        }
        std::vector<std::vector<char>> touch(out.scc.count, std::vector<char>(sets, 0));
        for (int s = 0; s < n; ++s) {
            const int c = out.scc.comp[s];
            if (!out.bottom[c]) continue;
            const int q = chain.q_of(s);
            for (int j = 0; j < sets; ++j)
                if (in_set[j][q]) touch[c][j] = 1;
        }
        for (int c = 0; c < out.scc.count; ++c) {
            if (!out.bottom[c]) continue;
            bool all = sets > 0;
            for (int j = 0; j < sets; ++j)
                if (!touch[c][j]) {
                    all = false;
                    break;
                }
            out.accepting[c] = all ? 1 : 0;
        }
    }
    for (int c = 0; c < out.scc.count; ++c) {
        if (!out.bottom[c]) continue;
        ++out.bottom_count;
        if (out.accepting[c]) ++out.accepting_count;
    }
    return out;
}

// Solve (I - M) x = b: exact factorization for small systems, Gauss-Seidel
// sweeps to tol otherwise. M must have spectral radius < 1.
std::pair<std::vector<double>, std::string> solve_i_minus_m(const std::vector<TransRow>& m,
                                                            const std::vector<double>& b,
                                                            double tol) {
    const int n = static_cast<int>(m.size());
    if (n == 0) return {{}, "direct"};
    if (n < 50000) {
        std::vector<Eigen::Triplet<double>> trip;
        std::size_t nnz = static_cast<std::size_t>(n);
        for (const auto& row : m) nnz += row.size();
        trip.reserve(nnz);
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
        for (int i = 0; i < n; ++i)
            for (const auto& [j, p] : m[i]) trip.emplace_back(i, j, -p);
        Eigen::SparseMatrix<double> a(n, n);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
            throw ValidationError("linear system factorization failed");
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) rhs(i) = b[i];
        const Eigen::VectorXd sol = lu.solve(rhs);
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) out[i] = sol(i);
        return {std::move(out), "direct"};
    }
    std::vector<double> x(n, 0.0);
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double diff = 0.0;
        for (int i = 0; i < n; ++i) {
            double v = b[i];
            for (const auto& [j, p] : m[i]) v += p * x[j];
            diff = std::max(diff, std::abs(v - x[i]));
            x[i] = v;
        }
        if (diff < tol) break;
    }
    return {std::move(x), "iterative"};
}

void append_sorted_row(std::vector<std::pair<int, double>>& acc, TransRow& out) {
    std::sort(acc.begin(), acc.end());
    out.clear();
    for (const auto& [t, p] : acc) {
        if (!out.empty() && out.back().first == t)
            out.back().second += p;
        else
            out.emplace_back(t, p);
    }
}

// Maximal end components over the product restricted to an allowed state
// set. slots[s] lists the surviving indices into available[s]; states outside
// any component keep an empty list.
struct MecResult {
    std::vector<int> mec_of;  // -1 when the state is in no component
    std::vector<std::vector<int>> states;
    std::vector<std::vector<int>> slots;
};

MecResult mec_decomposition(const ExplicitPmdp& p, const std::vector<char>& allowed) {
    const int n = p.num_states();
    std::vector<char> alive = allowed;
    std::vector<std::vector<int>> slots(n);
    for (int s = 0; s < n; ++s)
        if (alive[s])
            for (int i = 0; i < static_cast<int>(p.available[s].size()); ++i)
                slots[s].push_back(i);

    auto prune_dead_targets = [&]() {
        bool any = true;
        while (any) {
            any = false;
            for (int s = 0; s < n; ++s) {
                if (!alive[s]) continue;
                auto& sl = slots[s];
                std::size_t keep = 0;
                for (int i : sl) {
                    bool ok = true;
                    for (const auto& [t, pr] : p.trans[s][i])
                        if (pr > 0.0 && !alive[t]) {
                            ok = false;
                            break;
                        }
                    if (ok) sl[keep++] = i;
                }
                if (keep != sl.size()) sl.resize(keep);
                if (sl.empty() && alive[s]) {
                    alive[s] = 0;
                    any = true;
                }
            }
        }
    };

    SccResult scc;
    while (true) {
        prune_dead_targets();
        std::vector<std::vector<int>> adj(n);
        for (int s = 0; s < n; ++s)
            if (alive[s])
                for (int i : slots[s])
                    for (const auto& [t, pr] : p.trans[s][i])
                        if (pr > 0.0) adj[s].push_back(t);
        scc = tarjan_scc(adj);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            auto& sl = slots[s];
            std::size_t keep = 0;
            for (int i : sl) {
                bool ok = true;
                for (const auto& [t, pr] : p.trans[s][i])
                    if (pr > 0.0 && scc.comp[t] != scc.comp[s]) {
                        ok = false;
                        break;
                    }
                if (ok) sl[keep++] = i;
            }
            if (keep != sl.size()) {
                sl.resize(keep);
                changed = true;
            }
            if (sl.empty()) {
                alive[s] = 0;
                changed = true;
            }
        }
        if (!changed) break;
    }

    MecResult out;
    out.mec_of.assign(n, -1);
    std::vector<int> comp_to_mec(scc.count, -1);
    for (int s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        int& m = comp_to_mec[scc.comp[s]];
        if (m < 0) {
            m = static_cast<int>(out.states.size());
            out.states.emplace_back();
        }
        out.mec_of[s] = m;
        out.states[m].push_back(s);
    }
    out.slots = std::move(slots);
    return out;
}

SatisfactionReport finish_report(const InducedChain& chain, const ChainClasses& cls,
                                 std::vector<double> per_state, std::string method) {
    SatisfactionReport rep;
    rep.per_state = std::move(per_state);
    rep.per_initial.resize(chain.num_x);
    double sum = 0.0;
    for (int x = 0; x < chain.num_x; ++x) {
        rep.per_initial[x] = rep.per_state[chain.sid(x, chain.initial_q)];
        sum += rep.per_initial[x];
    }
    rep.average = chain.num_x > 0 ? sum / chain.num_x : 0.0;
    rep.bscc_total = cls.bottom_count;
    rep.bscc_accepting = cls.accepting_count;
    rep.method = std::move(method);
    return rep;
}

}  // namespace

const TransRow& ExplicitPmdp::row(int s, int action) const {
    for (std::size_t i = 0; i < available[s].size(); ++i)
        if (available[s][i] == action) return trans[s][i];
    throw ValidationError("action " + std::to_string(action) +
                          " is not available at product state " + std::to_string(s));
}

ProductPolicy greedy_policy(const Learner& learner) {
    const Learner* l = &learner;
    return [l](int x, int q) { return ActionDist{{l->greedy_action(x, q), 1.0}}; };
}

ExplicitPmdp build_explicit_pmdp(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                                 const TaskBinding& binding, LabelConvention convention,
                                 std::size_t cap) {
    if (!aut.indexed)
        throw ValidationError("automaton must be pruned and indexed before building the product");
    const std::size_t total =
        static_cast<std::size_t>(env.num_states) * static_cast<std::size_t>(aut.num_states);
    if (total > cap) throw ProductCapError(total, cap);

    ExplicitPmdp p;
    p.num_x = env.num_states;
    p.num_q = aut.num_states;
    p.num_mdp_actions = env.num_actions();
    p.num_actions =
        p.num_mdp_actions + (aut.kind == AutomatonKind::Ldba ? aut.num_states : 0);
    p.kind = aut.kind;
    p.convention = convention;
    p.initial_q = aut.initial;
    p.rabin_pairs = aut.rabin_pairs;
    p.buchi_sets = aut.buchi_sets;
    p.dist_to_acc = aut.dist_to_acc;
    p.available.resize(total);
    p.trans.resize(total);

    for (int x = 0; x < env.num_states; ++x) {
        for (int q = 0; q < aut.num_states; ++q) {
            const int s = p.sid(x, q);
            for (int a : env.available[x]) {
                TransRow row;
                row.reserve(env.trans[x][a].size());
                if (convention == LabelConvention::Source) {
                    const int q2 = labeled_step(aut, q, binding.remap(env.label_of(x)));
                    for (const auto& [x2, pr] : env.trans[x][a])
                        row.emplace_back(p.sid(x2, q2), pr);
                } else {
                    for (const auto& [x2, pr] : env.trans[x][a]) {
                        const int q2 = labeled_step(aut, q, binding.remap(env.label_of(x2)));
                        row.emplace_back(p.sid(x2, q2), pr);
                    }
                }
                std::sort(row.begin(), row.end());
                p.available[s].push_back(a);
                p.trans[s].push_back(std::move(row));
            }
            if (aut.kind == AutomatonKind::Ldba) {
                for (int t : aut.epsilon_edges[q]) {
                    p.available[s].push_back(p.num_mdp_actions + t);
                    p.trans[s].push_back(TransRow{{p.sid(x, t), 1.0}});
                }
            }
        }
    }
    return p;
}

InducedChain induce_chain(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                          const TaskBinding& binding, const ProductPolicy& policy,
                          LabelConvention convention) {
    if (!aut.indexed)
        throw ValidationError("automaton must be pruned and indexed before evaluation");
    InducedChain chain;
    chain.num_x = env.num_states;
    chain.num_q = aut.num_states;
    chain.initial_q = aut.initial;
    chain.kind = aut.kind;
    chain.rabin_pairs = aut.rabin_pairs;
    chain.buchi_sets = aut.buchi_sets;
    chain.dist_to_acc = aut.dist_to_acc;
    chain.rows.resize(static_cast<std::size_t>(chain.num_states()));
    const int num_a = env.num_actions();

    std::vector<std::pair<int, double>> acc;
    for (int x = 0; x < env.num_states; ++x) {
        for (int q = 0; q < aut.num_states; ++q) {
            acc.clear();
            double total = 0.0;
            for (const auto& [a, pa] : policy(x, q)) {
                if (pa <= 0.0) continue;
                total += pa;
                if (a >= num_a) {
                    const int target = a - num_a;
                    const auto& eps = aut.epsilon_edges[q];
                    if (aut.kind != AutomatonKind::Ldba ||
                        !std::binary_search(eps.begin(), eps.end(), target))
                        throw ValidationError("policy uses jump action " + std::to_string(a) +
                                              " with no matching automaton transition at state " +
                                              std::to_string(q));
                    acc.emplace_back(chain.sid(x, target), pa);
                    continue;
                }
                if (!env.is_available(x, a))
                    throw ValidationError("policy places mass on unavailable action " +
                                          std::to_string(a) + " at state " + std::to_string(x));
                if (convention == LabelConvention::Source) {
                    const int q2 = labeled_step(aut, q, binding.remap(env.label_of(x)));
                    for (const auto& [x2, pr] : env.trans[x][a])
                        acc.emplace_back(chain.sid(x2, q2), pa * pr);
                } else {
                    for (const auto& [x2, pr] : env.trans[x][a]) {
                        const int q2 = labeled_step(aut, q, binding.remap(env.label_of(x2)));
                        acc.emplace_back(chain.sid(x2, q2), pa * pr);
                    }
                }
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw ValidationError("policy distribution at (" + std::to_string(x) + "," +
                                      std::to_string(q) + ") sums to " + std::to_string(total));
            append_sorted_row(acc, chain.rows[chain.sid(x, q)]);
        }
    }
    return chain;
}

InducedChain induce_chain(const ExplicitPmdp& pmdp, const ProductPolicy& policy) {
    InducedChain chain;
    chain.num_x = pmdp.num_x;
    chain.num_q = pmdp.num_q;
    chain.initial_q = pmdp.initial_q;
    chain.kind = pmdp.kind;
    chain.rabin_pairs = pmdp.rabin_pairs;
    chain.buchi_sets = pmdp.buchi_sets;
    chain.dist_to_acc = pmdp.dist_to_acc;
    chain.rows.resize(static_cast<std::size_t>(chain.num_states()));

    std::vector<std::pair<int, double>> acc;
    for (int x = 0; x < pmdp.num_x; ++x) {
        for (int q = 0; q < pmdp.num_q; ++q) {
            const int s = pmdp.sid(x, q);
            acc.clear();
            double total = 0.0;
            for (const auto& [a, pa] : policy(x, q)) {
                if (pa <= 0.0) continue;
                total += pa;
                for (const auto& [t, pr] : pmdp.row(s, a)) acc.emplace_back(t, pa * pr);
            }
            if (std::abs(total - 1.0) > 1e-9)
                throw ValidationError("policy distribution at (" + std::to_string(x) + "," +
                                      std::to_string(q) + ") sums to " + std::to_string(total));
            append_sorted_row(acc, chain.rows[s]);
        }
    }
    return chain;
}

SatisfactionReport satisfaction_probability(const InducedChain& chain) {
    const int n = chain.num_states();
    const ChainClasses cls = classify_bsccs(chain);

    std::vector<int> state_kind(n, 0);  // +1 accepting bottom, -1 rejecting bottom
    for (int s = 0; s < n; ++s) {
        const int c = cls.scc.comp[s];
        if (cls.bottom[c]) state_kind[s] = cls.accepting[c] ? 1 : -1;
    }
    std::vector<int> t_index(n, -1);
    std::vector<int> transient;
    for (int s = 0; s < n; ++s) {
        if (state_kind[s] != 0) continue;
        t_index[s] = static_cast<int>(transient.size());
        transient.push_back(s);
    }
    const int nt = static_cast<int>(transient.size());
    std::vector<TransRow> m(nt);
    std::vector<double> b(nt, 0.0);
    for (int i = 0; i < nt; ++i) {
        for (const auto& [t, p] : chain.rows[transient[i]]) {
            if (state_kind[t] == 1)
                b[i] += p;
            else if (state_kind[t] == 0)
                m[i].emplace_back(t_index[t], p);
        }
    }
    auto [sol, method] = solve_i_minus_m(m, b, 1e-10);

    std::vector<double> per_state(n, 0.0);
    for (int s = 0; s < n; ++s) {
        if (state_kind[s] == 1)
            per_state[s] = 1.0;
        else if (state_kind[s] == 0)
            per_state[s] = clamp01(sol[t_index[s]]);
    }
    return finish_report(chain, cls, std::move(per_state), std::move(method));
}

SatisfactionReport satisfaction_probability(const ExplicitPmdp& pmdp,
                                            const ProductPolicy& policy) {
    return satisfaction_probability(induce_chain(pmdp, policy));
}

SatisfactionReport satisfaction_probability(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                                            const TaskBinding& binding,
                                            const ProductPolicy& policy,
                                            LabelConvention convention) {
    return satisfaction_probability(induce_chain(env, aut, binding, policy, convention));
}

double average_satisfaction(const Learner& learner) {
    return satisfaction_probability(learner.env(), learner.automaton(), learner.binding(),
                                    greedy_policy(learner), learner.config().convention)
        .average;
}

double mc_average_satisfaction(const InducedChain& chain, int rollouts, std::uint64_t seed) {
    if (rollouts <= 0) throw ValidationError("rollout count must be positive");
    const ChainClasses cls = classify_bsccs(chain);
    const int horizon = 10 * chain.num_states();
    Rng rng(seed);
    int hits = 0;
    for (int r = 0; r < rollouts; ++r) {
        int s = chain.sid(r % chain.num_x, chain.initial_q);
        bool ok = false;
        for (int t = 0; t <= horizon; ++t) {
            const int c = cls.scc.comp[s];
            if (cls.bottom[c]) {
                ok = cls.accepting[c] != 0;
                break;
            }
            const TransRow& row = chain.rows[s];
            if (row.empty()) break;
            const double u = rng.uniform01();
            double cum = 0.0;
            int next = row.back().first;
            for (const auto& [t2, p] : row) {
                cum += p;
                if (u < cum) {
                    next = t2;
                    break;
                }
            }
            s = next;
        }
        if (ok) ++hits;
    }
    return static_cast<double>(hits) / rollouts;
}

PolicyValue policy_value(const InducedChain& chain, const RewardParams& rewards) {
    rewards.validate();
    const int n = chain.num_states();

    std::vector<char> q_good(chain.num_q, 0), q_bad(chain.num_q, 0);
    if (chain.kind == AutomatonKind::Dra) {
        for (const auto& pair : chain.rabin_pairs) {
            for (int q : pair.good) q_good[q] = 1;
            for (int q : pair.bad) q_bad[q] = 1;
        }
    } else {
        for (const auto& fj : chain.buchi_sets)
            for (int q : fj) q_good[q] = 1;
    }
    std::vector<double> q_reward(chain.num_q);
    for (int q = 0; q < chain.num_q; ++q) {
        if (q_good[q])
            q_reward[q] = rewards.r_good;
        else if (chain.kind == AutomatonKind::Dra && q_bad[q])
            q_reward[q] = rewards.r_bad;
        else if (chain.dist_to_acc[q] == kInfDist)
            q_reward[q] = rewards.r_deadlock;
        else
            q_reward[q] = rewards.r_neutral;
    }

    std::vector<TransRow> m(n);
    std::vector<double> b(n, 0.0);
    for (int s = 0; s < n; ++s) {
        m[s].reserve(chain.rows[s].size());
        for (const auto& [t, p] : chain.rows[s]) {
            b[s] += p * q_reward[chain.q_of(t)];
            m[s].emplace_back(t, rewards.gamma * p);
        }
    }
    auto [sol, method] = solve_i_minus_m(m, b, 1e-10);
    PolicyValue out;
    out.values = std::move(sol);
    out.method = std::move(method);
    return out;
}

PolicyValue policy_value(const ExplicitPmdp& pmdp, const ProductPolicy& policy,
                         const RewardParams& rewards) {
    return policy_value(induce_chain(pmdp, policy), rewards);
}

ModelBasedResult model_based_optimal(const ExplicitPmdp& pmdp) {
    const int n = pmdp.num_states();
    std::vector<char> winning(n, 0);
    std::vector<ActionDist> policy(n);

    auto claim_mec = [&](const MecResult& mecs, int m) {
        for (int s : mecs.states[m]) {
            if (winning[s]) continue;
            winning[s] = 1;
            const auto& sl = mecs.slots[s];
            ActionDist dist;
            dist.reserve(sl.size());
            const double w = 1.0 / static_cast<double>(sl.size());
            for (int i : sl) dist.emplace_back(pmdp.available[s][i], w);
            policy[s] = std::move(dist);
        }
    };

    if (pmdp.kind == AutomatonKind::Dra) {
        for (const auto& pair : pmdp.rabin_pairs) {
            std::vector<char> good(pmdp.num_q, 0), bad(pmdp.num_q, 0);
            for (int q : pair.good) good[q] = 1;
            for (int q : pair.bad) bad[q] = 1;
            std::vector<char> allowed(n);
            for (int s = 0; s < n; ++s) allowed[s] = bad[pmdp.q_of(s)] ? 0 : 1;
            const MecResult mecs = mec_decomposition(pmdp, allowed);
            for (int m = 0; m < static_cast<int>(mecs.states.size()); ++m) {
                bool touches = false;
                for (int s : mecs.states[m])
                    if (good[pmdp.q_of(s)]) {
                        touches = true;
                        break;
                    }
                if (touches) claim_mec(mecs, m);
            }
        }
    } else {
        const int sets = static_cast<int>(pmdp.buchi_sets.size());
        std::vector<std::vector<char>> in_set(sets);
        for (int j = 0; j < sets; ++j) {
            in_set[j].assign(pmdp.num_q, 0);
            for (int q : pmdp.buchi_sets[j]) in_set[j][q] = 1;
        }
        const MecResult mecs = mec_decomposition(pmdp, std::vector<char>(n, 1));
        for (int m = 0; m < static_cast<int>(mecs.states.size()); ++m) {
            bool all = sets > 0;
            for (int j = 0; j < sets && all; ++j) {
                bool touch = false;
                for (int s : mecs.states[m])
                    if (in_set[j][pmdp.q_of(s)]) {
                        touch = true;
                        break;
                    }
                all = touch;
            }
            if (all) claim_mec(mecs, m);
        }
    }

    // Maximal probability of reaching the winning region, from below.
    std::vector<double> v(n, 0.0);
    for (int s = 0; s < n; ++s)
        if (winning[s]) v[s] = 1.0;
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double diff = 0.0;
        for (int s = 0; s < n; ++s) {
            if (winning[s]) continue;
            double best = 0.0;
            for (const auto& row : pmdp.trans[s]) {
                double ev = 0.0;
                for (const auto& [t, pr] : row) ev += pr * v[t];
                best = std::max(best, ev);
            }
            diff = std::max(diff, std::abs(best - v[s]));
            v[s] = best;
        }
        if (diff < 1e-10) break;
    }

    // Outside the winning region, pick value-optimal actions that put mass on
    // the already-wired part, growing outward so the policy cannot stall on
    // plateaus of equal value.
    std::vector<char> wired = winning;
    bool grew = true;
    while (grew) {
        grew = false;
        for (int s = 0; s < n; ++s) {
            if (wired[s] || v[s] <= 0.0) continue;
            int chosen = -1;
            for (int i = 0; i < static_cast<int>(pmdp.trans[s].size()); ++i) {
                double ev = 0.0, mass = 0.0;
                for (const auto& [t, pr] : pmdp.trans[s][i]) {
                    ev += pr * v[t];
                    if (wired[t]) mass += pr;
                }
                if (ev >= v[s] - 1e-9 && mass > 0.0) {
                    chosen = i;
                    break;
                }
            }
            if (chosen >= 0) {
                policy[s] = {{pmdp.available[s][chosen], 1.0}};
                wired[s] = 1;
                grew = true;
            }
        }
    }
    for (int s = 0; s < n; ++s)
        if (!wired[s]) policy[s] = {{pmdp.available[s].front(), 1.0}};

    ModelBasedResult out;
    out.reach_value = std::move(v);
    out.winning_states = static_cast<int>(std::count(winning.begin(), winning.end(), 1));
    out.policy = std::move(policy);
    const auto& rows = out.policy;
    out.report = satisfaction_probability(
        pmdp, [&rows, &pmdp](int x, int q) { return rows[pmdp.sid(x, q)]; });
    return out;
}

double beta_of_path(const GroundTruthMdp& env, const LearnedModel& model,
                    const TaskBinding& binding, const OmegaAutomaton& aut, int q_t,
                    const std::vector<int>& q_goal, const std::vector<int>& path,
                    double delta_b, double delta_e, const std::function<int(int)>& greedy_at,
                    std::uint64_t seed, int path_cap) {
    if (delta_b < 0.0 || delta_e < 0.0 || delta_b + delta_e > 1.0 + 1e-12)
        throw ValidationError("exploration split must satisfy delta_b + delta_e <= 1");
    const double eps = delta_b + delta_e;
    double beta = 1.0;
    for (std::size_t mi = 0; mi + 1 < path.size(); ++mi) {
        const int x = path[mi];
        const int x2 = path[mi + 1];
        const auto& avail = env.available[x];
        const int a_star = greedy_at(x);
        if (!env.is_available(x, a_star))
            throw ValidationError("greedy action " + std::to_string(a_star) +
                                  " is not available at state " + std::to_string(x));
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(x)));
        const BiasQuery bias =
            biased_action(model, env, binding, aut, x, q_t, q_goal, rng, path_cap);
        double sum_all = 0.0;
        for (int a : avail) sum_all += env.prob(x, a, x2);
        double term = (1.0 - eps) * env.prob(x, a_star, x2) +
                      (delta_e / static_cast<double>(avail.size())) * sum_all;
        if (delta_b > 0.0) term += delta_b * env.prob(x, bias.a_b, x2);
        beta *= term;
    }
    return beta;
}

double eta_of_path(const GroundTruthMdp& env, const std::vector<int>& path, double epsilon,
                   const std::function<int(int)>& greedy_at) {
    if (epsilon < 0.0 || epsilon > 1.0 + 1e-12)
        throw ValidationError("epsilon must lie in [0, 1]");
    double eta = 1.0;
    for (std::size_t mi = 0; mi + 1 < path.size(); ++mi) {
        const int x = path[mi];
        const int x2 = path[mi + 1];
        const auto& avail = env.available[x];
        const int a_star = greedy_at(x);
        if (!env.is_available(x, a_star))
            throw ValidationError("greedy action " + std::to_string(a_star) +
                                  " is not available at state " + std::to_string(x));
        double sum_all = 0.0;
        for (int a : avail) sum_all += env.prob(x, a, x2);
        eta *= (1.0 - epsilon) * env.prob(x, a_star, x2) +
               (epsilon / static_cast<double>(avail.size())) * sum_all;
    }
    return eta;
}

OneStepProbe one_step_probe(const GroundTruthMdp& env, const LearnedModel& model,
                            const TaskBinding& binding, const OmegaAutomaton& aut, int x_t,
                            int q_t, const std::vector<int>& q_goal, double delta_b,
                            double delta_e, const std::function<int(int)>& greedy_at,
                            std::uint64_t seed, int path_cap) {
    const double eps = delta_b + delta_e;
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(x_t)));
    const BiasQuery bias = biased_action(model, env, binding, aut, x_t, q_t, q_goal, rng, path_cap);
    const auto& avail = env.available[x_t];
    const int a_star = greedy_at(x_t);
    if (!env.is_available(x_t, a_star))
        throw ValidationError("greedy action " + std::to_string(a_star) +
                              " is not available at state " + std::to_string(x_t));
    const std::vector<double> mu_b =
        action_probabilities(delta_b, delta_e, avail, a_star, bias.a_b);
    const std::vector<double> mu_g = action_probabilities(0.0, eps, avail, a_star, -1);
    const std::vector<int> closer = x_closer_set(model, x_t, bias.x_goal, bias.x_avoid);

    OneStepProbe probe;
    probe.x_b = bias.x_b;
    probe.a_b = bias.a_b;
    probe.a_star = a_star;
    for (std::size_t i = 0; i < avail.size(); ++i) {
        double to_closer = 0.0;
        for (int x2 : closer) to_closer += env.prob(x_t, avail[i], x2);
        probe.closer_biased += mu_b[i] * to_closer;
        probe.closer_greedy += mu_g[i] * to_closer;
        if (bias.x_b >= 0) {
            const double to_b = env.prob(x_t, avail[i], bias.x_b);
            probe.hit_biased += mu_b[i] * to_b;
            probe.hit_greedy += mu_g[i] * to_b;
        }
    }
    return probe;
}

std::string report_to_json(const SatisfactionReport& report) {
    nlohmann::json doc;
    doc["per_state"] = nlohmann::json::object();
    for (std::size_t x = 0; x < report.per_initial.size(); ++x)
        doc["per_state"][std::to_string(x)] = report.per_initial[x];
    doc["avg"] = report.average;
    doc["bsccs"] = {{"total", report.bscc_total}, {"accepting", report.bscc_accepting}};
    doc["method"] = report.method;
    return doc.dump(2);
}

}  // namespace omegarl
