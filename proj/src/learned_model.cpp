#include "omegarl/learned_model.hpp"

#include <algorithm>
#include <deque>

#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

bool contains(const std::vector<int>& xs, int v) {
    return std::binary_search(xs.begin(), xs.end(), v);
}

void insert_sorted(std::vector<int>& xs, int v) {
    auto it = std::lower_bound(xs.begin(), xs.end(), v);
    if (it == xs.end() || *it != v) xs.insert(it, v);
}

}  // namespace

LearnedModel::LearnedModel(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      n_(static_cast<std::size_t>(num_states) * num_actions, 0.0),
      c_(static_cast<std::size_t>(num_states) * num_actions),
      adjacency_(num_states) {}

void LearnedModel::record(int x, int a, int x_next) {
    n_[key(x, a)] += 1.0;
    TransRow& row = c_[key(x, a)];
    auto it = std::lower_bound(row.begin(), row.end(), x_next,
                               [](const auto& entry, int v) { return entry.first < v; });
    if (it != row.end() && it->first == x_next) {
        it->second += 1.0;
    } else {
        row.insert(it, {x_next, 1.0});
        insert_sorted(adjacency_[x], x_next);
    }
}

double LearnedModel::p(int x, int a, int x_next) const {
    const double visits = n_[key(x, a)];
    if (visits <= 0.0) return 0.0;
    const TransRow& row = c_[key(x, a)];
    auto it = std::lower_bound(row.begin(), row.end(), x_next,
                               [](const auto& entry, int v) { return entry.first < v; });
    if (it == row.end() || it->first != x_next) return 0.0;
    return it->second / visits;
}

double LearnedModel::max_p(int x, int x_next) const {
    double best = 0.0;
    for (int a = 0; a < num_actions_; ++a) best = std::max(best, p(x, a, x_next));
    return best;
}

LearnedModel LearnedModel::from_truth(const GroundTruthMdp& mdp) {
    LearnedModel model(mdp.num_states, mdp.num_actions());
    for (int x = 0; x < mdp.num_states; ++x) {
        for (int a : mdp.available[x]) {
            model.n_[model.key(x, a)] = 1.0;
            model.c_[model.key(x, a)] = mdp.trans[x][a];
            for (const auto& [to, p] : mdp.trans[x][a])
                if (p > 0.0) insert_sorted(model.adjacency_[x], to);
        }
    }
    return model;
}

nlohmann::json LearnedModel::snapshot_counts() const {
    nlohmann::json doc;
    doc["num_states"] = num_states_;
    doc["num_actions"] = num_actions_;
    doc["counts"] = nlohmann::json::array();
    for (int x = 0; x < num_states_; ++x) {
        for (int a = 0; a < num_actions_; ++a) {
            if (n_[key(x, a)] <= 0.0) continue;
            nlohmann::json per = nlohmann::json::object();
            for (const auto& [to, cnt] : c_[key(x, a)]) per[std::to_string(to)] = cnt;
            doc["counts"].push_back(
                {{"x", x}, {"a", a}, {"n", n_[key(x, a)]}, {"c", std::move(per)}});
        }
    }
    return doc;
}

std::vector<int> x_goal_set(const GroundTruthMdp& env, const TaskBinding& binding,
                            const OmegaAutomaton& aut, int q_t, const std::vector<int>& q_goal,
                            Rng& rng, bool* was_random) {
    if (was_random) *was_random = false;
    std::vector<int> out;
    if (q_goal.empty()) {
        if (was_random) *was_random = true;
        out.push_back(static_cast<int>(rng.uniform_index(env.num_states)));
        return out;
    }
    for (int x = 0; x < env.num_states; ++x) {
        const Symbol sym = binding.remap(env.label_of(x));
        if (aut.kind == AutomatonKind::Dra) {
            if (contains(q_goal, aut.step_dra(q_t, sym))) out.push_back(x);
        } else {
            // Only the labeled move depends on x; epsilon moves are separate
            // product actions.
            for (const auto& e : aut.edges[q_t]) {
                if (e.label.eval(sym) && contains(q_goal, e.to)) {
                    out.push_back(x);
                    break;
                }
            }
        }
    }
    return out;
}

std::vector<int> x_avoid_set(const GroundTruthMdp& env, const TaskBinding& binding,
                             const OmegaAutomaton& aut, int q_t, const std::vector<int>& q_goal) {
    std::vector<int> out;
    for (int x = 0; x < env.num_states; ++x) {
        const Symbol sym = binding.remap(env.label_of(x));
        int succ = -1;
        if (aut.kind == AutomatonKind::Dra) {
            succ = aut.step_dra(q_t, sym);
        } else {
            for (const auto& e : aut.edges[q_t]) {
                if (e.label.eval(sym)) {
                    succ = e.to;
                    break;
                }
            }
        }
        const bool keeps = succ == q_t || (succ >= 0 && contains(q_goal, succ));
        if (!keeps) out.push_back(x);
    }
    return out;
}

namespace {

// Layered BFS from x_t over the learned adjacency, skipping avoid states.
// dist[x_t] = 0 even if x_t is flagged avoid (paths start there regardless).
std::vector<int> bias_distances(const LearnedModel& model, int x_t,
                                const std::vector<int>& x_avoid) {
    std::vector<int> dist(model.num_states(), kInfDist);
    dist[x_t] = 0;
    std::deque<int> frontier{x_t};
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop_front();
        for (int v : model.adjacency(u)) {
            if (dist[v] != kInfDist || contains(x_avoid, v)) continue;
            dist[v] = dist[u] + 1;
            frontier.push_back(v);
        }
    }
    return dist;
}

int min_goal_dist(const std::vector<int>& dist, const std::vector<int>& x_goal) {
    int best = kInfDist;
    for (int g : x_goal)
        if (dist[g] < best) best = dist[g];
    return best;
}

}  // namespace

MinHopResult min_hop_paths(const LearnedModel& model, int x_t, const std::vector<int>& x_goal,
                           const std::vector<int>& x_avoid, int cap) {
    std::vector<int> goals = x_goal;
    std::sort(goals.begin(), goals.end());
    std::vector<int> avoid = x_avoid;
    std::sort(avoid.begin(), avoid.end());

    MinHopResult result;
    if (contains(goals, x_t)) {
        result.hops = 0;
        return result;
    }
    const std::vector<int> dist = bias_distances(model, x_t, avoid);
    const int J = min_goal_dist(dist, goals);
    result.hops = J;
    if (J == kInfDist || J == 0) return result;

    // Predecessors within the layered DAG of shortest paths.
    std::vector<std::vector<int>> pred(model.num_states());
    for (int u = 0; u < model.num_states(); ++u) {
        if (dist[u] == kInfDist || dist[u] >= J) continue;
        for (int v : model.adjacency(u))
            if (dist[v] == dist[u] + 1) pred[v].push_back(u);
    }

    // Walk backwards from each goal state on the deepest layer; paths come
    // out in ascending (goal, predecessor...) order, capped.
    std::vector<int> stack;
    auto emit = [&](auto&& self, int v) -> bool {
        if (static_cast<int>(result.paths.size()) >= cap) return false;
        stack.push_back(v);
        if (v == x_t) {
            result.paths.emplace_back(stack.rbegin(), stack.rend());
        } else {
            for (int u : pred[v])
                if (!self(self, u)) {
                    stack.pop_back();
                    return false;
                }
        }
        stack.pop_back();
        return static_cast<int>(result.paths.size()) < cap;
    };
    for (int g : goals) {
        if (dist[g] != J) continue;
        if (!emit(emit, g)) break;
    }
    return result;
}

double path_cost(const LearnedModel& model, const std::vector<int>& path) {
    double cost = 1.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        cost *= model.max_p(path[i], path[i + 1]);
    return cost;
}

BiasQuery biased_action(const LearnedModel& model, const GroundTruthMdp& env,
                        const TaskBinding& binding, const OmegaAutomaton& aut, int x_t, int q_t,
                        const std::vector<int>& q_goal, Rng& rng, int path_cap) {
    BiasQuery query;
    query.x_t = x_t;
    query.q_t = q_t;
    query.x_goal = x_goal_set(env, binding, aut, q_t, q_goal, rng, &query.goal_was_random);
    query.x_avoid = x_avoid_set(env, binding, aut, q_t, q_goal);

    MinHopResult mh = min_hop_paths(model, x_t, query.x_goal, query.x_avoid, path_cap);
    query.hops = mh.hops;

    auto draw_fallback = [&] {
        const auto& avail = env.available[x_t];
        query.a_b = avail[rng.uniform_index(avail.size())];
        query.fallback = true;
    };
    if (mh.hops == kInfDist || mh.hops == 0 || mh.paths.empty()) {
        draw_fallback();
        return query;
    }

    // Highest-cost path wins; ties go to the lexicographically smallest
    // state sequence.
    const std::vector<int>* best = &mh.paths.front();
    double best_cost = path_cost(model, *best);
    for (std::size_t i = 1; i < mh.paths.size(); ++i) {
        const double cost = path_cost(model, mh.paths[i]);
        if (cost > best_cost || (cost == best_cost && mh.paths[i] < *best)) {
            best = &mh.paths[i];
            best_cost = cost;
        }
    }
    query.j_star_path = *best;
    query.cost = best_cost;
    query.x_b = (*best)[1];

    int best_action = -1;
    double best_p = 0.0;
    for (int a : env.available[x_t]) {
        const double p = model.p(x_t, a, query.x_b);
        if (p > best_p) {
            best_p = p;
            best_action = a;
        }
    }
    if (best_action < 0) {
        draw_fallback();
        return query;
    }
    query.a_b = best_action;
    return query;
}

std::vector<int> x_closer_set(const LearnedModel& model, int x_t, const std::vector<int>& x_goal,
                              const std::vector<int>& x_avoid) {
    std::vector<int> goals = x_goal;
    std::sort(goals.begin(), goals.end());
    std::vector<int> avoid = x_avoid;
    std::sort(avoid.begin(), avoid.end());
    const int j_here = min_goal_dist(bias_distances(model, x_t, avoid), goals);
    std::vector<int> out;
    if (j_here == kInfDist) return out;
    for (int v : model.adjacency(x_t)) {
        if (contains(goals, v)) {
            if (j_here == 1) out.push_back(v);
            continue;
        }
        const int j_v = min_goal_dist(bias_distances(model, v, avoid), goals);
        if (j_v != kInfDist && j_v == j_here - 1) out.push_back(v);
    }
    return out;
}

}  // namespace omegarl
