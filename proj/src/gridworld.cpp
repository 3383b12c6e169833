#include "omegarl/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

const char* kGridActionNames[9] = {"left",      "right",     "up",        "down",     "up-left",
                                   "up-right",  "down-left", "down-right", "idle"};

// Column/row offset of each non-idle move.
constexpr int kDc[8] = {-1, +1, 0, 0, -1, +1, -1, +1};
constexpr int kDr[8] = {0, 0, -1, +1, -1, -1, +1, +1};

void check_row_sum(const TransRow& row, int x, int a, double tol) {
    double sum = 0.0;
    for (const auto& [to, p] : row) {
        if (p < 0.0)
            throw ValidationError("negative probability at state " + std::to_string(x) +
                                  ", action " + std::to_string(a));
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
        throw ValidationError("probabilities at state " + std::to_string(x) + ", action " +
                              std::to_string(a) + " sum to " + std::to_string(sum));
}

}  // namespace

bool GroundTruthMdp::is_available(int x, int a) const {
    return std::binary_search(available[x].begin(), available[x].end(), a);
}

double GroundTruthMdp::prob(int x, int a, int x_next) const {
    for (const auto& [to, p] : trans[x][a])
        if (to == x_next) return p;
    return 0.0;
}

int GroundTruthMdp::sample_next(int x, int a, Rng& rng) const {
    if (!is_available(x, a))
        throw ValidationError("action " + std::to_string(a) + " is unavailable at state " +
                              std::to_string(x));
    const TransRow& row = trans[x][a];
    double u = rng.uniform01();
    for (const auto& [to, p] : row) {
        u -= p;
        if (u < 0.0) return to;
    }
    return row.back().first;
}

std::string GroundTruthMdp::name_of(int x) const {
    if (x < static_cast<int>(state_names.size()) && !state_names[x].empty())
        return state_names[x];
    return "s" + std::to_string(x);
}

LabelingSpec parse_labeling(const nlohmann::json& doc) {
    LabelingSpec spec;
    try {
        const nlohmann::json cells = doc.value("cells", nlohmann::json::object());
        for (const auto& [key, value] : cells.items())
            spec.cells[std::stoi(key)] = value.get<std::string>();
        spec.obstacles = doc.value("obstacles", std::vector<int>{});
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("labeling document: ") + ex.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError("labeling cell keys must be integer cell ids");
    }
    return spec;
}

GroundTruthMdp generate(int width, int height, const LabelingSpec& labeling, std::uint64_t seed) {
    if (width < 2 || height < 2)
        throw ValidationError("grid must be at least 2x2, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    GroundTruthMdp mdp;
    mdp.width = width;
    mdp.height = height;
    mdp.num_states = width * height;
    mdp.seed = seed;
    for (const char* name : kGridActionNames) mdp.action_names.emplace_back(name);

    // Environment AP list: location atoms in cell-id order (deduplicated by
    // name), then the shared obstacle atom.
    auto ap_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < mdp.aps.size(); ++i)
            if (mdp.aps[i].name == name) return static_cast<int>(i);
        return -1;
    };
    for (const auto& [cell, name] : labeling.cells) {
        if (cell < 0 || cell >= mdp.num_states)
            throw ValidationError("labeling references cell " + std::to_string(cell) +
                                  " outside the " + std::to_string(width) + "x" +
                                  std::to_string(height) + " grid");
        if (ap_index(name) < 0) mdp.aps.push_back({name, true});
    }
    if (!labeling.obstacles.empty()) mdp.aps.push_back({"obs", false});
    mdp.labels.assign(mdp.num_states, 0);
    for (const auto& [cell, name] : labeling.cells)
        mdp.labels[cell] |= 1ULL << ap_index(name);
    for (int cell : labeling.obstacles) {
        if (cell < 0 || cell >= mdp.num_states)
            throw ValidationError("obstacle list references cell " + std::to_string(cell) +
                                  " outside the grid");
        mdp.labels[cell] |= 1ULL << ap_index("obs");
    }

    Rng rng(seed);
    mdp.available.resize(mdp.num_states);
    mdp.trans.resize(mdp.num_states);
    for (int x = 0; x < mdp.num_states; ++x) {
        const int row = x / width;
        const int col = x % width;
        std::vector<int> in_grid;  // non-idle moves whose intended cell exists
        for (int a = 0; a < 8; ++a) {
            const int c = col + kDc[a];
            const int r = row + kDr[a];
            if (c >= 0 && c < width && r >= 0 && r < height) in_grid.push_back(a);
        }
        std::vector<int> avail = in_grid;
        if (in_grid.size() == 8) {
            // Interior: drop one uniformly drawn move.
            const int removed = in_grid[rng.uniform_index(in_grid.size())];
            avail.erase(std::find(avail.begin(), avail.end(), removed));
        }
        avail.push_back(kActIdle);
        mdp.available[x] = avail;

        mdp.trans[x].resize(9);
        for (int a : avail) {
            if (a == kActIdle) {
                mdp.trans[x][a] = {{x, 1.0}};
                continue;
            }
            const int intended = (row + kDr[a]) * width + (col + kDc[a]);
            const double p_star = rng.uniform(0.7, 0.8);
            // Residual mass over the other in-grid Moore neighbors,
            // proportional to fresh uniform draws (ascending cell order).
            std::vector<int> others;
            for (int b : in_grid) {
                const int cell = (row + kDr[b]) * width + (col + kDc[b]);
                if (cell != intended) others.push_back(cell);
            }
            std::sort(others.begin(), others.end());
            std::vector<double> draws(others.size());
            double total = 0.0;
            for (double& d : draws) {
                d = rng.uniform01();
                total += d;
            }
            TransRow trow;
            trow.emplace_back(intended, p_star);
            for (std::size_t k = 0; k < others.size(); ++k) {
                const double share =
                    total > 0.0 ? (1.0 - p_star) * draws[k] / total
                                : (1.0 - p_star) / static_cast<double>(others.size());
                trow.emplace_back(others[k], share);
            }
            std::sort(trow.begin(), trow.end());
            check_row_sum(trow, x, a, 1e-12);
            mdp.trans[x][a] = std::move(trow);
        }
    }
    return mdp;
}

GroundTruthMdp load_explicit(const nlohmann::json& doc) {
    GroundTruthMdp mdp;
    try {
        mdp.num_states = doc.at("num_states").get<int>();
        if (mdp.num_states <= 0) throw ValidationError("model needs at least one state");
        mdp.state_names = doc.value("state_names", std::vector<std::string>{});
        mdp.action_names = doc.at("actions").get<std::vector<std::string>>();
        mdp.available = doc.at("available").get<std::vector<std::vector<int>>>();
        if (static_cast<int>(mdp.available.size()) != mdp.num_states)
            throw ValidationError("'available' must list actions for every state");
        for (auto& acts : mdp.available) std::sort(acts.begin(), acts.end());
        mdp.width = doc.value("width", 0);
        mdp.height = doc.value("height", 0);
        mdp.seed = doc.value("seed", 0ULL);
        for (const auto& ap : doc.value("aps", nlohmann::json::array()))
            mdp.aps.push_back({ap.at("name").get<std::string>(), ap.value("is_location", true)});

        mdp.trans.assign(mdp.num_states, std::vector<TransRow>(mdp.action_names.size()));
        for (const auto& entry : doc.at("trans")) {
            const int x = entry.at("x").get<int>();
            const int a = entry.at("a").get<int>();
            if (x < 0 || x >= mdp.num_states)
                throw ValidationError("transition references state " + std::to_string(x));
            if (a < 0 || a >= mdp.num_actions())
                throw ValidationError("transition references action " + std::to_string(a));
            TransRow row;
            for (const auto& [key, value] : entry.at("probs").items()) {
                const int to = std::stoi(key);
                if (to < 0 || to >= mdp.num_states)
                    throw ValidationError("transition targets state " + key);
                row.emplace_back(to, value.get<double>());
            }
            std::sort(row.begin(), row.end());
            mdp.trans[x][a] = std::move(row);
        }

        mdp.labels.assign(mdp.num_states, 0);
        const nlohmann::json label_doc = doc.value("labels", nlohmann::json::object());
        for (const auto& [key, names] : label_doc.items()) {
            const int x = std::stoi(key);
            if (x < 0 || x >= mdp.num_states)
                throw ValidationError("label references state " + key);
            for (const auto& name : names) {
                int idx = -1;
                for (std::size_t i = 0; i < mdp.aps.size(); ++i)
                    if (mdp.aps[i].name == name.get<std::string>()) idx = static_cast<int>(i);
                if (idx < 0)
                    throw ValidationError("label '" + name.get<std::string>() +
                                          "' is not in the model's AP list");
                mdp.labels[x] |= 1ULL << idx;
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("model document: ") + ex.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError("state keys must be integer ids");
    }

    for (int x = 0; x < mdp.num_states; ++x) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const bool avail = mdp.is_available(x, a);
            if (avail && mdp.trans[x][a].empty())
                throw ValidationError("no probabilities for available action " + std::to_string(a) +
                                      " at state " + std::to_string(x));
            if (!avail && !mdp.trans[x][a].empty())
                throw ValidationError("probabilities given for unavailable action " +
                                      std::to_string(a) + " at state " + std::to_string(x));
            if (avail) check_row_sum(mdp.trans[x][a], x, a, 1e-9);
        }
        if (mdp.available[x].empty())
            throw ValidationError("state " + std::to_string(x) + " has no available action");
        for (int a : mdp.available[x])
            if (a < 0 || a >= mdp.num_actions())
                throw ValidationError("available action " + std::to_string(a) +
                                      " out of range at state " + std::to_string(x));
        if (!is_feasible_symbol(mdp.labels[x], mdp.aps))
            throw ValidationError("state " + std::to_string(x) +
                                  " carries more than one location atom");
    }
    return mdp;
}

nlohmann::json save_explicit(const GroundTruthMdp& mdp) {
    nlohmann::json doc;
    doc["num_states"] = mdp.num_states;
    if (!mdp.state_names.empty()) doc["state_names"] = mdp.state_names;
    if (mdp.width > 0) doc["width"] = mdp.width;
    if (mdp.height > 0) doc["height"] = mdp.height;
    if (mdp.seed != 0) doc["seed"] = mdp.seed;
    doc["actions"] = mdp.action_names;
    doc["available"] = mdp.available;
    doc["aps"] = nlohmann::json::array();
    for (const auto& ap : mdp.aps)
        doc["aps"].push_back({{"name", ap.name}, {"is_location", ap.is_location}});
    doc["trans"] = nlohmann::json::array();
    for (int x = 0; x < mdp.num_states; ++x) {
        for (int a : mdp.available[x]) {
            nlohmann::json probs = nlohmann::json::object();
            for (const auto& [to, p] : mdp.trans[x][a]) probs[std::to_string(to)] = p;
            doc["trans"].push_back({{"x", x}, {"a", a}, {"probs", std::move(probs)}});
        }
    }
    nlohmann::json labels = nlohmann::json::object();
    for (int x = 0; x < mdp.num_states; ++x) {
        if (mdp.labels[x] == 0) continue;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < mdp.aps.size(); ++i)
            if (symbol_has(mdp.labels[x], static_cast<int>(i))) names.push_back(mdp.aps[i].name);
        labels[std::to_string(x)] = names;
    }
    doc["labels"] = std::move(labels);
    return doc;
}

GroundTruthMdp load_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("model file '" + path + "': " + ex.what());
    }
    return load_explicit(doc);
}

TaskBinding bind_labels(const std::vector<AtomicProposition>& env_aps,
                        const std::vector<AtomicProposition>& automaton_aps) {
    TaskBinding binding;
    binding.env_to_aut.assign(env_aps.size(), -1);
    for (std::size_t j = 0; j < automaton_aps.size(); ++j) {
        bool found = false;
        for (std::size_t i = 0; i < env_aps.size(); ++i) {
            if (env_aps[i].name != automaton_aps[j].name) continue;
            if (env_aps[i].is_location != automaton_aps[j].is_location)
                throw ValidationError("atom '" + env_aps[i].name +
                                      "' is a location atom on only one side of the binding");
            binding.env_to_aut[i] = static_cast<int>(j);
            found = true;
        }
        if (!found)
            throw ValidationError("the environment never emits automaton atom '" +
                                  automaton_aps[j].name + "'");
    }
    return binding;
}

}  // namespace omegarl
