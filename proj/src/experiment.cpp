#include "omegarl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <thread>
#include <utility>

#include "omegarl/errors.hpp"

namespace omegarl {

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(std::string((std::istreambuf_iterator<char>(in)),
                                                 std::istreambuf_iterator<char>()));
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("'" + path + "': " + ex.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("short write to '" + path + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LabelConvention convention_from_name(const std::string& name) {
    if (name == "successor") return LabelConvention::Successor;
    if (name == "source") return LabelConvention::Source;
    throw ValidationError("unknown label convention '" + name + "' (expected successor|source)");
}

std::string convention_name(LabelConvention convention) {
    return convention == LabelConvention::Successor ? "successor" : "source";
}

}  // namespace

void ExperimentConfig::validate() const {
    rewards.validate();
    if (task_name.empty()) throw ValidationError("task_name must be nonempty");
    if (policies.empty()) throw ValidationError("config needs at least one policy");
    if (seeds.empty()) throw ValidationError("config needs at least one seed");
    if (num_episodes <= 0) throw ValidationError("num_episodes must be positive");
    if (tau <= 0) throw ValidationError("tau must be positive");
    if (eval_every <= 0 || eval_every > num_episodes)
        throw ValidationError("eval_every must lie in 1..num_episodes");
    if (automaton.file.empty()) throw ValidationError("config needs an automaton file");
    if (env.file.empty() && (env.width <= 0 || env.height <= 0))
        throw ValidationError("env needs either a file or positive grid dimensions");
}

PolicySpec policy_spec_from_json(const nlohmann::json& doc) {
    PolicySpec spec;
    try {
        spec.kind = policy_kind_from_name(doc.at("kind").get<std::string>());
        if (doc.contains("schedule"))
            spec.schedule.kind = schedule_kind_from_name(doc.at("schedule").get<std::string>());
        spec.schedule.alpha = doc.value("alpha", spec.schedule.alpha);
        spec.schedule.beta = doc.value("beta", spec.schedule.beta);
        spec.schedule.big_a = doc.value("A", spec.schedule.big_a);
        if (doc.contains("custom")) {
            for (const auto& row : doc.at("custom")) {
                if (!row.is_array() || row.size() != 3)
                    throw ValidationError("custom schedule rows are [from_episode, eps, delta_b]");
                spec.schedule.custom.push_back({row[0].get<double>(), row[1].get<double>(),
                                                row[2].get<double>()});
            }
        }
        spec.temperature = doc.value("temperature", spec.temperature);
        spec.ucb_c = doc.value("c", spec.ucb_c);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("policy entry: ") + ex.what());
    }
    return spec;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig cfg;
    try {
        cfg.task_name = doc.value("task_name", cfg.task_name);
        if (doc.contains("env")) {
            const auto& e = doc.at("env");
            cfg.env.width = e.value("width", 0);
            cfg.env.height = e.value("height", 0);
            cfg.env.file = e.value("file", std::string());
            cfg.env.labeling = e.value("labeling", std::string());
            cfg.env.seed = e.value("seed", std::uint64_t{0});
        }
        if (doc.contains("automaton")) {
            const auto& a = doc.at("automaton");
            cfg.automaton.file = a.value("file", std::string());
            cfg.automaton.plain_aps =
                a.value("plain_aps", std::vector<std::string>{});
        }
        for (const auto& p : doc.value("policies", nlohmann::json::array()))
            cfg.policies.push_back(policy_spec_from_json(p));
        if (doc.contains("reward")) {
            const auto& r = doc.at("reward");
            cfg.rewards.r_good = r.value("r_good", cfg.rewards.r_good);
            cfg.rewards.r_bad = r.value("r_bad", cfg.rewards.r_bad);
            cfg.rewards.r_deadlock = r.value("r_deadlock", cfg.rewards.r_deadlock);
            cfg.rewards.r_neutral = r.value("r_neutral", cfg.rewards.r_neutral);
            cfg.rewards.gamma = r.value("gamma", cfg.rewards.gamma);
        }
        cfg.tau = doc.value("tau", cfg.tau);
        cfg.num_episodes = doc.value("num_episodes", cfg.num_episodes);
        cfg.eval_every = doc.value("eval_every", cfg.eval_every);
        cfg.fixed_x0 = doc.value("fixed_x0", cfg.fixed_x0);
        cfg.model_freeze_episode = doc.value("model_freeze_episode", cfg.model_freeze_episode);
        if (doc.contains("convention"))
            cfg.convention = convention_from_name(doc.at("convention").get<std::string>());
        cfg.seeds = doc.value("seeds", std::vector<std::uint64_t>{});
        cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("experiment config: ") + ex.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg = config_from_json(read_json_file(path));
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    auto resolve = [&dir](std::string& field) {
        if (field.empty()) return;
        const std::filesystem::path p(field);
        if (p.is_relative()) field = (dir / p).string();
    };
    resolve(cfg.env.file);
    resolve(cfg.env.labeling);
    resolve(cfg.automaton.file);
    return cfg;
}

GroundTruthMdp load_env(const EnvSpec& spec) {
    if (!spec.file.empty()) return load_mdp_file(spec.file);
    if (spec.width <= 0 || spec.height <= 0)
        throw ValidationError("generated environments need positive dimensions");
    LabelingSpec labeling;
    if (!spec.labeling.empty()) labeling = parse_labeling(read_json_file(spec.labeling));
    return generate(spec.width, spec.height, labeling, spec.seed);
}

OmegaAutomaton load_task_automaton(const AutomatonSpec& spec) {
    if (spec.file.empty()) throw ValidationError("no automaton file given");
    return prune_and_index(load_automaton_file(spec.file, spec.plain_aps));
}

void write_generated_env(int width, int height, const std::string& labeling_path,
                         std::uint64_t seed, const std::string& out_path) {
    EnvSpec spec;
    spec.width = width;
    spec.height = height;
    spec.labeling = labeling_path;
    spec.seed = seed;
    const GroundTruthMdp env = load_env(spec);
    write_text_file(out_path, save_explicit(env).dump(2) + "\n");
}

std::string train_rows_to_csv(const std::vector<TrainRow>& rows) {
    std::string out = "# schema ";
    out += kTrainCsvSchema;
    out += "\nrun_id,policy,seed,episode,elapsed_s,avg_sat_prob,epsilon,delta_b,delta_e\n";
    char buf[64];
    for (const auto& r : rows) {
        out += r.run_id;
        out += ',';
        out += r.policy;
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += std::to_string(r.episode);
        out += ',';
        std::snprintf(buf, sizeof(buf), "%.3f", r.elapsed_s);
        out += buf;
        out += ',';
        out += format_double(r.avg_sat_prob);
        out += ',';
        out += format_double(r.epsilon);
        out += ',';
        out += format_double(r.delta_b);
        out += ',';
        out += format_double(r.delta_e);
        out += '\n';
    }
    return out;
}

nlohmann::json policy_snapshot(const Learner& learner, const std::string& task_name) {
    const GroundTruthMdp& env = learner.env();
    const OmegaAutomaton& aut = learner.automaton();
    nlohmann::json doc;
    doc["schema"] = "policy-v1";
    doc["task"] = task_name;
    doc["policy"] = learner.config().policy.name();
    doc["seed"] = learner.config().seed;
    doc["convention"] = convention_name(learner.config().convention);
    doc["num_x"] = env.num_states;
    doc["num_q"] = aut.num_states;
    doc["num_mdp_actions"] = env.num_actions();
    nlohmann::json greedy = nlohmann::json::array();
    for (int x = 0; x < env.num_states; ++x) {
        nlohmann::json per_q = nlohmann::json::array();
        for (int q = 0; q < aut.num_states; ++q) per_q.push_back(learner.greedy_action(x, q));
        greedy.push_back(std::move(per_q));
    }
    doc["greedy"] = std::move(greedy);
    return doc;
}

TrainArtifacts run_training(const ExperimentConfig& config) {
    config.validate();
    const GroundTruthMdp env = load_env(config.env);
    const OmegaAutomaton aut = load_task_automaton(config.automaton);

    struct Cell {
        PolicySpec policy;
        std::uint64_t seed = 0;
        std::vector<TrainRow> rows;
        std::string snapshot;
        std::exception_ptr error;
    };
    std::vector<Cell> cells;
    for (const auto& policy : config.policies)
        for (std::uint64_t seed : config.seeds) {
            Cell cell;
            cell.policy = policy;
            cell.seed = seed;
            cells.push_back(std::move(cell));
        }

    auto run_cell = [&](Cell& cell) {
        LearnerConfig lc;
        lc.policy = cell.policy;
        lc.rewards = config.rewards;
        lc.num_episodes = config.num_episodes;
        lc.tau = config.tau;
        lc.eval_every = config.eval_every;
        lc.fixed_x0 = config.fixed_x0;
        lc.freeze_model_after = config.model_freeze_episode;
        lc.convention = config.convention;
        lc.seed = cell.seed;
        lc.run_id = config.task_name;
        Learner learner(env, aut, lc);
        cell.rows = learner.train([](const Learner& l) { return average_satisfaction(l); });
        cell.snapshot = policy_snapshot(learner, config.task_name).dump(2) + "\n";
    };

    const std::size_t workers =
        std::min(cells.size(),
                 static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency())));
    if (workers <= 1) {
        for (auto& cell : cells) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    try {
                        run_cell(cells[i]);
                    } catch (...) {
                        cells[i].error = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
        for (const auto& cell : cells)
            if (cell.error) std::rethrow_exception(cell.error);
    }

    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        const std::string an = a.policy.name(), bn = b.policy.name();
        return an != bn ? an < bn : a.seed < b.seed;
    });

    TrainArtifacts out;
    for (auto& cell : cells) {
        out.rows.insert(out.rows.end(), cell.rows.begin(), cell.rows.end());
        const std::string path = (std::filesystem::path(config.output_dir) /
                                  (config.task_name + "_" + cell.policy.name() + "_s" +
                                   std::to_string(cell.seed) + "_policy.json"))
                                     .string();
        write_text_file(path, cell.snapshot);
        out.policy_paths.push_back(path);
    }
    out.csv_path =
        (std::filesystem::path(config.output_dir) / (config.task_name + "_train.csv")).string();
    write_text_file(out.csv_path, train_rows_to_csv(out.rows));
    return out;
}

SatisfactionReport evaluate_policy_file(const std::string& policy_path, const GroundTruthMdp& env,
                                        const OmegaAutomaton& aut) {
    const nlohmann::json doc = read_json_file(policy_path);
    LabelConvention convention = LabelConvention::Successor;
    std::vector<std::vector<int>> greedy;
    try {
        if (doc.value("schema", std::string()) != "policy-v1")
            throw ValidationError("'" + policy_path + "' is not a policy-v1 snapshot");
        if (doc.at("num_x").get<int>() != env.num_states ||
            doc.at("num_q").get<int>() != aut.num_states ||
            doc.at("num_mdp_actions").get<int>() != env.num_actions())
            throw ValidationError("policy snapshot shape does not match the task");
        convention = convention_from_name(doc.at("convention").get<std::string>());
        greedy = doc.at("greedy").get<std::vector<std::vector<int>>>();
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("'" + policy_path + "': " + ex.what());
    }
    if (static_cast<int>(greedy.size()) != env.num_states)
        throw ValidationError("policy snapshot has the wrong number of states");
    const TaskBinding binding = bind_labels(env.aps, aut.aps);
    auto policy = [greedy](int x, int q) { return ActionDist{{greedy[x][q], 1.0}}; };
    return satisfaction_probability(env, aut, binding, policy, convention);
}

ModelBasedRun run_model_based(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                              LabelConvention convention, std::size_t cap) {
    const TaskBinding binding = bind_labels(env.aps, aut.aps);
    const ExplicitPmdp pmdp = build_explicit_pmdp(env, aut, binding, convention, cap);
    ModelBasedRun run;
    run.result = model_based_optimal(pmdp);
    run.product_states = pmdp.num_states();
    return run;
}

std::vector<PropositionReport> run_verify_props(const std::vector<int>& props, int instances,
                                                std::uint64_t seed) {
    std::vector<PropositionReport> out;
    for (int p : props) out.push_back(proposition_check(p, instances, seed));
    return out;
}

std::string props_table(const std::vector<PropositionReport>& reports) {
    std::string out = "prop  instances  hypothesis_met  conclusion_held  failed\n";
    char buf[96];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf), "%4d  %9d  %14d  %15d  %6d\n", r.prop, r.instances,
                      r.hypothesis_met, r.conclusion_held, r.failed);
        out += buf;
    }
    return out;
}

}  // namespace omegarl
