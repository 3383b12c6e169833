#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "omegarl/automaton.hpp"
#include "omegarl/evaluator.hpp"
#include "omegarl/gridworld.hpp"
#include "omegarl/learner.hpp"
#include "omegarl/propositions.hpp"

namespace omegarl {

// Bumped whenever the training CSV layout changes.
inline constexpr const char* kTrainCsvSchema = "train-v1";

// Either an explicit model file, or generated grid dimensions plus an
// optional labeling file.
struct EnvSpec {
    int width = 0;
    int height = 0;
    std::string file;
    std::string labeling;
    std::uint64_t seed = 0;
};

struct AutomatonSpec {
    std::string file;
    // HOA input only: atoms that are not location atoms.
    std::vector<std::string> plain_aps;
};

struct ExperimentConfig {
    std::string task_name = "task";
    EnvSpec env;
    AutomatonSpec automaton;
    std::vector<PolicySpec> policies;
    RewardParams rewards;
    int tau = 200;
    int num_episodes = 5000;
    int eval_every = 250;
    int fixed_x0 = -1;
    int model_freeze_episode = -1;
    LabelConvention convention = LabelConvention::Successor;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = ".";

    void validate() const;
};

PolicySpec policy_spec_from_json(const nlohmann::json& doc);
ExperimentConfig config_from_json(const nlohmann::json& doc);
// Reads a config document; relative env/automaton paths resolve against the
// config file's directory.
ExperimentConfig load_config(const std::string& path);

GroundTruthMdp load_env(const EnvSpec& spec);
// Loads, validates and indexes the task automaton.
OmegaAutomaton load_task_automaton(const AutomatonSpec& spec);

// gen-env: builds the seeded grid and writes it as an explicit model file.
void write_generated_env(int width, int height, const std::string& labeling_path,
                         std::uint64_t seed, const std::string& out_path);

std::string train_rows_to_csv(const std::vector<TrainRow>& rows);
nlohmann::json policy_snapshot(const Learner& learner, const std::string& task_name);

struct TrainArtifacts {
    // Sorted by (policy name, seed, episode).
    std::vector<TrainRow> rows;
    std::string csv_path;
    std::vector<std::string> policy_paths;
};

// Trains every (policy, seed) cell. Cells fan out to a worker pool sharing
// only the immutable environment/automaton; outputs are merged in a fixed
// order so reruns write identical files (wall-clock column aside).
TrainArtifacts run_training(const ExperimentConfig& config);

// Applies a serialized greedy policy to a freshly loaded task.
SatisfactionReport evaluate_policy_file(const std::string& policy_path, const GroundTruthMdp& env,
                                        const OmegaAutomaton& aut);

struct ModelBasedRun {
    ModelBasedResult result;
    int product_states = 0;
};

ModelBasedRun run_model_based(const GroundTruthMdp& env, const OmegaAutomaton& aut,
                              LabelConvention convention, std::size_t cap = kDefaultProductCap);

std::vector<PropositionReport> run_verify_props(const std::vector<int>& props, int instances,
                                                std::uint64_t seed);
std::string props_table(const std::vector<PropositionReport>& reports);

}  // namespace omegarl
