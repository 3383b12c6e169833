#include <cstdio>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "omegarl/errors.hpp"
#include "omegarl/experiment.hpp"

namespace {

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw omegarl::ValidationError("cannot write '" + out_path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"omega-regular task learning toolkit"};
    app.require_subcommand(1);

    // gen-env
    auto* gen = app.add_subcommand("gen-env", "Generate a seeded grid environment file");
    int width = 10, height = 10;
    std::uint64_t env_seed = 1;
    std::string labeling, gen_out = "env.json";
    gen->add_option("--width", width, "grid width")->check(CLI::PositiveNumber);
    gen->add_option("--height", height, "grid height")->check(CLI::PositiveNumber);
    gen->add_option("--labeling", labeling, "labeling JSON file");
    gen->add_option("--seed", env_seed, "generation seed");
    gen->add_option("--out", gen_out, "output file");

    // train
    auto* train = app.add_subcommand("train", "Run the training sweep from a config file");
    std::string config_path;
    int o_episodes = 0, o_eval_every = 0, o_tau = 0;
    std::vector<std::uint64_t> o_seeds;
    std::string o_output_dir;
    train->add_option("--config", config_path, "experiment config JSON")->required();
    train->add_option("--episodes", o_episodes, "override num_episodes");
    train->add_option("--eval-every", o_eval_every, "override eval_every");
    train->add_option("--tau", o_tau, "override steps per episode");
    train->add_option("--seeds", o_seeds, "override the seed list")->delimiter(',');
    train->add_option("--output-dir", o_output_dir, "override output_dir");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score a serialized greedy policy");
    std::string policy_path, env_path, aut_path, eval_out;
    std::vector<std::string> plain_aps;
    eval->add_option("--policy", policy_path, "policy snapshot JSON")->required();
    eval->add_option("--env", env_path, "explicit model JSON")->required();
    eval->add_option("--automaton", aut_path, "automaton file (.hoa or native JSON)")->required();
    eval->add_option("--plain-aps", plain_aps, "HOA only: atoms that are not locations")
        ->delimiter(',');
    eval->add_option("--out", eval_out, "write the report here instead of stdout");

    // model-based
    auto* mb = app.add_subcommand("model-based", "Optimal baseline from the explicit product");
    std::string mb_env, mb_aut, mb_out, mb_convention = "successor";
    std::vector<std::string> mb_plain_aps;
    std::size_t cap = omegarl::kDefaultProductCap;
    mb->add_option("--env", mb_env, "explicit model JSON")->required();
    mb->add_option("--automaton", mb_aut, "automaton file (.hoa or native JSON)")->required();
    mb->add_option("--plain-aps", mb_plain_aps, "HOA only: atoms that are not locations")
        ->delimiter(',');
    mb->add_option("--convention", mb_convention, "successor|source label stepping");
    mb->add_option("--cap", cap, "explicit product state cap");
    mb->add_option("--out", mb_out, "write the report here instead of stdout");

    // verify-props
    auto* verify = app.add_subcommand("verify-props", "Check the guarantees on random instances");
    int instances = 60;
    std::uint64_t prop_seed = 2024;
    std::vector<int> props;
    verify->add_option("--instances", instances, "instances per proposition")
        ->check(CLI::PositiveNumber);
    verify->add_option("--seed", prop_seed, "instance generation seed");
    verify->add_option("--prop", props, "which propositions (default: all six)")
        ->check(CLI::Range(1, 6));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            omegarl::write_generated_env(width, height, labeling, env_seed, gen_out);
            std::printf("wrote %s (%dx%d, seed %llu)\n", gen_out.c_str(), width, height,
                        static_cast<unsigned long long>(env_seed));
        } else if (*train) {
            omegarl::ExperimentConfig cfg = omegarl::load_config(config_path);
            if (train->count("--episodes")) cfg.num_episodes = o_episodes;
            if (train->count("--eval-every")) cfg.eval_every = o_eval_every;
            if (train->count("--tau")) cfg.tau = o_tau;
            if (train->count("--seeds")) cfg.seeds = o_seeds;
            if (train->count("--output-dir")) cfg.output_dir = o_output_dir;
            const omegarl::TrainArtifacts artifacts = omegarl::run_training(cfg);
            std::printf("wrote %s (%zu rows) and %zu policy snapshots\n",
                        artifacts.csv_path.c_str(), artifacts.rows.size(),
                        artifacts.policy_paths.size());
        } else if (*eval) {
            const omegarl::GroundTruthMdp env = omegarl::load_mdp_file(env_path);
            omegarl::AutomatonSpec spec;
            spec.file = aut_path;
            spec.plain_aps = plain_aps;
            const omegarl::OmegaAutomaton aut = omegarl::load_task_automaton(spec);
            const omegarl::SatisfactionReport report =
                omegarl::evaluate_policy_file(policy_path, env, aut);
            emit(omegarl::report_to_json(report) + "\n", eval_out);
        } else if (*mb) {
            const omegarl::GroundTruthMdp env = omegarl::load_mdp_file(mb_env);
            omegarl::AutomatonSpec spec;
            spec.file = mb_aut;
            spec.plain_aps = mb_plain_aps;
            const omegarl::OmegaAutomaton aut = omegarl::load_task_automaton(spec);
            const omegarl::LabelConvention convention =
                mb_convention == "source" ? omegarl::LabelConvention::Source
                                          : omegarl::LabelConvention::Successor;
            const omegarl::ModelBasedRun run =
                omegarl::run_model_based(env, aut, convention, cap);
            nlohmann::json doc = nlohmann::json::parse(omegarl::report_to_json(run.result.report));
            doc["product_states"] = run.product_states;
            doc["winning_states"] = run.result.winning_states;
            emit(doc.dump(2) + "\n", mb_out);
        } else if (*verify) {
            if (props.empty()) props = {1, 2, 3, 4, 5, 6};
            const std::vector<omegarl::PropositionReport> reports =
                omegarl::run_verify_props(props, instances, prop_seed);
            std::fputs(omegarl::props_table(reports).c_str(), stdout);
            for (const auto& r : reports)
                if (r.failed > 0) return 3;
        }
    } catch (const omegarl::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
