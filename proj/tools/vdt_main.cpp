// Command-line front end: training runs, generation, evaluation, dataset
// export, SVG scatter plots.
//
// Exit codes: 0 success, 2 usage/config problems, 3 numeric failures.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "vdt/config_json.hpp"
#include "vdt/errors.hpp"
#include "vdt/io.hpp"
#include "vdt/metrics.hpp"
#include "vdt/parallel.hpp"
#include "vdt/rng.hpp"
#include "vdt/sampler.hpp"
#include "vdt/svg.hpp"
#include "vdt/trainer.hpp"

namespace {

using namespace vdt;

void apply_workers(int workers_flag) {
    if (workers_flag > 0) {
        set_worker_count(workers_flag);
        return;
    }
    if (const char* env = std::getenv("VDT_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) set_worker_count(n);
    }
}

int run_train(const std::string& config_path, std::string out_dir, std::optional<uint64_t> seed) {
    RunConfig run;
    try {
        run = run_config_from_json(nlohmann::json::parse(read_file(config_path)));
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config " << config_path << ": " << e.what() << "\n";
        return 2;
    }
    if (out_dir.empty()) out_dir = run.out_dir;
    if (out_dir.empty()) {
        std::cerr << "error: no output directory (pass --out or set out_dir)\n";
        return 2;
    }
    if (seed.has_value()) run.train.seed = *seed;
    run.train.validate();

    std::filesystem::create_directories(out_dir);
    const std::string ckpt_path = out_dir + "/checkpoint.json";

    const int report_every = std::max(1, run.train.iterations / 20);
    TrainHooks hooks;
    hooks.on_iteration = [&](const TrainRecord& rec, const ValueNetwork& net) {
        if (rec.iteration % 1000 == 0) {
            save_checkpoint(Checkpoint(net, run.train, rec.iteration), ckpt_path);
        }
        if (rec.iteration % report_every == 0 || rec.iteration == run.train.iterations) {
            std::printf("iter %6d  lagrangian %10.4f  cost %9.4f  |grad| %8.4f  %7.1fs\n",
                        rec.iteration, rec.lagrangian, rec.cost, rec.grad_norm, rec.seconds);
            std::fflush(stdout);
        }
    };

    TrainResult result = train(run.train, hooks);
    save_checkpoint(result.checkpoint, ckpt_path);
    atomic_write_file(out_dir + "/train_log.csv", result.log.to_csv());

    const MetricsReport report =
        evaluate_model(result.checkpoint.net, run.train, run.train.horizon, run.train.eval_n,
                       mix(run.train.seed, 0xe4a1));
    atomic_write_file(out_dir + "/metrics.json", report.to_json_string());
    std::printf("w2_to_target %.6f\npath_energy %.6f (oracle %.6f)\n", report.w2_to_target,
                report.path_energy_mean, report.oracle_path_energy);
    return 0;
}

int run_generate(const std::string& ckpt_path, int steps, int n, const std::string& out_csv,
                 bool reverse, std::optional<int> label, std::optional<double> guidance,
                 const std::string& traj_csv, const std::string& svg_path, uint64_t seed) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);

    GenerationConfig gcfg;
    gcfg.h_test = steps;
    gcfg.n = n;
    gcfg.seed = seed;
    gcfg.reverse = reverse;
    gcfg.label = label;
    gcfg.guidance_scale = guidance;
    gcfg.keep_trajectory = !traj_csv.empty();
    gcfg.validate();

    DatasetSpec start = reverse ? ckpt.config.target : ckpt.config.source;
    start.labels_enabled = false;
    const Sample initial = sample(start, n, seed);
    const GenerationResult gen = gcfg.reverse ? generate_reverse(ckpt.net, initial.points, gcfg)
                                              : generate(ckpt.net, initial.points, gcfg);

    std::vector<int> labels;
    if (label.has_value()) labels.assign(static_cast<size_t>(n), *label);
    write_points_csv(out_csv, gen.samples, labels);
    if (!traj_csv.empty()) write_trajectories_csv(traj_csv, gen.trajectory);
    if (!svg_path.empty()) {
        render_svg({{gen.samples, ""}, {initial.points, ""}}, svg_path);
    }
    std::printf("wrote %d samples to %s\n", n, out_csv.c_str());
    return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& dataset, int steps, int n,
             const std::string& out_json, bool reverse, uint64_t seed) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    TrainConfig cfg = ckpt.config;
    if (!dataset.empty()) {
        DatasetSpec goal{dataset, false};
        goal.validate();
        (reverse ? cfg.source : cfg.target) = goal;
    }
    const MetricsReport report = evaluate_model(ckpt.net, cfg, steps, n, seed, reverse);
    atomic_write_file(out_json, report.to_json_string());
    std::printf("w2_to_target %.6f\npath_energy %.6f (oracle %.6f)\n", report.w2_to_target,
                report.path_energy_mean, report.oracle_path_energy);
    return 0;
}

int run_dataset(const std::string& name, int n, uint64_t seed, const std::string& out_csv,
                const std::string& svg_path) {
    DatasetSpec spec{name, name == "8gauss" || name == "8gauss_tgt_scaled"};
    spec.validate();
    const Sample s = sample(spec, n, seed);
    write_points_csv(out_csv, s.points, s.labels);
    if (!svg_path.empty()) render_svg({{s.points, ""}}, svg_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"value-driven transport: training, generation, evaluation"};
    app.require_subcommand(1);
    int workers = 0;
    app.add_option("--workers", workers, "worker threads (default: all cores, or VDT_WORKERS)");

    auto* train_cmd = app.add_subcommand("train", "run a training configuration");
    std::string config_path, out_dir;
    std::optional<uint64_t> train_seed;
    train_cmd->add_option("--config", config_path, "JSON run config")->required();
    train_cmd->add_option("--out", out_dir, "output directory");
    train_cmd->add_option("--seed", train_seed, "override the config seed");

    auto* gen_cmd = app.add_subcommand("generate", "sample from a trained checkpoint");
    std::string gen_ckpt, gen_out, gen_traj, gen_svg;
    int gen_steps = 100, gen_n = 1000;
    uint64_t gen_seed = 1;
    bool gen_reverse = false;
    std::optional<int> gen_label;
    std::optional<double> gen_guidance;
    gen_cmd->add_option("--checkpoint", gen_ckpt)->required();
    gen_cmd->add_option("--steps", gen_steps, "H_test");
    gen_cmd->add_option("--n", gen_n);
    gen_cmd->add_option("--out", gen_out, "samples CSV")->required();
    gen_cmd->add_flag("--reverse", gen_reverse, "generate from target toward source");
    gen_cmd->add_option("--label", gen_label, "conditioning label");
    gen_cmd->add_option("--guidance", gen_guidance, "classifier-free guidance scale");
    gen_cmd->add_option("--trajectories", gen_traj, "trajectory CSV");
    gen_cmd->add_option("--svg", gen_svg, "scatter plot");
    gen_cmd->add_option("--seed", gen_seed);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against fresh samples");
    std::string eval_ckpt, eval_dataset, eval_out;
    int eval_steps = 100, eval_n = 10000;
    uint64_t eval_seed = 1;
    bool eval_reverse = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--dataset", eval_dataset, "comparison dataset")->required();
    eval_cmd->add_option("--steps", eval_steps, "H_test");
    eval_cmd->add_option("--n", eval_n);
    eval_cmd->add_option("--out", eval_out, "metrics JSON")->required();
    eval_cmd->add_flag("--reverse", eval_reverse, "evaluate reverse generation");
    eval_cmd->add_option("--seed", eval_seed);

    auto* data_cmd = app.add_subcommand("dataset", "export a seeded dataset sample");
    std::string data_name, data_out, data_svg;
    int data_n = 1000;
    uint64_t data_seed = 1;
    data_cmd->add_option("--name", data_name)->required();
    data_cmd->add_option("--n", data_n);
    data_cmd->add_option("--seed", data_seed);
    data_cmd->add_option("--out", data_out, "points CSV")->required();
    data_cmd->add_option("--svg", data_svg, "scatter plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    apply_workers(workers);
    try {
        if (train_cmd->parsed()) return run_train(config_path, out_dir, train_seed);
        if (gen_cmd->parsed()) {
            return run_generate(gen_ckpt, gen_steps, gen_n, gen_out, gen_reverse, gen_label,
                                gen_guidance, gen_traj, gen_svg, gen_seed);
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_ckpt, eval_dataset, eval_steps, eval_n, eval_out, eval_reverse,
                            eval_seed);
        }
        if (data_cmd->parsed()) return run_dataset(data_name, data_n, data_seed, data_out, data_svg);
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const GenerationError& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
