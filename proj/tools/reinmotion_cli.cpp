// reinmotion: data generation, pretraining, fine-tuning, sampling, evaluation,
// reward inspection and the sigma sweep.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reinmotion/commands.hpp"

namespace {

namespace fs = std::filesystem;
using reinmotion::set_config_value;

struct Flags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::size_t> n;
    std::optional<double> corrupt;
    std::optional<std::size_t> iters;
    std::optional<double> sigma;
    std::optional<double> gamma;
    std::optional<double> lambda;
    std::optional<double> lr;
    std::optional<std::size_t> batch;
    std::optional<std::size_t> inner_epochs;
    std::optional<std::string> cond;
    std::optional<std::string> clip_reward_form;
    bool rewards = false;
    bool print_config = false;
    bool resume = false;
    std::string data;
    std::string ckpt;
    std::string in;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--seed", f.seed, "random seed (fallback: REINMOTION_SEED)");
    cmd->add_option("--config", f.config, "config file (JSON); flags override it");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--sigma", f.sigma, "policy standard deviation");
    cmd->add_option("--gamma", f.gamma, "PPO clip range");
    cmd->add_option("--lambda", f.lambda, "weight of the simple loss during fine-tuning");
    cmd->add_option("--clip-reward-form", f.clip_reward_form, "severity|literal")
        ->check(CLI::IsMember({"severity", "literal"}));
    cmd->add_flag("--print-config", f.print_config, "print the resolved config and exit");
}

/// defaults < REINMOTION_SEED < config file < flags
nlohmann::ordered_json resolve(const std::string& command, const Flags& f) {
    auto cfg = reinmotion::default_config();
    if (auto s = reinmotion::env_seed()) cfg["seed"] = *s;
    if (f.config) reinmotion::merge_config(cfg, reinmotion::read_config_file(*f.config));
    const bool pretraining = command == "pretrain";
    if (f.seed) cfg["seed"] = *f.seed;
    if (f.n) set_config_value(cfg, command == "gen-data" ? "data.n" : "sample.n", *f.n);
    if (f.corrupt) set_config_value(cfg, "data.corrupt", *f.corrupt);
    if (f.iters) set_config_value(cfg, pretraining ? "pretrain.steps" : "train.iters", *f.iters);
    if (f.sigma) set_config_value(cfg, "train.sigma", *f.sigma);
    if (f.gamma) set_config_value(cfg, "train.gamma", *f.gamma);
    if (f.lambda) set_config_value(cfg, "train.lambda", *f.lambda);
    if (f.lr) set_config_value(cfg, pretraining ? "pretrain.learning_rate" : "train.learning_rate", *f.lr);
    if (f.batch) set_config_value(cfg, pretraining ? "pretrain.batch_size" : "train.batch_size", *f.batch);
    if (f.inner_epochs) set_config_value(cfg, "train.inner_epochs", *f.inner_epochs);
    if (f.cond) set_config_value(cfg, "sample.cond", *f.cond);
    if (f.rewards) set_config_value(cfg, "evaluate.rewards", true);
    if (f.clip_reward_form) set_config_value(cfg, "rewards.clip_form", *f.clip_reward_form);
    return cfg;
}

fs::path require(const std::optional<std::string>& v, const char* flag) {
    if (!v || v->empty()) throw reinmotion::ConfigError(std::string("missing required flag ") + flag);
    return *v;
}

fs::path require(const std::string& v, const char* flag) {
    if (v.empty()) throw reinmotion::ConfigError(std::string("missing required flag ") + flag);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reinmotion: physics-aware reward fine-tuning of a toy motion diffusion model"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic gait dataset");
    add_common(gen, f);
    gen->add_option("--n", f.n, "number of sequences");
    gen->add_option("--corrupt", f.corrupt, "fraction of sequences carrying an artifact")->check(CLI::Range(0.0, 1.0));

    auto* pre = app.add_subcommand("pretrain", "pretrain the denoiser on a dataset");
    add_common(pre, f);
    pre->add_option("--data", f.data, "dataset directory");
    pre->add_option("--iters", f.iters, "optimizer steps");
    pre->add_option("--lr", f.lr, "learning rate");
    pre->add_option("--batch", f.batch, "batch size");

    auto* fine = app.add_subcommand("finetune", "fine-tune a pretrained checkpoint with physical rewards");
    add_common(fine, f);
    fine->add_option("--data", f.data, "dataset directory");
    fine->add_option("--ckpt", f.ckpt, "pretrained checkpoint (file or directory)");
    fine->add_option("--iters", f.iters, "outer iterations");
    fine->add_option("--lr", f.lr, "learning rate");
    fine->add_option("--batch", f.batch, "rollouts per iteration and simple-loss batch size");
    fine->add_option("--inner-epochs", f.inner_epochs, "updates per collected buffer");
    fine->add_flag("--resume", f.resume, "continue from the checkpoint in --out");

    auto* samp = app.add_subcommand("sample", "sample motions from a checkpoint");
    add_common(samp, f);
    samp->add_option("--ckpt", f.ckpt, "checkpoint (file or directory)");
    samp->add_option("--n", f.n, "samples per condition");
    samp->add_option("--cond", f.cond, "condition name (default: every condition)");

    auto* eval = app.add_subcommand("evaluate", "physical metrics over a directory of motion files");
    add_common(eval, f);
    eval->add_option("--in", f.in, "directory of motion files");
    eval->add_flag("--rewards", f.rewards, "also dump per-frame rewards per file");

    auto* insp = app.add_subcommand("inspect-rewards", "per-frame rewards of one motion file as CSV");
    add_common(insp, f);
    insp->add_option("--in", f.in, "motion file");

    auto* sweep = app.add_subcommand("sweep-sigma", "fine-tune, sample and evaluate for each sigma of the grid");
    add_common(sweep, f);
    sweep->add_option("--data", f.data, "dataset directory");
    sweep->add_option("--ckpt", f.ckpt, "pretrained checkpoint (file or directory)");
    sweep->add_option("--iters", f.iters, "outer iterations per sigma");
    sweep->add_option("--lr", f.lr, "learning rate");
    sweep->add_option("--batch", f.batch, "rollouts per iteration");
    sweep->add_option("--inner-epochs", f.inner_epochs, "updates per collected buffer");
    sweep->add_option("--n", f.n, "samples per condition");
    sweep->add_option("--cond", f.cond, "condition name (default: every condition)");

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        reinmotion::CommandContext ctx;
        ctx.config = resolve(command, f);
        if (f.print_config) {
            std::cout << reinmotion::config_text(ctx.config);
            return EXIT_SUCCESS;
        }
        if (command == "gen-data") {
            reinmotion::cmd_gen_data(ctx, require(f.out, "--out"));
        } else if (command == "pretrain") {
            reinmotion::cmd_pretrain(ctx, require(f.data, "--data"), require(f.out, "--out"));
        } else if (command == "finetune") {
            reinmotion::cmd_finetune(ctx, require(f.data, "--data"), require(f.ckpt, "--ckpt"), require(f.out, "--out"),
                                     f.resume);
        } else if (command == "sample") {
            reinmotion::cmd_sample(ctx, require(f.ckpt, "--ckpt"), require(f.out, "--out"));
        } else if (command == "evaluate") {
            reinmotion::cmd_evaluate(ctx, require(f.in, "--in"), require(f.out, "--out"));
        } else if (command == "inspect-rewards") {
            const std::string csv = reinmotion::cmd_inspect_rewards(ctx, require(f.in, "--in"));
            if (f.out) {
                reinmotion::write_text_file(*f.out, csv);
            } else {
                std::cout << csv;
            }
        } else if (command == "sweep-sigma") {
            reinmotion::cmd_sweep_sigma(ctx, require(f.data, "--data"), require(f.ckpt, "--ckpt"), require(f.out, "--out"));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
