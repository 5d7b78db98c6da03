#pragma once

// Command implementations behind the reinmotion executable. Each command reads a
// resolved run config and writes its artifacts; failures are thrown.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/checkpoint.hpp"
#include "reinmotion/config.hpp"
#include "reinmotion/dataset_io.hpp"
#include "reinmotion/metrics.hpp"
#include "reinmotion/rewards.hpp"
#include "reinmotion/synthdata.hpp"
#include "reinmotion/train.hpp"

namespace reinmotion {

namespace fs = std::filesystem;

struct CommandContext {
    nlohmann::ordered_json config = default_config();
    std::ostream* out = &std::cout;
    std::ostream* warn = &std::cerr;
};

inline fs::path checkpoint_file(const fs::path& p) { return fs::is_directory(p) ? p / "checkpoint.json" : p; }

inline std::string config_text(const nlohmann::ordered_json& cfg) { return cfg.dump(2) + "\n"; }

inline void cmd_gen_data(const CommandContext& ctx, const fs::path& out_dir) {
    const DataRequest req = data_request_from(ctx.config);
    const std::uint64_t seed = seed_from(ctx.config);
    const Dataset ds = build_dataset(req.n, req.corrupt, seed, req.options);
    write_dataset(ds, out_dir, {{"n", req.n}, {"corrupt", req.corrupt}, {"seed", seed}});
    *ctx.out << "wrote " << ds.batch.size() << " motion files to " << out_dir.string() << "\n";
}

inline void cmd_pretrain(const CommandContext& ctx, const fs::path& data_dir, const fs::path& out_dir) {
    const PretrainConfig pcfg = pretrain_config_from(ctx.config);
    const TrainConfig tcfg = train_config_from(ctx.config);
    const LoadedDataset data = read_dataset(data_dir);
    if (data.data.batch.empty()) throw std::invalid_argument("pretrain: dataset " + data_dir.string() + " is empty");
    Denoiser den = make_denoiser(data.data.batch, data.data.class_names, pcfg);
    const NoiseSchedule schedule = NoiseSchedule::build(pcfg.diffusion_steps, pcfg.schedule);
    const FlatDataset flat = FlatDataset::from_batch(den.layout, data.data.batch);
    PretrainResult res = pretrain(std::move(den), schedule, flat, pcfg);

    ensure_directory(out_dir);
    Checkpoint ck;
    ck.kind = "pretrained";
    ck.denoiser = std::move(res.denoiser);
    ck.schedule = schedule;
    ck.sigma = tcfg.sigma;
    ck.optimizer = std::move(res.optimizer);
    ck.config = ctx.config;
    ck.iteration = pcfg.steps;
    write_checkpoint(ck, out_dir / "checkpoint.json");
    std::string log;
    for (std::size_t k = 0; k < res.losses.size(); ++k) {
        log += nlohmann::json{{"step", k}, {"simple_loss", res.losses[k]}}.dump() + "\n";
    }
    write_text_file(out_dir / "pretrain_log.jsonl", log);
    write_text_file(out_dir / "config.json", config_text(ctx.config));
    *ctx.out << "pretrained " << pcfg.steps << " steps";
    if (!res.losses.empty()) *ctx.out << ", final simple loss " << res.losses.back();
    *ctx.out << "\n";
}

/// Fine-tunes from the checkpoint at `ckpt`. With `resume`, continues from
/// out_dir/checkpoint.json when it holds a fine-tuning state.
inline void cmd_finetune(const CommandContext& ctx, const fs::path& data_dir, const fs::path& ckpt,
                         const fs::path& out_dir, bool resume = false) {
    const TrainConfig tcfg = train_config_from(ctx.config);
    const std::size_t every = detail::get_key<std::size_t>(ctx.config, "train", "checkpoint_every");
    const fs::path ckpt_path = checkpoint_file(ckpt);
    if (!fs::exists(ckpt_path)) throw std::invalid_argument("finetune: missing checkpoint " + ckpt_path.string());
    const Checkpoint pt = read_checkpoint(ckpt_path);
    const LoadedDataset data = read_dataset(data_dir);
    const FlatDataset flat = FlatDataset::from_batch(pt.denoiser.layout, data.data.batch);
    for (int c : flat.conds) pt.denoiser.check_condition(c);

    Denoiser frozen = pt.denoiser;
    FinetuneState state = FinetuneState::start(pt.denoiser, tcfg);
    const fs::path out_ckpt = out_dir / "checkpoint.json";
    if (resume && fs::exists(out_ckpt)) {
        Checkpoint prev = read_checkpoint(out_ckpt);
        if (prev.kind != "finetuned" || !prev.optimizer || !prev.rng_state || !prev.pretrained_network) {
            throw std::invalid_argument("finetune: " + out_ckpt.string() + " holds no resumable state");
        }
        if (prev.sigma != tcfg.sigma) throw std::invalid_argument("finetune: resumed checkpoint uses a different sigma");
        frozen.network = *prev.pretrained_network;
        state.rl = GaussianPolicy{prev.denoiser, prev.sigma};
        state.optimizer = *prev.optimizer;
        state.iteration = prev.iteration;
        state.rng = Rng::deserialize(*prev.rng_state);
        state.log = prev.log;
    }

    ensure_directory(out_dir);
    auto save = [&](const FinetuneState& s) {
        Checkpoint ck;
        ck.kind = "finetuned";
        ck.denoiser = s.rl.denoiser;
        ck.schedule = pt.schedule;
        ck.sigma = s.rl.sigma;
        ck.optimizer = s.optimizer;
        ck.config = ctx.config;
        ck.iteration = s.iteration;
        ck.rng_state = s.rng.serialize();
        ck.pretrained_network = frozen.network;
        ck.log = s.log;
        write_checkpoint(ck, out_ckpt);
    };
    finetune(frozen, pt.schedule, flat, tcfg, state, [&](const FinetuneState& s) {
        if (every > 0 && s.iteration % every == 0 && s.iteration < tcfg.total_steps) save(s);
    });
    save(state);
    write_text_file(out_dir / "train_log.jsonl", train_log_jsonl(state.log));
    write_text_file(out_dir / "config.json", config_text(ctx.config));
    *ctx.out << "fine-tuned to iteration " << state.iteration;
    if (!state.log.empty()) *ctx.out << ", last mean reward " << state.log.back().mean_reward;
    *ctx.out << "\n";
}

inline void cmd_sample(const CommandContext& ctx, const fs::path& ckpt, const fs::path& out_dir) {
    const Checkpoint ck = read_checkpoint(checkpoint_file(ckpt));
    const auto n = detail::get_key<std::size_t>(ctx.config, "sample", "n");
    const auto cond = detail::get_key<std::string>(ctx.config, "sample", "cond");
    const bool posterior_noise = detail::get_key<bool>(ctx.config, "sample", "posterior_noise");
    if (n == 0) throw ConfigError("config: \"sample.n\" must be >= 1");
    std::vector<int> classes;
    if (cond.empty()) {
        for (std::size_t c = 0; c < ck.denoiser.class_count(); ++c) classes.push_back(static_cast<int>(c));
    } else {
        classes.push_back(ck.denoiser.condition_id(cond));
    }
    Rng rng(seed_from(ctx.config));
    Dataset ds;
    ds.class_names = ck.denoiser.class_names;
    for (int c : classes) {
        const std::vector<int> conds(n, c);
        for (auto& seq : sample_batch(ck.denoiser, ck.schedule, conds, rng, !posterior_noise)) {
            quantize_to_storage(seq);
            ds.batch.sequences.push_back(std::move(seq));
            ds.batch.condition_ids.push_back(c);
        }
    }
    ensure_directory(out_dir);
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.batch.size(); ++i) {
        const std::string name = numbered_name("sample_", i, ds.batch.size());
        write_motion(ds.batch.sequences[i], out_dir / name);
        const int c = ds.batch.condition_ids[i];
        entries.push_back({{"file", name}, {"condition_id", c}, {"condition", ds.class_names[c]}});
    }
    const nlohmann::json index{{"version", 1},
                               {"class_names", ds.class_names},
                               {"checkpoint_kind", ck.kind},
                               {"seed", seed_from(ctx.config)},
                               {"entries", std::move(entries)}};
    write_text_file(out_dir / kIndexFile, index.dump(2) + "\n");
    *ctx.out << "wrote " << ds.batch.size() << " samples to " << out_dir.string() << "\n";
}

struct EvaluationResult {
    MetricsReport report;
    std::vector<std::string> files;
    std::vector<std::string> skipped;
};

/// Metrics over every motion file in `in_dir` (index order when an index exists,
/// otherwise sorted *.json). Unreadable files are skipped with a warning.
inline EvaluationResult cmd_evaluate(const CommandContext& ctx, const fs::path& in_dir, const fs::path& out_dir) {
    const MetricsConfig mcfg = metrics_config_from(ctx.config);
    const RewardConfig rcfg = reward_config_from(ctx.config);
    const bool dump_rewards = detail::get_key<bool>(ctx.config, "evaluate", "rewards");
    if (!fs::is_directory(in_dir)) throw std::invalid_argument("evaluate: " + in_dir.string() + " is not a directory");

    std::vector<std::string> names;
    std::optional<nlohmann::json> index;
    if (fs::exists(in_dir / kIndexFile)) {
        index = read_index(in_dir);
        try {
            for (const auto& e : index->at("entries")) names.push_back(e.at("file").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument((in_dir / kIndexFile).string() + ": " + e.what());
        }
    } else {
        for (const auto& entry : fs::directory_iterator(in_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") names.push_back(entry.path().filename().string());
        }
        std::sort(names.begin(), names.end());
    }

    EvaluationResult res;
    std::vector<MotionSequence> seqs;
    std::vector<std::size_t> index_pos;
    for (std::size_t i = 0; i < names.size(); ++i) {
        try {
            seqs.push_back(read_motion(in_dir / names[i]));
            res.files.push_back(names[i]);
            index_pos.push_back(i);
        } catch (const std::exception& e) {
            *ctx.warn << "warning: skipping " << names[i] << ": " << e.what() << "\n";
            res.skipped.push_back(names[i] + ": " + e.what());
        }
    }
    if (seqs.empty()) throw std::invalid_argument("evaluate: no readable motion files in " + in_dir.string());
    res.report = batch_report(seqs, mcfg);

    ensure_directory(out_dir);
    std::string csv = report_csv(res.report, res.files);
    for (const auto& s : res.skipped) csv += "# skipped " + s + "\n";
    write_text_file(out_dir / "report.csv", csv);
    nlohmann::json doc = to_json(res.report, res.files);
    doc["skipped"] = res.skipped;

    // Oracle comparison for generated datasets that carry artifact records.
    if (index && res.skipped.empty()) {
        try {
            std::vector<SampleMetrics> expected;
            for (const auto& e : index->at("entries")) {
                if (!e.contains("artifact")) break;
                expected.push_back(sample_metrics_from_json(e.at("artifact").at("expected")));
            }
            if (expected.size() == seqs.size()) {
                const SampleMetrics agg = mean_metrics(expected);
                double worst = 0.0;
                for (std::size_t i = 0; i < expected.size(); ++i) {
                    const auto& a = res.report.per_sample[i];
                    const auto& b = expected[i];
                    for (double d : {a.skate_ratio - b.skate_ratio, a.float_m - b.float_m, a.penetrate_m - b.penetrate_m,
                                     a.clip_m - b.clip_m}) {
                        worst = std::max(worst, std::abs(d));
                    }
                }
                doc["oracle"] = {{"aggregate", to_json(agg)}, {"max_abs_diff", worst}};
            }
        } catch (const nlohmann::json::exception& e) {
            *ctx.warn << "warning: ignoring malformed artifact records: " << e.what() << "\n";
        }
    }
    write_text_file(out_dir / "report.json", doc.dump(2) + "\n");

    if (dump_rewards) {
        ensure_directory(out_dir / "rewards");
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            const std::string stem = fs::path(res.files[i]).stem().string();
            write_text_file(out_dir / "rewards" / (stem + ".csv"), rewards_csv(sequence_rewards(seqs[i], rcfg)));
        }
    }
    const auto& a = res.report.aggregate;
    char line[256];
    std::snprintf(line, sizeof line, "%zu files  skate_ratio %.4f  float %.4f  penetrate %.4f  clip %.4f\n", seqs.size(),
                  a.skate_ratio, a.float_m, a.penetrate_m, a.clip_m);
    *ctx.out << line;
    return res;
}

inline std::string cmd_inspect_rewards(const CommandContext& ctx, const fs::path& motion_file) {
    const RewardConfig rcfg = reward_config_from(ctx.config);
    return rewards_csv(sequence_rewards(read_motion(motion_file), rcfg));
}

inline std::string sigma_label(double sigma) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", sigma);
    return buf;
}

struct SweepRow {
    double sigma = 0.0;
    std::optional<SampleMetrics> metrics;
    std::string error;
};

/// Fine-tune, sample and evaluate once per sigma. Failing sigmas are reported and
/// the remaining ones still run; the table is written before any error is raised.
inline std::vector<SweepRow> cmd_sweep_sigma(const CommandContext& ctx, const fs::path& data_dir, const fs::path& ckpt,
                                             const fs::path& out_dir) {
    const auto sigmas = detail::get_key<std::vector<double>>(ctx.config, "sweep", "sigmas");
    if (sigmas.empty()) throw ConfigError("config: \"sweep.sigmas\" is empty");
    ensure_directory(out_dir);
    std::vector<SweepRow> rows;
    for (double sigma : sigmas) {
        SweepRow row;
        row.sigma = sigma;
        const fs::path dir = out_dir / ("sigma_" + sigma_label(sigma));
        try {
            CommandContext sub = ctx;
            set_config_value(sub.config, "train.sigma", sigma);
            cmd_finetune(sub, data_dir, ckpt, dir / "finetune");
            cmd_sample(sub, dir / "finetune", dir / "samples");
            row.metrics = cmd_evaluate(sub, dir / "samples", dir / "eval").report.aggregate;
        } catch (const std::exception& e) {
            row.error = e.what();
            *ctx.warn << "error: sigma " << sigma_label(sigma) << ": " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "sigma,skate_ratio,float_m,penetrate_m,clip_m\n";
    for (const auto& r : rows) {
        csv << sigma_label(r.sigma);
        if (r.metrics) {
            csv << ',' << r.metrics->skate_ratio << ',' << r.metrics->float_m << ',' << r.metrics->penetrate_m << ','
                << r.metrics->clip_m << '\n';
        } else {
            csv << ",,,,\n";
        }
    }
    write_text_file(out_dir / "sweep.csv", csv.str());
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.metrics ? 0 : 1;
    if (failed > 0) throw std::runtime_error("sweep-sigma: " + std::to_string(failed) + " sigma value(s) failed");
    return rows;
}

}  // namespace reinmotion
