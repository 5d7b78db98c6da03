#pragma once

// Pretraining on the simple loss, rollout collection with the frozen pretrained
// policy, the clipped surrogate objective and the combined fine-tuning update.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/diffusion.hpp"
#include "reinmotion/metrics.hpp"
#include "reinmotion/nn/adamw.hpp"
#include "reinmotion/policy.hpp"
#include "reinmotion/rewards.hpp"

namespace reinmotion {

struct TrainConfig {
    double lambda = 0.4;
    double gamma_clip = 0.2;
    double sigma = 0.15;
    double learning_rate = 1e-4;
    double weight_decay = 1e-2;
    std::size_t inner_epochs = 4;
    std::size_t batch_size = 32;
    std::size_t total_steps = 2000;
    std::uint64_t seed = 0;
    RewardConfig rewards;
    MetricsConfig metrics;
    /// Subtract the buffer mean from every frame reward before the surrogate.
    bool normalize_rewards = false;
    /// Record wall-clock seconds in the log (makes logs run-dependent).
    bool log_timing = false;

    void validate() const {
        if (!(lambda >= 0.0)) throw std::invalid_argument("train config: lambda must be >= 0");
        if (!(gamma_clip > 0.0 && gamma_clip < 1.0)) throw std::invalid_argument("train config: gamma must lie in (0, 1)");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("train config: sigma must be > 0");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
        if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
        if (batch_size == 0) throw std::invalid_argument("train config: batch size must be >= 1");
        if (inner_epochs == 0) throw std::invalid_argument("train config: inner_epochs must be >= 1");
        rewards.validate();
        metrics.validate();
    }
};

struct PretrainConfig {
    std::size_t steps = 4000;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    std::vector<std::size_t> hidden{256, 256};
    nn::Activation activation = nn::Activation::silu;
    std::size_t diffusion_steps = 50;
    ScheduleFamily schedule = ScheduleFamily::cosine;
    double min_std = 0.01;
    std::uint64_t seed = 0;

    void validate() const {
        if (batch_size == 0) throw std::invalid_argument("pretrain config: batch size must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("pretrain config: lr must be > 0");
        if (!(weight_decay >= 0.0)) throw std::invalid_argument("pretrain config: weight_decay must be >= 0");
        if (diffusion_steps < 2) throw std::invalid_argument("pretrain config: diffusion_steps must be >= 2");
        if (!(min_std > 0.0)) throw std::invalid_argument("pretrain config: min_std must be > 0");
        for (std::size_t h : hidden) {
            if (h == 0) throw std::invalid_argument("pretrain config: hidden widths must be positive");
        }
    }
};

/// Normalized flattened motions with their condition ids.
struct FlatDataset {
    NdArray x0;
    std::vector<int> conds;

    static FlatDataset from_batch(const MotionLayout& layout, const MotionBatch& batch) {
        batch.validate();
        FlatDataset d;
        d.x0 = NdArray::matrix(batch.size(), layout.dim());
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const auto flat = layout.flatten(batch.sequences[r]);
            std::copy(flat.begin(), flat.end(), d.x0.row(r).begin());
        }
        d.conds = batch.condition_ids;
        return d;
    }

    std::size_t size() const { return conds.size(); }

    /// Rows drawn uniformly with replacement.
    FlatDataset draw(std::size_t n, Rng& rng) const {
        if (size() == 0) throw std::invalid_argument("dataset: empty");
        FlatDataset out;
        out.x0 = NdArray::matrix(n, x0.cols());
        out.conds.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(size()) - 1));
            std::copy(x0.row(idx).begin(), x0.row(idx).end(), out.x0.row(r).begin());
            out.conds[r] = conds[idx];
        }
        return out;
    }
};

/// Denoiser with a normalizer fitted to `batch` and seeded initial weights.
inline Denoiser make_denoiser(const MotionBatch& batch, std::vector<std::string> class_names, const PretrainConfig& cfg) {
    cfg.validate();
    batch.validate();
    if (batch.size() == 0) throw std::invalid_argument("pretrain: empty dataset");
    const MotionSequence& first = batch.sequences.front();
    MotionLayout layout = MotionLayout::unnormalized(first.skeleton(), first.ground(), first.frame_count());
    layout.normalizer = MotionNormalizer::fit(layout.raw_matrix(batch.sequences), cfg.min_std);
    for (int c : batch.condition_ids) {
        if (c < 0 || static_cast<std::size_t>(c) >= class_names.size()) {
            throw std::invalid_argument("pretrain: condition id " + std::to_string(c) + " has no class name");
        }
    }
    const auto widths = Denoiser::widths_for(layout, class_names.size(), cfg.hidden);
    return Denoiser{nn::DenseNet::initialized(widths, cfg.activation, cfg.seed), std::move(layout), std::move(class_names)};
}

struct PretrainResult {
    Denoiser denoiser;
    nn::AdamWState optimizer;
    std::vector<double> losses;
};

/// Minimizes the simple loss with AdamW for cfg.steps steps.
inline PretrainResult pretrain(Denoiser denoiser, const NoiseSchedule& schedule, const FlatDataset& data,
                               const PretrainConfig& cfg) {
    cfg.validate();
    denoiser.validate();
    if (data.size() == 0) throw std::invalid_argument("pretrain: empty dataset");
    Rng rng(cfg.seed);
    PretrainResult out{std::move(denoiser), {}, {}};
    out.optimizer = nn::AdamWState::for_network(out.denoiser.network, {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
    out.losses.reserve(cfg.steps);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const FlatDataset batch = data.draw(cfg.batch_size, rng);
        LossResult loss = simple_loss(out.denoiser, schedule, batch.x0, batch.conds, rng);
        if (!std::isfinite(loss.value)) {
            throw std::runtime_error("pretrain: non-finite loss at step " + std::to_string(step));
        }
        nn::adamw_step(out.optimizer, out.denoiser.network, loss.grads);
        out.losses.push_back(loss.value);
    }
    return out;
}

/// Simple loss averaged over `repeats` passes of the whole dataset with draws from `seed`.
inline double evaluate_simple_loss(const Denoiser& den, const NoiseSchedule& schedule, const FlatDataset& data,
                                   std::uint64_t seed, std::size_t repeats = 4) {
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t k = 0; k < repeats; ++k) total += simple_loss(den, schedule, data.x0, data.conds, rng).value;
    return total / static_cast<double>(repeats);
}

struct RolloutEntry {
    std::vector<double> x0_gt;
    std::size_t t = 1;
    int c = 0;
    std::vector<double> x_t;
    std::vector<double> action;
    std::vector<double> pt_log_probs;       // one per motion frame
    std::vector<FrameRewards> frame_rewards;  // frames 1..F-1
    std::vector<double> rewards;            // per-frame totals
    std::vector<double> signal;             // rewards used by the surrogate
};

struct RolloutBuffer {
    std::vector<RolloutEntry> entries;

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }

    double mean_reward() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& e : entries) {
            for (double r : e.rewards) sum += r;
            n += e.rewards.size();
        }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }

    /// Sets each entry's surrogate signal to its reward minus the buffer mean.
    void normalize() {
        const double mean = mean_reward();
        for (auto& e : entries) {
            e.signal.resize(e.rewards.size());
            for (std::size_t i = 0; i < e.rewards.size(); ++i) e.signal[i] = e.rewards[i] - mean;
        }
    }
};

/// Draws n (x0, c) pairs, noises them to a uniform step, samples actions from the
/// pretrained policy and scores every action frame by frame.
inline RolloutBuffer collect_rollouts(const GaussianPolicy& pt, const FlatDataset& data, const NoiseSchedule& schedule,
                                      std::size_t n, Rng& rng, const RewardConfig& reward_cfg,
                                      bool normalize_rewards = false) {
    if (n == 0) throw std::invalid_argument("collect_rollouts: n must be >= 1");
    if (data.size() == 0) throw std::invalid_argument("collect_rollouts: empty dataset");
    pt.validate();
    const std::size_t dim = pt.denoiser.motion_dim();
    const std::size_t width = pt.denoiser.layout.frame_width();
    RolloutBuffer buf;
    buf.entries.resize(n);
    NdArray x_t = NdArray::matrix(n, dim);
    std::vector<std::size_t> steps(n);
    std::vector<int> conds(n);
    NdArray unit = NdArray::matrix(n, dim);
    std::vector<double> noise(dim);
    for (std::size_t r = 0; r < n; ++r) {
        auto& e = buf.entries[r];
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(data.size()) - 1));
        e.x0_gt.assign(data.x0.row(idx).begin(), data.x0.row(idx).end());
        e.c = data.conds[idx];
        e.t = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(schedule.steps())));
        rng.fill_gaussian(noise);
        e.x_t = q_sample(schedule, e.x0_gt, e.t, noise);
        rng.fill_gaussian(unit.row(r));
        std::copy(e.x_t.begin(), e.x_t.end(), x_t.row(r).begin());
        steps[r] = e.t;
        conds[r] = e.c;
    }
    const NdArray mean = predict_x0_batch(pt.denoiser, x_t, steps, conds);
    for (std::size_t r = 0; r < n; ++r) {
        auto& e = buf.entries[r];
        const auto mu = mean.row(r);
        const auto v = unit.row(r);
        e.action.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) e.action[k] = mu[k] + pt.sigma * v[k];
        e.pt_log_probs = frame_log_density(e.action, mu, pt.sigma, width);
        e.frame_rewards = sequence_rewards(pt.denoiser.layout.unflatten(e.action), reward_cfg);
        e.rewards = total_rewards(e.frame_rewards);
        e.signal = e.rewards;
    }
    if (normalize_rewards) buf.normalize();
    return buf;
}

/// One surrogate term: min(r R, clip(r, 1 - gamma, 1 + gamma) R). gamma may be +inf.
inline double ppo_term(double r, double reward, double gamma) {
    return std::min(r * reward, std::clamp(r, 1.0 - gamma, 1.0 + gamma) * reward);
}

/// Surrogate inputs in matrix form: actions (N x D), pretrained per-frame
/// log-probabilities (N x F) and frame rewards (N x (F - 1)) paired with frames 1..F-1.
struct PpoBatch {
    NdArray actions;
    NdArray pt_log_probs;
    NdArray signals;

    static PpoBatch from_buffer(const RolloutBuffer& buf) {
        if (buf.empty()) throw std::invalid_argument("ppo_loss: empty buffer");
        const auto& first = buf.entries.front();
        PpoBatch b;
        b.actions = NdArray::matrix(buf.size(), first.action.size());
        b.pt_log_probs = NdArray::matrix(buf.size(), first.pt_log_probs.size());
        b.signals = NdArray::matrix(buf.size(), first.signal.size());
        for (std::size_t r = 0; r < buf.size(); ++r) {
            const auto& e = buf.entries[r];
            if (e.action.size() != b.actions.cols() || e.pt_log_probs.size() != b.pt_log_probs.cols() ||
                e.signal.size() != b.signals.cols()) {
                throw std::invalid_argument("ppo_loss: buffer entries differ in shape");
            }
            std::copy(e.action.begin(), e.action.end(), b.actions.row(r).begin());
            std::copy(e.pt_log_probs.begin(), e.pt_log_probs.end(), b.pt_log_probs.row(r).begin());
            std::copy(e.signal.begin(), e.signal.end(), b.signals.row(r).begin());
        }
        return b;
    }
};

struct PpoResult {
    double objective = 0.0;
    double clip_fraction = 0.0;
    NdArray d_means;  // d objective / d policy means
};

/// Mean over entries and paired frames of the clipped surrogate, given the RL
/// policy means for every entry.
inline PpoResult ppo_objective(const NdArray& means, const PpoBatch& b, double sigma, double gamma,
                               std::size_t frame_width) {
    const std::size_t n = b.actions.rows();
    const std::size_t frames = b.pt_log_probs.cols();
    const std::size_t paired = b.signals.cols();
    if (n == 0) throw std::invalid_argument("ppo_loss: empty buffer");
    if (means.shape() != b.actions.shape() || frames * frame_width != b.actions.cols() || paired + 1 != frames ||
        b.pt_log_probs.rows() != n || b.signals.rows() != n) {
        throw std::invalid_argument("ppo_loss: batch shapes are inconsistent");
    }
    PpoResult out;
    out.d_means = NdArray::matrix(n, b.actions.cols());
    const double count = static_cast<double>(n * paired);
    const double var = sigma * sigma;
    std::size_t clipped = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto a = b.actions.row(r);
        const auto mu = means.row(r);
        const auto lp = frame_log_density(a, mu, sigma, frame_width);
        auto grad = out.d_means.row(r);
        for (std::size_t i = 1; i < frames; ++i) {
            const double reward = b.signals(r, i - 1);
            const double log_diff = lp[i] - b.pt_log_probs(r, i);
            const double ratio = std::exp(clamp_log_ratio(log_diff));
            const double plain = ratio * reward;
            const double clipped_term = std::clamp(ratio, 1.0 - gamma, 1.0 + gamma) * reward;
            out.objective += std::min(plain, clipped_term);
            if (clipped_term < plain) {
                ++clipped;
                continue;
            }
            if (std::abs(log_diff) > kLogRatioClamp) continue;
            // d r / d mu_k = r (a_k - mu_k) / sigma^2
            const double coef = reward * ratio / (var * count);
            for (std::size_t k = i * frame_width; k < (i + 1) * frame_width; ++k) grad[k] = coef * (a[k] - mu[k]);
        }
    }
    out.objective /= count;
    out.clip_fraction = static_cast<double>(clipped) / count;
    return out;
}

/// Surrogate value and parameter gradients for the RL policy over a buffer.
struct PpoLoss {
    double objective = 0.0;
    double clip_fraction = 0.0;
    Gradients grads;
};

inline NdArray rollout_input(const Denoiser& den, const RolloutBuffer& buf) {
    NdArray x_t = NdArray::matrix(buf.size(), den.motion_dim());
    std::vector<std::size_t> steps(buf.size());
    std::vector<int> conds(buf.size());
    for (std::size_t r = 0; r < buf.size(); ++r) {
        const auto& e = buf.entries[r];
        if (e.x_t.size() != den.motion_dim()) throw std::invalid_argument("ppo_loss: entry width mismatch");
        std::copy(e.x_t.begin(), e.x_t.end(), x_t.row(r).begin());
        steps[r] = e.t;
        conds[r] = e.c;
    }
    return denoiser_input(den, x_t, steps, conds);
}

inline PpoLoss ppo_loss(const GaussianPolicy& rl, const RolloutBuffer& buf, double gamma_clip) {
    const PpoBatch b = PpoBatch::from_buffer(buf);
    const nn::ForwardTape tape = nn::forward_tape(rl.denoiser.network, rollout_input(rl.denoiser, buf));
    PpoResult res = ppo_objective(tape.output, b, rl.sigma, gamma_clip, rl.denoiser.layout.frame_width());
    return {res.objective, res.clip_fraction, nn::backward(rl.denoiser.network, tape, res.d_means)};
}

struct CombinedResult {
    double target = 0.0;  // -ppo_objective + lambda * simple_loss (minimized)
    double ppo_objective = 0.0;
    double simple_loss = 0.0;
    double clip_fraction = 0.0;
    Gradients grads;
};

/// Value and gradient of -L_PPO + lambda * L_simple for a network whose output is the
/// policy mean, with the surrogate evaluated on `ppo_input` rows and the regression
/// term on (`simple_input`, `simple_target`).
inline CombinedResult combined_objective(const nn::DenseNet& net, const NdArray& ppo_input, const PpoBatch& b,
                                         double sigma, double gamma, std::size_t frame_width,
                                         const NdArray& simple_input, const NdArray& simple_target, double lambda) {
    const nn::ForwardTape tape = nn::forward_tape(net, ppo_input);
    PpoResult ppo = ppo_objective(tape.output, b, sigma, gamma, frame_width);
    for (double& g : ppo.d_means.values()) g = -g;
    CombinedResult out;
    out.ppo_objective = ppo.objective;
    out.clip_fraction = ppo.clip_fraction;
    out.grads = nn::backward(net, tape, ppo.d_means);
    LossResult simple = mse_loss(net, simple_input, simple_target);
    out.simple_loss = simple.value;
    out.grads.add_scaled(simple.grads, lambda);
    out.target = -ppo.objective + lambda * simple.value;
    return out;
}

struct StepStats {
    double ppo_objective = 0.0;
    double simple_loss = 0.0;
    double clip_fraction = 0.0;
};

/// One AdamW step of the combined target; the simple term draws fresh (t, noise).
inline StepStats combined_step(GaussianPolicy& rl, nn::AdamWState& opt, const RolloutBuffer& buf,
                               const FlatDataset& batch, const NoiseSchedule& schedule, const TrainConfig& cfg,
                               Rng& rng) {
    if (buf.empty() || batch.size() == 0) throw std::invalid_argument("combined_step: empty buffer or batch");
    const Denoiser& den = rl.denoiser;
    const NoiseDraws draws = draw_noise(schedule, batch.size(), den.motion_dim(), rng);
    const NdArray simple_input = denoiser_input(den, q_sample_batch(schedule, batch.x0, draws), draws.steps, batch.conds);
    CombinedResult res = combined_objective(den.network, rollout_input(den, buf), PpoBatch::from_buffer(buf), rl.sigma,
                                            cfg.gamma_clip, den.layout.frame_width(), simple_input, batch.x0, cfg.lambda);
    nn::adamw_step(opt, rl.denoiser.network, res.grads);
    return {res.ppo_objective, res.simple_loss, res.clip_fraction};
}

/// Mean per-frame total reward of the policy's x0 predictions (no action noise) on
/// the buffer's noised inputs.
inline double policy_mean_reward(const GaussianPolicy& policy, const RolloutBuffer& buf, const RewardConfig& cfg) {
    if (buf.empty()) throw std::invalid_argument("policy_mean_reward: empty buffer");
    const NdArray means = nn::forward(policy.denoiser.network, rollout_input(policy.denoiser, buf));
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < buf.size(); ++r) {
        for (double v : total_rewards(sequence_rewards(policy.denoiser.layout.unflatten(means.row(r)), cfg))) {
            sum += v;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

struct TrainRecord {
    std::size_t iteration = 0;
    double mean_reward = 0.0;     // RL policy, sigma removed, on the buffer's inputs
    double rollout_reward = 0.0;  // pretrained-policy actions in the buffer
    double ppo_obj = 0.0;
    double simple_loss = 0.0;
    double clip_fraction = 0.0;
    std::optional<double> elapsed_s;
};

inline nlohmann::json to_json(const TrainRecord& r) {
    nlohmann::json j{{"iteration", r.iteration},         {"mean_reward", r.mean_reward},
                     {"rollout_reward", r.rollout_reward}, {"ppo_obj", r.ppo_obj},
                     {"simple_loss", r.simple_loss},       {"clip_fraction", r.clip_fraction}};
    if (r.elapsed_s) j["elapsed_s"] = *r.elapsed_s;
    return j;
}

inline TrainRecord train_record_from_json(const nlohmann::json& j) {
    TrainRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.mean_reward = j.at("mean_reward").get<double>();
    r.rollout_reward = j.at("rollout_reward").get<double>();
    r.ppo_obj = j.at("ppo_obj").get<double>();
    r.simple_loss = j.at("simple_loss").get<double>();
    r.clip_fraction = j.at("clip_fraction").get<double>();
    if (j.contains("elapsed_s")) r.elapsed_s = j.at("elapsed_s").get<double>();
    return r;
}

using TrainLog = std::vector<TrainRecord>;

inline std::string train_log_jsonl(const TrainLog& log) {
    std::string out;
    for (const auto& r : log) out += to_json(r).dump() + "\n";
    return out;
}

/// Resumable fine-tuning state.
struct FinetuneState {
    GaussianPolicy rl;
    nn::AdamWState optimizer;
    std::size_t iteration = 0;
    Rng rng;
    TrainLog log;

    static FinetuneState start(const Denoiser& pretrained, const TrainConfig& cfg) {
        FinetuneState s{GaussianPolicy{pretrained, cfg.sigma}, {}, 0, Rng(cfg.seed), {}};
        s.optimizer = nn::AdamWState::for_network(pretrained.network,
                                                  {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
        return s;
    }
};

/// Runs outer iterations until state.iteration reaches cfg.total_steps. Each iteration
/// collects batch_size rollouts from the frozen pretrained policy and makes
/// inner_epochs combined updates. `on_iteration` runs after each logged iteration.
inline void finetune(const Denoiser& pretrained, const NoiseSchedule& schedule, const FlatDataset& data,
                     const TrainConfig& cfg, FinetuneState& state,
                     const std::function<void(const FinetuneState&)>& on_iteration = {}) {
    cfg.validate();
    const GaussianPolicy pt{pretrained, cfg.sigma};
    pt.validate();
    if (!(state.rl.denoiser.layout == pretrained.layout) || state.rl.sigma != cfg.sigma) {
        throw std::invalid_argument("finetune: RL policy does not match the pretrained layout or sigma");
    }
    const auto started = std::chrono::steady_clock::now();
    while (state.iteration < cfg.total_steps) {
        const RolloutBuffer buf = collect_rollouts(pt, data, schedule, cfg.batch_size, state.rng, cfg.rewards,
                                                   cfg.normalize_rewards);
        TrainRecord rec;
        rec.iteration = state.iteration;
        rec.mean_reward = policy_mean_reward(state.rl, buf, cfg.rewards);
        rec.rollout_reward = buf.mean_reward();
        for (std::size_t epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
            const FlatDataset batch = data.draw(cfg.batch_size, state.rng);
            StepStats st;
            try {
                st = combined_step(state.rl, state.optimizer, buf, batch, schedule, cfg, state.rng);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("finetune iteration " + std::to_string(state.iteration) + ": " + e.what());
            }
            rec.ppo_obj += st.ppo_objective / static_cast<double>(cfg.inner_epochs);
            rec.simple_loss += st.simple_loss / static_cast<double>(cfg.inner_epochs);
            rec.clip_fraction += st.clip_fraction / static_cast<double>(cfg.inner_epochs);
        }
        if (cfg.log_timing) {
            rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        }
        state.log.push_back(rec);
        ++state.iteration;
        if (on_iteration) on_iteration(state);
    }
}

}  // namespace reinmotion
