#pragma once

// Denoising diffusion in the x0-prediction parameterization: the denoiser maps
// (noised motion, step, condition) to an estimate of the clean motion, and the
// reverse chain re-noises that estimate through the DDPM posterior.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reinmotion/motion.hpp"
#include "reinmotion/nn/dense_net.hpp"
#include "reinmotion/random.hpp"

namespace reinmotion {

using nn::Gradients;
using nn::NdArray;

enum class ScheduleFamily { cosine, linear };

inline const char* to_string(ScheduleFamily f) { return f == ScheduleFamily::cosine ? "cosine" : "linear"; }

inline ScheduleFamily schedule_family_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleFamily::cosine;
    if (s == "linear") return ScheduleFamily::linear;
    throw std::invalid_argument("unknown schedule family \"" + s + "\"");
}

/// Per-step betas with cumulative alpha products. Steps are 1-based; alpha_bar(0) = 1.
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    static NoiseSchedule build(std::size_t steps, ScheduleFamily family = ScheduleFamily::cosine) {
        if (steps < 2) throw std::invalid_argument("build_schedule: at least two diffusion steps are required");
        std::vector<double> betas(steps);
        if (family == ScheduleFamily::cosine) {
            constexpr double s = 0.008;
            auto f = [&](double t) {
                const double c = std::cos((t / static_cast<double>(steps) + s) / (1.0 + s) * std::numbers::pi / 2.0);
                return c * c;
            };
            for (std::size_t t = 1; t <= steps; ++t) {
                betas[t - 1] = std::min(1.0 - f(static_cast<double>(t)) / f(static_cast<double>(t - 1)), 0.999);
            }
        } else {
            // Reference range 1e-4..0.02 at 1000 steps, rescaled to the step count.
            const double scale = 1000.0 / static_cast<double>(steps);
            const double lo = 1e-4 * scale;
            const double hi = 0.02 * scale;
            for (std::size_t t = 0; t < steps; ++t) {
                const double b = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(steps - 1);
                betas[t] = std::min(b, 0.999);
            }
        }
        NoiseSchedule out = from_betas(std::move(betas));
        out.family_ = family;
        return out;
    }

    static NoiseSchedule from_betas(std::vector<double> betas) {
        if (betas.empty()) throw std::invalid_argument("noise schedule: no steps");
        NoiseSchedule s;
        s.alpha_bar_.assign(betas.size() + 1, 1.0);
        for (std::size_t t = 0; t < betas.size(); ++t) {
            if (!(betas[t] > 0.0 && betas[t] < 1.0)) {
                throw std::invalid_argument("noise schedule: beta must lie in (0, 1)");
            }
            s.alpha_bar_[t + 1] = s.alpha_bar_[t] * (1.0 - betas[t]);
        }
        s.betas_ = std::move(betas);
        return s;
    }

    std::size_t steps() const noexcept { return betas_.size(); }
    ScheduleFamily family() const noexcept { return family_; }
    std::span<const double> betas() const noexcept { return betas_; }

    double beta(std::size_t t) const { return betas_.at(check(t) - 1); }
    double alpha(std::size_t t) const { return 1.0 - beta(t); }
    double alpha_bar(std::size_t t) const {
        if (t > steps()) throw std::out_of_range("noise schedule: step out of range");
        return alpha_bar_[t];
    }

    /// Coefficient on the x0 estimate in the posterior mean of q(x_{t-1} | x_t, x0).
    double posterior_x0_coef(std::size_t t) const {
        return beta(t) * std::sqrt(alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
    }
    /// Coefficient on x_t in the posterior mean.
    double posterior_xt_coef(std::size_t t) const {
        return std::sqrt(alpha(t)) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
    }
    double posterior_variance(std::size_t t) const {
        return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
    }

private:
    std::size_t check(std::size_t t) const {
        if (t < 1 || t > steps()) throw std::out_of_range("noise schedule: step " + std::to_string(t) + " out of range");
        return t;
    }

    std::vector<double> betas_;
    std::vector<double> alpha_bar_{1.0};
    ScheduleFamily family_ = ScheduleFamily::cosine;
};

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise. t = 0 returns x0.
inline std::vector<double> q_sample(const NoiseSchedule& schedule, std::span<const double> x0, std::size_t t,
                                    std::span<const double> noise) {
    if (noise.size() != x0.size()) throw std::invalid_argument("q_sample: noise shape does not match x0");
    const double ab = schedule.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
    return out;
}

/// Per-dimension affine normalization of flattened motion, applied before the network.
struct MotionNormalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static MotionNormalizer identity(std::size_t dim) {
        return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
    }

    /// Dataset mean and standard deviation per dimension, with stddev floored at `min_std`.
    static MotionNormalizer fit(const NdArray& raw, double min_std) {
        const std::size_t n = raw.rows();
        const std::size_t d = raw.cols();
        if (n == 0) throw std::invalid_argument("normalizer: empty dataset");
        MotionNormalizer out{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < d; ++k) out.mean[k] += raw(r, k);
        }
        for (double& m : out.mean) m /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < d; ++k) {
                const double e = raw(r, k) - out.mean[k];
                out.stddev[k] += e * e;
            }
        }
        for (double& s : out.stddev) s = std::max(std::sqrt(s / static_cast<double>(n)), min_std);
        return out;
    }

    friend bool operator==(const MotionNormalizer&, const MotionNormalizer&) = default;
};

/// Maps MotionSequence <-> flattened normalized vectors. Flattening order is
/// frame-major, then joint, then coordinate.
struct MotionLayout {
    Skeleton skeleton;
    GroundPlane ground;
    std::size_t frames = 0;
    MotionNormalizer normalizer;

    static MotionLayout unnormalized(Skeleton skeleton, GroundPlane ground, std::size_t frames) {
        MotionLayout l{std::move(skeleton), ground, frames, {}};
        l.normalizer = MotionNormalizer::identity(l.dim());
        return l;
    }

    std::size_t frame_width() const { return skeleton.joint_count() * 3; }
    std::size_t dim() const { return frames * frame_width(); }

    void validate() const {
        skeleton.validate();
        if (frames < 2) throw std::invalid_argument("motion layout: at least two frames are required");
        if (normalizer.mean.size() != dim() || normalizer.stddev.size() != dim()) {
            throw std::invalid_argument("motion layout: normalizer width does not match motion dimension");
        }
        for (double s : normalizer.stddev) {
            if (!(s > 0.0)) throw std::invalid_argument("motion layout: normalizer stddev must be positive");
        }
    }

    std::vector<double> flatten(const MotionSequence& seq) const {
        if (seq.frame_count() != frames || seq.skeleton() != skeleton) {
            throw std::invalid_argument("motion layout: sequence does not match layout");
        }
        std::vector<double> out(dim());
        const auto p = seq.positions();
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (p[k] - normalizer.mean[k]) / normalizer.stddev[k];
        return out;
    }

    MotionSequence unflatten(std::span<const double> flat) const {
        if (flat.size() != dim()) throw std::invalid_argument("motion layout: flattened width mismatch");
        std::vector<double> positions(dim());
        for (std::size_t k = 0; k < positions.size(); ++k) {
            positions[k] = flat[k] * normalizer.stddev[k] + normalizer.mean[k];
        }
        return MotionSequence(skeleton, ground, frames, std::move(positions));
    }

    /// Raw (meters) flattened positions, one row per sequence.
    NdArray raw_matrix(std::span<const MotionSequence> seqs) const {
        NdArray out = NdArray::matrix(seqs.size(), dim());
        for (std::size_t r = 0; r < seqs.size(); ++r) {
            if (seqs[r].frame_count() != frames) throw std::invalid_argument("motion layout: frame count mismatch");
            std::copy(seqs[r].positions().begin(), seqs[r].positions().end(), out.row(r).begin());
        }
        return out;
    }

    friend bool operator==(const MotionLayout&, const MotionLayout&) = default;
};

inline constexpr std::size_t kTimeEmbeddingDim = 16;

/// Sinusoidal embedding of the step: sin/cos at 8 frequencies spaced geometrically
/// from 1 down to 1e-4 (periods up to 10^4 steps).
inline std::array<double, kTimeEmbeddingDim> timestep_embedding(std::size_t t) {
    constexpr std::size_t half = kTimeEmbeddingDim / 2;
    std::array<double, kTimeEmbeddingDim> out{};
    for (std::size_t k = 0; k < half; ++k) {
        const double freq = std::pow(1e4, -static_cast<double>(k) / static_cast<double>(half - 1));
        out[k] = std::sin(static_cast<double>(t) * freq);
        out[half + k] = std::cos(static_cast<double>(t) * freq);
    }
    return out;
}

/// Network wrapper: input = [x_t | time embedding (16) | one-hot condition], output = x0 estimate.
struct Denoiser {
    nn::DenseNet network;
    MotionLayout layout;
    std::vector<std::string> class_names;

    std::size_t class_count() const noexcept { return class_names.size(); }
    std::size_t motion_dim() const { return layout.dim(); }
    std::size_t input_width() const { return motion_dim() + kTimeEmbeddingDim + class_count(); }

    static std::vector<std::size_t> widths_for(const MotionLayout& layout, std::size_t classes,
                                               const std::vector<std::size_t>& hidden) {
        std::vector<std::size_t> w{layout.dim() + kTimeEmbeddingDim + classes};
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(layout.dim());
        return w;
    }

    void validate() const {
        layout.validate();
        network.validate();
        if (class_names.empty()) throw std::invalid_argument("denoiser: at least one condition class is required");
        if (network.input_width() != input_width() || network.output_width() != motion_dim()) {
            throw std::invalid_argument("denoiser: network widths do not match the input layout");
        }
    }

    int condition_id(const std::string& name) const {
        for (std::size_t i = 0; i < class_names.size(); ++i) {
            if (class_names[i] == name) return static_cast<int>(i);
        }
        throw std::invalid_argument("unknown condition \"" + name + "\"");
    }

    void check_condition(int c) const {
        if (c < 0 || static_cast<std::size_t>(c) >= class_count()) {
            throw std::invalid_argument("unknown condition id " + std::to_string(c));
        }
    }
};

/// Concatenated network input for a batch of (x_t, t, c) rows.
inline NdArray denoiser_input(const Denoiser& den, const NdArray& x_t, std::span<const std::size_t> steps,
                              std::span<const int> conds) {
    const std::size_t n = x_t.rows();
    if (x_t.cols() != den.motion_dim() || steps.size() != n || conds.size() != n) {
        throw std::invalid_argument("denoiser input: batch shapes do not match the layout");
    }
    NdArray in = NdArray::matrix(n, den.input_width());
    for (std::size_t r = 0; r < n; ++r) {
        den.check_condition(conds[r]);
        auto row = in.row(r);
        const auto x = x_t.row(r);
        std::copy(x.begin(), x.end(), row.begin());
        const auto emb = timestep_embedding(steps[r]);
        std::copy(emb.begin(), emb.end(), row.begin() + static_cast<std::ptrdiff_t>(den.motion_dim()));
        row[den.motion_dim() + kTimeEmbeddingDim + static_cast<std::size_t>(conds[r])] = 1.0;
    }
    return in;
}

inline NdArray predict_x0_batch(const Denoiser& den, const NdArray& x_t, std::span<const std::size_t> steps,
                                std::span<const int> conds) {
    return nn::forward(den.network, denoiser_input(den, x_t, steps, conds));
}

inline std::vector<double> predict_x0(const Denoiser& den, std::span<const double> x_t, std::size_t t, int c) {
    NdArray x({1, x_t.size()}, std::vector<double>(x_t.begin(), x_t.end()));
    const std::size_t steps[] = {t};
    const int conds[] = {c};
    NdArray out = predict_x0_batch(den, x, steps, conds);
    return {out.values().begin(), out.values().end()};
}

/// Sampled diffusion steps and Gaussian noise for a batch.
struct NoiseDraws {
    std::vector<std::size_t> steps;
    NdArray noise;
};

inline NoiseDraws draw_noise(const NoiseSchedule& schedule, std::size_t batch, std::size_t dim, Rng& rng) {
    NoiseDraws d;
    d.steps.resize(batch);
    d.noise = NdArray::matrix(batch, dim);
    for (std::size_t r = 0; r < batch; ++r) {
        d.steps[r] = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(schedule.steps())));
        rng.fill_gaussian(d.noise.row(r));
    }
    return d;
}

inline NdArray q_sample_batch(const NoiseSchedule& schedule, const NdArray& x0, const NoiseDraws& draws) {
    NdArray out = NdArray::matrix(x0.rows(), x0.cols());
    for (std::size_t r = 0; r < x0.rows(); ++r) {
        auto noised = q_sample(schedule, x0.row(r), draws.steps[r], draws.noise.row(r));
        std::copy(noised.begin(), noised.end(), out.row(r).begin());
    }
    return out;
}

struct LossResult {
    double value = 0.0;
    Gradients grads;
};

/// Mean squared error of net(input) against target, averaged over all elements.
inline LossResult mse_loss(const nn::DenseNet& net, const NdArray& input, const NdArray& target) {
    const nn::ForwardTape tape = nn::forward_tape(net, input);
    if (tape.output.shape() != target.shape()) throw std::invalid_argument("mse_loss: target shape mismatch");
    const double scale = 1.0 / static_cast<double>(target.size());
    NdArray upstream = NdArray::matrix(target.rows(), target.cols());
    double sum = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double e = tape.output.values()[k] - target.values()[k];
        sum += e * e;
        upstream.values()[k] = 2.0 * e * scale;
    }
    return {sum * scale, nn::backward(net, tape, upstream)};
}

/// Mean over batch and motion dimensions of (x0 - G(x_t, t, c))^2 for the given draws.
inline LossResult simple_loss(const Denoiser& den, const NoiseSchedule& schedule, const NdArray& x0,
                              std::span<const int> conds, const NoiseDraws& draws) {
    if (x0.rows() == 0) throw std::invalid_argument("simple_loss: empty batch");
    if (draws.steps.size() != x0.rows() || draws.noise.shape() != x0.shape()) {
        throw std::invalid_argument("simple_loss: draws do not match the batch");
    }
    const NdArray x_t = q_sample_batch(schedule, x0, draws);
    return mse_loss(den.network, denoiser_input(den, x_t, draws.steps, conds), x0);
}

inline LossResult simple_loss(const Denoiser& den, const NoiseSchedule& schedule, const NdArray& x0,
                              std::span<const int> conds, Rng& rng) {
    if (x0.rows() == 0) throw std::invalid_argument("simple_loss: empty batch");
    return simple_loss(den, schedule, x0, conds, draw_noise(schedule, x0.rows(), x0.cols(), rng));
}

/// Reverse chain for a batch of conditions, starting from x_T ~ N(0, I). Returns
/// flattened (normalized) motions, one row per condition. With `deterministic`
/// the posterior mean is taken at every step.
inline NdArray sample_flat(const Denoiser& den, const NoiseSchedule& schedule, std::span<const int> conds, Rng& rng,
                           bool deterministic) {
    const std::size_t n = conds.size();
    for (int c : conds) den.check_condition(c);
    NdArray x = NdArray::matrix(n, den.motion_dim());
    rng.fill_gaussian(x.values());
    std::vector<std::size_t> steps(n);
    for (std::size_t t = schedule.steps(); t >= 1; --t) {
        std::fill(steps.begin(), steps.end(), t);
        NdArray x0_hat = predict_x0_batch(den, x, steps, conds);
        if (t == 1) {
            x = std::move(x0_hat);
            break;
        }
        const double c0 = schedule.posterior_x0_coef(t);
        const double ct = schedule.posterior_xt_coef(t);
        const double sd = std::sqrt(schedule.posterior_variance(t));
        for (std::size_t k = 0; k < x.size(); ++k) {
            x.values()[k] = c0 * x0_hat.values()[k] + ct * x.values()[k];
        }
        if (!deterministic) {
            for (double& v : x.values()) v += sd * rng.gaussian();
        }
    }
    return x;
}

inline std::vector<MotionSequence> sample_batch(const Denoiser& den, const NoiseSchedule& schedule,
                                                std::span<const int> conds, Rng& rng, bool deterministic) {
    const NdArray flat = sample_flat(den, schedule, conds, rng, deterministic);
    std::vector<MotionSequence> out;
    out.reserve(conds.size());
    for (std::size_t r = 0; r < conds.size(); ++r) out.push_back(den.layout.unflatten(flat.row(r)));
    return out;
}

inline MotionSequence sample(const Denoiser& den, const NoiseSchedule& schedule, int c, Rng& rng, bool deterministic) {
    const int conds[] = {c};
    return sample_batch(den, schedule, conds, rng, deterministic).front();
}

}  // namespace reinmotion
