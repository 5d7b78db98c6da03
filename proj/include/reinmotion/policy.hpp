#pragma once

// Gaussian policy around the denoiser's x0 estimate: a = mu + sigma * v with
// v ~ N(0, I). The diagonal covariance lets the log-density factor over frames,
// so likelihood ratios pair one-to-one with frame rewards.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "reinmotion/diffusion.hpp"

namespace reinmotion {

inline constexpr double kLogRatioClamp = 20.0;

struct GaussianPolicy {
    Denoiser denoiser;
    double sigma = 0.15;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("policy: sigma must be > 0");
        denoiser.validate();
    }
};

struct ActionSample {
    std::vector<double> action;
    std::vector<double> mean;
    std::vector<double> frame_log_probs;
    double total_log_prob = 0.0;
};

/// Diagonal Gaussian log-density of `a` around `mean`, summed per block of `frame_width` dims.
inline std::vector<double> frame_log_density(std::span<const double> a, std::span<const double> mean, double sigma,
                                             std::size_t frame_width) {
    if (a.size() != mean.size() || frame_width == 0 || a.size() % frame_width != 0) {
        throw std::invalid_argument("log_prob: action width does not match the motion layout");
    }
    const double var = sigma * sigma;
    const double norm = -0.5 * std::log(2.0 * std::numbers::pi * var);
    std::vector<double> out(a.size() / frame_width, 0.0);
    for (std::size_t f = 0; f < out.size(); ++f) {
        double acc = 0.0;
        for (std::size_t k = f * frame_width; k < (f + 1) * frame_width; ++k) {
            const double e = a[k] - mean[k];
            acc += norm - 0.5 * e * e / var;
        }
        out[f] = acc;
    }
    return out;
}

/// Action for given standard-normal draws `unit_noise`.
inline ActionSample sample_action_with_noise(const GaussianPolicy& policy, std::span<const double> x_t, std::size_t t,
                                             int c, std::span<const double> unit_noise) {
    ActionSample s;
    s.mean = predict_x0(policy.denoiser, x_t, t, c);
    if (unit_noise.size() != s.mean.size()) throw std::invalid_argument("sample_action: noise width mismatch");
    s.action.resize(s.mean.size());
    for (std::size_t k = 0; k < s.mean.size(); ++k) s.action[k] = s.mean[k] + policy.sigma * unit_noise[k];
    s.frame_log_probs = frame_log_density(s.action, s.mean, policy.sigma, policy.denoiser.layout.frame_width());
    for (double v : s.frame_log_probs) s.total_log_prob += v;
    return s;
}

inline ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> x_t, std::size_t t, int c,
                                  Rng& rng) {
    std::vector<double> noise(policy.denoiser.motion_dim());
    rng.fill_gaussian(noise);
    return sample_action_with_noise(policy, x_t, t, c, noise);
}

inline std::vector<double> log_prob(const GaussianPolicy& policy, std::span<const double> a, std::span<const double> x_t,
                                    std::size_t t, int c) {
    if (a.size() != policy.denoiser.motion_dim()) throw std::invalid_argument("log_prob: action width mismatch");
    const auto mean = predict_x0(policy.denoiser, x_t, t, c);
    return frame_log_density(a, mean, policy.sigma, policy.denoiser.layout.frame_width());
}

inline double clamp_log_ratio(double d) { return std::clamp(d, -kLogRatioClamp, kLogRatioClamp); }

inline std::vector<double> likelihood_ratio(const GaussianPolicy& rl, const GaussianPolicy& pt, std::span<const double> a,
                                            std::span<const double> x_t, std::size_t t, int c) {
    if (rl.sigma != pt.sigma || !(rl.denoiser.layout == pt.denoiser.layout) ||
        rl.denoiser.class_count() != pt.denoiser.class_count()) {
        throw std::invalid_argument("likelihood_ratio: policies do not share sigma and motion layout");
    }
    const auto lp_rl = log_prob(rl, a, x_t, t, c);
    const auto lp_pt = log_prob(pt, a, x_t, t, c);
    std::vector<double> out(lp_rl.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(clamp_log_ratio(lp_rl[i] - lp_pt[i]));
    return out;
}

}  // namespace reinmotion
