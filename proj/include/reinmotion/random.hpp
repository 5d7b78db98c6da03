#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>

namespace reinmotion {

/// Seeded random stream. One owner per stream; copies diverge independently.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double gaussian() { return normal_(engine_); }

    void fill_gaussian(std::span<double> out) {
        for (double& v : out) v = normal_(engine_);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    std::uint64_t next_seed() { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_ << ' ' << normal_;
        return os.str();
    }

    static Rng deserialize(const std::string& text) {
        Rng r;
        std::istringstream is(text);
        is >> r.engine_ >> r.normal_;
        return r;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace reinmotion
