#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace boed {

// Counter-based stream identity: a stream is fully determined by
// (master seed, purpose label, sample index), so parallel workers that
// draw by index reproduce serial results exactly.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, const std::string& label, std::uint64_t index)
        : engine_(mix(master_seed, label, index)) {}

    // Hand-rolled Box-Muller; std::normal_distribution is not guaranteed
    // to produce identical sequences across standard library versions.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform in [0, 1).
    double uniform() {
        return (engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free threshold method would be overkill here.
        std::uint64_t r;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    Eigen::VectorXd gaussian_vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    static std::uint64_t mix(std::uint64_t seed, const std::string& label, std::uint64_t index) {
        std::uint64_t h = splitmix64(seed);
        for (unsigned char c : label) h = splitmix64(h ^ c);
        return splitmix64(h ^ splitmix64(index + 0x51ed270b1f7f2aedULL));
    }

    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace boed
