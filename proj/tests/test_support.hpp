#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "vekit/math.hpp"

namespace vetest {

inline std::filesystem::path data_dir() { return std::filesystem::path(VEKIT_TEST_DATA_DIR); }

// Deterministic RNG for property tests; seeds are part of the test contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    vekit::Vec3 vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

    vekit::Quat quat() {
        // uniform random rotation (Shoemake)
        double u1 = uniform(0.0, 1.0), u2 = uniform(0.0, 1.0), u3 = uniform(0.0, 1.0);
        double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        return vekit::normalized(vekit::Quat{a * std::sin(2 * vekit::kPi * u2),
                                             a * std::cos(2 * vekit::kPi * u2),
                                             b * std::sin(2 * vekit::kPi * u3),
                                             b * std::cos(2 * vekit::kPi * u3)});
    }

    vekit::AABB aabb(double span, double max_size) {
        vekit::Vec3 lo = vec3(0.0, span);
        vekit::Vec3 size{uniform(0.01, max_size), uniform(0.01, max_size), uniform(0.01, max_size)};
        return {lo, lo + size};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace vetest
