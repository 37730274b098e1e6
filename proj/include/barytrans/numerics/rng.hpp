#pragma once

#include <cstdint>
#include <cmath>

#include <Eigen/Core>

namespace barytrans {

/// Counter-based splittable random stream.
///
/// The generator is a pure function of (seed, stream_id, counter), so streams
/// can be handed to independent workers and replayed exactly on any platform.
/// Gaussian variates use the Marsaglia polar method on top of the uniform
/// stream (no trig, no log-of-zero edge case).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_(derive_key(seed, stream_id)) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ull);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [a, b).
    double next_uniform(double a, double b) {
        return a + next_uniform() * (b - a);
    }

    /// Standard normal variate (polar method, spare value cached).
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_uniform() - 1.0;
            v = 2.0 * next_uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    Eigen::VectorXd gaussian_vector(int d) {
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z(i) = next_gaussian();
        return z;
    }

    /// Index in [0, n) by rejection-free scaling (n assumed << 2^53).
    int next_index(int n) {
        return static_cast<int>(next_uniform() * n) % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
        return mix(seed ^ 0x9E3779B97F4A7C15ull) ^ mix(stream_id + 0xD1B54A32D192ED03ull);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id = 0) {
    return RngStream(seed, stream_id);
}

}  // namespace barytrans
