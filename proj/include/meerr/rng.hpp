#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace meerr {

// Derives an independent engine seed from (run seed, replication index,
// stream tag) with a splitmix-style mix, so every replication owns its own
// streams and results never depend on which thread draws first.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t replication,
                                    std::uint64_t stream) {
    std::uint64_t z = seed;
    z += 0x9E3779B97F4A7C15ull * (2 * replication + 1);
    z += 0xD1B54A32D192ED03ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Standard normal draws through an explicit Box-Muller transform. Written
// out by hand because std::normal_distribution does not promise the same
// draw sequence across standard library implementations.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    // Uniform on (0, 1]; never returns 0, so the log above is safe.
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace meerr
