// Shared basics: version, error types, seeded RNG streams.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gendyne {

inline constexpr const char* kVersion = "0.1.0";

using Complex = std::complex<double>;

/// Thrown when a truncated Fock space is too small for the requested state.
class TruncationError : public std::runtime_error {
public:
    explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an integration, conditioning or audit step fails numerically.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by operations that are singular in the homodyne limit |upsilon| -> 1.
class HomodyneLimitError : public std::domain_error {
public:
    explicit HomodyneLimitError(const std::string& what) : std::domain_error(what) {}
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic Gaussian/uniform stream. Streams are always passed
/// explicitly; substream(seed, index) gives independent per-trajectory
/// streams whose output does not depend on scheduling order.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}

    static RngStream substream(std::uint64_t seed, std::uint64_t index) {
        return RngStream(detail::splitmix64(seed ^ detail::splitmix64(index + 0x51a9b4c3d2e1f007ULL)));
    }

    double uniform() {  // [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {  // standard normal, Box-Muller with cached spare
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gendyne
