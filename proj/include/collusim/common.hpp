#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace collusim {

// Base error carrying a stable machine-readable code (used by the CLI's
// structured stderr output).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define COLLUSIM_ERROR(NAME, CODE)                                  \
    class NAME : public Error {                                     \
    public:                                                         \
        explicit NAME(const std::string& msg) : Error(CODE, msg) {} \
    }

COLLUSIM_ERROR(DomainError, "domain_error");
COLLUSIM_ERROR(NoDensity, "no_density");
COLLUSIM_ERROR(UnsupportedOrder, "unsupported_order");
COLLUSIM_ERROR(NonFiniteValue, "non_finite_value");
COLLUSIM_ERROR(InvalidArgs, "invalid_args");
COLLUSIM_ERROR(NotNormalized, "not_normalized");
COLLUSIM_ERROR(ExplicitOverflow, "explicit_overflow");
COLLUSIM_ERROR(DivergentBias, "divergent_bias");
COLLUSIM_ERROR(InvalidConfig, "invalid_config");
COLLUSIM_ERROR(ContinuousConditioning, "continuous_conditioning");

#undef COLLUSIM_ERROR

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

// Binary entropy in bits, with the 0*log0 = 0 convention.
inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

// x*ln(x) with 0*ln0 = 0; building block for entropies in nats.
inline double xlnx(double x) {
    return x > 0.0 ? x * std::log(x) : 0.0;
}

// Pairwise (cascade) summation: O(log n) error growth and a reduction
// order that is fixed by the input order, so results are bit-stable.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v));
}

}  // namespace collusim
