#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace alw::numeric {

inline constexpr double kLog2e = std::numbers::log2e;
inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// -p log2 p with 0 log 0 = 0.
inline double self_information_bits(double p) {
    return p > 0.0 ? -p * std::log2(p) : 0.0;
}

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace detail {

// Euler-Maclaurin remainder for sum_{x >= start} g(x), given the integral
// int_start^inf g and the odd derivatives g', g''', g^(5), g^(7) at start.
inline double euler_maclaurin_tail(double integral, double g0, double d1, double d3,
                                   double d5, double d7) {
    return integral + 0.5 * g0 - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0 + d7 / 1209600.0;
}

inline constexpr double kDirectThreshold = 32.0;

// (s)_j * (-1)^j * x^{-s-j}: the j-th derivative of x^{-s}.
inline double power_derivative(double s, int j, double x) {
    double coeff = 1.0;
    for (int i = 0; i < j; ++i) coeff *= -(s + i);
    return coeff * std::pow(x, -s - j);
}

// j-th derivative of x^{-s} ln x.
inline double power_log_derivative(double s, int j, double x) {
    double harmonic = 0.0;
    for (int i = 0; i < j; ++i) harmonic += 1.0 / (s + i);
    return power_derivative(s, j, x) * (std::log(x) - harmonic);
}

} // namespace detail

// Hurwitz-type partial zeta: sum_{x >= a} x^{-s} for integer a >= 1, s > 1.
inline double power_sum(double s, double a) {
    CompensatedSum acc;
    double x = a;
    while (x < detail::kDirectThreshold) {
        acc += std::pow(x, -s);
        x += 1.0;
    }
    const double integral = std::pow(x, 1.0 - s) / (s - 1.0);
    acc += detail::euler_maclaurin_tail(
        integral, std::pow(x, -s), detail::power_derivative(s, 1, x),
        detail::power_derivative(s, 3, x), detail::power_derivative(s, 5, x),
        detail::power_derivative(s, 7, x));
    return acc.value();
}

// sum_{x >= a} x^{-s} ln x for integer a >= 1, s > 1.
inline double power_log_sum(double s, double a) {
    CompensatedSum acc;
    double x = a;
    while (x < detail::kDirectThreshold) {
        acc += std::pow(x, -s) * std::log(x);
        x += 1.0;
    }
    const double sm1 = s - 1.0;
    const double integral = std::pow(x, -sm1) * (std::log(x) / sm1 + 1.0 / (sm1 * sm1));
    acc += detail::euler_maclaurin_tail(
        integral, std::pow(x, -s) * std::log(x), detail::power_log_derivative(s, 1, x),
        detail::power_log_derivative(s, 3, x), detail::power_log_derivative(s, 5, x),
        detail::power_log_derivative(s, 7, x));
    return acc.value();
}

inline double riemann_zeta(double s) { return power_sum(s, 1.0); }

// ln of the volume of the unit ball in R^m.
inline double log_unit_ball_volume(double m) {
    if (m <= 0.0) return 0.0;
    return 0.5 * m * std::log(std::numbers::pi) - std::lgamma(0.5 * m + 1.0);
}

// sum_{x=a}^{b} ln x for integers 1 <= a <= b.
inline double log_factorial_range(double a, double b) {
    if (b < a) return 0.0;
    if (b - a < 64.0) {
        CompensatedSum acc;
        for (double x = a; x <= b; x += 1.0) acc += std::log(x);
        return acc.value();
    }
    return std::lgamma(b + 1.0) - std::lgamma(a);
}

} // namespace alw::numeric
