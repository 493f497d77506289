#pragma once

// Minimax-redundancy laboratory: radius bounds for finite alphabets and for
// envelope classes, metric-entropy volume bounds, the epsilon* fixed point,
// admissibility and the gain / no-gain regime classifier.
//
// Lower bounds that carry (1 + o(1)) factors asymptotically are reported
// uninflated. All quantities are in bits unless the name says nats.

#include <alw/distributions.hpp>
#include <alw/error.hpp>
#include <alw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace alw {

struct RadiusBounds {
    std::uint64_t n = 0;
    double lower_bits = 0.0;
    double upper_bits = 0.0;
    std::string lower_method;
    std::string upper_method;
};

// K1 = K2 = 2 bits.
inline constexpr double kRadiusConstantBits = 2.0;

inline RadiusBounds finite_alphabet_radius_bounds(Symbol k, std::uint64_t n) {
    if (k < 1 || n < 1) throw DomainError("finite_alphabet_radius_bounds needs k, n >= 1");
    const double lead = 0.5 * static_cast<double>(k - 1) * std::log2(static_cast<double>(n));
    return {n, std::max(0.0, lead - kRadiusConstantBits), lead + kRadiusConstantBits,
            "(k-1)/2 log n - 2", "(k-1)/2 log n + 2"};
}

// ---------------------------------------------------------------------------
// Exact radius of a small finite family via the redundancy-capacity identity

inline constexpr std::size_t kMaxExactOutcomes = 256;

struct ExactRadiusOptions {
    double tolerance_bits = 1e-8;
    std::size_t max_iterations = 5'000'000;
};

// Capacity of the channel j -> x^n with W(x^n | j) = prod mu_j(x_i), computed
// by Blahut-Arimoto; stops once max_j D(W_j || q) - I <= tolerance.
inline double exact_radius_small(const std::vector<Pmf>& family, std::uint64_t n,
                                 ExactRadiusOptions opt = {}) {
    if (family.empty()) throw DomainError("exact_radius_small: family is empty");
    if (n < 1) throw DomainError("exact_radius_small: n must be >= 1");
    Symbol alphabet = 1;
    for (const auto& p : family) {
        const auto s = p.support_size();
        if (!s) throw DomainError("exact_radius_small needs finite-support pmfs");
        alphabet = std::max(alphabet, *s);
    }
    double outcomes_d = std::pow(static_cast<double>(alphabet), static_cast<double>(n));
    if (outcomes_d > static_cast<double>(kMaxExactOutcomes))
        throw DomainError("exact_radius_small: product space exceeds 256 outcomes");
    const auto outcomes = static_cast<std::size_t>(outcomes_d);
    const std::size_t J = family.size();
    if (J == 1) return 0.0;

    std::vector<std::vector<double>> W(J, std::vector<double>(outcomes, 1.0));
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t idx = 0; idx < outcomes; ++idx) {
            std::size_t rest = idx;
            double p = 1.0;
            for (std::uint64_t i = 0; i < n; ++i) {
                p *= mass(family[j], static_cast<Symbol>(rest % alphabet + 1));
                rest /= alphabet;
            }
            W[j][idx] = p;
        }
    }

    std::vector<double> prior(J, 1.0 / static_cast<double>(J));
    std::vector<double> q(outcomes), D(J);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        std::fill(q.begin(), q.end(), 0.0);
        for (std::size_t j = 0; j < J; ++j)
            for (std::size_t x = 0; x < outcomes; ++x) q[x] += prior[j] * W[j][x];
        double info = 0.0, dmax = -numeric::kInf;
        for (std::size_t j = 0; j < J; ++j) {
            numeric::CompensatedSum d;
            for (std::size_t x = 0; x < outcomes; ++x)
                if (W[j][x] > 0.0) d += W[j][x] * std::log2(W[j][x] / q[x]);
            D[j] = d.value();
            info += prior[j] * D[j];
            dmax = std::max(dmax, D[j]);
        }
        if (dmax - info <= opt.tolerance_bits) return std::max(0.0, info);
        double z = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            prior[j] *= std::exp2(D[j] - dmax);
            z += prior[j];
        }
        for (double& p : prior) p /= z;
    }
    throw DomainError("exact_radius_small: Blahut-Arimoto did not converge");
}

// ---------------------------------------------------------------------------
// Envelope-class bounds

struct EnvelopeUpper {
    double bits;
    Symbol argmin;
    Symbol scan_limit;
};

// min_u [ n Fbar(u) log e + (u-1)/2 log n ] + 2 over u in [1, u*(n) + 64].
inline EnvelopeUpper envelope_radius_upper_scan(const EnvelopeProbability& ep, std::uint64_t n) {
    if (n < 1) throw DomainError("n must be >= 1");
    const double nn = static_cast<double>(n);
    const double half_log_n = 0.5 * std::log2(nn);
    const Symbol limit = quantile_u_star(ep, n) + 64;
    EnvelopeUpper best{numeric::kInf, 1, limit};
    for (Symbol u = 1; u <= limit; ++u) {
        const double v = nn * tail_mass(ep.pmf, u) * numeric::kLog2e +
                         static_cast<double>(u - 1) * half_log_n;
        if (v < best.bits) {
            best.bits = v;
            best.argmin = u;
        }
    }
    best.bits += 2.0;
    return best;
}

inline EnvelopeUpper envelope_radius_upper_scan(const Envelope& f, std::uint64_t n) {
    return envelope_radius_upper_scan(envelope_probability(f), n);
}

inline double envelope_radius_upper(const Envelope& f, std::uint64_t n) {
    return envelope_radius_upper_scan(f, n).bits;
}

namespace detail {

inline constexpr std::size_t kMaxExactKnots = std::size_t{1} << 16;
inline constexpr std::size_t kFallbackPanels = 8192;

} // namespace detail

// (1/2) int_0^T U(e^y) dy. U(e^y) is linear in y between consecutive hazard
// knots h(k) <= y <= h(k+1), so the integral is exact piece by piece. When the
// knots become too dense the remainder uses composite Simpson panels.
inline double half_hazard_integral(const HazardFunction& U, double T) {
    if (T < 0.0) throw DomainError("integral upper limit must be >= 0");
    if (T == 0.0) return 0.0;
    numeric::CompensatedSum acc;
    Symbol k = U.knot_below(0.0);
    double y = 0.0;
    for (std::size_t pieces = 0; pieces < detail::kMaxExactKnots; ++pieces) {
        const double hk = U.hazard(k);
        const double hk1 = U.hazard(k + 1);
        const double end = std::min(T, hk1);
        if (!std::isfinite(hk1)) {
            // Finite support: U stays at k + 1 beyond the last knot.
            acc += static_cast<double>(k + 1) * (T - y);
            return 0.5 * acc.value();
        }
        if (end > y) {
            const double ua = static_cast<double>(k) + (y - hk) / (hk1 - hk);
            const double ub = static_cast<double>(k) + (end - hk) / (hk1 - hk);
            acc += 0.5 * (ua + ub) * (end - y);
            y = end;
        }
        if (y >= T) return 0.5 * acc.value();
        ++k;
    }
    const std::size_t panels = detail::kFallbackPanels;
    const double h = (T - y) / static_cast<double>(panels);
    numeric::CompensatedSum simpson;
    for (std::size_t i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        simpson += w * U.at_log(y + h * static_cast<double>(i));
    }
    acc += simpson.value() * h / 3.0;
    return 0.5 * acc.value();
}

// log e * int_1^n U(x) / (2x) dx
inline double envelope_radius_lower(const HazardFunction& U, std::uint64_t n) {
    if (n < 1) throw DomainError("n must be >= 1");
    return numeric::kLog2e * half_hazard_integral(U, std::log(static_cast<double>(n)));
}

inline double envelope_radius_lower(const Envelope& f, std::uint64_t n) {
    return envelope_radius_lower(HazardFunction(f), n);
}

// Reference evaluation of the same integral by the composite trapezoid rule
// on U(e^y), y in [0, ln n].
inline double envelope_radius_lower_trapezoid(const HazardFunction& U, std::uint64_t n,
                                              std::size_t panels = 4096) {
    if (n <= 1) return 0.0;
    const double T = std::log(static_cast<double>(n));
    const double h = T / static_cast<double>(panels);
    numeric::CompensatedSum acc;
    for (std::size_t i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 0.5 : 1.0;
        acc += w * U.at_log(h * static_cast<double>(i));
    }
    return numeric::kLog2e * 0.5 * acc.value() * h;
}

inline RadiusBounds u_star_sandwich(const Envelope& f, std::uint64_t n) {
    const double u = static_cast<double>(quantile_u_star(f, n));
    const double log_n = std::log2(static_cast<double>(n));
    return {n, 0.25 * (u - 1.0) * log_n, 2.0 + numeric::kLog2e + 0.5 * (u - 1.0) * log_n,
            "(u*-1)/4 log n", "2 + log e + (u*-1)/2 log n"};
}

// ---------------------------------------------------------------------------
// Metric entropy

struct MetricEntropyBounds {
    double epsilon;
    double lower_nats;
    double upper_nats;
    Symbol N_eps;
    Symbol l_f;
    Symbol m_dim;
};

// N_eps = min{m >= 1 : Fbar(m) < eps^2 / 16}, Fbar the tail of mu_f.
inline Symbol covering_dimension(const EnvelopeProbability& ep, double epsilon) {
    const double level = epsilon * epsilon / 16.0;
    const auto below = [&](Symbol m) { return tail_mass(ep.pmf, m) < level; };
    if (below(1)) return 1;
    Symbol lo = 1, hi = 2;
    while (!below(hi)) {
        lo = hi;
        if (hi >= kMaxSymbol / 2) throw DomainError("covering dimension out of range");
        hi *= 2;
    }
    while (hi - lo > 1) {
        const Symbol mid = lo + (hi - lo) / 2;
        (below(mid) ? hi : lo) = mid;
    }
    return hi;
}

// Volume-comparison bounds on H_eps(Lambda_f) in nats, with m = N_eps - l_f:
//   lower = sum_{l_f < i <= N} ln sqrt f(i) - ln Vol(B_m) + m ln(1/eps)
//   upper = sum_{i <= l_f} ln(sqrt f(i) + eps/4) + sum_{l_f < i <= N} ln sqrt f(i)
//           - ln Vol(B_N) + (N - l_f)/sqrt(1 - e^{-b}) + N ln(8/eps),
// b = -ln Fbar(l_f). For a projected envelope the tail cell caps N_eps at k.
inline MetricEntropyBounds metric_entropy_bounds(const Envelope& f, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
    const auto ep = envelope_probability(f);
    const auto& seq = f.sequence();
    const Symbol N = covering_dimension(ep, epsilon);
    const Symbol l = ep.l_f;
    MetricEntropyBounds out{epsilon, 0.0, 0.0, N, l, N > l ? N - l : 0};

    const double tail_log_sqrt = N > l ? 0.5 * seq.log_sum(l + 1, N) : 0.0;
    if (out.m_dim > 0) {
        const double m = static_cast<double>(out.m_dim);
        out.lower_nats =
            tail_log_sqrt - numeric::log_unit_ball_volume(m) + m * std::log(1.0 / epsilon);
    }

    numeric::CompensatedSum up;
    for (Symbol i = 1; i <= std::min(l, N); ++i) up += std::log(std::sqrt(seq.at(i)) + epsilon / 4.0);
    up += tail_log_sqrt;
    up += -numeric::log_unit_ball_volume(static_cast<double>(N));
    const double fbar_l = tail_mass(ep.pmf, l);
    const double one_minus_e_b = 1.0 - fbar_l;  // 1 - e^{-b}
    up += static_cast<double>(out.m_dim) / std::sqrt(one_minus_e_b);
    up += static_cast<double>(N) * std::log(8.0 / epsilon);
    out.upper_nats = up.value();
    return out;
}

// ---------------------------------------------------------------------------
// epsilon* and admissibility

// l(1/eps) = int_1^{1/eps^2} U(x)/(2x) dx in nats.
inline double l_function(const HazardFunction& U, double epsilon) {
    return half_hazard_integral(U, 2.0 * std::log(1.0 / epsilon));
}

inline constexpr double kEpsilonStarLow = 1e-9;

// Solves l(1/eps) = n eps^2 / 8 by bisection on ln eps over (1e-9, 1).
inline double epsilon_star(const HazardFunction& U, std::uint64_t n) {
    if (n < 2) throw DomainError("epsilon_star needs n >= 2");
    const double nn = static_cast<double>(n);
    const auto g = [&](double le) {
        const double e = std::exp(le);
        return l_function(U, e) - nn * e * e / 8.0;
    };
    double lo = std::log(kEpsilonStarLow), hi = 0.0;
    if (!(g(lo) > 0.0))
        throw DomainError("epsilon_star: no sign change in (1e-9, 1) for n = " + std::to_string(n));
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e = std::exp(mid);
        const double l = l_function(U, e);
        const double r = l - nn * e * e / 8.0;
        if (std::fabs(r) <= 1e-6 * std::max(1.0, l) && hi - lo < 1e-12) return e;
        (r > 0.0 ? lo : hi) = mid;
        if (hi - lo < 1e-15) break;
    }
    const double e = std::exp(0.5 * (lo + hi));
    const double l = l_function(U, e);
    if (std::fabs(l - nn * e * e / 8.0) > 1e-6 * std::max(1.0, l))
        throw DomainError("epsilon_star: bisection did not reach the residual tolerance");
    return e;
}

inline double epsilon_star(const Envelope& f, std::uint64_t n) {
    return epsilon_star(HazardFunction(f), n);
}

// Fbar(k-1) <= eps*(n)^2 / 16
inline bool admissibility(const HazardFunction& U, Symbol k, std::uint64_t n) {
    if (k < 2) throw DomainError("admissibility needs k >= 2");
    const double tail = tail_mass(U.envelope_probability().pmf, k - 1);
    if (tail == 0.0) return true;
    const double e = epsilon_star(U, n);
    return tail <= e * e / 16.0;
}

inline bool admissibility(const Envelope& f, Symbol k, std::uint64_t n) {
    return admissibility(HazardFunction(f), k, n);
}

// ---------------------------------------------------------------------------
// Haussler-Opper lower bound

struct HausslerOpperResult {
    double bits;
    double best_epsilon;
};

// log e * sup_eps min{H_eps lower bound, n eps^2 / 8} - 1, floored at 0; eps on
// a log grid of `points` values in [1e-6, 1), then a dense local scan between
// the neighbours of the best grid point (the objective jumps with N_eps, so a
// coarse grid alone is resolution dependent).
inline HausslerOpperResult haussler_opper_lower_grid(const Envelope& f, std::uint64_t n,
                                                     std::size_t points = 64,
                                                     std::size_t refine_points = 512) {
    if (points < 2) throw DomainError("haussler_opper_lower needs at least 2 grid points");
    const double nn = static_cast<double>(n);
    const double lo = std::log(1e-6);
    const double step = -lo / static_cast<double>(points);
    const auto objective = [&](double le) {
        const double e = std::exp(le);
        return std::min(metric_entropy_bounds(f, e).lower_nats, nn * e * e / 8.0);
    };
    double sup = -numeric::kInf, best_le = lo;
    for (std::size_t i = 0; i < points; ++i) {
        const double le = lo + step * static_cast<double>(i);
        const double v = objective(le);
        if (v > sup) {
            sup = v;
            best_le = le;
        }
    }
    if (refine_points > 0) {
        const double a = std::max(lo, best_le - step);
        const double b = std::min(-1e-12, best_le + step);
        for (std::size_t i = 0; i <= refine_points; ++i) {
            const double le = a + (b - a) * static_cast<double>(i) / static_cast<double>(refine_points);
            const double v = objective(le);
            if (v > sup) {
                sup = v;
                best_le = le;
            }
        }
    }
    return {std::max(0.0, numeric::kLog2e * sup - 1.0), std::exp(best_le)};
}

inline double haussler_opper_lower(const Envelope& f, std::uint64_t n) {
    return haussler_opper_lower_grid(f, n).bits;
}

// ---------------------------------------------------------------------------
// Regime classification

enum class Regime { Gain, NoGain, Indeterminate };

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::Gain: return "gain";
    case Regime::NoGain: return "no_gain";
    default: return "indeterminate";
    }
}

// k_n as a function of (n, u*_f(n)).
using KSchedule = std::function<Symbol(std::uint64_t n, Symbol u_star)>;

struct RegimeRow {
    std::uint64_t n;
    Symbol k_n;
    Symbol u_star;
    double lower_bits;             // full-class lower bound (integral form)
    double upper_bits;             // full-class upper bound (u scan)
    double restricted_upper_bits;  // finite-alphabet upper bound at k_n
    double ratio_proxy;
    bool admissible;
    Regime regime;
    bool consistency_warning;      // lower_bits > upper_bits
};

struct RegimeReport {
    std::vector<RegimeRow> rows;
    bool ratio_proxy_decreasing;
    bool power_tail;
};

inline constexpr double kGainRatio = 0.1;
inline constexpr double kRatioFloorBits = 1e-12;

inline RegimeReport classify_regime(const Envelope& f, const KSchedule& schedule,
                                    const std::vector<std::uint64_t>& n_grid) {
    if (n_grid.empty()) throw DomainError("n grid must be nonempty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1]) throw DomainError("n grid must be strictly increasing");
    const HazardFunction U(f);
    const auto& ep = U.envelope_probability();
    RegimeReport report{{}, true, f.has_power_tail()};
    double prev_fraction = numeric::kInf;
    for (std::uint64_t n : n_grid) {
        RegimeRow r{};
        r.n = n;
        r.u_star = quantile_u_star(ep, n);
        r.k_n = schedule(n, r.u_star);
        if (r.k_n < 2) r.k_n = 2;
        r.lower_bits = envelope_radius_lower(U, n);
        r.upper_bits = envelope_radius_upper_scan(ep, n).bits;
        r.restricted_upper_bits = finite_alphabet_radius_bounds(r.k_n, n).upper_bits;
        r.ratio_proxy = r.restricted_upper_bits / std::max(r.lower_bits, kRatioFloorBits);
        r.admissible = n >= 2 ? admissibility(U, r.k_n, n) : false;
        const double fraction = static_cast<double>(r.k_n) / static_cast<double>(r.u_star);
        if (r.k_n >= r.u_star)
            r.regime = Regime::NoGain;
        else if (fraction <= kGainRatio && fraction <= prev_fraction)
            r.regime = Regime::Gain;
        else
            r.regime = Regime::Indeterminate;
        prev_fraction = fraction;
        r.consistency_warning = r.lower_bits > r.upper_bits + 1e-9;
        if (!report.rows.empty() && !(r.ratio_proxy < report.rows.back().ratio_proxy))
            report.ratio_proxy_decreasing = false;
        report.rows.push_back(r);
    }
    return report;
}

} // namespace alw
