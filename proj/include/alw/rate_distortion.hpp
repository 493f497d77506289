#pragma once

// Hamming rate-distortion function of a countable-alphabet source in the
// small-distortion regime:
//   R(d) = H(mu) - H(mu~_theta),  mu~_theta(i) = min(theta, f(i)) for i > 1,
//   mu~_theta(1) = 1 - kappa_theta,  kappa_theta = sum_{i>1} min(theta, f(i)) = d,
// with the pmf sorted in decreasing order.

#include <alw/distributions.hpp>
#include <alw/error.hpp>
#include <alw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace alw {

struct SortedPmf {
    Pmf pmf;
    // permutation[i] is the original (1-based) symbol placed at position i+1.
    std::vector<Symbol> permutation;
};

inline SortedPmf sort_decreasing(const Pmf& pmf) {
    const auto& seq = pmf.sequence();
    const auto& head = seq.head();
    std::vector<Symbol> order(head.size());
    std::iota(order.begin(), order.end(), Symbol{1});
    std::stable_sort(order.begin(), order.end(),
                     [&](Symbol a, Symbol b) { return head[a - 1] > head[b - 1]; });
    if (seq.has_tail() && !head.empty()) {
        const double smallest = *std::min_element(head.begin(), head.end());
        if (smallest < seq.at(seq.head_size() + 1))
            throw DomainError("sort_decreasing: head values would interleave with the analytic tail");
    }
    std::vector<double> sorted;
    sorted.reserve(head.size());
    for (Symbol i : order) sorted.push_back(head[i - 1]);
    return {Pmf(std::move(sorted), seq.tail()), std::move(order)};
}

namespace detail {

// kappa_theta = above * theta + below on the linear piece containing theta.
struct KappaPiece {
    double above;  // #{i > 1 : f(i) > theta}
    double below;  // sum_{i > 1, f(i) <= theta} f(i)
    double at(double theta) const { return above * theta + below; }
};

inline KappaPiece kappa_piece(const MassSequence& sorted, double theta) {
    const Symbol j0 = sorted.first_at_or_below(theta, 2);
    return {static_cast<double>(j0 - 2), j0 >= kMaxSymbol ? 0.0 : sorted.sum_above(j0 - 1)};
}

} // namespace detail

inline double kappa(const Pmf& sorted, double theta) {
    return detail::kappa_piece(sorted.sequence(), theta).at(theta);
}

// K_mu(theta) = min{k > 1 : f(k+1) <= theta}
inline Symbol k_cut(const Pmf& sorted, double theta) {
    return sorted.sequence().first_at_or_below(theta, 3) - 1;
}

// Largest distortion reachable with theta <= f(2): kappa_{f(2)} = 1 - f(1).
inline double max_valid_distortion(const Pmf& sorted) { return sorted.sequence().sum_above(1); }

// Solves kappa_theta = d by bisection on (0, f(2)], then solves exactly on
// the final linear piece.
inline double theta_for_distortion(const Pmf& sorted, double d) {
    const auto& seq = sorted.sequence();
    if (!(d > 0.0)) throw DomainError("theta_for_distortion needs d > 0");
    const double d_max = max_valid_distortion(sorted);
    if (d > d_max * (1.0 + 1e-15))
        throw ValidityError("distortion " + std::to_string(d) +
                            " exceeds the closed-form validity range (max " +
                            std::to_string(d_max) + ")");
    double lo = 0.0, hi = seq.at(2);
    for (int it = 0; it < 2000 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::kappa_piece(seq, mid).at(mid) < d)
            lo = mid;
        else
            hi = mid;
    }
    double best = 0.5 * (lo + hi);
    double best_err = std::fabs(detail::kappa_piece(seq, best).at(best) - d);
    for (double probe : {lo, hi}) {
        const auto piece = detail::kappa_piece(seq, probe);
        if (piece.above <= 0.0) continue;
        const double candidate = (d - piece.below) / piece.above;
        if (!(candidate > 0.0)) continue;
        const double err = std::fabs(detail::kappa_piece(seq, candidate).at(candidate) - d);
        if (err <= best_err) {
            best = candidate;
            best_err = err;
        }
    }
    return best;
}

// H(mu~_theta) by the three-term expansion
//   (1-kappa) log 1/(1-kappa) + (K-1) theta log 1/theta + sum_{i>K} f(i) log 1/f(i).
inline double tilde_entropy(const Pmf& sorted, double theta) {
    const auto& seq = sorted.sequence();
    if (!(theta > 0.0) || theta > seq.at(2) * (1.0 + 1e-15))
        throw DomainError("tilde_entropy needs theta in (0, f(2)]");
    const double kap = kappa(sorted, theta);
    const Symbol K = k_cut(sorted, theta);
    numeric::CompensatedSum acc;
    acc += numeric::self_information_bits(1.0 - kap);
    acc += static_cast<double>(K - 1) * numeric::self_information_bits(theta);
    acc += seq.entropy_above(K);
    return acc.value();
}

struct RdPoint {
    double d;
    double theta;
    double kappa;
    Symbol k_cut;  // 0 when d = 0 (no cut)
    double rate;
    double tilde_entropy;
};

inline RdPoint rate_distortion(const Pmf& pmf, double d) {
    if (!(d >= 0.0 && d <= 1.0)) throw DomainError("distortion must lie in [0,1]");
    const auto sorted = sort_decreasing(pmf).pmf;
    const double h = entropy(sorted);
    if (d == 0.0) return {0.0, 0.0, 0.0, 0, h, 0.0};
    if (max_valid_distortion(sorted) <= 0.0)
        // Deterministic source: R(d) = 0 for every d.
        return {d, 0.0, 0.0, 1, 0.0, 0.0};
    const double theta = theta_for_distortion(sorted, d);
    const double te = tilde_entropy(sorted, theta);
    return {d, theta, kappa(sorted, theta), k_cut(sorted, theta), std::max(0.0, h - te), te};
}

struct RdLimitRow {
    double d;
    double rate;
    double gap;  // H(mu) - R(d)
};

struct RdLimitReport {
    double entropy_bits;
    std::vector<RdLimitRow> rows;
    bool gap_decreasing;
};

// Evaluates H - R(d) along a grid decreasing to 0.
inline RdLimitReport rd_limit_check(const Pmf& pmf, const std::vector<double>& d_grid) {
    for (std::size_t i = 0; i < d_grid.size(); ++i) {
        if (!(d_grid[i] > 0.0)) throw DomainError("rd_limit_check grid must be positive");
        if (i > 0 && !(d_grid[i] < d_grid[i - 1]))
            throw DomainError("rd_limit_check grid must be strictly decreasing");
    }
    RdLimitReport report{entropy(pmf), {}, true};
    for (double d : d_grid) {
        const auto pt = rate_distortion(pmf, d);
        const double gap = std::max(0.0, report.entropy_bits - pt.rate);
        if (!report.rows.empty() && gap > report.rows.back().gap) report.gap_decreasing = false;
        report.rows.push_back({d, pt.rate, gap});
    }
    return report;
}

} // namespace alw
