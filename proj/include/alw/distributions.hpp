#pragma once

// Probability mass functions and envelope functions on the positive integers
// with closed-form tails. Every quantity that involves an infinite sum (tail
// masses, entropies, log-products) is evaluated analytically on the tail so
// that downstream bounds never carry a truncation error.

#include <alw/error.hpp>
#include <alw/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace alw {

using Symbol = std::uint64_t;

inline constexpr double kMassTolerance = 1e-12;
inline constexpr Symbol kMaxSymbol = Symbol{1} << 62;

// f(x) = scale * ratio^x beyond the head.
struct GeometricTail {
    double ratio;
    double scale;
};

// f(x) = scale * x^(-exponent) beyond the head.
struct PowerTail {
    double exponent;
    double scale;
};

using Tail = std::variant<std::monostate, GeometricTail, PowerTail>;

namespace detail {

inline double symbol_to_double(Symbol x) { return static_cast<double>(x); }

inline Symbol clamp_symbol(double x) {
    if (!(x < static_cast<double>(kMaxSymbol))) return kMaxSymbol;
    if (x < 1.0) return 1;
    return static_cast<Symbol>(x);
}

struct TailOps {
    double value(const GeometricTail& t, Symbol x) const {
        return t.scale * std::pow(t.ratio, symbol_to_double(x));
    }
    double value(const PowerTail& t, Symbol x) const {
        return t.scale * std::pow(symbol_to_double(x), -t.exponent);
    }

    // sum_{x > u}
    double sum_above(const GeometricTail& t, Symbol u) const {
        return t.scale * std::pow(t.ratio, symbol_to_double(u) + 1.0) / (1.0 - t.ratio);
    }
    double sum_above(const PowerTail& t, Symbol u) const {
        return t.scale * numeric::power_sum(t.exponent, symbol_to_double(u) + 1.0);
    }

    // sum_{x > u} f(x) log2(1/f(x))
    double entropy_above(const GeometricTail& t, Symbol u) const {
        const double r = t.ratio;
        const double uu = symbol_to_double(u);
        const double lead = t.scale * std::pow(r, uu + 1.0);
        if (lead == 0.0) return 0.0;
        const double t0 = lead / (1.0 - r);
        const double t1 = lead * ((uu + 1.0) - uu * r) / ((1.0 - r) * (1.0 - r));
        return -std::log2(t.scale) * t0 - std::log2(r) * t1;
    }
    double entropy_above(const PowerTail& t, Symbol u) const {
        const double a = symbol_to_double(u) + 1.0;
        const double s0 = numeric::power_sum(t.exponent, a);
        const double s1 = numeric::power_log_sum(t.exponent, a);
        return t.scale * (t.exponent * s1 - std::log(t.scale) * s0) * numeric::kLog2e;
    }

    // sum_{x=a}^{b} ln f(x)
    double log_sum(const GeometricTail& t, Symbol a, Symbol b) const {
        const double count = symbol_to_double(b - a + 1);
        const double index_sum = 0.5 * (symbol_to_double(a) + symbol_to_double(b)) * count;
        return count * std::log(t.scale) + index_sum * std::log(t.ratio);
    }
    double log_sum(const PowerTail& t, Symbol a, Symbol b) const {
        const double count = symbol_to_double(b - a + 1);
        return count * std::log(t.scale) -
               t.exponent * numeric::log_factorial_range(symbol_to_double(a), symbol_to_double(b));
    }

    // smallest x >= start with f(x) <= theta
    template <class T>
    Symbol first_at_or_below(const T& t, double theta, Symbol start) const {
        if (value(t, start) <= theta) return start;
        if (theta <= 0.0) return kMaxSymbol;
        double guess;
        if constexpr (std::is_same_v<T, GeometricTail>)
            guess = std::ceil(std::log(theta / t.scale) / std::log(t.ratio));
        else
            guess = std::ceil(std::pow(t.scale / theta, 1.0 / t.exponent));
        Symbol x = std::max(start, clamp_symbol(guess));
        while (x > start && value(t, x - 1) <= theta) --x;
        while (x < kMaxSymbol && value(t, x) > theta) ++x;
        return x;
    }
};

} // namespace detail

// A non-negative sequence on {1, 2, ...}: explicit head values for 1..m and an
// optional analytic tail for x > m.
class MassSequence {
public:
    MassSequence() = default;
    MassSequence(std::vector<double> head, Tail tail) : head_(std::move(head)), tail_(tail) {
        suffix_mass_.assign(head_.size() + 1, 0.0);
        suffix_entropy_.assign(head_.size() + 1, 0.0);
        numeric::CompensatedSum mass, ent;
        for (std::size_t i = head_.size(); i-- > 0;) {
            mass += head_[i];
            ent += numeric::self_information_bits(head_[i]);
            suffix_mass_[i] = mass.value();
            suffix_entropy_[i] = ent.value();
        }
    }

    const std::vector<double>& head() const { return head_; }
    const Tail& tail() const { return tail_; }
    bool has_tail() const { return !std::holds_alternative<std::monostate>(tail_); }
    Symbol head_size() const { return head_.size(); }
    std::optional<Symbol> support_size() const {
        if (has_tail()) return std::nullopt;
        return head_.size();
    }

    double at(Symbol x) const {
        if (x == 0) return 0.0;
        if (x <= head_.size()) return head_[x - 1];
        return visit_tail([&](const auto& t) { return ops_.value(t, x); }, 0.0);
    }

    // sum_{x > u}
    double sum_above(Symbol u) const {
        const Symbol m = head_.size();
        if (u >= m) return visit_tail([&](const auto& t) { return ops_.sum_above(t, u); }, 0.0);
        numeric::CompensatedSum acc;
        acc += suffix_mass_[u];
        acc += visit_tail([&](const auto& t) { return ops_.sum_above(t, m); }, 0.0);
        return acc.value();
    }

    double total() const { return sum_above(0); }

    // sum_{x > u} f(x) log2(1/f(x))
    double entropy_above(Symbol u) const {
        const Symbol m = head_.size();
        if (u >= m)
            return visit_tail([&](const auto& t) { return ops_.entropy_above(t, u); }, 0.0);
        numeric::CompensatedSum acc;
        acc += suffix_entropy_[u];
        acc += visit_tail([&](const auto& t) { return ops_.entropy_above(t, m); }, 0.0);
        return acc.value();
    }

    // sum_{x=a}^{b} ln f(x); -inf when some value in range is zero.
    double log_sum(Symbol a, Symbol b) const {
        if (b < a) return 0.0;
        const Symbol m = head_.size();
        numeric::CompensatedSum acc;
        for (Symbol x = a; x <= std::min(b, m); ++x) {
            if (head_[x - 1] <= 0.0) return -numeric::kInf;
            acc += std::log(head_[x - 1]);
        }
        if (b > m) {
            if (!has_tail()) return -numeric::kInf;
            const Symbol lo = std::max(a, m + 1);
            acc += visit_tail([&](const auto& t) { return ops_.log_sum(t, lo, b); }, 0.0);
        }
        return acc.value();
    }

    // Smallest x >= start with f(x) <= theta. The head is scanned, the tail is
    // decreasing. Returns kMaxSymbol when no such x exists.
    Symbol first_at_or_below(double theta, Symbol start) const {
        const Symbol m = head_.size();
        for (Symbol x = std::max<Symbol>(start, 1); x <= m; ++x)
            if (head_[x - 1] <= theta) return x;
        const Symbol from = std::max(start, m + 1);
        if (!has_tail()) return from;
        return visit_tail([&](const auto& t) { return ops_.first_at_or_below(t, theta, from); },
                          Symbol{0});
    }

private:
    template <class F, class R>
    R visit_tail(F&& f, R none) const {
        return std::visit(
            [&](const auto& t) -> R {
                if constexpr (std::is_same_v<std::decay_t<decltype(t)>, std::monostate>)
                    return none;
                else
                    return f(t);
            },
            tail_);
    }

    std::vector<double> head_;
    Tail tail_;
    std::vector<double> suffix_mass_{0.0};
    std::vector<double> suffix_entropy_{0.0};
    detail::TailOps ops_;
};

namespace detail {

inline void validate_tail(const Tail& tail) {
    if (const auto* g = std::get_if<GeometricTail>(&tail)) {
        if (!(g->ratio > 0.0 && g->ratio < 1.0))
            throw DomainError("geometric tail ratio must lie in (0,1)");
        if (!(g->scale > 0.0 && std::isfinite(g->scale)))
            throw DomainError("geometric tail scale must be positive");
    } else if (const auto* p = std::get_if<PowerTail>(&tail)) {
        if (!(p->exponent > 1.0 && std::isfinite(p->exponent)))
            throw DomainError("power tail exponent must exceed 1");
        if (!(p->scale > 0.0 && std::isfinite(p->scale)))
            throw DomainError("power tail scale must be positive");
    }
}

} // namespace detail

class Pmf {
public:
    Pmf(std::vector<double> head, Tail tail) {
        detail::validate_tail(tail);
        for (double p : head)
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("pmf masses must lie in [0,1]");
        seq_ = MassSequence(std::move(head), tail);
        if (seq_.has_tail() && seq_.at(seq_.head_size() + 1) > 1.0)
            throw DomainError("pmf tail exceeds 1");
        const double total = seq_.total();
        if (!(std::fabs(total - 1.0) <= kMassTolerance))
            throw DomainError("pmf total mass " + std::to_string(total) + " is not 1");
    }

    // (1-p)^{x-1} p on x >= 1.
    static Pmf geometric(double p) {
        if (!(p > 0.0 && p <= 1.0)) throw DomainError("geometric parameter must lie in (0,1]");
        if (p == 1.0) return point_mass(1);
        return Pmf({}, GeometricTail{1.0 - p, p / (1.0 - p)});
    }

    // x^{-alpha} / zeta(alpha).
    static Pmf zeta(double alpha) {
        if (!(alpha > 1.0)) throw DomainError("zeta exponent must exceed 1");
        return Pmf({}, PowerTail{alpha, 1.0 / numeric::riemann_zeta(alpha)});
    }

    static Pmf from_masses(std::vector<double> masses) {
        if (masses.empty()) throw DomainError("explicit pmf needs at least one mass");
        return Pmf(std::move(masses), std::monostate{});
    }

    static Pmf point_mass(Symbol x) {
        if (x == 0) throw DomainError("symbols start at 1");
        std::vector<double> head(x, 0.0);
        head.back() = 1.0;
        return Pmf(std::move(head), std::monostate{});
    }

    static Pmf uniform(Symbol k) {
        if (k == 0) throw DomainError("uniform pmf needs k >= 1");
        return Pmf(std::vector<double>(k, 1.0 / static_cast<double>(k)), std::monostate{});
    }

    const MassSequence& sequence() const { return seq_; }
    std::optional<Symbol> support_size() const { return seq_.support_size(); }

private:
    MassSequence seq_;
};

// A dominating function f : {1,2,...} -> [0,1] with sum f >= 1.
class Envelope {
public:
    Envelope(std::vector<double> head, Tail tail) {
        detail::validate_tail(tail);
        for (double& v : head) {
            if (!(v >= 0.0) || std::isnan(v)) throw DomainError("envelope values must be >= 0");
            v = std::min(v, 1.0);
        }
        // Values of the analytic tail above 1 are clipped by moving them into the head.
        if (!std::holds_alternative<std::monostate>(tail)) {
            MassSequence probe({}, tail);
            Symbol x = head.size() + 1;
            while (probe.at(x) > 1.0) {
                if (head.size() > 10'000'000) throw DomainError("envelope clipping region too large");
                head.push_back(1.0);
                ++x;
            }
        }
        seq_ = MassSequence(std::move(head), tail);
        mass_sum_ = seq_.total();
        if (!(mass_sum_ >= 1.0 - kMassTolerance))
            throw DomainError("envelope mass " + std::to_string(mass_sum_) +
                              " < 1: the envelope class is empty");
    }

    // min(1, c r^x)
    static Envelope geometric(double c, double r) { return Envelope({}, GeometricTail{r, c}); }
    // min(1, c x^-alpha)
    static Envelope power(double c, double alpha) { return Envelope({}, PowerTail{alpha, c}); }
    static Envelope from_values(std::vector<double> values) {
        if (values.empty()) throw DomainError("explicit envelope needs at least one value");
        return Envelope(std::move(values), std::monostate{});
    }

    const MassSequence& sequence() const { return seq_; }
    double mass_sum() const { return mass_sum_; }
    std::optional<Symbol> support_size() const { return seq_.support_size(); }
    bool has_power_tail() const { return std::holds_alternative<PowerTail>(seq_.tail()); }

private:
    MassSequence seq_;
    double mass_sum_ = 0.0;
};

// ---------------------------------------------------------------------------
// Pointwise quantities

inline double mass(const Pmf& pmf, Symbol x) {
    if (x == 0) throw DomainError("symbols start at 1");
    return pmf.sequence().at(x);
}
inline double mass(const Envelope& f, Symbol x) {
    if (x == 0) throw DomainError("symbols start at 1");
    return f.sequence().at(x);
}

// sum_{x > u} f(x)
inline double tail_mass(const Pmf& pmf, Symbol u) { return pmf.sequence().sum_above(u); }
inline double tail_mass(const Envelope& f, Symbol u) { return f.sequence().sum_above(u); }

// Shannon entropy in bits.
inline double entropy(const Pmf& pmf) { return pmf.sequence().entropy_above(0); }

struct Summability {
    bool summable;
    double sum;
};

// Constructed envelopes are always summable: power tails need alpha > 1.
inline Summability is_summable(const Envelope& f) {
    const double s = f.mass_sum();
    return {std::isfinite(s), s};
}

// ---------------------------------------------------------------------------
// Sampling

// Inverse-CDF sampler. Head symbols are located on the cumulative sums, tail
// symbols by inverting the analytic tail mass, so tiny tail probabilities are
// resolved without cancellation.
class InverseCdfSampler {
public:
    explicit InverseCdfSampler(const Pmf& pmf) : seq_(pmf.sequence()) {
        numeric::CompensatedSum acc;
        cumulative_.reserve(seq_.head_size());
        for (double p : seq_.head()) {
            acc += p;
            cumulative_.push_back(acc.value());
            if (p > 0.0) last_positive_ = cumulative_.size();
        }
    }

    // Maps v uniform on (0,1] to a symbol: the smallest x with sum_{y>x} f(y) < v.
    Symbol operator()(double v) const {
        const double w = 1.0 - v;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), w);
        if (it != cumulative_.end()) return static_cast<Symbol>(it - cumulative_.begin()) + 1;
        if (!seq_.has_tail()) return std::max<Symbol>(last_positive_, 1);
        const Symbol m = seq_.head_size();
        Symbol lo = m, hi = m + 1;
        while (hi < kMaxSymbol && !(seq_.sum_above(hi) < v)) {
            lo = hi;
            hi = std::min(kMaxSymbol, m + 2 * (hi - m));
        }
        while (hi - lo > 1) {
            const Symbol mid = lo + (hi - lo) / 2;
            if (seq_.sum_above(mid) < v)
                hi = mid;
            else
                lo = mid;
        }
        return hi;
    }

    template <class Rng>
    Symbol draw(Rng& rng) const {
        const std::uint64_t bits = rng() >> 11;
        return (*this)(static_cast<double>(bits + 1) * 0x1p-53);
    }

private:
    MassSequence seq_;
    std::vector<double> cumulative_;
    Symbol last_positive_ = 0;
};

// n i.i.d. draws, deterministic for a fixed seed (mt19937_64 stream).
inline std::vector<Symbol> sample(const Pmf& pmf, std::uint64_t seed, std::size_t n) {
    InverseCdfSampler sampler(pmf);
    std::mt19937_64 rng(seed);
    std::vector<Symbol> out(n);
    for (auto& x : out) x = sampler.draw(rng);
    return out;
}

// ---------------------------------------------------------------------------
// Envelope probability, critical dimension and hazard function

struct EnvelopeProbability {
    Symbol l_f;
    Pmf pmf;
};

// l_f = max{k : sum_{j>=k} f(j) >= 1}; mu_f is zero below l_f, equals f above
// l_f and carries the remaining mass at l_f.
inline EnvelopeProbability envelope_probability(const Envelope& f) {
    const auto& seq = f.sequence();
    const auto reaches_one = [&](Symbol k) { return seq.sum_above(k - 1) >= 1.0 - kMassTolerance; };
    Symbol lo = 1, hi = 2;
    while (reaches_one(hi)) {
        lo = hi;
        hi *= 2;
        if (hi > kMaxSymbol) throw DomainError("envelope tail never drops below 1");
    }
    while (hi - lo > 1) {
        const Symbol mid = lo + (hi - lo) / 2;
        (reaches_one(mid) ? lo : hi) = mid;
    }
    const Symbol l_f = lo;
    const Symbol head_len = std::max<Symbol>(l_f, seq.head_size());
    std::vector<double> head(head_len, 0.0);
    head[l_f - 1] = std::clamp(1.0 - seq.sum_above(l_f), 0.0, 1.0);
    for (Symbol x = l_f + 1; x <= head_len; ++x) head[x - 1] = seq.at(x);
    return {l_f, Pmf(std::move(head), seq.tail())};
}

// u*_f(n) = min{u >= 1 : Fbar_f(u) < 1/n}, Fbar_f the tail function of mu_f.
inline Symbol quantile_u_star(const EnvelopeProbability& ep, std::uint64_t n) {
    if (n == 0) throw DomainError("n must be >= 1");
    const double level = 1.0 / static_cast<double>(n);
    const auto below = [&](Symbol u) { return tail_mass(ep.pmf, u) < level; };
    if (below(1)) return 1;
    Symbol lo = 1, hi = 2;
    while (!below(hi)) {
        lo = hi;
        if (hi >= kMaxSymbol / 2) throw DomainError("critical dimension out of range");
        hi *= 2;
    }
    while (hi - lo > 1) {
        const Symbol mid = lo + (hi - lo) / 2;
        (below(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline Symbol quantile_u_star(const Envelope& f, std::uint64_t n) {
    return quantile_u_star(envelope_probability(f), n);
}

// U_f(t): inverse of the piecewise-linear hazard h_f(u) = -ln Fbar_f(u)
// (h_f(0) = 0), evaluated at ln t.
class HazardFunction {
public:
    explicit HazardFunction(EnvelopeProbability ep) : ep_(std::move(ep)) {}
    explicit HazardFunction(const Envelope& f) : ep_(alw::envelope_probability(f)) {}

    const EnvelopeProbability& envelope_probability() const { return ep_; }

    double hazard(Symbol u) const {
        if (u == 0) return 0.0;
        const double tail = tail_mass(ep_.pmf, u);
        return tail > 0.0 ? -std::log(tail) : numeric::kInf;
    }

    // Largest integer k with h(k) <= y.
    Symbol knot_below(double y) const {
        if (y < 0.0) throw DomainError("hazard argument must be >= 0");
        Symbol lo = 0, hi = 1;
        while (hazard(hi) <= y) {
            lo = hi;
            if (hi >= kMaxSymbol / 2) throw DomainError("hazard inversion out of range");
            hi *= 2;
        }
        while (hi - lo > 1) {
            const Symbol mid = lo + (hi - lo) / 2;
            (hazard(mid) <= y ? lo : hi) = mid;
        }
        return lo;
    }

    // U_f evaluated at t = e^y.
    double at_log(double y) const {
        const Symbol k = knot_below(y);
        const double hk = hazard(k);
        const double hk1 = hazard(k + 1);
        if (!std::isfinite(hk1)) return static_cast<double>(k + 1);
        return static_cast<double>(k) + (y - hk) / (hk1 - hk);
    }

    double operator()(double t) const {
        if (!(t >= 1.0)) throw DomainError("U_f is defined for t >= 1");
        return at_log(std::log(t));
    }

private:
    EnvelopeProbability ep_;
};

inline HazardFunction hazard_u_function(const Envelope& f) { return HazardFunction(f); }

// ---------------------------------------------------------------------------
// Partitions and restricted quantities

class PartitionSpec {
public:
    // {1}, ..., {k-1}, {k, k+1, ...}
    static PartitionSpec tail(Symbol k) {
        if (k < 2) throw DomainError("tail partition needs k >= 2");
        PartitionSpec p;
        p.tail_k_ = k;
        return p;
    }

    // Explicit cells covering {1..M}; the residual cell {M+1, ...} is appended.
    static PartitionSpec cells(std::vector<std::vector<Symbol>> cells) {
        std::set<Symbol> seen;
        for (const auto& c : cells) {
            if (c.empty()) throw DomainError("partition cells must be nonempty");
            for (Symbol x : c)
                if (x == 0 || !seen.insert(x).second)
                    throw DomainError("partition cells must be disjoint positive integers");
        }
        if (seen.empty() || *seen.rbegin() != seen.size())
            throw DomainError("explicit cells must cover an initial segment {1..M}");
        PartitionSpec p;
        p.cells_ = std::move(cells);
        p.covered_ = seen.size();
        return p;
    }

    bool is_tail() const { return tail_k_ != 0; }
    Symbol tail_k() const { return tail_k_; }
    std::size_t cell_count() const { return is_tail() ? tail_k_ : cells_.size() + 1; }

    std::vector<double> cell_masses(const MassSequence& seq) const {
        std::vector<double> out;
        out.reserve(cell_count());
        if (is_tail()) {
            for (Symbol x = 1; x < tail_k_; ++x) out.push_back(seq.at(x));
            out.push_back(seq.sum_above(tail_k_ - 1));
            return out;
        }
        for (const auto& c : cells_) {
            numeric::CompensatedSum acc;
            for (Symbol x : c) acc += seq.at(x);
            out.push_back(acc.value());
        }
        out.push_back(seq.sum_above(covered_));
        return out;
    }

private:
    Symbol tail_k_ = 0;
    std::vector<std::vector<Symbol>> cells_;
    Symbol covered_ = 0;
};

// Entropy of pmf restricted to the sigma-field of a finite partition (bits).
inline double restricted_entropy(const Pmf& pmf, const PartitionSpec& part) {
    numeric::CompensatedSum acc;
    for (double m : part.cell_masses(pmf.sequence())) acc += numeric::self_information_bits(m);
    return acc.value();
}

// Divergence D(mu || v) restricted to the partition (bits).
inline double restricted_kl(const Pmf& mu, const Pmf& v, const PartitionSpec& part) {
    const auto a = part.cell_masses(mu.sequence());
    const auto b = part.cell_masses(v.sequence());
    numeric::CompensatedSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] <= 0.0) continue;
        if (b[i] <= 0.0) throw DomainError("restricted_kl: mu is not absolutely continuous w.r.t. v");
        acc += a[i] * std::log2(a[i] / b[i]);
    }
    return std::max(0.0, acc.value());
}

// Envelope on {1..k}: f(i) for i < k, min(1, sum_{x>=k} f(x)) at k.
inline Envelope project_envelope(const Envelope& f, const PartitionSpec& part) {
    if (!part.is_tail()) throw DomainError("project_envelope needs a tail partition");
    const Symbol k = part.tail_k();
    std::vector<double> head;
    head.reserve(k);
    for (Symbol x = 1; x < k; ++x) head.push_back(f.sequence().at(x));
    head.push_back(std::min(1.0, f.sequence().sum_above(k - 1)));
    return Envelope(std::move(head), std::monostate{});
}

// rho_{mu,k}: f(1..k-1) and the folded tail mass at k.
inline Pmf quantized_pmf(const Pmf& pmf, Symbol k) {
    if (k < 2) throw DomainError("quantized_pmf needs k >= 2");
    std::vector<double> head;
    head.reserve(k);
    for (Symbol x = 1; x < k; ++x) head.push_back(pmf.sequence().at(x));
    head.push_back(std::clamp(pmf.sequence().sum_above(k - 1), 0.0, 1.0));
    return Pmf(std::move(head), std::monostate{});
}

} // namespace alw
