#pragma once

// Seeded Monte Carlo harness for the two-stage codec and CSV helpers.
//
// Trial t at block length n draws its samples from mt19937_64 seeded with
//   mix(seed, n, t) = sm(sm(sm(seed) ^ n) ^ t),
// sm the splitmix64 step, so output does not depend on scheduling.

#include <alw/codec.hpp>
#include <alw/distributions.hpp>
#include <alw/error.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace alw {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t n, std::uint64_t trial) {
    return splitmix64(splitmix64(splitmix64(seed) ^ n) ^ trial);
}

// ---------------------------------------------------------------------------
// CSV formatting: '.' decimal point, 17 significant digits, no locale.

inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    CsvWriter& field(const char* s) { return field(std::string(s)); }
    CsvWriter& field(double v) { return field(format_real(v)); }
    CsvWriter& field(std::uint64_t v) { return field(std::to_string(v)); }
    CsvWriter& field(bool v) { return field(v ? "1" : "0"); }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }
    void row(std::initializer_list<std::string> cells) {
        for (const auto& c : cells) field(c);
        end_row();
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }
    std::ostream& out_;
    bool first_ = true;
};

// ---------------------------------------------------------------------------
// Experiment

struct ExperimentConfig {
    Pmf source = Pmf::point_mass(1);
    std::vector<std::uint64_t> n_grid;
    double tau = 0.5;
    std::vector<Symbol> k_schedule;  // explicit k per n; overrides tau when nonempty
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    CoderId coder = CoderId::KT;
    unsigned workers = 1;

    void validate() const {
        if (n_grid.empty()) throw DomainError("n grid must be nonempty");
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            if (n_grid[i] < 1) throw DomainError("block lengths must be >= 1");
            if (i > 0 && n_grid[i] <= n_grid[i - 1])
                throw DomainError("n grid must be strictly ascending");
        }
        if (!k_schedule.empty() && k_schedule.size() != n_grid.size())
            throw DomainError("explicit k schedule must match the n grid");
        for (Symbol k : k_schedule)
            if (k < 2) throw DomainError("k must be >= 2");
        if (trials < 1) throw DomainError("trials must be >= 1");
        if (k_schedule.empty() && !(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0,1)");
    }

    Symbol k_for(std::size_t grid_index) const {
        return k_schedule.empty() ? schedule_k(n_grid[grid_index], tau) : k_schedule[grid_index];
    }
};

struct TrialRecord {
    std::uint64_t n;
    Symbol k;
    std::uint64_t trial;
    std::uint64_t seed;
    double emp_rate;
    double emp_rate_with_header;
    double emp_distortion;
    double redundancy_vs_H;
    double redundancy_vs_restricted;
    std::uint64_t header_bytes;
};

inline TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t grid_index, std::uint64_t t) {
    const std::uint64_t n = cfg.n_grid[grid_index];
    const Symbol k = cfg.k_for(grid_index);
    const std::uint64_t s = mix_seed(cfg.seed, n, t);
    const auto x = sample(cfg.source, s, n);
    const auto r = two_stage_encode(&cfg.source, x, k, cfg.coder);
    const auto& st = r.stats;
    return {n,
            k,
            t,
            s,
            st.emp_rate,
            st.emp_rate_with_header,
            st.emp_distortion,
            st.redundancy_vs_H,
            st.redundancy_vs_restricted,
            static_cast<std::uint64_t>(st.header_bytes)};
}

struct SummaryRow {
    std::uint64_t n;
    Symbol k;
    std::uint64_t trials;
    double mean_rate, sd_rate;
    double mean_rate_with_header;
    double mean_distortion, sd_distortion;
    double mean_redundancy_vs_H;
    double mean_redundancy_vs_restricted, sd_redundancy_vs_restricted;
    double tail_mass_k;         // Fbar(k)
    double entropy_bits;        // H
    double restricted_entropy;  // H restricted to the tail partition at k
    double kt_budget;           // ((k-1)/2) log n / n
};

struct ExperimentResult {
    std::vector<TrialRecord> records;  // sorted by (n, trial)
    std::vector<SummaryRow> summary;
    bool complete = true;
};

namespace detail {

struct MeanSd {
    double mean, sd;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
    numeric::CompensatedSum s;
    for (double x : v) s += x;
    const double mean = s.value() / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    numeric::CompensatedSum q;
    for (double x : v) q += (x - mean) * (x - mean);
    return {mean, std::sqrt(q.value() / static_cast<double>(v.size() - 1))};
}

} // namespace detail

// Aggregates records grouped by n; records must be sorted by (n, trial).
inline std::vector<SummaryRow> summarize(const Pmf& source, const std::vector<TrialRecord>& records) {
    std::vector<SummaryRow> out;
    const double h = entropy(source);
    for (std::size_t i = 0; i < records.size();) {
        std::size_t j = i;
        std::vector<double> rate, rate_h, dist, red_h, red_r;
        while (j < records.size() && records[j].n == records[i].n) {
            rate.push_back(records[j].emp_rate);
            rate_h.push_back(records[j].emp_rate_with_header);
            dist.push_back(records[j].emp_distortion);
            red_h.push_back(records[j].redundancy_vs_H);
            red_r.push_back(records[j].redundancy_vs_restricted);
            ++j;
        }
        const auto n = records[i].n;
        const auto k = records[i].k;
        const auto r = detail::mean_sd(rate);
        const auto d = detail::mean_sd(dist);
        const auto rr = detail::mean_sd(red_r);
        const double nn = static_cast<double>(n);
        out.push_back({n, k, j - i, r.mean, r.sd, detail::mean_sd(rate_h).mean, d.mean, d.sd,
                       detail::mean_sd(red_h).mean, rr.mean, rr.sd, tail_mass(source, k), h,
                       restricted_entropy(source, PartitionSpec::tail(k)),
                       0.5 * static_cast<double>(k - 1) * std::log2(nn) / nn});
        i = j;
    }
    return out;
}

// Runs every (n, trial) pair on `workers` threads; a set stop flag ends the
// run early and only the finished prefix of each n is kept.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::atomic<bool>* stop = nullptr) {
    cfg.validate();
    const std::size_t tasks = cfg.n_grid.size() * cfg.trials;
    std::vector<TrialRecord> slots(tasks);
    std::vector<char> done(tasks, 0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto worker = [&] {
        for (;;) {
            if (stop && stop->load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks) return;
            try {
                slots[i] = run_trial(cfg, i / cfg.trials, i % cfg.trials);
                done[i] = 1;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(tasks);
                return;
            }
        }
    };
    const unsigned w = std::max(1u, cfg.workers);
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < w; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    ExperimentResult res;
    for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            const std::size_t i = g * cfg.trials + t;
            if (!done[i]) {
                res.complete = false;
                break;
            }
            res.records.push_back(slots[i]);
        }
    }
    res.summary = summarize(cfg.source, res.records);
    return res;
}

inline void write_trial_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    CsvWriter csv(out);
    csv.row({"n", "k", "trial", "seed", "emp_rate", "emp_rate_with_header", "emp_distortion",
             "redundancy_vs_H", "redundancy_vs_restricted", "header_bytes"});
    for (const auto& r : records) {
        csv.field(r.n).field(r.k).field(r.trial).field(r.seed).field(r.emp_rate)
            .field(r.emp_rate_with_header).field(r.emp_distortion).field(r.redundancy_vs_H)
            .field(r.redundancy_vs_restricted).field(r.header_bytes);
        csv.end_row();
    }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    CsvWriter csv(out);
    csv.row({"n", "k", "trials", "mean_rate", "sd_rate", "mean_rate_with_header",
             "mean_distortion", "sd_distortion", "mean_redundancy_vs_H",
             "mean_redundancy_vs_restricted", "sd_redundancy_vs_restricted", "tail_mass_k",
             "entropy_bits", "restricted_entropy_bits", "kt_budget_bits"});
    for (const auto& s : rows) {
        csv.field(s.n).field(s.k).field(s.trials).field(s.mean_rate).field(s.sd_rate)
            .field(s.mean_rate_with_header).field(s.mean_distortion).field(s.sd_distortion)
            .field(s.mean_redundancy_vs_H).field(s.mean_redundancy_vs_restricted)
            .field(s.sd_redundancy_vs_restricted).field(s.tail_mass_k).field(s.entropy_bits)
            .field(s.restricted_entropy).field(s.kt_budget);
        csv.end_row();
    }
}

} // namespace alw
