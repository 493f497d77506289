// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: alw_acceptance [N ...]   (no arguments runs every criterion)

#include <alw/alw.hpp>
#include <alw/cli.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace alw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome c01_roundtrip() {
    std::mt19937_64 rng(1);
    const Symbol ks[] = {2, 4, 16, 256};
    const std::size_t ns[] = {1, 10, 1000};
    int blocks = 0, failures = 0;
    while (blocks < 1000) {
        const Symbol k = ks[blocks % 4];
        const std::size_t n = ns[(blocks / 4) % 3];
        const CoderId coder = (blocks / 12) % 2 ? CoderId::Static : CoderId::KT;
        // skewed random pmf on {1..k}, some cells at or below the table floor
        std::vector<double> w(k);
        double s = 0;
        for (auto& x : w) s += x = std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 6.0);
        w[blocks % k] = 0.0;
        for (auto& x : w) x /= s;
        double head = 0;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) head += w[i];
        w.back() = std::max(0.0, 1.0 - head);
        const Pmf p = Pmf::from_masses(w);
        std::vector<Symbol> y(n);
        std::uniform_int_distribution<Symbol> sym(1, k);
        for (auto& v : y) v = sym(rng);
        const auto model = coder == CoderId::Static ? CoderModel::static_model(p, k) : CoderModel::kt(k);
        const auto bytes = encode_block(model, y).serialize();
        std::size_t off = 0;
        const auto parsed = CodedBlock::parse(bytes, off);
        if (off != bytes.size() || decode_block(parsed, model) != y) ++failures;
        ++blocks;
    }
    return {failures == 0, fmt("%d blocks, %d failures", blocks, failures)};
}

Outcome c02_distortion() {
    const auto g = Pmf::geometric(0.5);
    const std::size_t n = 100'000;
    const auto x = sample(g, mix_seed(2, n, 0), n);
    const TailQuantizer q(8);
    const auto rec = dequantize_block(q, quantize_block(q, x));
    const double d = static_cast<double>(hamming_errors(x, rec)) / double(n);
    const double p = std::ldexp(1.0, -8);
    const double band = 3 * std::sqrt(p * (1 - p) / double(n));
    const double bound = tail_mass(g, 7);
    const bool ok = std::fabs(d - p) <= band && d <= bound && tail_mass(g, 8) == p;
    return {ok, fmt("d=%.6f target=%.8f band=%.6f bound=%.6f", d, p, band, bound)};
}

double empirical_entropy_bits(const std::vector<Symbol>& y, Symbol k) {
    std::vector<double> c(k + 1, 0.0);
    for (Symbol s : y) c[s] += 1;
    const double n = double(y.size());
    double h = 0;
    for (double v : c)
        if (v > 0) h -= v / n * std::log2(v / n);
    return h;
}

Outcome c03_kt_envelope() {
    int violations = 0, total = 0;
    double worst = -1e300;
    std::string where;
    for (auto [k, n] : {std::pair<Symbol, int>{2, 12}, {3, 7}}) {
        const auto model = CoderModel::kt(k);
        std::uint64_t count = 1;
        for (int i = 0; i < n; ++i) count *= k;
        std::vector<Symbol> y(n);
        for (std::uint64_t code = 0; code < count; ++code) {
            std::uint64_t c = code;
            for (int i = 0; i < n; ++i) y[i] = Symbol(c % k) + 1, c /= k;
            const double len = ideal_code_length(model, y);
            const double budget =
                n * empirical_entropy_bits(y, k) + 0.5 * double(k - 1) * std::log2(double(n)) + 1.0;
            const double slack = len - budget + 1.0;  // excess over the n*H + (k-1)/2 log n part
            if (slack > worst) worst = slack, where = fmt("k=%u n=%d", unsigned(k), n);
            violations += len > budget;
            ++total;
        }
    }
    return {violations == 0,
            fmt("%d sequences, %d violations, worst excess %.4f bits (%s)", total, violations, worst, where.c_str())};
}

Outcome c04_rate_convergence() {
    ExperimentConfig cfg;
    cfg.source = Pmf::geometric(0.5);
    cfg.n_grid = {1 << 8, 1 << 10, 1 << 12, 1 << 14};
    cfg.tau = 0.5;
    cfg.trials = 50;
    cfg.seed = 4;
    cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    const auto res = run_experiment(cfg);
    const auto& last = res.summary.back();
    const double lo = last.restricted_entropy - 0.01, hi = last.entropy_bits + 0.25;
    bool ok = last.mean_rate >= lo && last.mean_rate <= hi;
    std::string means;
    for (std::size_t i = 0; i < res.summary.size(); ++i) {
        means += fmt("%s%.4f", i ? "," : "", res.summary[i].mean_rate);
        if (i > 0) ok = ok && res.summary[i].mean_rate < res.summary[i - 1].mean_rate;
    }
    ok = ok && std::fabs(last.mean_rate - 2.0) < std::fabs(res.summary.front().mean_rate - 2.0);
    return {ok, fmt("means=[%s] window=[%.4f, %.4f]", means.c_str(), lo, hi)};
}

// Second evaluation path: materialize mu~ over 10^4 symbols.
double tilde_entropy_direct(const Pmf& p, double theta) {
    const Symbol N = 10'000;
    std::vector<double> m(N + 1, 0.0);
    double kap = 0;
    for (Symbol i = 2; i <= N; ++i) kap += m[i] = std::min(theta, mass(p, i));
    kap += tail_mass(p, N);
    m[1] = 1 - kap;
    double h = 0;
    for (Symbol i = N; i >= 1; --i)
        if (m[i] > 0) h -= m[i] * std::log2(m[i]);
    return h + p.sequence().entropy_above(N);
}

Outcome c05_rate_distortion() {
    const auto g = Pmf::geometric(0.5);
    const double theta = theta_for_distortion(g, 0.125);
    bool ok = std::fabs(theta - 3.0 / 128) <= 1e-10 && k_cut(g, theta) == 5;
    const double agree = std::fabs(tilde_entropy(g, theta) - tilde_entropy_direct(g, theta));
    ok = ok && agree <= 1e-9;
    std::vector<double> r;
    for (int i = 1; i <= 20; ++i) r.push_back(rate_distortion(g, 0.025 * i).rate);
    bool shape = true;
    for (std::size_t i = 1; i < r.size(); ++i) {
        shape = shape && r[i] <= r[i - 1] + 1e-12;
        if (i > 1) shape = shape && r[i] - 2 * r[i - 1] + r[i - 2] >= -1e-9;
    }
    const double gap = entropy(g) - rate_distortion(g, 1e-4).rate;
    ok = ok && shape && gap < 0.01;
    return {ok, fmt("theta=%.12f K=%u |dH|=%.2e convex_nonincreasing=%d gap(1e-4)=%.5f", theta,
                    unsigned(k_cut(g, theta)), agree, int(shape), gap)};
}

std::vector<Pmf> simplex_grid(Symbol a) {
    std::vector<Pmf> out;
    if (a == 2)
        for (int i = 0; i <= 4; ++i) out.push_back(Pmf::from_masses({i / 4.0, 1 - i / 4.0}));
    else
        for (int i = 0; i <= 3; ++i)
            for (int j = 0; i + j <= 3; ++j) out.push_back(Pmf::from_masses({i / 3.0, j / 3.0, (3 - i - j) / 3.0}));
    return out;
}

Outcome c06_exact_radius() {
    const double r2 = exact_radius_small({Pmf::point_mass(1), Pmf::point_mass(2)}, 1);
    const double r3 = exact_radius_small({Pmf::point_mass(1), Pmf::point_mass(2), Pmf::point_mass(3)}, 1);
    bool ok = std::fabs(r2 - 1.0) <= 1e-6 && std::fabs(r3 - std::log2(3.0)) <= 1e-6;
    int instances = 0, violations = 0;
    double worst = -1e300;
    for (Symbol a : {2u, 3u}) {
        const auto pool = simplex_grid(a);
        const std::size_t P = pool.size();
        std::vector<std::vector<std::size_t>> fams;
        for (std::size_t i = 0; i < P; ++i) {
            fams.push_back({i});
            for (std::size_t j = i + 1; j < P; ++j) {
                fams.push_back({i, j});
                for (std::size_t l = j + 1; l < P; ++l) fams.push_back({i, j, l});
            }
        }
        for (const auto& idx : fams)
            for (std::uint64_t n = 1; n <= 3; ++n)
                for (Symbol k = 2; k < a; ++k) {
                    std::vector<Pmf> fam, proj;
                    for (auto i : idx) fam.push_back(pool[i]), proj.push_back(quantized_pmf(pool[i], k));
                    const double diff = exact_radius_small(proj, n) - exact_radius_small(fam, n);
                    worst = std::max(worst, diff);
                    violations += diff > 1e-8;
                    ++instances;
                }
    }
    ok = ok && violations == 0;
    return {ok, fmt("R{d1,d2}=%.9f R{d1,d2,d3}=%.9f; %d projection instances, %d violations, max diff %.2e", r2,
                    r3, instances, violations, worst)};
}

Outcome c07_sandwich() {
    const auto f = Envelope::geometric(2.0, 0.5);
    bool ok = true;
    double worst_rel = 0;
    int rows = 0;
    for (int p = 8; p <= 20; ++p) {
        const std::uint64_t n = std::uint64_t{1} << p;
        const double L = std::log(double(n));
        const double closed = std::numbers::log2e * 0.5 * (L + L * L / (2 * std::numbers::ln2));
        const double lower = envelope_radius_lower(f, n);
        const double upper = envelope_radius_upper(f, n);
        const double rel = std::fabs(lower - closed) / closed;
        worst_rel = std::max(worst_rel, rel);
        ok = ok && rel <= 1e-4 && lower <= upper && u_star_sandwich(f, n).lower_bits <= upper;
        ++rows;
    }
    return {ok, fmt("%d n values, max relative closed-form error %.2e", rows, worst_rel)};
}

Outcome c08_regimes() {
    const auto f = Envelope::geometric(2.0, 0.5);
    std::vector<std::uint64_t> grid;
    for (int p = 10; p <= 20; ++p) grid.push_back(std::uint64_t{1} << p);
    const auto at = classify_regime(f, [](std::uint64_t, Symbol u) { return u; }, grid);
    int no_gain = 0;
    for (const auto& r : at.rows) no_gain += r.regime == Regime::NoGain;
    const auto sq = classify_regime(f, [](std::uint64_t, Symbol u) {
        return static_cast<Symbol>(std::ceil(std::sqrt(double(u))));
    }, grid);
    int gain = 0;
    for (const auto& r : sq.rows) gain += r.regime == Regime::Gain;
    const double last = sq.rows.back().ratio_proxy;
    const bool ok = no_gain == int(grid.size()) && gain == int(grid.size()) && sq.ratio_proxy_decreasing &&
                    last < 0.25;
    return {ok, fmt("k=u*: no_gain %d/%zu; k=ceil(sqrt u*): gain %d/%zu, ratio decreasing=%d, "
                    "ratio(2^20)=%.4f, k/u*(2^20)=%u/%u",
                    no_gain, grid.size(), gain, grid.size(), int(sq.ratio_proxy_decreasing), last,
                    unsigned(sq.rows.back().k_n), unsigned(sq.rows.back().u_star))};
}

Outcome c09_entropy_estimate() {
    const std::uint64_t n = 1 << 14;
    const auto g = entropy_estimate(sample(Pmf::geometric(0.5), mix_seed(9, n, 0), n), 0.4, {n});
    const auto d = entropy_estimate(sample(Pmf::point_mass(1), mix_seed(9, 4096, 0), 4096), 0.4, {4096});
    const double hg = g.back().h_hat_bits, hd = d.back().h_hat_bits;
    return {std::fabs(hg - 2.0) <= 0.15 && hd <= 0.05, fmt("H_hat(geometric, 2^14)=%.4f H_hat(delta1, 4096)=%.5f", hg, hd)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome c10_determinism() {
    const fs::path dir = fs::temp_directory_path() / "alw_acceptance_c10";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream in(dir / "in.txt");
        for (auto s : sample(Pmf::zeta(2.0), 10, 5000)) in << s << '\n';
    }
    const auto P = [&](const char* name) { return (dir / name).string(); };
    using Args = std::vector<std::string>;
    const std::vector<std::pair<Args, std::vector<std::string>>> cmds = {
        {{"encode", "--in", P("in.txt"), "--out", P("c.alw"), "--k", "64"}, {"c.alw"}},
        {{"encode", "--in", P("in.txt"), "--out", P("s.alw"), "--k", "64", "--coder", "static", "--source",
          "zeta:alpha=2.0"},
         {"s.alw"}},
        {{"decode", "--in", P("c.alw"), "--out", P("d.txt")}, {"d.txt"}},
        {{"rd", "--source", "zeta:alpha=2.0"}, {}},
        {{"experiment", "--source", "geometric:p=0.5", "--n-grid", "2^8,2^10", "--trials", "8", "--seed", "10",
          "--workers", "3", "--out", P("e.csv")},
         {"e.csv", "e.csv.summary.csv"}},
        {{"experiment", "--source", "geometric:p=0.5", "--n-grid", "2^8", "--trials", "4"}, {}},
        {{"radius", "--envelope", "envelope-geom:c=2.0,r=0.5", "--n-grid", "2^10,2^14,2^18", "--k-schedule", "sqrt"},
         {}},
        {{"entropy-est", "--source", "geometric:p=0.5", "--n", "8192", "--seed", "10"}, {}},
    };
    int identical = 0, failed = 0;
    for (const auto& [args, files] : cmds) {
        std::string outs[2];
        bool ran = true;
        for (auto& o : outs) {
            std::ostringstream so, se;
            ran = ran && cli::run_cli(args, so, se) == 0;
            o = so.str();
            for (const auto& f : files) o += "\x1f" + slurp(dir / f);
        }
        if (ran && outs[0] == outs[1] && !outs[0].empty())
            ++identical;
        else
            ++failed;
    }
    fs::remove_all(dir);
    return {failed == 0, fmt("%d/%zu commands byte-identical on rerun", identical, cmds.size())};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: no runtime limit
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "bit-exact roundtrip", 10, c01_roundtrip},
        {2, "distortion law", 5, c02_distortion},
        {3, "KT redundancy envelope", 30, c03_kt_envelope},
        {4, "rate convergence", 120, c04_rate_convergence},
        {5, "rate-distortion closed form", 1, c05_rate_distortion},
        {6, "exact radius oracle", 30, c06_exact_radius},
        {7, "envelope bound sandwich", 5, c07_sandwich},
        {8, "regime reproduction", 10, c08_regimes},
        {9, "entropy estimation", 60, c09_entropy_estimate},
        {10, "determinism", 0, c10_determinism},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_seconds == 0 || secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s c%02d %s: %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    in_time ? "" : fmt(" > %.0fs limit", c.limit_seconds).c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
