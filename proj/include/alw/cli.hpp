#pragma once

// Subcommands of the alwc tool. run_cli is side-effect free apart from the
// files named by --in / --out, so tests drive it in-process.
//
// Exit codes: 0 ok, 1 usage or invalid parameters, 2 data / format / I/O error.

#include <alw/codec.hpp>
#include <alw/distributions.hpp>
#include <alw/error.hpp>
#include <alw/experiments.hpp>
#include <alw/radius.hpp>
#include <alw/rate_distortion.hpp>
#include <alw/source_spec.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace alw::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

inline std::uint64_t parse_count(std::string_view tok) {
    tok = alw::detail::trim(tok);
    const auto caret = tok.find('^');
    const auto parse = [&](std::string_view t) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size() || t.empty())
            throw DomainError("invalid integer '" + std::string(tok) + "'");
        return v;
    };
    if (caret == std::string_view::npos) return parse(tok);
    const auto base = parse(tok.substr(0, caret));
    const auto exp = parse(tok.substr(caret + 1));
    if (exp > 63) throw DomainError("exponent too large in '" + std::string(tok) + "'");
    std::uint64_t v = 1;
    for (std::uint64_t i = 0; i < exp; ++i) {
        if (base != 0 && v > UINT64_MAX / base) throw DomainError("value overflows in '" + std::string(tok) + "'");
        v *= base;
    }
    return v;
}

// "256,1024" or "2^8,2^10"
inline std::vector<std::uint64_t> parse_count_list(std::string_view s) {
    std::vector<std::uint64_t> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(parse_count(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline std::vector<double> parse_real_list(std::string_view s) {
    std::vector<double> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(alw::detail::parse_real(s.substr(0, comma), "list"));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline CoderId parse_coder(const std::string& s) {
    if (s == "kt") return CoderId::KT;
    if (s == "static") return CoderId::Static;
    throw DomainError("unknown coder '" + s + "' (expected static or kt)");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("write to '" + path + "' failed");
}

// Whitespace-separated positive decimal integers.
inline std::vector<Symbol> parse_symbols(std::string_view text) {
    std::vector<Symbol> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == text.size()) break;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        Symbol v = 0;
        auto [p, ec] = std::from_chars(text.data() + i, text.data() + j, v);
        if (ec != std::errc() || p != text.data() + j || v == 0)
            throw FormatError("invalid symbol '" + std::string(text.substr(i, j - i)) + "'");
        out.push_back(v);
        i = j;
    }
    return out;
}

inline std::string format_symbols(const std::vector<Symbol>& s) {
    std::string out;
    for (Symbol v : s) {
        out += std::to_string(v);
        out += '\n';
    }
    return out;
}

// 32-bit little-endian symbols.
inline std::vector<Symbol> parse_symbols_binary(std::string_view bytes) {
    if (bytes.size() % 4 != 0) throw FormatError("binary symbol stream length is not a multiple of 4");
    std::vector<Symbol> out;
    out.reserve(bytes.size() / 4);
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        Symbol v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<Symbol>(static_cast<unsigned char>(bytes[i + b])) << (8 * b);
        if (v == 0) throw FormatError("symbol 0 in binary stream");
        out.push_back(v);
    }
    return out;
}

inline std::string format_symbols_binary(const std::vector<Symbol>& s) {
    std::string out;
    out.reserve(4 * s.size());
    for (Symbol v : s) {
        if (v > 0xffffffffULL) throw FormatError("symbol does not fit in 32 bits");
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    }
    return out;
}

inline std::vector<Symbol> read_symbols(const std::string& path, bool binary) {
    const auto raw = read_file(path);
    return binary ? parse_symbols_binary(raw) : parse_symbols(raw);
}

// Writes to --out when given, otherwise to the stream.
inline void emit(const std::string& path, std::ostream& out, const std::string& data) {
    if (path.empty())
        out << data;
    else
        write_file(path, data);
}

inline KSchedule parse_k_schedule(const std::string& s) {
    if (s == "ustar") return [](std::uint64_t, Symbol u) { return u; };
    if (s == "sqrt")
        return [](std::uint64_t, Symbol u) {
            return static_cast<Symbol>(std::ceil(std::sqrt(static_cast<double>(u)) - 1e-12));
        };
    if (s.rfind("ustar+", 0) == 0) {
        const auto d = parse_count(std::string_view(s).substr(6));
        return [d](std::uint64_t, Symbol u) { return u + d; };
    }
    if (s.rfind("const:", 0) == 0) {
        const auto k = parse_count(std::string_view(s).substr(6));
        return [k](std::uint64_t, Symbol) { return k; };
    }
    if (s.rfind("tau:", 0) == 0) {
        const double tau = alw::detail::parse_real(std::string_view(s).substr(4), "k schedule");
        schedule_k(4, tau);
        return [tau](std::uint64_t n, Symbol) { return schedule_k(n, tau); };
    }
    throw DomainError("unknown k schedule '" + s + "' (ustar, sqrt, ustar+D, const:K, tau:T)");
}

// Powers of two from 16 up to n_max, plus n_max itself.
inline std::vector<std::uint64_t> doubling_sizes(std::uint64_t n_max) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = 16; n < n_max; n *= 2) out.push_back(n);
    out.push_back(n_max);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
    std::string source, envelope, in, out, summary, coder = "kt", k_schedule, n_grid, d_grid;
    std::uint64_t n = 0, k = 0, trials = 1, seed = 0;
    double tau = 0.5;
    unsigned workers = 1;
    bool binary = false;
};

inline int cmd_encode(const Options& o, std::ostream&) {
    if (o.in.empty() || o.out.empty()) throw DomainError("encode needs --in and --out");
    if (o.k < 1) throw DomainError("encode needs --k >= 1");
    const CoderId coder = parse_coder(o.coder);
    std::optional<Pmf> source;
    if (coder == CoderId::Static) {
        if (o.source.empty()) throw DomainError("the static coder needs --source");
        source = parse_pmf_spec(o.source);
    }
    auto symbols = read_symbols(o.in, o.binary);
    if (o.k >= 2) symbols = quantize_block(TailQuantizer(o.k), symbols);
    else
        for (Symbol& s : symbols) s = 1;
    const CoderModel model = coder == CoderId::Static ? CoderModel::static_model(*source, o.k)
                                                      : CoderModel::kt(o.k);
    std::string bytes;
    for (const auto& b : encode_stream(model, symbols)) {
        const auto raw = b.serialize();
        bytes.append(raw.begin(), raw.end());
    }
    write_file(o.out, bytes);
    return kExitOk;
}

inline int cmd_decode(const Options& o, std::ostream& out) {
    if (o.in.empty()) throw DomainError("decode needs --in");
    const std::string raw = read_file(o.in);
    const auto blocks = parse_container(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
    std::optional<Pmf> source;
    if (!o.source.empty()) source = parse_pmf_spec(o.source);
    std::vector<Symbol> symbols;
    for (const auto& b : blocks) {
        if (b.coder == CoderId::Static && !source)
            throw DomainError("static-coded container needs --source to decode");
        if (b.k > kMaxCoderAlphabet) throw FormatError("block alphabet size out of range");
        const CoderModel model = b.coder == CoderId::Static ? CoderModel::static_model(*source, b.k)
                                                            : CoderModel::kt(b.k);
        const auto y = decode_block(b, model);
        symbols.insert(symbols.end(), y.begin(), y.end());
    }
    emit(o.out, out, o.binary ? format_symbols_binary(symbols) : format_symbols(symbols));
    return kExitOk;
}

// Default grid: d = 0 and 20 log-spaced points from min(1/4, 1 - f(1)) to 1e-4.
inline std::vector<double> default_d_grid(const Pmf& pmf) {
    const double dmax = max_valid_distortion(sort_decreasing(pmf).pmf);
    std::vector<double> g{0.0};
    const double hi = std::min(0.25, dmax);
    if (hi <= 1e-4) return g;
    for (int i = 0; i < 20; ++i) g.push_back(hi * std::pow(1e-4 / hi, i / 19.0));
    return g;
}

inline int cmd_rd(const Options& o, std::ostream& out) {
    if (o.source.empty()) throw DomainError("rd needs --source");
    const Pmf pmf = parse_pmf_spec(o.source);
    const auto grid = o.d_grid.empty() ? default_d_grid(pmf) : parse_real_list(o.d_grid);
    const double h = entropy(pmf);
    std::ostringstream s;
    CsvWriter csv(s);
    csv.row({"d", "theta", "kappa", "k_cut", "tilde_entropy_bits", "rate_bits", "entropy_gap_bits",
             "status"});
    for (double d : grid) {
        try {
            const auto p = rate_distortion(pmf, d);
            csv.field(p.d).field(p.theta).field(p.kappa).field(p.k_cut).field(p.tilde_entropy)
                .field(p.rate).field(h - p.rate).field("ok");
        } catch (const DomainError&) {
            const double nan = std::nan("");
            csv.field(d).field(nan).field(nan).field("").field(nan).field(nan).field(nan)
                .field("invalid");
        }
        csv.end_row();
    }
    emit(o.out, out, s.str());
    return kExitOk;
}

inline int cmd_experiment(const Options& o, std::ostream& out, const std::atomic<bool>* stop) {
    if (o.source.empty()) throw DomainError("experiment needs --source");
    ExperimentConfig cfg;
    cfg.source = parse_pmf_spec(o.source);
    if (!o.n_grid.empty())
        cfg.n_grid = parse_count_list(o.n_grid);
    else if (o.n > 0)
        cfg.n_grid = {o.n};
    else
        throw DomainError("experiment needs --n-grid or --n");
    if (!o.k_schedule.empty())
        for (auto k : parse_count_list(o.k_schedule)) cfg.k_schedule.push_back(k);
    cfg.tau = o.tau;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.coder = parse_coder(o.coder);
    cfg.workers = o.workers;
    const auto res = run_experiment(cfg, stop);

    std::ostringstream trials, summary;
    write_trial_csv(trials, res.records);
    write_summary_csv(summary, res.summary);
    if (o.out.empty()) {
        out << trials.str() << '\n' << summary.str();
    } else {
        write_file(o.out, trials.str());
        write_file(o.summary.empty() ? o.out + ".summary.csv" : o.summary, summary.str());
    }
    return res.complete ? kExitOk : kExitData;
}

inline int cmd_radius(const Options& o, std::ostream& out) {
    if (o.envelope.empty()) throw DomainError("radius needs --envelope");
    if (o.n_grid.empty()) throw DomainError("radius needs --n-grid");
    const Envelope f = parse_envelope_spec(o.envelope);
    if (!is_summable(f).summable) throw DomainError("envelope is not summable");
    if (f.support_size()) throw DomainError("radius needs an envelope with infinite support");
    const auto report = classify_regime(f, parse_k_schedule(o.k_schedule.empty() ? "ustar" : o.k_schedule),
                                        parse_count_list(o.n_grid));
    std::ostringstream s;
    CsvWriter csv(s);
    std::vector<std::string> header{"n", "k_n", "u_star", "lower_bits", "upper_bits",
                                    "restricted_upper_bits", "ratio_proxy", "admissible", "regime"};
    if (report.power_tail) header.push_back("consistency_warning");
    for (const auto& h : header) csv.field(h);
    csv.end_row();
    for (const auto& r : report.rows) {
        csv.field(r.n).field(r.k_n).field(r.u_star).field(r.lower_bits).field(r.upper_bits)
            .field(r.restricted_upper_bits).field(r.ratio_proxy).field(r.admissible)
            .field(regime_name(r.regime));
        if (report.power_tail) csv.field(r.consistency_warning);
        csv.end_row();
    }
    emit(o.out, out, s.str());
    return kExitOk;
}

inline int cmd_entropy_est(const Options& o, std::ostream& out) {
    std::vector<Symbol> stream;
    if (!o.in.empty()) {
        stream = read_symbols(o.in, o.binary);
    } else if (!o.source.empty()) {
        if (o.n < 1) throw DomainError("entropy-est with --source needs --n");
        stream = sample(parse_pmf_spec(o.source), o.seed, o.n);
    } else {
        throw DomainError("entropy-est needs --source or --in");
    }
    if (stream.empty()) throw FormatError("empty symbol stream");
    const auto sizes = o.n_grid.empty() ? doubling_sizes(o.n > 0 ? std::min<std::uint64_t>(o.n, stream.size())
                                                                  : stream.size())
                                        : parse_count_list(o.n_grid);
    std::ostringstream s;
    CsvWriter csv(s);
    csv.row({"n", "k", "H_hat_bits"});
    for (const auto& e : entropy_estimate(stream, o.tau, sizes)) {
        csv.field(e.n).field(e.k).field(e.h_hat_bits);
        csv.end_row();
    }
    emit(o.out, out, s.str());
    return kExitOk;
}

} // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                   const std::atomic<bool>* stop = nullptr) {
    CLI::App app{"almost-lossless two-stage coding toolkit", "alwc"};
    app.require_subcommand(1);
    detail::Options o;

    const auto common = [&](CLI::App* c) {
        c->add_option("--source", o.source, "source pmf spec");
        c->add_option("--envelope", o.envelope, "envelope spec");
        c->add_option("--in", o.in, "input file");
        c->add_option("--out", o.out, "output file (default: stdout)");
        c->add_option("--n", o.n, "block length");
        c->add_option("--n-grid", o.n_grid, "comma-separated block lengths (2^p allowed)");
        c->add_option("--k", o.k, "alphabet cut k");
        c->add_option("--tau", o.tau, "k = ceil(n^tau) (default 0.5; 0.4 for entropy-est)");
        c->add_option("--k-schedule", o.k_schedule, "explicit k list, or ustar|sqrt|ustar+D|const:K|tau:T");
        c->add_option("--trials", o.trials, "trials per block length");
        c->add_option("--seed", o.seed, "64-bit seed");
        c->add_option("--coder", o.coder, "static or kt");
        c->add_option("--workers", o.workers, "worker threads");
        c->add_flag("--binary", o.binary, "symbol files are 32-bit little-endian");
    };
    auto* enc = app.add_subcommand("encode", "quantize and encode a symbol file");
    auto* dec = app.add_subcommand("decode", "decode a container to a symbol file");
    auto* rd = app.add_subcommand("rd", "Hamming rate-distortion curve");
    auto* exp = app.add_subcommand("experiment", "Monte Carlo two-stage coding experiment");
    auto* rad = app.add_subcommand("radius", "minimax redundancy bounds and regimes");
    auto* est = app.add_subcommand("entropy-est", "code-length entropy estimates");
    for (auto* c : {enc, dec, rd, exp, rad, est}) common(c);
    rd->add_option("--d-grid", o.d_grid, "comma-separated distortion levels");
    exp->add_option("--summary", o.summary, "summary CSV path (default: <out>.summary.csv)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "alwc: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (enc->parsed()) return detail::cmd_encode(o, out);
        if (dec->parsed()) return detail::cmd_decode(o, out);
        if (rd->parsed()) return detail::cmd_rd(o, out);
        if (exp->parsed()) return detail::cmd_experiment(o, out, stop);
        if (rad->parsed()) return detail::cmd_radius(o, out);
        if (est->parsed()) {
            if (est->count("--tau") == 0) o.tau = 0.4;
            return detail::cmd_entropy_est(o, out);
        }
    } catch (const FormatError& e) {
        err << "alwc: " << e.what() << '\n';
        return kExitData;
    } catch (const DomainError& e) {
        err << "alwc: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "alwc: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace alw::cli
