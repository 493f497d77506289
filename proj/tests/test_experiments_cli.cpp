#include <alw/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace alw;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run alwc(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("alw_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& path, const std::string& data) {
    std::ofstream(path, std::ios::binary) << data;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace

TEST(Seeds, MixIsDeterministicAndSpreads) {
    EXPECT_EQ(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
    EXPECT_NE(mix_seed(1, 2, 3), mix_seed(1, 2, 4));
    EXPECT_NE(mix_seed(1, 2, 3), mix_seed(1, 3, 3));
    EXPECT_NE(mix_seed(0, 0, 0), 0u);
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Csv, RealFormatting) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(2.0), "2");
    EXPECT_EQ(format_real(std::nan("")), "nan");
    EXPECT_EQ(std::stod(format_real(1.0 / 3)), 1.0 / 3);
}

TEST(Experiment, ReproducibleAndWorkerInvariant) {
    ExperimentConfig cfg;
    cfg.source = Pmf::geometric(0.5);
    cfg.n_grid = {64, 256, 1024};
    cfg.trials = 6;
    cfg.seed = 99;
    const auto a = run_experiment(cfg);
    cfg.workers = 4;
    const auto b = run_experiment(cfg);
    std::ostringstream sa, sb;
    write_trial_csv(sa, a.records);
    write_summary_csv(sa, a.summary);
    write_trial_csv(sb, b.records);
    write_summary_csv(sb, b.summary);
    EXPECT_EQ(sa.str(), sb.str());
    ASSERT_EQ(a.records.size(), 18u);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].n, cfg.n_grid[i / 6]);
        EXPECT_EQ(a.records[i].trial, i % 6);
        EXPECT_EQ(a.records[i].seed, mix_seed(99, a.records[i].n, i % 6));
    }
}

TEST(Experiment, PointMassHasZeroDistortion) {
    ExperimentConfig cfg;
    cfg.source = Pmf::point_mass(1);
    cfg.n_grid = {100, 1000};
    cfg.trials = 3;
    for (const auto& r : run_experiment(cfg).records) EXPECT_EQ(r.emp_distortion, 0.0);
}

TEST(Experiment, SummaryRecomputesFromTrials) {
    ExperimentConfig cfg;
    cfg.source = Pmf::geometric(0.3);
    cfg.n_grid = {128, 512};
    cfg.trials = 5;
    cfg.seed = 5;
    const auto res = run_experiment(cfg);
    ASSERT_EQ(res.summary.size(), 2u);
    for (std::size_t g = 0; g < 2; ++g) {
        double rate = 0, dist = 0, red = 0;
        for (std::size_t t = 0; t < 5; ++t) {
            const auto& r = res.records[g * 5 + t];
            rate += r.emp_rate;
            dist += r.emp_distortion;
            red += r.redundancy_vs_restricted;
        }
        EXPECT_NEAR(res.summary[g].mean_rate, rate / 5, 1e-12);
        EXPECT_NEAR(res.summary[g].mean_distortion, dist / 5, 1e-12);
        EXPECT_NEAR(res.summary[g].mean_redundancy_vs_restricted, red / 5, 1e-12);
        EXPECT_EQ(res.summary[g].tail_mass_k, tail_mass(cfg.source, res.summary[g].k));
    }
}

TEST(Experiment, RedundancyShrinksWithN) {
    ExperimentConfig cfg;
    cfg.source = Pmf::geometric(0.5);
    cfg.n_grid = {1 << 8, 1 << 10, 1 << 12, 1 << 14};
    cfg.trials = 20;
    cfg.workers = 4;
    const auto res = run_experiment(cfg);
    for (std::size_t i = 1; i < res.summary.size(); ++i)
        EXPECT_LT(res.summary[i].mean_redundancy_vs_restricted, res.summary[i - 1].mean_redundancy_vs_restricted);
    EXPECT_LE(res.summary.back().mean_redundancy_vs_restricted, 0.25);
}

TEST(Experiment, StopFlagMarksIncomplete) {
    ExperimentConfig cfg;
    cfg.source = Pmf::geometric(0.5);
    cfg.n_grid = {1 << 12};
    cfg.trials = 50;
    std::atomic<bool> stop{true};
    const auto res = run_experiment(cfg, &stop);
    EXPECT_FALSE(res.complete);
    EXPECT_LT(res.records.size(), 50u);
}

TEST(Experiment, RejectsBadConfig) {
    ExperimentConfig cfg;
    EXPECT_THROW(run_experiment(cfg), DomainError);
    cfg.n_grid = {10, 5};
    EXPECT_THROW(run_experiment(cfg), DomainError);
    cfg.n_grid = {10};
    cfg.trials = 0;
    EXPECT_THROW(run_experiment(cfg), DomainError);
}

TEST(Cli, EncodeDecodeRoundtrip) {
    TempDir dir;
    std::string text;
    for (int i = 0; i < 200; ++i) text += std::to_string(1 + (i * 7) % 13) + "\n";
    spit(dir / "in.txt", text);
    const std::string src = "explicit:[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1]";
    for (const std::string coder : {"kt", "static"}) {
        std::vector<std::string> enc{"encode", "--in", dir / "in.txt", "--out", dir / "c.alw", "--k", "20",
                                     "--coder", coder};
        std::vector<std::string> dec{"decode", "--in", dir / "c.alw"};
        if (coder == "static") {
            enc.insert(enc.end(), {"--source", src});
            dec.insert(dec.end(), {"--source", src});
        }
        ASSERT_EQ(alwc(enc).code, 0) << coder;
        const auto r = alwc(dec);
        EXPECT_EQ(r.code, 0) << coder << r.err;
        EXPECT_EQ(r.out, text) << coder;
    }
    EXPECT_EQ(alwc({"decode", "--in", dir / "c.alw"}).code, cli::kExitUsage);
}

TEST(Cli, BinaryRoundtripAndQuantization) {
    TempDir dir;
    spit(dir / "in.txt", "1\n5\n2\n9\n");
    ASSERT_EQ(alwc({"encode", "--in", dir / "in.txt", "--out", dir / "c.alw", "--k", "3"}).code, 0);
    ASSERT_EQ(alwc({"decode", "--in", dir / "c.alw", "--out", dir / "o.bin", "--binary"}).code, 0);
    const std::string bin = slurp(dir / "o.bin");
    ASSERT_EQ(bin.size(), 16u);
    EXPECT_EQ(cli::detail::parse_symbols_binary(bin), (std::vector<Symbol>{1, 3, 2, 3}));
}

TEST(Cli, TruncatedContainerIsDataError) {
    TempDir dir;
    spit(dir / "in.txt", "1\n2\n3\n");
    ASSERT_EQ(alwc({"encode", "--in", dir / "in.txt", "--out", dir / "c.alw", "--k", "4"}).code, 0);
    const std::string full = slurp(dir / "c.alw");
    spit(dir / "t.alw", full.substr(0, full.size() - 1));
    const auto r = alwc({"decode", "--in", dir / "t.alw"});
    EXPECT_EQ(r.code, cli::kExitData);
    EXPECT_FALSE(r.err.empty());
    spit(dir / "h.alw", full.substr(0, 10));
    EXPECT_EQ(alwc({"decode", "--in", dir / "h.alw"}).code, cli::kExitData);
}

TEST(Cli, AlternatingStaticUniformCost) {
    TempDir dir;
    std::string text;
    for (int i = 0; i < 1024; ++i) text += (i % 2 ? "2\n" : "1\n");
    spit(dir / "in.txt", text);
    ASSERT_EQ(alwc({"encode", "--in", dir / "in.txt", "--out", dir / "c.alw", "--k", "2", "--coder", "static",
                    "--source", "explicit:[0.5,0.5]"}).code, 0);
    std::size_t off = 0;
    const std::string raw = slurp(dir / "c.alw");
    const auto block = CodedBlock::parse(
        std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()), off);
    EXPECT_GE(block.payload_bits, 1024u);
    EXPECT_LE(block.payload_bits, 1026u);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(alwc({}).code, cli::kExitUsage);
    EXPECT_EQ(alwc({"bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(alwc({"rd", "--source", "geometric:q=0.5"}).code, cli::kExitUsage);
    EXPECT_EQ(alwc({"encode", "--in", "x"}).code, cli::kExitUsage);
    EXPECT_EQ(alwc({"decode", "--in", "/nonexistent/alw/file"}).code, cli::kExitData);
    EXPECT_EQ(alwc({"radius", "--envelope", "envelope-power:c=1.0,alpha=0.5", "--n-grid", "16"}).code,
              cli::kExitUsage);
}

TEST(Cli, RdCurve) {
    const auto a = alwc({"rd", "--source", "geometric:p=0.5"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, alwc({"rd", "--source", "geometric:p=0.5"}).out);
    const auto rows = parse_csv(a.out);
    const auto& h = rows[0];
    EXPECT_EQ(h[0], "d");
    const auto ri = column(h, "rate_bits"), gi = column(h, "entropy_gap_bits"), di = column(h, "d");
    EXPECT_EQ(std::stod(rows[1][di]), 0.0);
    EXPECT_NEAR(std::stod(rows[1][ri]), 2.0, 1e-12);
    EXPECT_LE(std::stod(rows.back()[gi]), 0.01);
    const auto inv = alwc({"rd", "--source", "geometric:p=0.5", "--d-grid", "0.1,0.9"});
    ASSERT_EQ(inv.code, 0);
    EXPECT_NE(inv.out.find("invalid"), std::string::npos);
}

TEST(Cli, ExperimentFilesAndStdout) {
    TempDir dir;
    const std::vector<std::string> base{"experiment", "--source", "geometric:p=0.5", "--n-grid", "64,2^8",
                                        "--trials", "3", "--seed", "7"};
    auto args = base;
    args.insert(args.end(), {"--out", dir / "t.csv"});
    ASSERT_EQ(alwc(args).code, 0);
    const auto trials = parse_csv(slurp(dir / "t.csv"));
    EXPECT_EQ(trials.size(), 7u);
    const auto summary = parse_csv(slurp(dir / "t.csv.summary.csv"));
    EXPECT_EQ(summary.size(), 3u);
    const auto s = alwc(base);
    ASSERT_EQ(s.code, 0);
    EXPECT_EQ(s.out, slurp(dir / "t.csv") + "\n" + slurp(dir / "t.csv.summary.csv"));
}

TEST(Cli, RadiusColumnsAndRegimes) {
    const auto r = alwc({"radius", "--envelope", "envelope-geom:c=2.0,r=0.5", "--n-grid", "2^10,2^12,2^14"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "k_n", "u_star", "lower_bits", "upper_bits",
                                                  "restricted_upper_bits", "ratio_proxy", "admissible",
                                                  "regime"}));
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][8], "no_gain");
    const auto one = alwc({"radius", "--envelope", "envelope-geom:c=2.0,r=0.5", "--n-grid", "4096",
                           "--k-schedule", "sqrt"});
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(parse_csv(one.out).size(), 2u);
    const auto pw = alwc({"radius", "--envelope", "envelope-power:c=1.0,alpha=2.0", "--n-grid", "2^12"});
    ASSERT_EQ(pw.code, 0);
    EXPECT_EQ(parse_csv(pw.out)[0].back(), "consistency_warning");
}

TEST(Cli, EntropyEstimate) {
    const auto r = alwc({"entropy-est", "--source", "geometric:p=0.5", "--n", "4096", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "k", "H_hat_bits"}));
    EXPECT_EQ(rows.back()[0], "4096");
    EXPECT_EQ(rows.back()[1], "28");  // ceil(4096^0.4)
    EXPECT_NEAR(std::stod(rows.back()[2]), 2.0, 0.3);
    EXPECT_EQ(r.out, alwc({"entropy-est", "--source", "geometric:p=0.5", "--n", "4096", "--seed", "3"}).out);
}
