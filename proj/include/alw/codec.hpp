#pragma once

// Two-stage almost-lossless codec: a symbol-wise tail quantizer followed by an
// arithmetic-coded lossless stage driven either by a static model (known
// source statistics) or by the Krichevsky-Trofimov add-1/2 estimator.
//
// Container layout of one block (little-endian):
//   "ALWC" | version u8 = 1 | n u32 | k u32 | coder_id u8 | payload_bits u64 | payload
// The payload is MSB-first packed bits, zero-padded to a byte boundary.

#include <alw/arithmetic_coder.hpp>
#include <alw/distributions.hpp>
#include <alw/error.hpp>
#include <alw/numeric.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace alw {

// ---------------------------------------------------------------------------
// First stage

struct TailQuantizer {
    Symbol k;

    explicit TailQuantizer(Symbol k_) : k(k_) {
        if (k < 2) throw DomainError("tail quantizer needs k >= 2");
    }
    Symbol quantize(Symbol x) const {
        if (x == 0) throw DomainError("symbols start at 1");
        return std::min(x, k);
    }
    // The residual cell {k, k+1, ...} is reproduced by its smallest element.
    Symbol dequantize(Symbol i) const {
        if (i == 0 || i > k) throw DomainError("quantizer index out of range");
        return i;
    }
};

inline std::vector<Symbol> quantize_block(const TailQuantizer& q, std::span<const Symbol> x) {
    std::vector<Symbol> out;
    out.reserve(x.size());
    for (Symbol s : x) out.push_back(q.quantize(s));
    return out;
}

inline std::vector<Symbol> dequantize_block(const TailQuantizer& q, std::span<const Symbol> y) {
    std::vector<Symbol> out;
    out.reserve(y.size());
    for (Symbol s : y) out.push_back(q.dequantize(s));
    return out;
}

inline std::size_t hamming_errors(std::span<const Symbol> a, std::span<const Symbol> b) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
    return count;
}

struct ExpectedDistortion {
    double exact;  // Fbar(k), prototype k for the residual cell
    double bound;  // Fbar(k-1) = mu(Gamma_{k-1}^c)
};

inline ExpectedDistortion expected_distortion(const Pmf& pmf, Symbol k) {
    if (k < 2) throw DomainError("expected_distortion needs k >= 2");
    return {tail_mass(pmf, k), tail_mass(pmf, k - 1)};
}

// k = max(2, ceil(n^tau))
inline Symbol schedule_k(std::uint64_t n, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0,1)");
    if (n < 1) throw DomainError("schedule_k needs n >= 1");
    const double v = std::pow(static_cast<double>(n), tau);
    return std::max<Symbol>(2, static_cast<Symbol>(std::ceil(v * (1.0 - 1e-12))));
}

// ---------------------------------------------------------------------------
// Second-stage models

enum class CoderId : std::uint8_t { Static = 0, KT = 1 };

inline const char* coder_name(CoderId id) { return id == CoderId::Static ? "static" : "kt"; }

inline constexpr Symbol kMaxCoderAlphabet = Symbol{1} << 24;
inline constexpr std::uint64_t kMaxBlockLength = std::uint64_t{1} << 20;

namespace detail {

// Fenwick tree over integer weights.
class FenwickTree {
public:
    explicit FenwickTree(std::size_t n, std::uint64_t init) : tree_(n + 1, 0) {
        for (std::size_t i = 1; i <= n; ++i) {
            tree_[i] += init;
            const std::size_t j = i + (i & (~i + 1));
            if (j <= n) tree_[j] += tree_[i];
        }
    }
    void add(std::size_t i, std::uint64_t delta) {
        for (; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }
    // sum of weights 1..i
    std::uint64_t prefix(std::size_t i) const {
        std::uint64_t s = 0;
        for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }
    // Largest i with prefix(i) <= target, i.e. the symbol i+1 holds target.
    std::size_t lower_index(std::uint64_t target) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 < tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step < tree_.size() && tree_[pos + step] <= target) {
                pos += step;
                target -= tree_[pos];
            }
        }
        return pos;
    }

private:
    std::vector<std::uint64_t> tree_;
};

struct Interval {
    std::uint64_t lo, hi, total;
};

} // namespace detail

// Integer frequency table on {1..k}; probabilities floored at 2^-32.
class StaticTable {
public:
    StaticTable(const Pmf& pmf, Symbol k) : k_(k) {
        std::vector<double> p(k);
        if (k == 1) {
            p[0] = 1.0;
        } else {
            const Pmf q = quantized_pmf(pmf, k);
            for (Symbol i = 1; i <= k; ++i) p[i - 1] = mass(q, i);
        }
        double norm = 0.0;
        for (double& v : p) {
            v = std::max(v, 0x1p-32);
            norm += v;
        }
        cumulative_.assign(k + 1, 0);
        for (Symbol i = 0; i < k; ++i) {
            const auto f = std::max<std::uint64_t>(1, std::llround(p[i] / norm * 0x1p32));
            cumulative_[i + 1] = cumulative_[i] + f;
        }
    }

    Symbol k() const { return k_; }
    std::uint64_t total() const { return cumulative_.back(); }
    detail::Interval interval(Symbol s) const { return {cumulative_[s - 1], cumulative_[s], total()}; }
    Symbol find(std::uint64_t target) const {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        return static_cast<Symbol>(it - cumulative_.begin());
    }
    double probability(Symbol s) const {
        return static_cast<double>(cumulative_[s] - cumulative_[s - 1]) /
               static_cast<double>(total());
    }

private:
    Symbol k_;
    std::vector<std::uint64_t> cumulative_;
};

// KT sequential state: P(i) = (c_i + 1/2) / (t + k/2) = (2 c_i + 1) / (2 t + k).
class KtState {
public:
    explicit KtState(Symbol k) : k_(k), weights_(k, 1) {}

    std::uint64_t total() const { return 2 * seen_ + k_; }
    detail::Interval interval(Symbol s) const {
        const std::uint64_t lo = weights_.prefix(s - 1);
        return {lo, weights_.prefix(s), total()};
    }
    Symbol find(std::uint64_t target) const {
        return static_cast<Symbol>(weights_.lower_index(target)) + 1;
    }
    void update(Symbol s) {
        weights_.add(s, 2);
        ++seen_;
    }

private:
    Symbol k_;
    detail::FenwickTree weights_;
    std::uint64_t seen_ = 0;
};

class CoderModel {
public:
    static CoderModel static_model(const Pmf& pmf, Symbol k) {
        check_k(k);
        CoderModel m(CoderId::Static, k);
        m.table_ = std::make_shared<const StaticTable>(pmf, k);
        return m;
    }
    static CoderModel kt(Symbol k) {
        check_k(k);
        return CoderModel(CoderId::KT, k);
    }

    CoderId id() const { return id_; }
    Symbol k() const { return k_; }
    const StaticTable* table() const { return table_.get(); }

private:
    CoderModel(CoderId id, Symbol k) : id_(id), k_(k) {}
    static void check_k(Symbol k) {
        if (k < 1 || k > kMaxCoderAlphabet) throw DomainError("coder alphabet size out of range");
    }

    CoderId id_;
    Symbol k_;
    std::shared_ptr<const StaticTable> table_;
};

namespace detail {

// Runs fn(interval) for each symbol of y under the model's sequential law.
template <class Fn>
void walk_model(const CoderModel& model, std::span<const Symbol> y, Fn&& fn) {
    for (Symbol s : y)
        if (s < 1 || s > model.k()) throw DomainError("symbol out of coder range");
    if (model.id() == CoderId::Static) {
        for (Symbol s : y) fn(model.table()->interval(s));
        return;
    }
    KtState state(model.k());
    for (Symbol s : y) {
        fn(state.interval(s));
        state.update(s);
    }
}

} // namespace detail

// -log2 P_model(y^n), accumulated in log space.
inline double ideal_code_length(const CoderModel& model, std::span<const Symbol> y) {
    numeric::CompensatedSum bits;
    detail::walk_model(model, y, [&](const detail::Interval& iv) {
        bits += std::log2(static_cast<double>(iv.total)) -
                std::log2(static_cast<double>(iv.hi - iv.lo));
    });
    return bits.value();
}

// ---------------------------------------------------------------------------
// Container

inline constexpr std::array<std::uint8_t, 4> kMagic{'A', 'L', 'W', 'C'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4 + 1 + 8;

struct CodedBlock {
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    CoderId coder = CoderId::KT;
    std::uint64_t payload_bits = 0;
    std::vector<std::uint8_t> payload;

    std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
        out.push_back(kFormatVersion);
        put_le(out, n, 4);
        put_le(out, k, 4);
        out.push_back(static_cast<std::uint8_t>(coder));
        put_le(out, payload_bits, 8);
        out.insert(out.end(), payload.begin(), payload.end());
        return out;
    }

    std::size_t byte_size() const { return kHeaderBytes + payload.size(); }

    // Parses one block starting at offset; advances offset past it.
    static CodedBlock parse(std::span<const std::uint8_t> bytes, std::size_t& offset) {
        if (bytes.size() - offset < kHeaderBytes) throw FormatError("truncated block header");
        const auto* p = bytes.data() + offset;
        if (!std::equal(kMagic.begin(), kMagic.end(), p)) throw FormatError("bad magic");
        if (p[4] != kFormatVersion) throw FormatError("unsupported container version");
        CodedBlock b;
        b.n = static_cast<std::uint32_t>(get_le(p + 5, 4));
        b.k = static_cast<std::uint32_t>(get_le(p + 9, 4));
        if (p[13] > 1) throw FormatError("unknown coder id");
        b.coder = static_cast<CoderId>(p[13]);
        b.payload_bits = get_le(p + 14, 8);
        if (b.k < 1) throw FormatError("block alphabet size must be >= 1");
        const std::uint64_t payload_bytes = (b.payload_bits + 7) / 8;
        if (b.payload_bits > std::uint64_t{1} << 60 ||
            payload_bytes > bytes.size() - offset - kHeaderBytes)
            throw FormatError("truncated payload");
        b.payload.assign(p + kHeaderBytes, p + kHeaderBytes + payload_bytes);
        offset += kHeaderBytes + payload_bytes;
        return b;
    }

private:
    static void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    static std::uint64_t get_le(const std::uint8_t* p, int bytes) {
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
};

inline std::vector<CodedBlock> parse_container(std::span<const std::uint8_t> bytes) {
    std::vector<CodedBlock> blocks;
    std::size_t offset = 0;
    while (offset < bytes.size()) blocks.push_back(CodedBlock::parse(bytes, offset));
    return blocks;
}

// ---------------------------------------------------------------------------
// Second stage

inline CodedBlock encode_block(const CoderModel& model, std::span<const Symbol> y) {
    if (y.size() > kMaxBlockLength) throw DomainError("block longer than 2^20 symbols");
    BitWriter writer;
    CodedBlock block;
    block.n = static_cast<std::uint32_t>(y.size());
    block.k = static_cast<std::uint32_t>(model.k());
    block.coder = model.id();
    if (!y.empty()) {
        ArithmeticEncoder enc(writer);
        detail::walk_model(model, y,
                           [&](const detail::Interval& iv) { enc.encode(iv.lo, iv.hi, iv.total); });
        enc.finish();
    }
    block.payload_bits = writer.bit_count();
    block.payload = writer.release();
    return block;
}

inline std::vector<Symbol> decode_block(const CodedBlock& block, const CoderModel& model) {
    if (block.coder != model.id()) throw FormatError("block coder does not match the model");
    if (block.k != model.k()) throw FormatError("block alphabet size does not match the model");
    if (block.n > kMaxBlockLength) throw FormatError("block length exceeds 2^20");
    if ((block.payload_bits + 7) / 8 != block.payload.size())
        throw FormatError("payload size does not match payload_bits");
    std::vector<Symbol> out;
    out.reserve(block.n);
    if (block.n == 0) return out;
    if (block.payload_bits == 0) throw FormatError("empty payload for a nonempty block");
    BitReader reader(block.payload, block.payload_bits);
    ArithmeticDecoder dec(reader);
    if (model.id() == CoderId::Static) {
        const auto& table = *model.table();
        for (std::uint32_t i = 0; i < block.n; ++i) {
            const Symbol s = table.find(dec.target(table.total()));
            const auto iv = table.interval(s);
            dec.consume(iv.lo, iv.hi, iv.total);
            out.push_back(s);
        }
    } else {
        KtState state(model.k());
        for (std::uint32_t i = 0; i < block.n; ++i) {
            const Symbol s = state.find(dec.target(state.total()));
            const auto iv = state.interval(s);
            dec.consume(iv.lo, iv.hi, iv.total);
            state.update(s);
            out.push_back(s);
        }
    }
    if (reader.position() > block.payload_bits + coder::kCodeBits)
        throw FormatError("payload exhausted before the block was decoded");
    return out;
}

// Splits y into blocks of at most 2^20 symbols.
inline std::vector<CodedBlock> encode_stream(const CoderModel& model, std::span<const Symbol> y) {
    std::vector<CodedBlock> blocks;
    for (std::size_t pos = 0; pos < y.size() || blocks.empty(); pos += kMaxBlockLength) {
        const std::size_t len = std::min<std::size_t>(kMaxBlockLength, y.size() - pos);
        blocks.push_back(encode_block(model, y.subspan(pos, len)));
        if (y.empty()) break;
    }
    return blocks;
}

// ---------------------------------------------------------------------------
// Two-stage scheme

struct CodecStats {
    std::uint64_t n = 0;
    Symbol k = 0;
    std::uint64_t payload_bits = 0;
    std::size_t header_bytes = kHeaderBytes;
    double emp_rate = 0.0;              // payload bits per symbol
    double emp_rate_with_header = 0.0;  // header bytes amortized
    double emp_distortion = 0.0;
    double entropy_bits = std::nan("");
    double restricted_entropy_bits = std::nan("");
    double redundancy_vs_H = std::nan("");
    double redundancy_vs_restricted = std::nan("");
};

struct TwoStageResult {
    CodedBlock block;
    std::vector<Symbol> reconstruction;
    CodecStats stats;
};

// quantize -> encode -> decode -> dequantize. Statistics against the source
// are filled only when the source pmf is known.
inline TwoStageResult two_stage_encode(const Pmf* source, std::span<const Symbol> x, Symbol k,
                                       CoderId coder) {
    const TailQuantizer q(k);
    const auto y = quantize_block(q, x);
    if (coder == CoderId::Static && source == nullptr)
        throw DomainError("the static coder needs the source pmf");
    const CoderModel model = coder == CoderId::Static ? CoderModel::static_model(*source, k)
                                                      : CoderModel::kt(k);
    TwoStageResult r;
    r.block = encode_block(model, y);
    r.reconstruction = dequantize_block(q, decode_block(r.block, model));

    auto& st = r.stats;
    st.n = x.size();
    st.k = k;
    st.payload_bits = r.block.payload_bits;
    if (st.n > 0) {
        const double n = static_cast<double>(st.n);
        st.emp_rate = static_cast<double>(st.payload_bits) / n;
        st.emp_rate_with_header =
            (static_cast<double>(st.payload_bits) + 8.0 * static_cast<double>(st.header_bytes)) / n;
        st.emp_distortion = static_cast<double>(hamming_errors(x, r.reconstruction)) / n;
    }
    if (source != nullptr) {
        st.entropy_bits = entropy(*source);
        st.restricted_entropy_bits = restricted_entropy(*source, PartitionSpec::tail(k));
        st.redundancy_vs_H = st.emp_rate - st.entropy_bits;
        st.redundancy_vs_restricted = st.emp_rate - st.restricted_entropy_bits;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Code-length entropy estimation

struct EntropyEstimate {
    std::uint64_t n;
    Symbol k;
    double h_hat_bits;
};

// For each block size n, codes the first n symbols of the stream with the KT
// two-stage code at k = schedule_k(n, tau); the estimate is payload bits / n.
inline std::vector<EntropyEstimate> entropy_estimate(std::span<const Symbol> stream, double tau,
                                                     const std::vector<std::uint64_t>& block_sizes) {
    std::vector<EntropyEstimate> out;
    for (std::size_t i = 0; i < block_sizes.size(); ++i) {
        const auto n = block_sizes[i];
        if (n == 0 || (i > 0 && n <= block_sizes[i - 1]))
            throw DomainError("block sizes must be positive and increasing");
        if (n > stream.size()) throw DomainError("stream shorter than the requested block size");
        const Symbol k = schedule_k(n, tau);
        const auto y = quantize_block(TailQuantizer(k), stream.first(n));
        const auto block = encode_block(CoderModel::kt(k), y);
        out.push_back({n, k, static_cast<double>(block.payload_bits) / static_cast<double>(n)});
    }
    return out;
}

} // namespace alw
