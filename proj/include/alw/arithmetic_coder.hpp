#pragma once

// Integer arithmetic coder with 62-bit code registers. Underflow (straddling
// the midpoint) is handled by deferring opposite bits; termination emits a
// selector bit plus one deferred bit, so the output for a sequence of model
// probability P is at most -log2 P + 2 bits (up to register rounding).

#include <alw/error.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace alw {

class BitWriter {
public:
    void put(bool bit) {
        if (bits_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
        ++bits_;
    }
    std::uint64_t bit_count() const { return bits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }
    std::vector<std::uint8_t> release() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bits_ = 0;
};

// Reads MSB-first; past the end of the payload it yields zeros.
class BitReader {
public:
    BitReader(std::span<const std::uint8_t> bytes, std::uint64_t bit_count)
        : bytes_(bytes), bits_(bit_count) {}

    bool get() {
        bool bit = false;
        if (pos_ < bits_) bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }
    std::uint64_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::uint64_t bits_;
    std::uint64_t pos_ = 0;
};

namespace coder {

inline constexpr int kCodeBits = 62;
inline constexpr std::uint64_t kTop = (std::uint64_t{1} << kCodeBits) - 1;
inline constexpr std::uint64_t kHalf = std::uint64_t{1} << (kCodeBits - 1);
inline constexpr std::uint64_t kQuarter = std::uint64_t{1} << (kCodeBits - 2);
inline constexpr std::uint64_t kThreeQuarters = kHalf + kQuarter;
// Frequency totals must stay below the smallest post-normalization range.
inline constexpr std::uint64_t kMaxTotal = std::uint64_t{1} << (kCodeBits - 2);

using u128 = unsigned __int128;

} // namespace coder

class ArithmeticEncoder {
public:
    explicit ArithmeticEncoder(BitWriter& out) : out_(out) {}

    // Encodes the interval [cum_lo, cum_hi) out of total.
    void encode(std::uint64_t cum_lo, std::uint64_t cum_hi, std::uint64_t total) {
        using namespace coder;
        if (!(cum_lo < cum_hi && cum_hi <= total && total <= kMaxTotal))
            throw DomainError("arithmetic coder: invalid frequency interval");
        const u128 range = static_cast<u128>(high_ - low_) + 1;
        high_ = low_ + static_cast<std::uint64_t>(range * cum_hi / total) - 1;
        low_ = low_ + static_cast<std::uint64_t>(range * cum_lo / total);
        for (;;) {
            if (high_ < kHalf) {
                emit(false);
            } else if (low_ >= kHalf) {
                emit(true);
                low_ -= kHalf;
                high_ -= kHalf;
            } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
                ++pending_;
                low_ -= kQuarter;
                high_ -= kQuarter;
            } else {
                break;
            }
            low_ <<= 1;
            high_ = (high_ << 1) | 1;
        }
    }

    void finish() {
        ++pending_;
        emit(low_ >= coder::kQuarter);
    }

private:
    void emit(bool bit) {
        out_.put(bit);
        for (; pending_ > 0; --pending_) out_.put(!bit);
    }

    BitWriter& out_;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = coder::kTop;
    std::uint64_t pending_ = 0;
};

class ArithmeticDecoder {
public:
    explicit ArithmeticDecoder(BitReader& in) : in_(in) {
        for (int i = 0; i < coder::kCodeBits; ++i) value_ = (value_ << 1) | in_.get();
    }

    // Returns a count in [0, total) identifying the next symbol's interval.
    std::uint64_t target(std::uint64_t total) const {
        const coder::u128 range = static_cast<coder::u128>(high_ - low_) + 1;
        const coder::u128 offset = static_cast<coder::u128>(value_ - low_) + 1;
        const auto t = static_cast<std::uint64_t>((offset * total - 1) / range);
        if (t >= total) throw FormatError("arithmetic decoder: corrupt payload");
        return t;
    }

    void consume(std::uint64_t cum_lo, std::uint64_t cum_hi, std::uint64_t total) {
        using namespace coder;
        const u128 range = static_cast<u128>(high_ - low_) + 1;
        high_ = low_ + static_cast<std::uint64_t>(range * cum_hi / total) - 1;
        low_ = low_ + static_cast<std::uint64_t>(range * cum_lo / total);
        for (;;) {
            if (high_ < kHalf) {
            } else if (low_ >= kHalf) {
                low_ -= kHalf;
                high_ -= kHalf;
                value_ -= kHalf;
            } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
                low_ -= kQuarter;
                high_ -= kQuarter;
                value_ -= kQuarter;
            } else {
                break;
            }
            low_ <<= 1;
            high_ = (high_ << 1) | 1;
            value_ = (value_ << 1) | in_.get();
        }
        if (value_ < low_ || value_ > high_) throw FormatError("arithmetic decoder: corrupt payload");
    }

private:
    BitReader& in_;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = coder::kTop;
    std::uint64_t value_ = 0;
};

} // namespace alw
