#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace privsig::field {

/// Prime modulus for additive secret sharing: p = 2^61 - 1 (Mersenne).
/// Large enough that worst-case encoded sums (range * scale * parties)
/// stay below p/2, so signed decoding is unambiguous.
inline constexpr std::uint64_t kPrime = (1ULL << 61) - 1;

struct RangeExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewParties : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Element of Z_p. Stored reduced; addition and subtraction are closed.
class FieldElement {
public:
    constexpr FieldElement() = default;
    static constexpr FieldElement from_raw(std::uint64_t v) { return FieldElement(v % kPrime); }

    constexpr std::uint64_t raw() const { return v_; }

    FieldElement& operator+=(FieldElement o) {
        std::uint64_t x = v_ + o.v_; // < 2^62, no overflow
        if (x >= kPrime) x -= kPrime;
        v_ = x;
        return *this;
    }
    FieldElement& operator-=(FieldElement o) {
        v_ = (v_ >= o.v_) ? v_ - o.v_ : v_ + kPrime - o.v_;
        return *this;
    }
    friend FieldElement operator+(FieldElement a, FieldElement b) { return a += b; }
    friend FieldElement operator-(FieldElement a, FieldElement b) { return a -= b; }
    friend bool operator==(FieldElement a, FieldElement b) { return a.v_ == b.v_; }
    friend bool operator!=(FieldElement a, FieldElement b) { return a.v_ != b.v_; }

private:
    explicit constexpr FieldElement(std::uint64_t v) : v_(v) {}
    std::uint64_t v_ = 0;
};

/// Additive shares of one secret: sum of all shares mod p reconstructs it.
struct ShareSet {
    std::vector<FieldElement> shares;
};

inline FieldElement sum_shares(std::span<const FieldElement> shares) {
    if (shares.empty()) throw EmptyInput("sum_shares: no shares");
    FieldElement acc;
    for (FieldElement s : shares) acc += s;
    return acc;
}

/// Splits x into n additive shares: the first n-1 are uniform over [0, p-1],
/// the last is x minus their sum. Any n-1 shares are independent of x.
template <typename Rng>
ShareSet split(FieldElement x, int n, Rng& rng) {
    if (n < 2) throw TooFewParties("split: need at least 2 parties");
    std::uniform_int_distribution<std::uint64_t> uni(0, kPrime - 1);
    ShareSet out;
    out.shares.resize(static_cast<std::size_t>(n));
    FieldElement acc;
    for (int i = 0; i < n - 1; ++i) {
        FieldElement s = FieldElement::from_raw(uni(rng));
        out.shares[static_cast<std::size_t>(i)] = s;
        acc += s;
    }
    out.shares[static_cast<std::size_t>(n - 1)] = x - acc;
    return out;
}

/// Fixed-point map between physical quantities and field elements.
/// value -> round(value * scale) mod p; negatives land in the upper
/// half-range, so decoding reads the signed window (-p/2, p/2].
class FixedPointCodec {
public:
    FixedPointCodec(std::int64_t scale = 1 << 16, double range_bound = double(1 << 20),
                    int max_parties = 256)
        : scale_(scale), range_bound_(range_bound), max_parties_(max_parties) {
        if (scale_ <= 0 || range_bound_ <= 0 || max_parties_ < 2)
            throw std::invalid_argument("FixedPointCodec: bad parameters");
        // no wraparound when max_parties values plus noise are summed
        long double headroom = static_cast<long double>(range_bound_) * static_cast<long double>(scale_) *
                               static_cast<long double>(max_parties_);
        if (!(headroom < static_cast<long double>(kPrime) / 2))
            throw std::invalid_argument("FixedPointCodec: range * scale * parties exceeds p/2");
    }

    std::int64_t scale() const { return scale_; }
    double range_bound() const { return range_bound_; }
    int max_parties() const { return max_parties_; }
    double resolution() const { return 1.0 / (2.0 * static_cast<double>(scale_)); }

    FieldElement encode(double x) const {
        if (!(std::fabs(x) <= range_bound_))
            throw RangeExceeded("encode: |x| exceeds range bound");
        const auto q = static_cast<std::int64_t>(std::llround(x * static_cast<double>(scale_)));
        if (q >= 0) return FieldElement::from_raw(static_cast<std::uint64_t>(q));
        return FieldElement::from_raw(kPrime - static_cast<std::uint64_t>(-q));
    }

    double decode(FieldElement e) const {
        const std::uint64_t v = e.raw();
        if (v <= kPrime / 2) return static_cast<double>(v) / static_cast<double>(scale_);
        return -static_cast<double>(kPrime - v) / static_cast<double>(scale_);
    }

private:
    std::int64_t scale_;
    double range_bound_;
    int max_parties_;
};

} // namespace privsig::field
