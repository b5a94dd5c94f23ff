#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace kausal {

// Arbitrary-precision signed integer, base 2^32 little-endian limbs.
// Exact-mode weights and the exact simplex run on top of this; the
// instances are small, so schoolbook arithmetic is enough.
class BigInt {
public:
    BigInt() = default;
    BigInt(std::int64_t v) {
        if (v < 0) { negative_ = true; }
        std::uint64_t m = negative_ ? (~static_cast<std::uint64_t>(v) + 1u) : static_cast<std::uint64_t>(v);
        if (m != 0) limbs_.push_back(static_cast<std::uint32_t>(m & 0xffffffffu));
        if (m >> 32) limbs_.push_back(static_cast<std::uint32_t>(m >> 32));
        if (limbs_.empty()) negative_ = false;
    }

    bool is_zero() const { return limbs_.empty(); }
    bool is_negative() const { return negative_; }
    int sign() const { return is_zero() ? 0 : (negative_ ? -1 : 1); }

    friend BigInt operator-(const BigInt& a) {
        BigInt r = a;
        if (!r.is_zero()) r.negative_ = !r.negative_;
        return r;
    }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        if (a.negative_ == b.negative_) {
            BigInt r;
            r.limbs_ = add_mag(a.limbs_, b.limbs_);
            r.negative_ = a.negative_;
            r.trim();
            return r;
        }
        int c = cmp_mag(a.limbs_, b.limbs_);
        BigInt r;
        if (c == 0) return r;
        if (c > 0) {
            r.limbs_ = sub_mag(a.limbs_, b.limbs_);
            r.negative_ = a.negative_;
        } else {
            r.limbs_ = sub_mag(b.limbs_, a.limbs_);
            r.negative_ = b.negative_;
        }
        r.trim();
        return r;
    }

    friend BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        BigInt r;
        if (a.is_zero() || b.is_zero()) return r;
        r.limbs_.assign(a.limbs_.size() + b.limbs_.size(), 0);
        for (std::size_t i = 0; i < a.limbs_.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < b.limbs_.size(); ++j) {
                std::uint64_t cur = static_cast<std::uint64_t>(a.limbs_[i]) * b.limbs_[j] +
                                    r.limbs_[i + j] + carry;
                r.limbs_[i + j] = static_cast<std::uint32_t>(cur & 0xffffffffu);
                carry = cur >> 32;
            }
            std::size_t k = i + b.limbs_.size();
            while (carry) {
                std::uint64_t cur = r.limbs_[k] + carry;
                r.limbs_[k] = static_cast<std::uint32_t>(cur & 0xffffffffu);
                carry = cur >> 32;
                ++k;
            }
        }
        r.negative_ = a.negative_ != b.negative_;
        r.trim();
        return r;
    }

    // Truncated quotient and remainder, remainder has the dividend's sign.
    static void divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
        if (b.is_zero()) throw std::domain_error("BigInt: division by zero");
        q = BigInt();
        r = BigInt();
        int c = cmp_mag(a.limbs_, b.limbs_);
        if (c < 0) {
            r = a;
            return;
        }
        const int nbits = static_cast<int>(a.limbs_.size()) * 32;
        std::vector<std::uint32_t> rem, quo(a.limbs_.size(), 0);
        for (int i = nbits - 1; i >= 0; --i) {
            shl1(rem);
            if (a.bit(i)) {
                if (rem.empty()) rem.push_back(1u);
                else rem[0] |= 1u;
            }
            if (cmp_mag(rem, b.limbs_) >= 0) {
                rem = sub_mag(rem, b.limbs_);
                quo[static_cast<std::size_t>(i) / 32] |= (1u << (i % 32));
            }
        }
        q.limbs_ = std::move(quo);
        q.negative_ = a.negative_ != b.negative_;
        q.trim();
        r.limbs_ = std::move(rem);
        r.negative_ = a.negative_;
        r.trim();
    }

    friend BigInt operator/(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return q;
    }
    friend BigInt operator%(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return r;
    }

    friend bool operator==(const BigInt& a, const BigInt& b) {
        return a.negative_ == b.negative_ && a.limbs_ == b.limbs_;
    }
    friend bool operator!=(const BigInt& a, const BigInt& b) { return !(a == b); }
    friend bool operator<(const BigInt& a, const BigInt& b) {
        if (a.negative_ != b.negative_) return a.negative_;
        int c = cmp_mag(a.limbs_, b.limbs_);
        return a.negative_ ? c > 0 : c < 0;
    }
    friend bool operator>(const BigInt& a, const BigInt& b) { return b < a; }
    friend bool operator<=(const BigInt& a, const BigInt& b) { return !(b < a); }
    friend bool operator>=(const BigInt& a, const BigInt& b) { return !(a < b); }

    BigInt abs() const {
        BigInt r = *this;
        r.negative_ = false;
        return r;
    }

    static BigInt gcd(BigInt a, BigInt b) {
        a.negative_ = false;
        b.negative_ = false;
        while (!b.is_zero()) {
            BigInt q, r;
            divmod(a, b, q, r);
            a = std::move(b);
            b = std::move(r);
        }
        return a;
    }

    double to_double() const {
        double v = 0.0;
        for (std::size_t i = limbs_.size(); i-- > 0;) v = v * 4294967296.0 + limbs_[i];
        return negative_ ? -v : v;
    }

    std::string to_string() const {
        if (is_zero()) return "0";
        BigInt t = abs();
        const BigInt ten(10);
        std::string s;
        while (!t.is_zero()) {
            BigInt q, r;
            divmod(t, ten, q, r);
            s.push_back(static_cast<char>('0' + (r.limbs_.empty() ? 0 : r.limbs_[0])));
            t = std::move(q);
        }
        if (negative_) s.push_back('-');
        return {s.rbegin(), s.rend()};
    }

    static BigInt from_string(const std::string& s) {
        BigInt r;
        bool neg = false;
        std::size_t i = 0;
        if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
        if (i == s.size()) throw std::invalid_argument("BigInt: empty literal");
        const BigInt ten(10);
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("BigInt: bad digit");
            r = r * ten + BigInt(s[i] - '0');
        }
        if (neg && !r.is_zero()) r.negative_ = true;
        return r;
    }

    bool fits_int64() const {
        if (limbs_.size() > 2) return false;
        std::uint64_t m = mag64();
        return negative_ ? m <= (1ull << 63) : m < (1ull << 63);
    }
    std::int64_t to_int64() const {
        std::uint64_t m = mag64();
        return negative_ ? -static_cast<std::int64_t>(m) : static_cast<std::int64_t>(m);
    }

private:
    std::vector<std::uint32_t> limbs_;
    bool negative_ = false;

    std::uint64_t mag64() const {
        std::uint64_t m = 0;
        if (limbs_.size() > 1) m = static_cast<std::uint64_t>(limbs_[1]) << 32;
        if (!limbs_.empty()) m |= limbs_[0];
        return m;
    }

    bool bit(int i) const {
        std::size_t limb = static_cast<std::size_t>(i) / 32;
        if (limb >= limbs_.size()) return false;
        return (limbs_[limb] >> (i % 32)) & 1u;
    }

    void trim() {
        while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
        if (limbs_.empty()) negative_ = false;
    }

    static void shl1(std::vector<std::uint32_t>& v) {
        std::uint32_t carry = 0;
        for (auto& limb : v) {
            std::uint32_t next = limb >> 31;
            limb = (limb << 1) | carry;
            carry = next;
        }
        if (carry) v.push_back(carry);
    }

    static int cmp_mag(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (std::size_t i = a.size(); i-- > 0;) {
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        }
        return 0;
    }

    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        const auto& big = a.size() >= b.size() ? a : b;
        const auto& small = a.size() >= b.size() ? b : a;
        std::vector<std::uint32_t> r = big;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::uint64_t cur = static_cast<std::uint64_t>(r[i]) + carry +
                                (i < small.size() ? small[i] : 0u);
            r[i] = static_cast<std::uint32_t>(cur & 0xffffffffu);
            carry = cur >> 32;
            if (!carry && i >= small.size()) break;
        }
        if (carry) r.push_back(static_cast<std::uint32_t>(carry));
        return r;
    }

    // Requires |a| >= |b|.
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r = a;
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::int64_t cur = static_cast<std::int64_t>(r[i]) - borrow -
                               (i < b.size() ? static_cast<std::int64_t>(b[i]) : 0);
            borrow = 0;
            if (cur < 0) {
                cur += 0x100000000ll;
                borrow = 1;
            }
            r[i] = static_cast<std::uint32_t>(cur);
            if (!borrow && i >= b.size()) break;
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }
};

}  // namespace kausal
