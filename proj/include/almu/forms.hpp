#pragma once

// The polynomial f(x, y, z) = a x^2 + b y^2 + c P_{p^k+2}(z), its validated
// parameters, and brute-force representation machinery.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "almu/arith.hpp"
#include "almu/error.hpp"

namespace almu {

// Parameter caps for the supported range. Coefficients and p^k stay small
// enough that lattice entries such as 4 p^{2k} c fit in 64 bits.
inline constexpr i64 kMaxCoefficient = 1'000'000;
inline constexpr i64 kMaxPrimePower = 1'000'000;

enum class FormViolation {
  nonpositive_coefficient,
  gcd_not_one,
  p_not_odd_prime,
  p_divides_c,
  k_not_positive,
  out_of_range,
};

inline const char* describe(FormViolation v) {
  switch (v) {
    case FormViolation::nonpositive_coefficient:
      return "coefficients a, b, c must be positive";
    case FormViolation::gcd_not_one:
      return "gcd(a, b, c) is not 1";
    case FormViolation::p_not_odd_prime:
      return "p is not an odd prime";
    case FormViolation::p_divides_c:
      return "p divides c";
    case FormViolation::k_not_positive:
      return "k must be positive";
    case FormViolation::out_of_range:
      return "parameters exceed the supported range";
  }
  return "invalid form";
}

// Thrown by make_form; lists every violated hypothesis.
class FormError : public InvalidArgument {
 public:
  explicit FormError(std::vector<FormViolation> violations)
      : InvalidArgument(join(violations)), violations_(std::move(violations)) {}

  const std::vector<FormViolation>& violations() const { return violations_; }
  FormViolation first() const { return violations_.front(); }

 private:
  static std::string join(const std::vector<FormViolation>& vs) {
    std::string s;
    for (auto v : vs) {
      if (!s.empty()) s += "; ";
      s += describe(v);
    }
    return s;
  }

  std::vector<FormViolation> violations_;
};

// A validated instance, normalized so that nu_2(a) >= nu_2(b).
struct FormInstance {
  i64 a = 0, b = 0, c = 0;
  i64 p = 0;
  int k = 0;

  i64 pk = 0;     // p^k
  i64 order = 0;  // polygonal order m = p^k + 2

  int nu_p_a = 0, nu_p_b = 0;
  int nu2_a = 0, nu2_b = 0, nu2_c = 0;
  i64 a_odd = 0, b_odd = 0, c_odd = 0;  // a', b', c'
  i64 a0 = 0, b0 = 0;                   // a, b with the p-part removed

  bool swapped = false;  // a and b were exchanged during normalization

  // Coefficients in the order the caller supplied them.
  i64 input_a() const { return swapped ? b : a; }
  i64 input_b() const { return swapped ? a : b; }

  friend bool operator==(const FormInstance&, const FormInstance&) = default;
};

inline FormInstance make_form(i64 a, i64 b, i64 c, i64 p, i64 k) {
  std::vector<FormViolation> bad;
  if (a < 1 || b < 1 || c < 1) bad.push_back(FormViolation::nonpositive_coefficient);
  if (a > kMaxCoefficient || b > kMaxCoefficient || c > kMaxCoefficient ||
      p > kMaxPrimePower) {
    bad.push_back(FormViolation::out_of_range);
  }
  if (a >= 1 && b >= 1 && c >= 1 && std::gcd(std::gcd(a, b), c) != 1) {
    bad.push_back(FormViolation::gcd_not_one);
  }
  const bool p_ok = p >= 3 && is_prime(p);
  if (!p_ok) bad.push_back(FormViolation::p_not_odd_prime);
  if (p_ok && c >= 1 && c % p == 0) bad.push_back(FormViolation::p_divides_c);
  if (k < 1) bad.push_back(FormViolation::k_not_positive);

  i64 pk = 0;
  if (p_ok && k >= 1) {
    pk = 1;
    for (i64 i = 0; i < k && pk <= kMaxPrimePower; ++i) pk *= p;
    if (pk > kMaxPrimePower &&
        std::find(bad.begin(), bad.end(), FormViolation::out_of_range) == bad.end()) {
      bad.push_back(FormViolation::out_of_range);
    }
  }
  if (bad.empty()) {
    // Every product the classifier forms is bounded by a*b*c*p.
    i128 prod = static_cast<i128>(a) * b * c * p;
    if (prod > (static_cast<i128>(1) << 62)) bad.push_back(FormViolation::out_of_range);
  }
  if (!bad.empty()) throw FormError(std::move(bad));

  FormInstance f;
  f.swapped = valuation(a, 2) < valuation(b, 2);
  if (f.swapped) std::swap(a, b);
  f.a = a;
  f.b = b;
  f.c = c;
  f.p = p;
  f.k = static_cast<int>(k);
  f.pk = pk;
  f.order = pk + 2;
  f.nu_p_a = valuation(a, p);
  f.nu_p_b = valuation(b, p);
  f.nu2_a = valuation(a, 2);
  f.nu2_b = valuation(b, 2);
  f.nu2_c = valuation(c, 2);
  f.a_odd = odd_part(a);
  f.b_odd = odd_part(b);
  f.c_odd = odd_part(c);
  f.a0 = a / checked_pow(p, f.nu_p_a);
  f.b0 = b / checked_pow(p, f.nu_p_b);
  return f;
}

/// Generalized m-gonal number ((m-2)x^2 - (m-4)x) / 2, x any integer.
inline i64 polygonal(i64 m, i64 x) {
  if (m < 3) throw InvalidArgument("polygonal: order must be at least 3");
  i128 v = (static_cast<i128>(m - 2) * x * x - static_cast<i128>(m - 4) * x) / 2;
  return narrow(v, "polygonal number");
}

inline i64 evaluate(const FormInstance& f, i64 x, i64 y, i64 z) {
  i128 v = static_cast<i128>(f.a) * x * x + static_cast<i128>(f.b) * y * y +
           static_cast<i128>(f.c) * polygonal(f.order, z);
  return narrow(v, "form value");
}

/// 8 p^k n + c (p^k - 2)^2: n is represented by f iff this is represented by
/// the coset of <8p^k a, 8p^k b, 4p^{2k} c>.
inline i64 shifted_target(const FormInstance& f, i64 n) {
  if (n < 0) throw InvalidArgument("shifted_target: n must be nonnegative");
  i128 v = static_cast<i128>(8) * f.pk * n +
           static_cast<i128>(f.c) * (f.pk - 2) * (f.pk - 2);
  return narrow(v, "shifted target");
}

struct Solution {
  i64 x = 0, y = 0, z = 0;

  friend bool operator==(const Solution&, const Solution&) = default;
};

/// Finds a representation of t, preferring the lexicographically smallest
/// (|z|, z, |y|, y, |x|, x).
inline std::optional<Solution> represents(const FormInstance& f, i64 t) {
  if (t < 0) return std::nullopt;
  for (i64 az = 0;; ++az) {
    // P(z) increases in |z| on each side and P(-z) >= P(z) for z > 0.
    i128 cp_pos = static_cast<i128>(f.c) * polygonal(f.order, az);
    if (cp_pos > t) break;
    const i64 zs[2] = {-az, az};
    for (int zi = (az == 0 ? 1 : 0); zi < 2; ++zi) {
      const i64 z = zs[zi];
      const i128 cp = static_cast<i128>(f.c) * polygonal(f.order, z);
      if (cp > t) continue;
      const i64 rem = static_cast<i64>(t - cp);
      for (i64 ay = 0; static_cast<i128>(f.b) * ay * ay <= rem; ++ay) {
        const i64 r2 = rem - f.b * ay * ay;
        if (r2 % f.a != 0) continue;
        i64 ax = 0;
        if (!is_square(r2 / f.a, &ax)) continue;
        return Solution{-ax, -ay, z};
      }
    }
  }
  return std::nullopt;
}

// Membership bitmap over [0, bound] of the values taken by f.
class RepresentedSet {
 public:
  RepresentedSet() = default;
  RepresentedSet(i64 bound, std::vector<u64> words)
      : bound_(bound), words_(std::move(words)) {}

  i64 bound() const { return bound_; }

  bool contains(i64 n) const {
    if (n < 0 || n > bound_) return false;
    return (words_[static_cast<std::size_t>(n >> 6)] >> (n & 63)) & 1u;
  }

  // Values in [0, bound] that are not represented, ascending.
  std::vector<i64> missing() const {
    std::vector<i64> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
      u64 holes = ~words_[w];
      while (holes) {
        i64 n = static_cast<i64>(w * 64 + std::countr_zero(holes));
        if (n > bound_) return out;
        out.push_back(n);
        holes &= holes - 1;
      }
    }
    return out;
  }

  const std::vector<u64>& words() const { return words_; }

  friend bool operator==(const RepresentedSet&, const RepresentedSet&) = default;

 private:
  i64 bound_ = -1;
  std::vector<u64> words_;
};

struct SieveOptions {
  i64 max_bound = 1'000'000'000;  // bitmap cap, about 125 MB
  unsigned threads = 1;
};

namespace detail {

// dst |= src << shift, truncated to dst's size.
inline void or_shifted(std::vector<u64>& dst, const std::vector<u64>& src,
                       i64 shift) {
  const std::size_t ws = static_cast<std::size_t>(shift >> 6);
  const unsigned bs = static_cast<unsigned>(shift & 63);
  const std::size_t n = dst.size();
  if (ws >= n) return;
  u64* out = dst.data() + ws;
  const u64* in = src.data();
  const std::size_t len = n - ws;
  if (bs == 0) {
    for (std::size_t i = 0; i < len; ++i) out[i] |= in[i];
    return;
  }
  out[0] |= in[0] << bs;
  for (std::size_t i = 1; i < len; ++i) {
    out[i] |= (in[i] << bs) | (in[i - 1] >> (64 - bs));
  }
}

}  // namespace detail

/// Exact represented set up to bound via z-outermost enumeration: the values
/// of a x^2 + b y^2 are tabulated once, then shifted by every c P(z) <= bound.
inline RepresentedSet represented_set(const FormInstance& f, i64 bound,
                                      const SieveOptions& opts = {}) {
  if (bound < 0) throw InvalidArgument("represented_set: bound must be nonnegative");
  if (bound > opts.max_bound) {
    throw BudgetExceeded("represented_set: bound " + std::to_string(bound) +
                         " exceeds the cap " + std::to_string(opts.max_bound));
  }
  const std::size_t nwords = static_cast<std::size_t>(bound / 64 + 1);

  std::vector<u64> binary(nwords, 0);
  for (i64 y = 0; f.b * y * y <= bound; ++y) {
    const i64 by = f.b * y * y;
    for (i64 x = 0; by + f.a * x * x <= bound; ++x) {
      const i64 v = by + f.a * x * x;
      binary[static_cast<std::size_t>(v >> 6)] |= u64{1} << (v & 63);
    }
  }

  std::vector<i64> shifts;
  for (i64 az = 0;; ++az) {
    const i64 pos = f.c * polygonal(f.order, az);
    if (pos > bound) break;
    shifts.push_back(pos);
    if (az > 0) {
      const i64 neg = f.c * polygonal(f.order, -az);
      if (neg <= bound) shifts.push_back(neg);
    }
  }

  unsigned threads = std::max(1u, opts.threads);
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(1, shifts.size() / 8)));

  std::vector<u64> words(nwords, 0);
  if (threads == 1) {
    for (i64 s : shifts) detail::or_shifted(words, binary, s);
  } else {
    // Bitwise OR is order independent, so the merged result is identical to
    // the sequential one.
    std::vector<std::vector<u64>> partial(threads, std::vector<u64>(nwords, 0));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < shifts.size(); i += threads) {
          detail::or_shifted(partial[t], binary, shifts[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& part : partial) {
      for (std::size_t i = 0; i < nwords; ++i) words[i] |= part[i];
    }
  }
  const unsigned tail = static_cast<unsigned>((bound + 1) & 63);
  if (tail != 0) words.back() &= (u64{1} << tail) - 1;
  return RepresentedSet(bound, std::move(words));
}

}  // namespace almu
