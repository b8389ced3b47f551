#pragma once

// Exact integer number theory on 64-bit inputs with 128-bit intermediates.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "almu/error.hpp"

namespace almu {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

inline constexpr i64 kI64Max = std::numeric_limits<i64>::max();

// Narrows a 128-bit value, throwing RangeError when it does not fit.
inline i64 narrow(i128 v, const char* what = "value") {
  if (v > static_cast<i128>(kI64Max) || v < -static_cast<i128>(kI64Max)) {
    throw RangeError(std::string(what) + " exceeds the 64-bit range");
  }
  return static_cast<i64>(v);
}

inline i64 checked_mul(i64 x, i64 y, const char* what = "product") {
  return narrow(static_cast<i128>(x) * y, what);
}

inline i64 checked_add(i64 x, i64 y, const char* what = "sum") {
  return narrow(static_cast<i128>(x) + y, what);
}

inline i64 checked_pow(i64 base, int exp, const char* what = "power") {
  i64 r = 1;
  for (int i = 0; i < exp; ++i) r = checked_mul(r, base, what);
  return r;
}

// Floor of the square root; exact (no floating point in the result).
inline u64 isqrt(u128 n) {
  if (n == 0) return 0;
  u64 lo = 0;
  u64 hi = n >> 64 ? std::numeric_limits<u64>::max() : static_cast<u64>(n);
  while (lo < hi) {
    u64 mid = lo + (hi - lo) / 2 + 1;
    if (static_cast<u128>(mid) * mid <= n) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

inline bool is_square(i128 n, i64* root = nullptr) {
  if (n < 0) return false;
  u64 r = isqrt(static_cast<u128>(n));
  if (static_cast<i128>(r) * r != n) return false;
  if (root) *root = static_cast<i64>(r);
  return true;
}

// Mathematical (nonnegative) residue of n modulo m > 0.
inline i64 mod(i128 n, i64 m) {
  i128 r = n % m;
  return static_cast<i64>(r < 0 ? r + m : r);
}

inline u64 mul_mod(u64 x, u64 y, u64 m) {
  return static_cast<u64>(static_cast<u128>(x) * y % m);
}

inline u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Inverse of x modulo m; x must be a unit.
inline i64 inverse_mod(i64 x, i64 m) {
  i128 old_r = mod(x, m), r = m, old_s = 1, s = 0;
  while (r != 0) {
    i128 q = old_r / r;
    i128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) throw InvalidArgument("inverse_mod: argument is not a unit");
  return mod(old_s, m);
}

/// Exponent of the prime q in n.
inline int valuation(i64 n, i64 q) {
  if (n == 0) throw InvalidArgument("valuation: n must be nonzero");
  if (q < 2) throw InvalidArgument("valuation: q must be a prime");
  int e = 0;
  while (n % q == 0) {
    n /= q;
    ++e;
  }
  return e;
}

/// n with every factor 2 removed (sign kept).
inline i64 odd_part(i64 n) {
  if (n == 0) throw InvalidArgument("odd_part: n must be nonzero");
  while (n % 2 == 0) n /= 2;
  return n;
}

// Deterministic Miller-Rabin. The first thirteen primes as bases are exact
// below 3.3e24, which covers every 64-bit input.
inline bool is_prime(i64 n) {
  if (n < 2) return false;
  static constexpr std::array<u64, 13> kBases = {2, 3, 5, 7, 11, 13, 17,
                                                 19, 23, 29, 31, 37, 41};
  for (u64 p : kBases) {
    if (static_cast<u64>(n) == p) return true;
    if (static_cast<u64>(n) % p == 0) return false;
  }
  const u64 un = static_cast<u64>(n);
  u64 d = un - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : kBases) {
    u64 x = pow_mod(a, d, un);
    if (x == 1 || x == un - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, un);
      if (x == un - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

struct PrimePower {
  i64 prime;
  int exponent;

  friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

// Prime factorization; factors ascending by prime, sign of the input kept
// separately.
struct Factorization {
  int sign = 1;
  std::vector<PrimePower> factors;

  i128 value() const {
    i128 v = sign;
    for (const auto& f : factors) {
      for (int i = 0; i < f.exponent; ++i) v *= f.prime;
    }
    return v;
  }
};

namespace detail {

inline constexpr i64 kTrialBound = 1'000'000;

// Brent's cycle finding with the polynomial x^2 + increment.
inline u64 brent_rho(u64 n, u64 increment) {
  auto f = [&](u64 x) { return (mul_mod(x, x, n) + increment) % n; };
  u64 y = 2, x = 2, g = 1, q = 1, ys = 2;
  constexpr u64 kBlock = 128;
  constexpr u64 kMaxSteps = u64{1} << 26;
  u64 r = 1;
  u64 steps = 0;
  while (g == 1) {
    x = y;
    for (u64 i = 0; i < r; ++i) y = f(y);
    u64 k = 0;
    while (k < r && g == 1) {
      ys = y;
      u64 lim = std::min(kBlock, r - k);
      for (u64 i = 0; i < lim; ++i) {
        y = f(y);
        q = mul_mod(q, x > y ? x - y : y - x, n);
      }
      g = std::gcd(q, n);
      k += kBlock;
    }
    r *= 2;
    steps += r;
    if (steps > kMaxSteps) {
      throw RangeError("factorize: rho iteration bound exceeded");
    }
  }
  if (g == n) {
    do {
      ys = f(ys);
      g = std::gcd(x > ys ? x - ys : ys - x, n);
    } while (g == 1);
  }
  return g;
}

inline void split_large(u64 n, std::vector<i64>& out) {
  if (n == 1) return;
  if (is_prime(static_cast<i64>(n))) {
    out.push_back(static_cast<i64>(n));
    return;
  }
  u64 root = isqrt(n);
  if (root * root == n) {
    split_large(root, out);
    split_large(root, out);
    return;
  }
  for (u64 inc = 1; inc < 64; ++inc) {
    u64 d = brent_rho(n, inc);
    if (d != n && d != 1) {
      split_large(d, out);
      split_large(n / d, out);
      return;
    }
  }
  throw RangeError("factorize: no rho increment produced a factor");
}

}  // namespace detail

/// Complete factorization: trial division below 10^6, then Brent-Pollard rho.
inline Factorization factorize(i64 n) {
  if (n == 0) throw InvalidArgument("factorize: n must be nonzero");
  if (n == std::numeric_limits<i64>::min()) {
    throw RangeError("factorize: input outside the supported range");
  }
  Factorization out;
  if (n < 0) {
    out.sign = -1;
    n = -n;
  }
  u64 m = static_cast<u64>(n);
  for (u64 p = 2; p < static_cast<u64>(detail::kTrialBound) && p * p <= m;
       p += (p == 2 ? 1 : 2)) {
    if (m % p != 0) continue;
    int e = 0;
    while (m % p == 0) {
      m /= p;
      ++e;
    }
    out.factors.push_back({static_cast<i64>(p), e});
  }
  if (m > 1) {
    std::vector<i64> primes;
    detail::split_large(m, primes);
    std::sort(primes.begin(), primes.end());
    for (i64 p : primes) {
      if (!out.factors.empty() && out.factors.back().prime == p) {
        ++out.factors.back().exponent;
      } else {
        out.factors.push_back({p, 1});
      }
    }
  }
  return out;
}

/// Prime divisors of n, ascending.
inline std::vector<i64> prime_divisors(i64 n) {
  std::vector<i64> ps;
  for (const auto& f : factorize(n).factors) ps.push_back(f.prime);
  return ps;
}

// Squarefree kernel of a product given as factors; each factor must be
// nonzero. Avoids forming the (possibly overflowing) product itself.
inline i64 squarefree_part_of_product(std::initializer_list<i64> terms) {
  std::vector<PrimePower> merged;
  int sign = 1;
  for (i64 t : terms) {
    Factorization f = factorize(t);
    sign *= f.sign;
    for (const auto& pp : f.factors) {
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const PrimePower& m) { return m.prime == pp.prime; });
      if (it == merged.end()) {
        merged.push_back(pp);
      } else {
        it->exponent += pp.exponent;
      }
    }
  }
  i64 d = sign;
  for (const auto& pp : merged) {
    if (pp.exponent % 2 == 1) d = checked_mul(d, pp.prime, "squarefree part");
  }
  return d;
}

/// The squarefree d with n = d * s^2, sign of d equal to the sign of n.
inline i64 squarefree_part(i64 n) {
  if (n == 0) throw InvalidArgument("squarefree_part: n must be nonzero");
  return squarefree_part_of_product({n});
}

inline bool is_squarefree(i64 n) {
  if (n == 0) return false;
  for (const auto& f : factorize(n).factors) {
    if (f.exponent > 1) return false;
  }
  return true;
}

/// Jacobi symbol (a/n) for odd n >= 1.
inline int jacobi(i64 a, i64 n) {
  if (n < 1 || n % 2 == 0) {
    throw InvalidArgument("jacobi: modulus must be odd and positive");
  }
  u64 x = static_cast<u64>(mod(a, n));
  u64 y = static_cast<u64>(n);
  int result = 1;
  while (x != 0) {
    while (x % 2 == 0) {
      x /= 2;
      u64 r = y % 8;
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(x, y);
    if (x % 4 == 3 && y % 4 == 3) result = -result;
    x %= y;
  }
  return y == 1 ? result : 0;
}

// Q_2^x element u * 2^exponent with u an odd integer. Rationals are covered:
// the class of num/den equals that of num*den.
struct Dyadic {
  int exponent = 0;
  i64 unit = 1;

  static Dyadic of(i64 x) {
    if (x == 0) throw InvalidArgument("hilbert2: zero has no square class");
    int e = 0;
    while (x % 2 == 0) {
      x /= 2;
      ++e;
    }
    return {e, x};
  }
};

/// Hilbert symbol at 2, from valuation parity and units mod 8.
inline int hilbert2(Dyadic x, Dyadic y) {
  if (x.unit % 2 == 0 || y.unit % 2 == 0) {
    throw InvalidArgument("hilbert2: unit part must be odd");
  }
  const i64 u = mod(x.unit, 8), v = mod(y.unit, 8);
  auto eps = [](i64 w) { return w % 4 == 3 ? 1 : 0; };
  auto omega = [](i64 w) { return (w == 3 || w == 5) ? 1 : 0; };
  int e = eps(u) * eps(v) + (x.exponent & 1) * omega(v) +
          (y.exponent & 1) * omega(u);
  return (e % 2 == 0) ? 1 : -1;
}

inline int hilbert2(i64 x, i64 y) {
  return hilbert2(Dyadic::of(x), Dyadic::of(y));
}

/// Whether x is a local norm at 2 from Q(sqrt(d)).
inline bool in_norm_group_2(Dyadic x, i64 d) {
  if (d == 1 || !is_squarefree(d)) {
    throw InvalidArgument("in_norm_group_2: d must be squarefree and not 1");
  }
  return hilbert2(x, Dyadic::of(d)) == 1;
}

inline bool in_norm_group_2(i64 x, i64 d) {
  return in_norm_group_2(Dyadic::of(x), d);
}

/// Solvability of X^2 = u (mod p^k) for a p-unit u and odd prime p.
inline bool is_qr_mod_pk(i64 u, i64 p, int k) {
  if (p < 3 || !is_prime(p)) {
    throw InvalidArgument("is_qr_mod_pk: p must be an odd prime");
  }
  if (k < 1) throw InvalidArgument("is_qr_mod_pk: k must be positive");
  if (u % p == 0) throw InvalidArgument("is_qr_mod_pk: p divides u");
  // Hensel: for odd p a unit is a square mod p^k iff it is one mod p.
  return jacobi(u, p) == 1;
}

enum class Splitting { split, inert };

inline const char* to_string(Splitting s) {
  return s == Splitting::split ? "split" : "inert";
}

/// Decomposition of the odd prime q in Q(sqrt(d)), d squarefree, q unramified.
inline Splitting splits_in(i64 q, i64 d) {
  if (q < 3 || !is_prime(q)) {
    throw InvalidArgument("splits_in: q must be an odd prime");
  }
  if (!is_squarefree(d) || d == 1) {
    throw InvalidArgument("splits_in: d must be squarefree and not 1");
  }
  if (d % q == 0) throw InvalidArgument("splits_in: q ramifies");
  // The discriminant is d or 4d; for odd q both give the same symbol.
  const i64 disc = mod(d, 4) == 1 ? d : checked_mul(4, d);
  return jacobi(disc, q) == 1 ? Splitting::split : Splitting::inert;
}

}  // namespace almu
