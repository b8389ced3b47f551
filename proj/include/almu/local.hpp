#pragma once

// Genus-level (local) conditions for every shifted target to be represented:
// a dyadic condition on c, and a split Jordan shape at each odd prime q != p.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "almu/arith.hpp"
#include "almu/forms.hpp"

namespace almu {

struct DiagonalLattice {
  std::array<i64, 3> entries{};

  i128 discriminant() const {
    return static_cast<i128>(entries[0]) * entries[1] * entries[2];
  }
};

// <8p^k a, 8p^k b, 4p^{2k} c>: the lattice whose coset carries f after the
// shift n -> 8p^k n + c(p^k - 2)^2.
inline DiagonalLattice coset_lattice(const FormInstance& f) {
  const i64 s = checked_mul(8, f.pk);
  return {{checked_mul(s, f.a), checked_mul(s, f.b),
           checked_mul(checked_mul(4, checked_mul(f.pk, f.pk)), f.c)}};
}

// <8p^k a, 8p^k b, c>.
inline DiagonalLattice reduced_lattice(const FormInstance& f) {
  const i64 s = checked_mul(8, f.pk);
  return {{checked_mul(s, f.a), checked_mul(s, f.b), f.c}};
}

// A vector (X, Y, W) of the reduced lattice.
struct LatticeSolution {
  i64 x = 0, y = 0, w = 0;

  friend bool operator==(const LatticeSolution&, const LatticeSolution&) = default;
};

/// Searches 8p^k a X^2 + 8p^k b Y^2 + c W^2 = t with X, Y, W >= 0, smallest W
/// first, then smallest Y. A shifted target t = 8p^k n + c(p^k - 2)^2 is
/// represented here exactly when f represents n.
inline std::optional<LatticeSolution> lattice_represents(const FormInstance& f, i64 t) {
  if (t < 0) return std::nullopt;
  const i64 s = checked_mul(8, f.pk);
  for (i64 w = 0; static_cast<i128>(f.c) * w * w <= t; ++w) {
    const i64 rest = t - f.c * w * w;
    if (rest % s != 0) continue;
    const i64 r = rest / s;
    for (i64 y = 0; static_cast<i128>(f.b) * y * y <= r; ++y) {
      const i64 r2 = r - f.b * y * y;
      if (r2 % f.a != 0) continue;
      i64 x = 0;
      if (is_square(r2 / f.a, &x)) return LatticeSolution{x, y, w};
    }
  }
  return std::nullopt;
}

// One component q^scale * U of a Jordan splitting at an odd prime, where U is
// unimodular of the given rank and unit_class is the Legendre symbol of det U.
struct JordanComponent {
  int scale = 0;
  int rank = 0;
  int unit_class = 1;

  friend bool operator==(const JordanComponent&, const JordanComponent&) = default;
};

/// Groups diagonal entries by q-valuation, ascending by scale.
inline std::vector<JordanComponent> jordan_decompose_odd(
    const std::array<i64, 3>& entries, i64 q) {
  if (q < 3 || !is_prime(q)) {
    throw InvalidArgument("jordan_decompose_odd: q must be an odd prime");
  }
  std::array<int, 3> scale{};
  std::array<i64, 3> unit_mod_q{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (entries[i] == 0) throw InvalidArgument("jordan_decompose_odd: zero entry");
    i64 e = entries[i];
    int v = 0;
    while (e % q == 0) {
      e /= q;
      ++v;
    }
    scale[i] = v;
    unit_mod_q[i] = mod(e, q);
  }
  std::vector<JordanComponent> out;
  std::array<bool, 3> used{};
  for (;;) {
    int lowest = -1;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!used[i] && (lowest < 0 || scale[i] < lowest)) lowest = scale[i];
    }
    if (lowest < 0) break;
    JordanComponent comp{lowest, 0, 1};
    i64 det = 1;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!used[i] && scale[i] == lowest) {
        used[i] = true;
        ++comp.rank;
        det = mod(static_cast<i128>(det) * unit_mod_q[i], q);
      }
    }
    comp.unit_class = jacobi(det, q);
    out.push_back(comp);
  }
  return out;
}

/// Whether the entries are isometric over Z_q to <1, -1, -d>, d their product.
inline bool isometric_to_split(const std::array<i64, 3>& entries, i64 q) {
  const auto comps = jordan_decompose_odd(entries, q);
  int total_scale = 0;
  i64 unit_det = 1;
  for (i64 e : entries) {
    while (e % q == 0) {
      e /= q;
      ++total_scale;
    }
    unit_det = mod(static_cast<i128>(unit_det) * mod(e, q), q);
  }
  if (total_scale == 0) {
    // Unimodular of rank 3 with equal discriminants on both sides.
    return true;
  }
  const std::vector<JordanComponent> target = {
      {0, 2, jacobi(-1, q)},
      {total_scale, 1, jacobi(-unit_det, q)},
  };
  return comps == target;
}

/// 4 does not divide c, or 4 || c together with 2 || ab.
inline bool dyadic_c_condition(const FormInstance& f) {
  return f.nu2_c <= 1 || (f.nu2_c == 2 && f.nu2_a + f.nu2_b == 1);
}

enum class LocalFailure { dyadic_c_condition, odd_prime_anisotropy };

inline const char* to_string(LocalFailure r) {
  return r == LocalFailure::dyadic_c_condition ? "dyadic_c_condition"
                                               : "odd_prime_anisotropy";
}

struct LocalVerdict {
  bool ok = true;
  std::optional<i64> failing_prime;
  std::optional<LocalFailure> reason;
};

// Odd primes other than p at which the coset lattice can fail to split. At
// any odd q not dividing p*abc the lattice is unimodular of rank 3 with the
// same discriminant as <1, -1, -d>, hence isometric to it.
inline std::vector<i64> relevant_odd_primes(const FormInstance& f) {
  std::vector<i64> qs;
  for (i64 term : {f.a, f.b, f.c}) {
    for (i64 q : prime_divisors(term)) {
      if (q != 2 && q != f.p) qs.push_back(q);
    }
  }
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  return qs;
}

/// Whether every shifted target is represented by the genus of the coset.
/// On failure the smallest failing prime is reported (2 for the dyadic case).
inline LocalVerdict genus_check(const FormInstance& f) {
  if (!dyadic_c_condition(f)) {
    return {false, 2, LocalFailure::dyadic_c_condition};
  }
  const auto lattice = coset_lattice(f);
  for (i64 q : relevant_odd_primes(f)) {
    if (!isometric_to_split(lattice.entries, q)) {
      return {false, q, LocalFailure::odd_prime_anisotropy};
    }
  }
  return {true, std::nullopt, std::nullopt};
}

/// Residues r mod m such that f(x, y, z) is never congruent to r.
inline std::vector<i64> unrepresented_residues(const FormInstance& f, i64 m) {
  if (m < 1) throw InvalidArgument("unrepresented_residues: modulus must be positive");
  const std::size_t um = static_cast<std::size_t>(m);
  auto image = [&](auto&& term, i64 period) {
    std::vector<char> hit(um, 0);
    for (i64 x = 0; x < period; ++x) hit[static_cast<std::size_t>(mod(term(x), m))] = 1;
    std::vector<i64> vals;
    for (std::size_t r = 0; r < um; ++r) {
      if (hit[r]) vals.push_back(static_cast<i64>(r));
    }
    return vals;
  };
  const auto xs = image([&](i64 x) { return static_cast<i128>(f.a) * x * x; }, m);
  const auto ys = image([&](i64 y) { return static_cast<i128>(f.b) * y * y; }, m);
  // P(z) mod m has period dividing 2m.
  const auto zs = image(
      [&](i64 z) { return static_cast<i128>(f.c) * polygonal(f.order, z); }, 2 * m);

  std::vector<char> two(um, 0);
  for (i64 u : xs) {
    for (i64 v : ys) two[static_cast<std::size_t>((u + v) % m)] = 1;
  }
  std::vector<char> three(um, 0);
  for (std::size_t s = 0; s < um; ++s) {
    if (!two[s]) continue;
    for (i64 w : zs) three[(s + static_cast<std::size_t>(w)) % um] = 1;
  }
  std::vector<i64> out;
  for (std::size_t r = 0; r < um; ++r) {
    if (!three[r]) out.push_back(static_cast<i64>(r));
  }
  return out;
}

// Moduli searched for a locally forced congruence obstruction: powers of 2
// and of every odd prime q != p dividing abc, ascending, up to max_modulus.
inline std::vector<i64> obstruction_moduli(const FormInstance& f, i64 max_modulus) {
  std::vector<i64> ms;
  for (i64 m = 2; m <= max_modulus; m *= 2) ms.push_back(m);
  for (i64 q : relevant_odd_primes(f)) {
    for (i64 m = q; m <= max_modulus; m *= q) ms.push_back(m);
  }
  std::sort(ms.begin(), ms.end());
  return ms;
}

// A residue class of n that f provably misses: no integer solution exists
// even modulo `modulus`.
struct Progression {
  i64 modulus = 0;
  i64 residue = 0;

  friend bool operator==(const Progression&, const Progression&) = default;
};

/// Smallest modulus (then smallest residue) whose class f misses mod m.
inline std::optional<Progression> predict_missing_class(const FormInstance& f,
                                                        i64 max_modulus = 10'000) {
  for (i64 m : obstruction_moduli(f, max_modulus)) {
    const auto miss = unrepresented_residues(f, m);
    if (!miss.empty()) return Progression{m, miss.front()};
  }
  return std::nullopt;
}

}  // namespace almu
