#pragma once

// Decision procedure: whether f_{a,b,c,p^k} represents all but finitely many
// positive integers. Inputs passing the local check fall into one of six
// regimes, each with four conditions whose conjunction means "not almost
// universal"; the spinor-exceptional candidate t drives the last condition.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "almu/arith.hpp"
#include "almu/forms.hpp"
#include "almu/local.hpp"

namespace almu {

// Regimes by (nu_p parity of a vs b, dyadic shape, p mod 4).
enum class Regime {
  same_p_parity_b_div4,   // nu_p(a) = nu_p(b) mod 2, nu_2(b) >= 2
  same_p_parity_b_2mod4,  // nu_p(a) = nu_p(b) mod 2, nu_2(b) = 1
  same_p_parity_b_odd,    // nu_p(a) = nu_p(b) mod 2, nu_2(b) = 0
  mixed_p_parity_p3,      // nu_p differ, nu_2 parities agree, p = 3 mod 4
  mixed_p_parity_p1,      // nu_p differ, nu_2 parities agree, p = 1 mod 4
  mixed_p_parity_mixed_2, // nu_p differ, nu_2 parities differ
};

inline constexpr Regime kAllRegimes[] = {
    Regime::same_p_parity_b_div4, Regime::same_p_parity_b_2mod4,
    Regime::same_p_parity_b_odd,  Regime::mixed_p_parity_p3,
    Regime::mixed_p_parity_p1,    Regime::mixed_p_parity_mixed_2};

// Short stable identifier used in reports ("R1" .. "R6").
inline const char* regime_id(Regime r) {
  switch (r) {
    case Regime::same_p_parity_b_div4: return "R1";
    case Regime::same_p_parity_b_2mod4: return "R2";
    case Regime::same_p_parity_b_odd: return "R3";
    case Regime::mixed_p_parity_p3: return "R4";
    case Regime::mixed_p_parity_p1: return "R5";
    case Regime::mixed_p_parity_mixed_2: return "R6";
  }
  return "?";
}

inline const char* regime_hypothesis(Regime r) {
  switch (r) {
    case Regime::same_p_parity_b_div4:
      return "nu_p(a) = nu_p(b) (mod 2), nu_2(a) >= nu_2(b) >= 2";
    case Regime::same_p_parity_b_2mod4:
      return "nu_p(a) = nu_p(b) (mod 2), nu_2(a) >= nu_2(b) = 1";
    case Regime::same_p_parity_b_odd:
      return "nu_p(a) = nu_p(b) (mod 2), nu_2(a) >= nu_2(b) = 0";
    case Regime::mixed_p_parity_p3:
      return "nu_p(a) != nu_p(b) (mod 2), nu_2(a) = nu_2(b) (mod 2), p = 3 (mod 4)";
    case Regime::mixed_p_parity_p1:
      return "nu_p(a) != nu_p(b) (mod 2), nu_2(a) = nu_2(b) (mod 2), p = 1 (mod 4)";
    case Regime::mixed_p_parity_mixed_2:
      return "nu_p(a) != nu_p(b) (mod 2), nu_2(a) != nu_2(b) (mod 2)";
  }
  return "";
}

inline bool same_p_parity(const FormInstance& f) {
  return (f.nu_p_a - f.nu_p_b) % 2 == 0;
}

inline bool same_2_parity(const FormInstance& f) {
  return (f.nu2_a - f.nu2_b) % 2 == 0;
}

/// Regime selection; total on normalized instances.
inline Regime dispatch(const FormInstance& f) {
  if (same_p_parity(f)) {
    if (f.nu2_b >= 2) return Regime::same_p_parity_b_div4;
    if (f.nu2_b == 1) return Regime::same_p_parity_b_2mod4;
    return Regime::same_p_parity_b_odd;
  }
  if (!same_2_parity(f)) return Regime::mixed_p_parity_mixed_2;
  return f.p % 4 == 3 ? Regime::mixed_p_parity_p3 : Regime::mixed_p_parity_p1;
}

// The integer whose square class carries the spinor exceptions, and the
// quadratic field Q(sqrt(field_d)) attached to it.
struct SpinorCandidate {
  i64 t = 0;
  i64 field_d = 0;
  std::optional<int> epsilon;  // only in the mixed_p_parity_mixed_2 regime

  friend bool operator==(const SpinorCandidate&, const SpinorCandidate&) = default;
};

inline SpinorCandidate candidate(const FormInstance& f, Regime r) {
  SpinorCandidate s;
  const i64 sf_abc = squarefree_part_of_product({f.a_odd, f.b_odd, f.c_odd});
  const i64 sf_pabc = squarefree_part_of_product({f.p, f.a_odd, f.b_odd, f.c_odd});
  const i64 two_c = i64{1} << f.nu2_c;
  switch (r) {
    case Regime::same_p_parity_b_div4:
    case Regime::same_p_parity_b_2mod4:
      s.t = sf_abc;
      s.field_d = same_2_parity(f) ? -1 : -2;
      break;
    case Regime::same_p_parity_b_odd:
      s.t = checked_mul(two_c, sf_abc, "spinor candidate");
      s.field_d = same_2_parity(f) ? -1 : -2;
      break;
    case Regime::mixed_p_parity_p3:
    case Regime::mixed_p_parity_p1:
      s.t = checked_mul(two_c, sf_pabc, "spinor candidate");
      s.field_d = -f.p;
      break;
    case Regime::mixed_p_parity_mixed_2:
      s.t = sf_pabc;
      s.field_d = checked_mul(-2, f.p);
      s.epsilon = ((f.nu_p_b - f.k) % 2 != 0) ? 1 : 2;
      break;
  }
  return s;
}

struct TraceEntry {
  std::string label;
  bool pass = false;
  std::string detail;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct ConditionReport {
  std::vector<TraceEntry> trace;
  bool all_hold = false;
  std::optional<LatticeSolution> witness;  // representation of t, when one was found
};

namespace detail {

inline std::string symbol_text(i64 top, i64 bottom, int value) {
  std::ostringstream os;
  os << "(" << top << "/" << bottom << ") = " << (value > 0 ? "+1" : value < 0 ? "-1" : "0");
  return os.str();
}

class TraceBuilder {
 public:
  bool add(std::string label, bool pass, std::string detail) {
    trace_.push_back({std::move(label), pass, std::move(detail)});
    return pass;
  }
  std::vector<TraceEntry> take() { return std::move(trace_); }

 private:
  std::vector<TraceEntry> trace_;
};

// Every prime q of `sf` must satisfy (d/q) = 1.
inline bool prime_symbol_condition(TraceBuilder& tb, i64 sf, i64 d) {
  bool all = true;
  const i64 mag = sf < 0 ? -sf : sf;
  std::vector<i64> primes = mag > 1 ? prime_divisors(mag) : std::vector<i64>{};
  for (i64 q : primes) {
    const int s = jacobi(d, q);
    all &= tb.add("cond1.q=" + std::to_string(q), s == 1, symbol_text(d, q, s));
  }
  std::ostringstream os;
  os << "every prime q of " << sf << " has (" << d << "/q) = 1";
  if (primes.empty()) os << " (no primes; vacuous)";
  tb.add("cond1", all, os.str());
  return all;
}

inline bool legendre_is_one(TraceBuilder& tb, const std::string& label, i64 top, i64 p) {
  const int s = jacobi(top, p);
  return tb.add(label, s == 1, symbol_text(top, p, s));
}

inline bool congruent(TraceBuilder& tb, const std::string& label,
                      const std::string& what, i128 value, i64 target, i64 m) {
  const i64 r = mod(value, m);
  const bool ok = r == mod(target, m);
  std::ostringstream os;
  os << what << " = " << r << " (mod " << m << "), need " << mod(target, m);
  return tb.add(label, ok, os.str());
}

inline std::string nu_text(const FormInstance& f) {
  std::ostringstream os;
  os << "nu_2(a)=" << f.nu2_a << ", nu_2(b)=" << f.nu2_b << ", nu_2(c)=" << f.nu2_c;
  return os.str();
}

inline i64 dyadic_modulus(const FormInstance& f) {
  return i64{1} << std::max(0, 3 - f.nu2_c);
}

// p^k b' c' reduced modulo 8 without forming the full product.
inline i64 pk_bc_mod8(const FormInstance& f) {
  return mod(static_cast<i128>(mod(f.pk, 8)) * mod(f.b_odd, 8) * mod(f.c_odd, 8), 8);
}

inline i64 bc_mod8(const FormInstance& f) {
  return mod(static_cast<i128>(f.b_odd) * f.c_odd, 8);
}

inline i64 pab_mod8(const FormInstance& f) {
  return mod(static_cast<i128>(mod(f.p, 8)) * mod(f.a_odd, 8) * mod(f.b_odd, 8), 8);
}

inline void condition3(TraceBuilder& tb, const FormInstance& f, Regime r, bool& ok) {
  const std::string nus = nu_text(f);
  switch (r) {
    case Regime::same_p_parity_b_div4: {
      ok &= congruent(tb, "cond3.odd_parts", "a' - b'", static_cast<i128>(f.a_odd) - f.b_odd, 0, 8);
      if (same_2_parity(f)) {
        ok &= congruent(tb, "cond3.pk_bc", "p^k b' c'", pk_bc_mod8(f), 1, 4);
      } else {
        const i64 v = pk_bc_mod8(f);
        ok &= tb.add("cond3.pk_bc", v == 1 || v == 3,
                     "p^k b' c' = " + std::to_string(v) + " (mod 8), need 1 or 3");
      }
      break;
    }
    case Regime::same_p_parity_b_2mod4: {
      ok &= congruent(tb, "cond3.odd_parts", "a' - b'", static_cast<i128>(f.a_odd) - f.b_odd, 0, 8);
      ok &= tb.add("cond3.nu2_parity", same_2_parity(f), nus + "; need nu_2(a) = nu_2(b) (mod 2)");
      ok &= congruent(tb, "cond3.pk_bc", "p^k b' c'", pk_bc_mod8(f), 1, 4);
      break;
    }
    case Regime::same_p_parity_b_odd: {
      ok &= tb.add("cond3.c_not_div4", f.nu2_c < 2, nus + "; need 4 not dividing c");
      ok &= congruent(tb, "cond3.odd_parts", "a' - b'", static_cast<i128>(f.a_odd) - f.b_odd, 0,
                      dyadic_modulus(f));
      if (f.nu2_c == 1) {
        ok &= congruent(tb, "cond3.pk_bc", "p^k b' c'", pk_bc_mod8(f), 1, 4);
        ok &= tb.add("cond3.nu2_a", f.nu2_a >= 2 && f.nu2_a % 2 == 0,
                     nus + "; 2 || c needs nu_2(a) >= 2 and even");
      } else if (f.nu2_c == 0) {
        ok &= congruent(tb, "cond3.pk_bc", "p^k b' c'", pk_bc_mod8(f), 1, 8);
        ok &= tb.add("cond3.nu2_a", f.nu2_a >= 3 && f.nu2_a % 2 == 1,
                     nus + "; odd c needs nu_2(a) >= 3 and odd");
      } else {
        ok &= tb.add("cond3.branch", false,
                     nus + "; no branch exists for 4 | c, condition cannot hold");
      }
      break;
    }
    case Regime::mixed_p_parity_p3: {
      ok &= congruent(tb, "cond3.pab", "p a' b'", pab_mod8(f), 1, dyadic_modulus(f));
      const bool i = tb.add("cond3.i", f.p % 8 == 7,
                            "p = " + std::to_string(f.p % 8) + " (mod 8), need 7");
      const bool parity_bc = (f.nu2_b - f.nu2_c) % 2 != 0;
      const bool ii = tb.add("cond3.ii", parity_bc && f.nu2_a > f.nu2_b,
                             nus + "; need nu_2(b) != nu_2(c) (mod 2) and nu_2(a) > nu_2(b)");
      const i64 ab4 = mod(static_cast<i128>(f.a_odd) * f.b_odd, 4);
      const bool iii = tb.add("cond3.iii", parity_bc && f.nu2_a == f.nu2_b && ab4 == 3,
                              nus + "; a'b' = " + std::to_string(ab4) +
                                  " (mod 4); need nu_2(b) != nu_2(c) (mod 2), nu_2(a) = nu_2(b), a'b' = 3 (mod 4)");
      ok &= tb.add("cond3.any", i || ii || iii, "one of (i), (ii), (iii)");
      break;
    }
    case Regime::mixed_p_parity_p1: {
      ok &= tb.add("cond3.c_not_div4", f.nu2_c < 2, nus + "; need 4 not dividing c");
      ok &= congruent(tb, "cond3.pab", "p a' b'", pab_mod8(f), 1, dyadic_modulus(f));
      const Dyadic x{1 + f.nu2_b, bc_mod8(f)};
      const bool norm = in_norm_group_2(x, -f.p);
      const bool i = tb.add("cond3.i", norm && f.nu2_a > f.nu2_b && f.nu2_b >= 2,
                            std::string("2^(1+nu_2(b)) b'c' ") + (norm ? "is" : "is not") +
                                " a local norm from Q(sqrt(-p)); " + nus +
                                "; need nu_2(a) > nu_2(b) >= 2");
      const i64 bc4 = mod(bc_mod8(f), 4);
      const bool ii = tb.add("cond3.ii",
                             bc4 == 1 && f.nu2_b <= 1 && (f.nu2_c - f.nu2_b) % 2 != 0 &&
                                 f.nu2_a > f.nu2_b,
                             "b'c' = " + std::to_string(bc4) + " (mod 4); " + nus +
                                 "; need b'c' = 1 (mod 4), nu_2(b) in {0,1}, nu_2(c) != nu_2(b) (mod 2), nu_2(a) > nu_2(b)");
      const i64 want = f.p % 8 == 1 ? 1 : (f.nu2_b % 2 == 0 ? 3 : 1);
      const bool iii = tb.add("cond3.iii", f.nu2_a == f.nu2_b && f.nu2_b >= 1 && bc4 == want,
                              "b'c' = " + std::to_string(bc4) + " (mod 4), need " +
                                  std::to_string(want) + "; " + nus +
                                  "; need nu_2(a) = nu_2(b) >= 1");
      ok &= tb.add("cond3.any", i || ii || iii, "one of (i), (ii), (iii)");
      break;
    }
    case Regime::mixed_p_parity_mixed_2: {
      ok &= tb.add("cond3.c_odd", f.nu2_c == 0, nus + "; need c odd");
      ok &= congruent(tb, "cond3.pab", "p a' b'", pab_mod8(f), 1, 8);
      ok &= tb.add("cond3.nu2_b_not_1", f.nu2_b != 1, nus + "; need nu_2(b) != 1");
      const Dyadic x{1 + f.nu2_b, pk_bc_mod8(f)};
      const bool norm = in_norm_group_2(x, checked_mul(-2, f.p));
      const bool i = tb.add("cond3.i", norm && f.nu2_a > f.nu2_b && f.nu2_b >= 2,
                            std::string("2^(1+nu_2(b)) p^k b'c' ") + (norm ? "is" : "is not") +
                                " a local norm from Q(sqrt(-2p)); " + nus +
                                "; need nu_2(a) > nu_2(b) >= 2");
      const i64 v = pk_bc_mod8(f);
      const bool ii = tb.add("cond3.ii", v == f.p % 8 && f.nu2_b == 0 && f.nu2_a >= 3,
                             "p^k b'c' = " + std::to_string(v) + " (mod 8), need p = " +
                                 std::to_string(f.p % 8) + "; " + nus +
                                 "; need nu_2(b) = 0, nu_2(a) >= 3");
      ok &= tb.add("cond3.any", i || ii, "one of (i), (ii)");
      break;
    }
  }
}

}  // namespace detail

/// Evaluates the four conditions of the dispatched regime. The representation
/// search for t only runs when everything before it holds.
inline ConditionReport eval_conditions(const FormInstance& f, Regime r) {
  detail::TraceBuilder tb;
  const SpinorCandidate cand = candidate(f, r);
  bool ok = true;

  const bool same_p = r == Regime::same_p_parity_b_div4 ||
                      r == Regime::same_p_parity_b_2mod4 ||
                      r == Regime::same_p_parity_b_odd;
  // Condition 1: the primes of the odd squarefree kernel split suitably.
  if (same_p) {
    const i64 sf = squarefree_part_of_product({f.a_odd, f.b_odd, f.c_odd});
    ok &= detail::prime_symbol_condition(tb, sf, cand.field_d);
  } else {
    const i64 sf = squarefree_part_of_product({f.p, f.a_odd, f.b_odd, f.c_odd});
    ok &= detail::prime_symbol_condition(tb, sf, cand.field_d);
  }

  // Condition 2: behaviour at p.
  if (same_p) {
    const bool par = (f.nu_p_a % 2 == f.k % 2) && (f.nu_p_b % 2 == f.k % 2);
    std::ostringstream os;
    os << "nu_p(a)=" << f.nu_p_a << ", nu_p(b)=" << f.nu_p_b << ", k=" << f.k
       << "; need all equal mod 2";
    ok &= tb.add("cond2.nu_p_parity", par, os.str());
  } else if (r == Regime::mixed_p_parity_mixed_2) {
    bool c2 = detail::legendre_is_one(tb, "cond2.2a0b0", checked_mul(2, checked_mul(f.a0, f.b0)), f.p);
    c2 &= detail::legendre_is_one(
        tb, "cond2.eps_b0c",
        checked_mul(*cand.epsilon, checked_mul(f.b0, f.c)), f.p);
    ok &= tb.add("cond2", c2, "epsilon = " + std::to_string(*cand.epsilon));
  } else {
    bool c2 = detail::legendre_is_one(tb, "cond2.2b0c", checked_mul(2, checked_mul(f.b0, f.c)), f.p);
    c2 &= detail::legendre_is_one(tb, "cond2.2a0c", checked_mul(2, checked_mul(f.a0, f.c)), f.p);
    c2 &= detail::legendre_is_one(tb, "cond2.a0b0", checked_mul(f.a0, f.b0), f.p);
    ok &= tb.add("cond2", c2, "all three symbols are +1");
  }

  // Condition 3: dyadic congruences.
  detail::condition3(tb, f, r, ok);

  // Condition 4: t c^{-1} is a square mod p^k and <8p^k a, 8p^k b, c> does not
  // represent t.
  ConditionReport report;
  if (cand.t % f.p == 0) {
    ok &= tb.add("cond4.qr", false, "p divides t");
  } else {
    const i64 ratio = mod(static_cast<i128>(mod(cand.t, f.pk)) * inverse_mod(f.c, f.pk), f.pk);
    const bool qr = is_qr_mod_pk(ratio, f.p, f.k);
    ok &= tb.add("cond4.qr", qr,
                 "t c^-1 = " + std::to_string(ratio) + " (mod " + std::to_string(f.pk) + ") is " +
                     (qr ? "" : "not ") + "a square");
  }
  if (ok) {
    report.witness = lattice_represents(f, cand.t);
    std::string detail = "8p^k a X^2 + 8p^k b Y^2 + c W^2 = " + std::to_string(cand.t);
    if (report.witness) {
      const auto& s = *report.witness;
      detail += " solved by (X, Y, W) = (" + std::to_string(s.x) + ", " + std::to_string(s.y) +
                ", " + std::to_string(s.w) + ")";
    } else {
      detail += " has no integral solution";
    }
    ok &= tb.add("cond4.unrepresented", !report.witness.has_value(), detail);
  }
  report.trace = tb.take();
  report.all_hold = ok;
  return report;
}

enum class VerdictKind { almost_universal, not_almost_universal, locally_obstructed };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::almost_universal: return "AlmostUniversal";
    case VerdictKind::not_almost_universal: return "NotAlmostUniversal";
    case VerdictKind::locally_obstructed: return "LocallyObstructed";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::almost_universal;
  std::optional<Regime> regime;  // absent when locally obstructed
  std::vector<TraceEntry> trace;
  std::optional<SpinorCandidate> candidate;
  std::optional<LatticeSolution> witness_solution;
  LocalVerdict local;
};

inline std::vector<TraceEntry> local_trace(const FormInstance& f) {
  std::vector<TraceEntry> out;
  const bool dy = dyadic_c_condition(f);
  out.push_back({"local.dyadic", dy,
                 "nu_2(c)=" + std::to_string(f.nu2_c) + ", nu_2(ab)=" +
                     std::to_string(f.nu2_a + f.nu2_b) +
                     "; need 4 not dividing c, or 4 || c and 2 || ab"});
  const auto lattice = coset_lattice(f);
  for (i64 q : relevant_odd_primes(f)) {
    const bool iso = isometric_to_split(lattice.entries, q);
    std::ostringstream os;
    os << "Jordan splitting at " << q << ":";
    for (const auto& comp : jordan_decompose_odd(lattice.entries, q)) {
      os << " [scale " << comp.scale << ", rank " << comp.rank << ", class "
         << (comp.unit_class > 0 ? "+1" : "-1") << "]";
    }
    os << (iso ? "; splits off a hyperbolic plane" : "; not isometric to <1,-1,-d>");
    out.push_back({"local.q=" + std::to_string(q), iso, os.str()});
  }
  return out;
}

inline Verdict classify(const FormInstance& f) {
  Verdict v;
  v.local = genus_check(f);
  v.trace = local_trace(f);
  if (!v.local.ok) {
    v.kind = VerdictKind::locally_obstructed;
    return v;
  }
  const Regime r = dispatch(f);
  v.regime = r;
  v.candidate = candidate(f, r);
  ConditionReport rep = eval_conditions(f, r);
  v.trace.insert(v.trace.end(), rep.trace.begin(), rep.trace.end());
  v.witness_solution = rep.witness;
  v.kind = rep.all_hold ? VerdictKind::not_almost_universal : VerdictKind::almost_universal;
  return v;
}

}  // namespace almu
