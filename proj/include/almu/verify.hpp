#pragma once

// Empirical checks of a verdict against the brute-force represented set.

#include <optional>
#include <string>
#include <vector>

#include "almu/arith.hpp"
#include "almu/classify.hpp"
#include "almu/forms.hpp"
#include "almu/local.hpp"

namespace almu {

/// All n in [0, bound] that f does not represent.
inline std::vector<i64> exceptions_up_to(const FormInstance& f, i64 bound,
                                         const SieveOptions& opts = {}) {
  return represented_set(f, bound, opts).missing();
}

// n whose shifted target equals t * l^2.
struct FamilyMember {
  i64 n = 0;
  i64 l = 0;

  friend bool operator==(const FamilyMember&, const FamilyMember&) = default;
};

/// The n in [0, bound] with 8p^k n + c(p^k - 2)^2 = t l^2, l >= 1.
inline std::vector<FamilyMember> family_predict(const FormInstance& f, i64 t, i64 bound) {
  if (t < 1) throw InvalidArgument("family_predict: t must be positive");
  std::vector<FamilyMember> out;
  if (bound < 0) return out;
  const i128 base = static_cast<i128>(f.c) * (f.pk - 2) * (f.pk - 2);
  const i128 step = static_cast<i128>(8) * f.pk;
  const i128 top = step * bound + base;
  for (i64 l = 1; static_cast<i128>(t) * l * l <= top; ++l) {
    const i128 diff = static_cast<i128>(t) * l * l - base;
    if (diff < 0 || diff % step != 0) continue;
    out.push_back({static_cast<i64>(diff / step), l});
  }
  return out;
}

// If 8p^k n + c(p^k - 2)^2 = t l^2 for some l >= 1, returns that l.
inline std::optional<i64> family_root(const FormInstance& f, i64 t, i64 n) {
  const i128 target = static_cast<i128>(8) * f.pk * n +
                      static_cast<i128>(f.c) * (f.pk - 2) * (f.pk - 2);
  if (target % t != 0) return std::nullopt;
  i64 l = 0;
  if (!is_square(target / t, &l) || l == 0) return std::nullopt;
  return l;
}

struct ExceptionReport {
  FormInstance form;
  i64 bound = 0;
  i64 threshold = 0;
  std::vector<i64> exceptions;
  bool tail_clear = true;  // no exception in (bound/2, bound]
  std::vector<FamilyMember> family_matches;
  std::vector<i64> unexplained;  // exceptions above threshold outside the family
};

struct AuditOptions {
  i64 threshold = 1000;
  i64 max_modulus = 10'000;
  SieveOptions sieve;
};

struct AuditResult {
  ExceptionReport report;
  bool consistent = true;
  // Audits below 2 * threshold cannot see the tail; they only check what is
  // visible (no tail exceptions for almost universal verdicts).
  bool conclusive = false;
  std::optional<Progression> progression;
  std::vector<std::string> issues;
};

/// Residue class mod m (m from obstruction_moduli) all of whose members in
/// [0, bound] are unrepresented, with at least `min_members` members.
inline std::optional<Progression> find_missing_progression(const FormInstance& f,
                                                           const RepresentedSet& rs,
                                                           i64 max_modulus,
                                                           i64 min_members = 3) {
  for (i64 m : obstruction_moduli(f, max_modulus)) {
    if ((rs.bound() + 1) / m < min_members) continue;
    std::vector<char> hit(static_cast<std::size_t>(m), 0);
    for (i64 n = 0; n <= rs.bound(); ++n) {
      if (rs.contains(n)) hit[static_cast<std::size_t>(n % m)] = 1;
    }
    for (i64 r = 0; r < m; ++r) {
      if (!hit[static_cast<std::size_t>(r)]) return Progression{m, r};
    }
  }
  return std::nullopt;
}

inline AuditResult audit(const FormInstance& f, const Verdict& verdict, i64 bound,
                         const AuditOptions& opts = {}) {
  AuditResult res;
  ExceptionReport& rep = res.report;
  rep.form = f;
  rep.bound = bound;
  rep.threshold = opts.threshold;
  const RepresentedSet rs = represented_set(f, bound, opts.sieve);
  rep.exceptions = rs.missing();
  for (i64 n : rep.exceptions) {
    if (2 * n > bound) {
      rep.tail_clear = false;
      break;
    }
  }
  if (verdict.candidate) {
    const i64 t = verdict.candidate->t;
    for (i64 n : rep.exceptions) {
      if (auto l = family_root(f, t, n)) {
        rep.family_matches.push_back({n, *l});
      } else if (n > opts.threshold) {
        rep.unexplained.push_back(n);
      }
    }
  }
  res.conclusive = bound >= 2 * opts.threshold;

  auto fail = [&](std::string why) {
    res.consistent = false;
    res.issues.push_back(std::move(why));
  };
  switch (verdict.kind) {
    case VerdictKind::almost_universal:
      if (!rep.tail_clear) fail("almost universal verdict but exceptions in (N/2, N]");
      break;
    case VerdictKind::not_almost_universal:
      if (!rep.unexplained.empty()) {
        fail("exceptions above the threshold outside the t*l^2 family");
      }
      if (res.conclusive) {
        if (rep.tail_clear) fail("not almost universal verdict but no exceptions in (N/2, N]");
        if (rep.family_matches.empty()) fail("no exception lies in the t*l^2 family");
      }
      break;
    case VerdictKind::locally_obstructed:
      res.progression = find_missing_progression(f, rs, opts.max_modulus);
      if (res.conclusive && !res.progression) {
        fail("locally obstructed verdict but no missing residue class found");
      }
      break;
  }
  return res;
}

}  // namespace almu
