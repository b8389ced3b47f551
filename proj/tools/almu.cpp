// almu: classify, verify and scan forms a x^2 + b y^2 + c P_{p^k+2}(z).

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "almu/classify.hpp"
#include "almu/scan.hpp"
#include "almu/verify.hpp"

namespace {

using namespace almu;

enum ExitCode : int {
  kExitAlmostUniversal = 0,
  kExitAuditInconsistent = 1,
  kExitInvalidInput = 2,
  kExitBudget = 3,
  kExitUnwritable = 4,
  kExitCheckpoint = 5,
  kExitNotAlmostUniversal = 10,
  kExitLocallyObstructed = 11,
};

int exit_code(VerdictKind k) {
  switch (k) {
    case VerdictKind::almost_universal: return kExitAlmostUniversal;
    case VerdictKind::not_almost_universal: return kExitNotAlmostUniversal;
    case VerdictKind::locally_obstructed: return kExitLocallyObstructed;
  }
  return kExitInvalidInput;
}

struct FormArgs {
  i64 a = 0, b = 0, c = 0, p = 0, k = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-a", a, "coefficient of x^2")->required();
    cmd->add_option("-b", b, "coefficient of y^2")->required();
    cmd->add_option("-c", c, "coefficient of the polygonal term")->required();
    cmd->add_option("-p", p, "odd prime p")->required();
    cmd->add_option("-k", k, "exponent k (polygonal order p^k + 2)")->capture_default_str();
  }
};

void print_form(std::ostream& os, const FormInstance& f) {
  os << "form       " << f.input_a() << " x^2 + " << f.input_b() << " y^2 + " << f.c << " P_"
     << f.order << "(z)   (p^k = " << f.p << "^" << f.k << ")\n";
}

void print_verdict(std::ostream& os, const FormInstance& f, const Verdict& v) {
  print_form(os, f);
  os << "verdict    " << to_string(v.kind);
  if (!v.local.ok) {
    os << " (fails at " << *v.local.failing_prime << ": " << to_string(*v.local.reason) << ")";
  }
  os << '\n';
  if (v.regime) {
    os << "theorem    " << regime_id(*v.regime) << "  [" << regime_hypothesis(*v.regime) << "]\n";
  }
  if (v.candidate) {
    os << "candidate  t = " << v.candidate->t << ", field Q(sqrt(" << v.candidate->field_d << "))";
    if (v.candidate->epsilon) os << ", epsilon = " << *v.candidate->epsilon;
    os << '\n';
  }
  if (v.witness_solution) {
    const auto& w = *v.witness_solution;
    os << "witness    t = " << 8 * f.pk * f.a << "*" << w.x << "^2 + " << 8 * f.pk * f.b << "*"
       << w.y << "^2 + " << f.c << "*" << w.w << "^2\n";
  }
  os << "trace\n";
  for (const auto& e : v.trace) {
    os << "  [" << (e.pass ? "pass" : "fail") << "] " << e.label;
    if (!e.detail.empty()) os << "  " << e.detail;
    os << '\n';
  }
}

template <class T>
void print_list(std::ostream& os, const std::vector<T>& xs, std::size_t limit,
                void (*put)(std::ostream&, const T&)) {
  std::size_t i = 0;
  for (; i < xs.size() && i < limit; ++i) {
    os << (i ? " " : "");
    put(os, xs[i]);
  }
  if (xs.size() > limit) os << " ... (" << xs.size() - limit << " more)";
  os << '\n';
}

void print_audit(std::ostream& os, const AuditResult& res, std::size_t limit) {
  const auto& rep = res.report;
  os << "oracle     exceptions up to N = " << rep.bound << ": " << rep.exceptions.size() << '\n';
  os << "  exceptions   ";
  print_list<i64>(os, rep.exceptions, limit, [](std::ostream& s, const i64& n) { s << n; });
  os << "  tail_clear   " << (rep.tail_clear ? "yes" : "no") << "  (no exception in (N/2, N])\n";
  if (!rep.family_matches.empty()) {
    os << "  family t*l^2 (n:l)  ";
    print_list<FamilyMember>(os, rep.family_matches, limit, [](std::ostream& s, const FamilyMember& m) {
      s << m.n << ":" << m.l;
    });
  }
  os << "  unexplained above " << rep.threshold << ": " << rep.unexplained.size();
  if (!rep.unexplained.empty()) {
    os << "  ";
    print_list<i64>(os, rep.unexplained, limit, [](std::ostream& s, const i64& n) { s << n; });
  } else {
    os << '\n';
  }
  if (res.progression) {
    os << "  missing class  n = " << res.progression->residue << " mod " << res.progression->modulus
       << '\n';
  }
  os << "audit      " << (res.consistent ? "consistent" : "INCONSISTENT");
  if (!res.conclusive) os << " (N below 2 * threshold: tail checks not conclusive)";
  os << '\n';
  for (const auto& why : res.issues) os << "  issue: " << why << '\n';
}

// Applies config defaults for options the command line left unset.
void apply_config(const std::string& path, CLI::Option* n_opt, i64& bound, CLI::Option* thr_opt,
                  i64& threshold, CLI::Option* threads_opt, int& threads,
                  CLI::Option* format_opt = nullptr, std::string* format = nullptr) {
  if (path.empty()) return;
  const ScanConfig cfg = load_config(path);
  if (cfg.bound && n_opt->count() == 0) bound = *cfg.bound;
  if (cfg.threshold && thr_opt->count() == 0) threshold = *cfg.threshold;
  if (cfg.threads && threads_opt->count() == 0) threads = *cfg.threads;
  if (cfg.format && format_opt && format_opt->count() == 0) *format = to_string(*cfg.format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost universality of a x^2 + b y^2 + c P_{p^k+2}(z)"};
  app.require_subcommand(1);

  FormArgs cls;
  bool cls_json = false;
  auto* classify_cmd = app.add_subcommand("classify", "decide almost universality of one form");
  cls.add_to(classify_cmd);
  classify_cmd->add_flag("--json", cls_json, "print the scan record instead of text");

  FormArgs ver;
  i64 ver_bound = 10'000, ver_threshold = 1000;
  int ver_threads = 1;
  std::string ver_config;
  std::size_t ver_limit = 40;
  auto* verify_cmd = app.add_subcommand("verify", "classify and audit against the brute-force oracle");
  ver.add_to(verify_cmd);
  auto* ver_n = verify_cmd->add_option("-N", ver_bound, "oracle bound")->capture_default_str();
  auto* ver_thr = verify_cmd->add_option("--threshold", ver_threshold, "small-n threshold")
                      ->capture_default_str();
  auto* ver_thd = verify_cmd->add_option("--threads", ver_threads, "sieve threads")->capture_default_str();
  verify_cmd->add_option("--config", ver_config, "key=value defaults file");
  verify_cmd->add_option("--show", ver_limit, "list at most this many entries")->capture_default_str();

  std::string sa = "1", sb = "1", sc = "1", s_out, s_format = "jsonl", s_config;
  i64 s_p = 3, s_k = 1, s_bound = 0, s_threshold = 1000;
  int s_threads = 1;
  bool s_resume = false;
  std::optional<i64> s_stop_after;
  auto* scan_cmd = app.add_subcommand("scan", "classify (and audit) every valid triple of a box");
  scan_cmd->add_option("-a", sa, "range of a, e.g. 1..30")->required();
  scan_cmd->add_option("-b", sb, "range of b")->required();
  scan_cmd->add_option("-c", sc, "range of c")->required();
  scan_cmd->add_option("-p", s_p, "odd prime p")->required();
  scan_cmd->add_option("-k", s_k, "exponent k")->capture_default_str();
  auto* s_n = scan_cmd->add_option("-N", s_bound, "oracle bound (0: classify only)")->capture_default_str();
  scan_cmd->add_option("-o", s_out, "output file")->required();
  auto* s_fmt = scan_cmd->add_option("--format", s_format, "jsonl or csv")->capture_default_str();
  auto* s_thd = scan_cmd->add_option("--threads", s_threads, "worker threads")->capture_default_str();
  auto* s_thr = scan_cmd->add_option("--threshold", s_threshold, "small-n threshold")
                    ->capture_default_str();
  scan_cmd->add_option("--config", s_config, "key=value defaults file");
  scan_cmd->add_flag("--resume", s_resume, "continue from the checkpoint next to the output");
  scan_cmd->add_option("--stop-after", s_stop_after, "stop once this many records are written")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidInput;
  }

  try {
    if (*classify_cmd) {
      const FormInstance f = make_form(cls.a, cls.b, cls.c, cls.p, cls.k);
      const Verdict v = classify(f);
      if (cls_json) {
        ScanRecord rec{{cls.a, cls.b, cls.c}, cls.p, cls.k, v, std::nullopt};
        std::cout << to_json(rec).dump(2) << '\n';
      } else {
        print_verdict(std::cout, f, v);
      }
      return exit_code(v.kind);
    }
    if (*verify_cmd) {
      apply_config(ver_config, ver_n, ver_bound, ver_thr, ver_threshold, ver_thd, ver_threads);
      if (ver_bound < 0) throw InvalidArgument("N must be nonnegative");
      if (ver_threads < 1) throw InvalidArgument("threads must be positive");
      const FormInstance f = make_form(ver.a, ver.b, ver.c, ver.p, ver.k);
      const Verdict v = classify(f);
      print_verdict(std::cout, f, v);
      AuditOptions opts;
      opts.threshold = ver_threshold;
      opts.sieve.threads = ver_threads;
      const AuditResult res = audit(f, v, ver_bound, opts);
      print_audit(std::cout, res, ver_limit);
      return res.consistent ? 0 : kExitAuditInconsistent;
    }
    if (*scan_cmd) {
      apply_config(s_config, s_n, s_bound, s_thr, s_threshold, s_thd, s_threads, s_fmt, &s_format);
      ScanJob job;
      job.a = parse_range(sa);
      job.b = parse_range(sb);
      job.c = parse_range(sc);
      job.p = s_p;
      job.k = s_k;
      job.bound = s_bound;
      job.threshold = s_threshold;
      job.threads = s_threads;
      job.output = s_out;
      job.format = parse_format(s_format);
      ScanOptions opts;
      opts.resume = s_resume;
      opts.stop_after = s_stop_after;
      const ScanSummary sum = run_scan(job, opts);
      std::cerr << "scan: " << sum.total << " triples, " << sum.resumed << " resumed, "
                << sum.written << " written (AU " << sum.almost_universal << ", NAU "
                << sum.not_almost_universal << ", LO " << sum.locally_obstructed << ")";
      if (job.bound > 0) std::cerr << ", " << sum.inconsistent << " audit inconsistencies";
      std::cerr << (sum.complete ? "" : ", incomplete") << '\n';
      return 0;
    }
  } catch (const FormError& e) {
    std::cerr << "error: invalid form: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: budget exceeded: " << e.what() << '\n';
    return kExitBudget;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnwritable;
  } catch (const CheckpointMismatch& e) {
    std::cerr << "error: refusing to resume: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const RangeError& e) {
    std::cerr << "error: out of range: " << e.what() << '\n';
    return kExitInvalidInput;
  }
  return kExitInvalidInput;
}
