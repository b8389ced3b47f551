#pragma once

// Parameter-box scans: enumerate valid triples, classify and audit each one,
// and stream records in triple order to a json-lines or CSV file with a
// crash-safe checkpoint.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "almu/classify.hpp"
#include "almu/error.hpp"
#include "almu/forms.hpp"
#include "almu/verify.hpp"

namespace almu {

inline constexpr int kSchemaVersion = 1;

struct IntRange {
  i64 lo = 1;
  i64 hi = 1;

  bool empty() const { return hi < lo; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// "7" or "1..30". An empty range such as "5..4" is allowed.
inline IntRange parse_range(std::string_view text) {
  auto number = [&](std::string_view s) {
    if (s.empty()) throw InvalidArgument("bad range '" + std::string(text) + "'");
    i64 v = 0;
    for (char ch : s) {
      if (ch < '0' || ch > '9' || v > kI64Max / 10 - 9) {
        throw InvalidArgument("bad range '" + std::string(text) + "'");
      }
      v = v * 10 + (ch - '0');
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const i64 v = number(text);
    return {v, v};
  }
  return {number(text.substr(0, dots)), number(text.substr(dots + 2))};
}

enum class OutputFormat { json_lines, csv };

inline OutputFormat parse_format(std::string_view s) {
  if (s == "jsonl" || s == "json-lines" || s == "json") return OutputFormat::json_lines;
  if (s == "csv") return OutputFormat::csv;
  throw InvalidArgument("unknown output format '" + std::string(s) + "'");
}

inline const char* to_string(OutputFormat f) {
  return f == OutputFormat::csv ? "csv" : "json-lines";
}

struct ScanJob {
  IntRange a{1, 1}, b{1, 1}, c{1, 1};
  i64 p = 3;
  i64 k = 1;
  i64 bound = 0;  // oracle bound N; 0 skips the audit
  i64 threshold = 1000;
  int threads = 1;
  std::string output;
  OutputFormat format = OutputFormat::json_lines;

  void validate() const {
    for (const IntRange* r : {&a, &b, &c}) {
      if (r->lo < 1) throw InvalidArgument("scan ranges must start at 1 or above");
      if (r->hi > kMaxCoefficient) throw InvalidArgument("scan range exceeds the coefficient cap");
    }
    make_form(1, 1, 1, p, k);  // rejects a bad p or k
    if (bound < 0) throw InvalidArgument("N must be nonnegative");
    if (threshold < 0) throw InvalidArgument("threshold must be nonnegative");
    if (threads < 1) throw InvalidArgument("threads must be positive");
    if (output.empty()) throw InvalidArgument("an output path is required");
  }
};

struct Triple {
  i64 a = 0, b = 0, c = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Valid triples of the box in lexicographic order.
inline std::vector<Triple> enumerate_triples(const ScanJob& job) {
  std::vector<Triple> out;
  for (i64 a = job.a.lo; a <= job.a.hi; ++a) {
    for (i64 b = job.b.lo; b <= job.b.hi; ++b) {
      for (i64 c = job.c.lo; c <= job.c.hi; ++c) {
        if (std::gcd(std::gcd(a, b), c) != 1 || c % job.p == 0) continue;
        out.push_back({a, b, c});
      }
    }
  }
  return out;
}

struct ScanRecord {
  Triple input;
  i64 p = 0, k = 0;
  Verdict verdict;
  std::optional<AuditResult> audit;
};

inline ScanRecord scan_one(const ScanJob& job, Triple t) {
  ScanRecord rec;
  rec.input = t;
  rec.p = job.p;
  rec.k = job.k;
  const FormInstance f = make_form(t.a, t.b, t.c, job.p, job.k);
  rec.verdict = classify(f);
  if (job.bound > 0) {
    AuditOptions opts;
    opts.threshold = job.threshold;
    rec.audit = audit(f, rec.verdict, job.bound, opts);
  }
  return rec;
}

inline nlohmann::ordered_json to_json(const ScanRecord& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["a"] = r.input.a;
  j["b"] = r.input.b;
  j["c"] = r.input.c;
  j["p"] = r.p;
  j["k"] = r.k;
  const Verdict& v = r.verdict;
  j["verdict"] = to_string(v.kind);
  j["theorem"] = v.regime ? ordered_json(regime_id(*v.regime)) : ordered_json(nullptr);
  j["t"] = v.candidate ? ordered_json(v.candidate->t) : ordered_json(nullptr);
  j["field_d"] = v.candidate ? ordered_json(v.candidate->field_d) : ordered_json(nullptr);
  j["epsilon"] = v.candidate && v.candidate->epsilon ? ordered_json(*v.candidate->epsilon)
                                                     : ordered_json(nullptr);
  ordered_json trace = ordered_json::array();
  for (const auto& e : v.trace) {
    trace.push_back({{"label", e.label}, {"pass", e.pass}, {"detail", e.detail}});
  }
  j["trace"] = std::move(trace);
  if (r.audit) {
    const ExceptionReport& rep = r.audit->report;
    j["exceptions_checked_to"] = rep.bound;
    j["tail_clear"] = rep.tail_clear;
    j["family_matches"] = rep.family_matches.size();
    j["unexplained"] = rep.unexplained.size();
    j["exceptions"] = rep.exceptions.size();
    j["consistent"] = r.audit->consistent;
  } else {
    for (const char* key : {"exceptions_checked_to", "tail_clear", "family_matches",
                            "unexplained", "exceptions", "consistent"}) {
      j[key] = nullptr;
    }
  }
  return j;
}

inline std::string to_json_line(const ScanRecord& r) { return to_json(r).dump(); }

/// RFC 4180: quote when the field holds a comma, quote, CR or LF.
inline std::string csv_quote(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "schema_version", "a", "b", "c", "p", "k", "verdict", "theorem", "t", "field_d",
      "epsilon", "trace", "exceptions_checked_to", "tail_clear", "family_matches",
      "unexplained", "exceptions", "consistent"};
  return cols;
}

inline std::string csv_header() {
  std::string s;
  for (const auto& c : csv_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

// Same fields as the json record; the trace collapses to label=pass|fail.
inline std::string to_csv_row(const ScanRecord& r) {
  const auto j = to_json(r);
  std::string row;
  for (const auto& col : csv_columns()) {
    std::string cell;
    const auto& v = j.at(col);
    if (col == "trace") {
      for (const auto& e : v) {
        if (!cell.empty()) cell += ';';
        cell += e.at("label").get<std::string>() + '=' + (e.at("pass").get<bool>() ? "pass" : "fail");
      }
    } else if (v.is_string()) {
      cell = v.get<std::string>();
    } else if (!v.is_null()) {
      cell = v.dump();
    }
    if (!row.empty() || col != csv_columns().front()) row += ',';
    row += csv_quote(cell);
  }
  return row;
}

/// FNV-1a over the fields that determine the file contents.
inline std::string job_hash(const ScanJob& job) {
  std::ostringstream os;
  os << "v" << kSchemaVersion << ";a=" << job.a.lo << ".." << job.a.hi << ";b=" << job.b.lo
     << ".." << job.b.hi << ";c=" << job.c.lo << ".." << job.c.hi << ";p=" << job.p
     << ";k=" << job.k << ";N=" << job.bound << ";threshold=" << job.threshold
     << ";format=" << to_string(job.format);
  u64 h = 14695981039346656037ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Checkpoint {
  std::string job_hash;
  i64 last_index = -1;  // index of the last record on disk, -1 for none

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::string checkpoint_path(const std::string& output) { return output + ".ckpt"; }

/// Write-temp-then-rename, so a reader sees either the old or the new record.
inline void write_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint " + tmp);
    os << nlohmann::ordered_json{{"job_hash", ck.job_hash}, {"last_index", ck.last_index}}.dump()
       << '\n';
    os.flush();
    if (!os) throw IoError("cannot write checkpoint " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace checkpoint " + path + ": " + ec.message());
}

inline std::optional<Checkpoint> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(is);
    return Checkpoint{j.at("job_hash").get<std::string>(), j.at("last_index").get<i64>()};
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatch("unreadable checkpoint " + path + ": " + e.what());
  }
}

// Optional defaults from a key=value file; '#' starts a comment.
struct ScanConfig {
  std::optional<i64> bound;
  std::optional<i64> threshold;
  std::optional<int> threads;
  std::optional<OutputFormat> format;
};

inline ScanConfig parse_config(std::istream& in, const std::string& name = "config") {
  ScanConfig cfg;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto integer = [&]() {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<i64>(v);
      } catch (const std::logic_error&) {
        throw InvalidArgument(where + ": '" + value + "' is not an integer");
      }
    };
    if (key == "N") {
      cfg.bound = integer();
    } else if (key == "threshold") {
      cfg.threshold = integer();
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(integer());
    } else if (key == "format") {
      cfg.format = parse_format(value);
    } else {
      throw InvalidArgument(where + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ScanConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read config file " + path);
  return parse_config(is, path);
}

struct ScanOptions {
  bool resume = false;
  std::optional<i64> stop_after;  // stop once this many records are on disk
  i64 checkpoint_every = 64;
};

struct ScanSummary {
  i64 total = 0;    // valid triples in the box
  i64 resumed = 0;  // records kept from a previous run
  i64 written = 0;  // records produced by this run
  i64 almost_universal = 0, not_almost_universal = 0, locally_obstructed = 0;
  i64 inconsistent = 0;
  bool complete = false;
};

namespace detail {

// Byte offset just past the first `lines` lines, or nullopt if the file is
// shorter.
inline std::optional<std::uintmax_t> offset_after_lines(const std::string& path, i64 lines) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return lines == 0 ? std::optional<std::uintmax_t>(0) : std::nullopt;
  std::uintmax_t off = 0;
  char ch = 0;
  for (i64 seen = 0; seen < lines;) {
    if (!is.get(ch)) return std::nullopt;
    ++off;
    if (ch == '\n') ++seen;
  }
  return off;
}

struct Rendered {
  std::string line;
  VerdictKind kind = VerdictKind::almost_universal;
  bool consistent = true;
};

inline Rendered render(const ScanJob& job, Triple t) {
  const ScanRecord rec = scan_one(job, t);
  Rendered r;
  r.line = job.format == OutputFormat::csv ? to_csv_row(rec) : to_json_line(rec);
  r.kind = rec.verdict.kind;
  r.consistent = !rec.audit || rec.audit->consistent;
  return r;
}

}  // namespace detail

/// Runs the job. Records are written strictly in triple order whatever the
/// thread count, so serial and parallel runs give identical files.
inline ScanSummary run_scan(const ScanJob& job, const ScanOptions& opts = {}) {
  job.validate();
  const std::vector<Triple> triples = enumerate_triples(job);
  const i64 total = static_cast<i64>(triples.size());
  const std::string hash = job_hash(job);
  const std::string ck_path = checkpoint_path(job.output);
  const bool csv = job.format == OutputFormat::csv;

  ScanSummary sum;
  sum.total = total;
  i64 start = 0;
  if (opts.resume) {
    if (auto ck = read_checkpoint(ck_path)) {
      if (ck->job_hash != hash) {
        throw CheckpointMismatch("checkpoint " + ck_path + " belongs to a different job");
      }
      if (ck->last_index < -1 || ck->last_index >= total) {
        throw CheckpointMismatch("checkpoint index out of range for this job");
      }
      start = ck->last_index + 1;
      const auto off = detail::offset_after_lines(job.output, start + (csv ? 1 : 0));
      if (!off) throw CheckpointMismatch("output file is shorter than its checkpoint");
      std::error_code ec;
      std::filesystem::resize_file(job.output, *off, ec);
      if (ec) throw IoError("cannot truncate " + job.output + ": " + ec.message());
    }
  }
  sum.resumed = start;

  std::ofstream out(job.output, std::ios::binary | (start > 0 ? std::ios::app : std::ios::trunc));
  if (!out) throw IoError("cannot open output " + job.output);
  if (start == 0 && csv) out << csv_header() << '\n';

  i64 limit = total;
  if (opts.stop_after) limit = std::clamp<i64>(*opts.stop_after, start, total);

  i64 since_checkpoint = 0;
  auto emit = [&](i64 idx, const detail::Rendered& r) {
    out << r.line << '\n';
    ++sum.written;
    switch (r.kind) {
      case VerdictKind::almost_universal: ++sum.almost_universal; break;
      case VerdictKind::not_almost_universal: ++sum.not_almost_universal; break;
      case VerdictKind::locally_obstructed: ++sum.locally_obstructed; break;
    }
    if (!r.consistent) ++sum.inconsistent;
    if (++since_checkpoint >= opts.checkpoint_every || idx + 1 == limit) {
      out.flush();
      if (!out) throw IoError("write to " + job.output + " failed");
      write_checkpoint(ck_path, {hash, idx});
      since_checkpoint = 0;
    }
  };

  if (job.threads <= 1) {
    for (i64 i = start; i < limit; ++i) emit(i, detail::render(job, triples[static_cast<std::size_t>(i)]));
  } else {
    // Workers claim indices from a shared counter; the calling thread drains
    // finished slots in order. Claims stay within a window of the drain point
    // so buffered output is bounded.
    const i64 window = 64 * static_cast<i64>(job.threads);
    std::vector<std::optional<detail::Rendered>> slots(static_cast<std::size_t>(limit - start));
    std::mutex mu;
    std::condition_variable ready, room;
    i64 next = start, drained = start;
    bool stop = false;
    std::exception_ptr failure;

    auto worker = [&] {
      for (;;) {
        i64 idx = 0;
        {
          std::unique_lock lock(mu);
          room.wait(lock, [&] { return stop || next >= limit || next < drained + window; });
          if (stop || next >= limit) return;
          idx = next++;
        }
        try {
          auto r = detail::render(job, triples[static_cast<std::size_t>(idx)]);
          std::lock_guard lock(mu);
          slots[static_cast<std::size_t>(idx - start)] = std::move(r);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          stop = true;
        }
        ready.notify_all();
        room.notify_all();
      }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < job.threads; ++i) pool.emplace_back(worker);

    try {
      for (i64 i = start; i < limit; ++i) {
        detail::Rendered r;
        {
          std::unique_lock lock(mu);
          auto& slot = slots[static_cast<std::size_t>(i - start)];
          ready.wait(lock, [&] { return slot.has_value() || stop; });
          if (!slot) break;
          r = std::move(*slot);
          slot.reset();
        }
        emit(i, r);
        {
          std::lock_guard lock(mu);
          drained = i + 1;
        }
        room.notify_all();
      }
    } catch (...) {
      {
        std::lock_guard lock(mu);
        stop = true;
      }
      room.notify_all();
      for (auto& t : pool) t.join();
      throw;
    }
    {
      std::lock_guard lock(mu);
      stop = true;
    }
    room.notify_all();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  out.flush();
  if (!out) throw IoError("write to " + job.output + " failed");
  if (start + sum.written == 0) write_checkpoint(ck_path, {hash, -1});
  sum.complete = start + sum.written == total;
  return sum;
}

}  // namespace almu
