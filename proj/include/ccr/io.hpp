#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ccr/data.hpp"

namespace ccr {

// ---------------------------------------------------------------------------
// CSV (RFC 4180)
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<long> lines;  // source line of each row

  int column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
};

/// Parses quoted fields, doubled quotes, embedded separators and newlines, and
/// LF or CRLF record endings. A UTF-8 byte order mark is skipped.
inline CsvTable parse_csv(std::string_view text, const std::string& source = "csv") {
  CsvTable t;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  long line = 1, rec_line = 1;
  std::size_t i = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = rec.size() == 1 && rec[0].empty();
    if (!blank) {
      if (t.header.empty()) {
        t.header = std::move(rec);
      } else {
        if (rec.size() != t.header.size())
          throw ValidationError(source + " line " + std::to_string(rec_line) + ": expected " +
                                std::to_string(t.header.size()) + " fields, found " + std::to_string(rec.size()));
        t.rows.push_back(std::move(rec));
        t.lines.push_back(rec_line);
      }
    }
    rec.clear();
    any = false;
    rec_line = line;
  };
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || quoted)
          throw ValidationError(source + " line " + std::to_string(line) + ": stray quote inside a field");
        in_quotes = quoted = any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (quoted) throw ValidationError(source + " line " + std::to_string(line) + ": text after closing quote");
        field += c;
        any = true;
    }
  }
  if (in_quotes) throw ValidationError(source + ": unterminated quoted field");
  if (any || !field.empty()) end_record();
  if (t.header.empty()) throw ValidationError(source + ": missing header row");
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Shortest round-trip decimal form; "inf" and "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  template <class... T>
  void row(const T&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    os_ << "\r\n";
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << csv_field(fields[i]);
    os_ << "\r\n";
  }

 private:
  template <class T>
  void put(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>)
      os_ << format_number(v);
    else if constexpr (std::is_integral_v<T>)
      os_ << v;
    else
      os_ << csv_field(std::string_view(v));
  }
  std::ostream& os_;
};

inline double parse_number(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError(where + ": not a number: '" + std::string(s) + "'");
  return v;
}

inline long parse_integer(std::string_view s, const std::string& where) {
  const double v = parse_number(s, where);
  if (!(v == std::floor(v)) || !std::isfinite(v)) throw ValidationError(where + ": not an integer: '" + std::string(s) + "'");
  return static_cast<long>(v);
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& policy_core_columns() {
  static const std::vector<std::string> c{"policy_id", "year", "n_claims", "deductible", "limit"};
  return c;
}
inline const std::vector<std::string>& claim_core_columns() {
  static const std::vector<std::string> c{"policy_id", "year", "amount", "at_limit"};
  return c;
}

/// Joins policy and claim tables. Every column outside the core set is a
/// covariate. Claims match policies on (policy_id, year).
inline Dataset build_dataset(const CsvTable& pol, const CsvTable& clm, Scheme scheme,
                             const std::string& pname = "policies", const std::string& cname = "claims") {
  Dataset d;
  d.scheme = scheme;
  auto need = [](const CsvTable& t, const std::vector<std::string>& cols, const std::string& name) {
    std::vector<int> idx;
    for (const auto& c : cols) {
      const int j = t.column(c);
      if (j < 0) throw ValidationError(name + ": missing column '" + c + "'");
      idx.push_back(j);
    }
    return idx;
  };
  auto covariates = [](const CsvTable& t, const std::vector<std::string>& core, std::vector<std::string>& names) {
    std::vector<int> idx;
    std::set<std::string> seen;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (!seen.insert(t.header[j]).second) throw ValidationError("duplicate column '" + t.header[j] + "'");
      if (std::find(core.begin(), core.end(), t.header[j]) != core.end()) continue;
      names.push_back(t.header[j]);
      idx.push_back(static_cast<int>(j));
    }
    return idx;
  };
  const auto pc = need(pol, policy_core_columns(), pname);
  const auto cc = need(clm, claim_core_columns(), cname);
  const auto pcov = covariates(pol, policy_core_columns(), d.policy_columns);
  const auto ccov = covariates(clm, claim_core_columns(), d.claim_columns);

  std::map<std::pair<std::string, long>, std::size_t> index;
  for (std::size_t i = 0; i < pol.rows.size(); ++i) {
    const auto& row = pol.rows[i];
    const std::string where = pname + " line " + std::to_string(pol.lines[i]);
    PolicyRecord r;
    r.id = row[static_cast<std::size_t>(pc[0])];
    if (r.id.empty()) throw ValidationError(where + ": empty policy_id");
    r.year = static_cast<int>(parse_integer(row[static_cast<std::size_t>(pc[1])], where));
    r.n = parse_integer(row[static_cast<std::size_t>(pc[2])], where);
    const auto& ds = row[static_cast<std::size_t>(pc[3])];
    const auto& ls = row[static_cast<std::size_t>(pc[4])];
    r.deductible = ds.empty() ? 0.0 : parse_number(ds, where);
    r.limit = ls.empty() ? kInf : parse_number(ls, where);
    for (int j : pcov) r.x.push_back(parse_number(row[static_cast<std::size_t>(j)], where));
    if (!index.emplace(std::make_pair(r.id, static_cast<long>(r.year)), d.records.size()).second)
      throw ValidationError(where + ": duplicate policy " + r.id + " year " + std::to_string(r.year));
    d.records.push_back(std::move(r));
  }

  std::set<std::string> orphans;
  for (std::size_t i = 0; i < clm.rows.size(); ++i) {
    const auto& row = clm.rows[i];
    const std::string where = cname + " line " + std::to_string(clm.lines[i]);
    const std::string id = row[static_cast<std::size_t>(cc[0])];
    const long year = parse_integer(row[static_cast<std::size_t>(cc[1])], where);
    auto it = index.find({id, year});
    if (it == index.end()) {
      orphans.insert(id + " (year " + std::to_string(year) + ")");
      continue;
    }
    auto& r = d.records[it->second];
    ClaimRecord c;
    c.amount = parse_number(row[static_cast<std::size_t>(cc[2])], where);
    if (c.amount < 0.0) throw ValidationError(where + ": policy " + id + ": negative claim amount");
    const auto& al = row[static_cast<std::size_t>(cc[3])];
    if (al == "1")
      c.status = ClaimStatus::AtLimit;
    else if (al == "0" || al.empty())
      c.status = ClaimStatus::Interior;
    else
      throw ValidationError(where + ": at_limit must be 0 or 1");
    for (int j : ccov) c.x.push_back(parse_number(row[static_cast<std::size_t>(j)], where));
    r.claims.push_back(std::move(c));
  }
  if (!orphans.empty()) {
    std::string msg = "claims reference policies not in the policy file:";
    for (const auto& o : orphans) msg += " " + o;
    throw ValidationError(msg);
  }
  tag_below_deductible(d);
  validate_dataset(d);
  return d;
}

inline Dataset load_dataset(const std::string& policies, const std::string& claims, Scheme scheme) {
  return build_dataset(read_csv(policies), read_csv(claims), scheme, policies, claims);
}

inline void write_dataset(const Dataset& d, std::ostream& pol, std::ostream& clm) {
  CsvWriter pw(pol), cw(clm);
  std::vector<std::string> h = policy_core_columns();
  h.insert(h.end(), d.policy_columns.begin(), d.policy_columns.end());
  pw.row(h);
  h = claim_core_columns();
  h.insert(h.end(), d.claim_columns.begin(), d.claim_columns.end());
  cw.row(h);
  for (const auto& r : d.records) {
    std::vector<std::string> f{r.id, std::to_string(r.year), std::to_string(r.n), format_number(r.deductible),
                               r.limit == kInf ? std::string() : format_number(r.limit)};
    for (double x : r.x) f.push_back(format_number(x));
    pw.row(f);
    for (const auto& c : r.claims) {
      std::vector<std::string> g{r.id, std::to_string(r.year), format_number(c.amount),
                                 c.status == ClaimStatus::AtLimit ? "1" : "0"};
      for (double x : c.x) g.push_back(format_number(x));
      cw.row(g);
    }
  }
}

}  // namespace ccr
