#include "klgeo/output.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "klgeo/format.hpp"
#include "klgeo/rng.hpp"

namespace klgeo {

namespace {

using nlohmann::ordered_json;

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw StructuralError("csv line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(const ExtendedReal& v) { return v.to_string(); }

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

ordered_json jnum(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

ordered_json jnum(const ExtendedReal& v) { return jnum(v.as_double()); }

ordered_json jstats(const MetricStats& s) {
  return ordered_json{{"mean", jnum(s.mean)},
                      {"std", jnum(s.stddev)},
                      {"min", jnum(s.min)},
                      {"max", jnum(s.max)}};
}

std::string encode_top(const std::vector<SequenceProb>& top) {
  std::string s;
  for (std::size_t i = 0; i < top.size(); ++i) {
    s += (i ? ";" : "") + top[i].sequence + "=" + format_double(top[i].probability);
  }
  return s;
}

}  // namespace

std::string Provenance::line() const {
  return std::string("klgeo ") + kLibraryVersion + "; rng=" + std::string(SeededRng::kAlgorithm) +
         "; seeds=" + join_seeds(seeds) + "; command=" + command;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw StructuralError("csv: no column '" + name + "'");
}

std::string to_csv(const CsvTable& table, const Provenance& prov) {
  std::string out = "# " + prov.line() + "\n";
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + quote_if_needed(row[i]);
    out += "\n";
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw StructuralError("csv: ragged row");
    emit(row);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_csv_line(line, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw StructuralError("csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields");
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

CsvTable sweep_table(const std::vector<SeedSummary>& seeds) {
  CsvTable t;
  t.header = {"seed",    "order",         "lambda",       "beta",         "start",
              "validity", "tvd_to_pstar", "fkl_from_pstar", "rkl_to_tilted", "entropy",
              "j_beta",  "log_partition", "aborted",      "top_sequences"};
  for (const auto& s : seeds) {
    for (const auto& r : s.records) {
      t.rows.push_back({std::to_string(s.seed), to_string(s.order), fmt(r.lambda), fmt(r.beta),
                        to_string(r.start), fmt(r.validity), fmt(r.tvd_to_pstar),
                        fmt(r.fkl_from_pstar), fmt(r.rkl_to_tilted), fmt(r.entropy),
                        fmt(r.j_beta_value), fmt(r.log_partition), r.aborted ? "1" : "0",
                        encode_top(r.top_sequences)});
    }
  }
  return t;
}

std::vector<SweepRecord> read_sweep_records(const CsvTable& t) {
  const auto c = [&](const char* n) { return t.column(n); };
  const std::size_t lam = c("lambda"), beta = c("beta"), start = c("start"), val = c("validity"),
                    tvd = c("tvd_to_pstar"), fkl = c("fkl_from_pstar"), rkl = c("rkl_to_tilted"),
                    ent = c("entropy"), jb = c("j_beta"), lz = c("log_partition"),
                    ab = c("aborted"), top = c("top_sequences");
  auto ext = [](const std::string& s) {
    const double v = parse_double(s);
    return std::isinf(v) ? ExtendedReal::infinity() : ExtendedReal::finite(v);
  };
  std::vector<SweepRecord> out;
  for (const auto& row : t.rows) {
    SweepRecord r;
    r.lambda = parse_double(row[lam]);
    r.beta = parse_double(row[beta]);
    r.start = row[start] == "warm" ? StartKind::warm : StartKind::cold;
    r.validity = parse_double(row[val]);
    r.tvd_to_pstar = parse_double(row[tvd]);
    r.fkl_from_pstar = ext(row[fkl]);
    r.rkl_to_tilted = ext(row[rkl]);
    r.entropy = parse_double(row[ent]);
    r.j_beta_value = parse_double(row[jb]);
    r.log_partition = parse_double(row[lz]);
    r.aborted = row[ab] == "1";
    std::istringstream items(row[top]);
    std::string item;
    while (std::getline(items, item, ';')) {
      const auto eq = item.rfind('=');
      if (eq == std::string::npos) throw StructuralError("sweep.csv: bad top_sequences entry");
      r.top_sequences.push_back({item.substr(0, eq), 0, parse_double(item.substr(eq + 1))});
    }
    out.push_back(std::move(r));
  }
  return out;
}

CsvTable refs_table(const std::vector<SeedSummary>& seeds) {
  CsvTable t;
  t.header = {"seed",           "order",           "a1_base",          "fkl_ref_validity",
              "fkl_ref_kl",     "fkl_ref_kl_closed", "fkl_ref_tvd",    "tvd_ref_tvd",
              "tvd_ref_validity", "tvd_ref_fkl",    "tvd_best_restart"};
  for (const auto& s : seeds) {
    if (!s.has_references) continue;
    const auto& r = s.refs;
    t.rows.push_back({std::to_string(s.seed), to_string(s.order), fmt(s.a1_base),
                      fmt(r.fkl_ref_validity), fmt(r.fkl_ref_kl), fmt(r.fkl_ref_kl_closed),
                      fmt(r.fkl_ref_tvd), fmt(r.tvd_ref_tvd), fmt(r.tvd_ref_validity),
                      fmt(r.tvd_ref_fkl), std::to_string(r.tvd_best_restart)});
  }
  return t;
}

CsvTable geometry_table(const std::vector<GeometryRow>& rows) {
  CsvTable t;
  t.header = {"a1",        "lambda",    "mu",          "kappa",      "tvd_pstar",
              "fkl_pstar", "rkl_pstar", "log_partition", "tvd_numeric", "fkl_numeric"};
  for (const auto& r : rows) {
    t.rows.push_back({fmt(r.a1), fmt(r.lambda), fmt(r.mu), fmt(r.kappa), fmt(r.tvd_pstar),
                      fmt(r.fkl_pstar), fmt(r.rkl_pstar), fmt(r.log_partition),
                      fmt(r.tvd_numeric), fmt(r.fkl_numeric)});
  }
  return t;
}

CsvTable betamu_csv(const std::vector<BetaMuRow>& rows) {
  CsvTable t;
  t.header = {"a1", "mu_target", "lambda_required", "beta_required", "kappa_cost"};
  for (const auto& r : rows) {
    t.rows.push_back({fmt(r.a1), fmt(r.mu_target), fmt(r.lambda_required), fmt(r.beta_required),
                      fmt(r.kappa_cost)});
  }
  return t;
}

CsvTable ordering_table(const OrderingIllustration& ill) {
  CsvTable t;
  t.header = {"candidate",   "validity",        "tvd_to_pstar",           "kl_to_base",
              "lambda",      "kl_to_tilted",    "crossing_lambda_pi3_pi4", "crossing_lambda_numeric"};
  for (std::size_t i = 0; i < ill.candidates.size(); ++i) {
    const auto& c = ill.candidates[i];
    for (std::size_t j = 0; j < ill.lambdas.size(); ++j) {
      t.rows.push_back({c.name, fmt(c.validity), fmt(c.tvd_to_pstar), fmt(c.kl_to_base),
                        fmt(ill.lambdas[j]), fmt(ill.curves[i][j]), fmt(ill.crossing_lambda),
                        fmt(ill.crossing_lambda_numeric)});
    }
  }
  return t;
}

std::string sweep_summary_json(const MultiSeedSummary& summary, const Provenance& prov) {
  ordered_json j;
  j["provenance"] = {{"library", "klgeo"},
                     {"version", kLibraryVersion},
                     {"rng", std::string(SeededRng::kAlgorithm)},
                     {"seeds", prov.seeds},
                     {"command", prov.command}};
  j["order"] = to_string(summary.order);
  j["num_seeds"] = summary.seeds.size();
  j["a1_base"] = jstats(summary.a1_base);
  if (!summary.seeds.empty() && summary.seeds.front().has_references) {
    j["references"] = {{"fkl_ref_validity", jstats(summary.fkl_ref_validity)},
                       {"fkl_ref_kl", jstats(summary.fkl_ref_kl)},
                       {"tvd_ref_tvd", jstats(summary.tvd_ref_tvd)}};
  } else {
    j["references"] = nullptr;
  }
  auto& per = j["per_lambda"] = ordered_json::array();
  for (const auto& a : summary.per_lambda) {
    per.push_back({{"lambda", jnum(a.lambda)},
                   {"start", to_string(a.start)},
                   {"validity", jstats(a.validity)},
                   {"tvd_to_pstar", jstats(a.tvd_to_pstar)},
                   {"fkl_from_pstar", jstats(a.fkl_from_pstar)},
                   {"entropy", jstats(a.entropy)},
                   {"j_beta", jstats(a.j_beta_value)}});
  }
  auto& seeds = j["seeds"] = ordered_json::array();
  for (const auto& s : summary.seeds) {
    ordered_json e{{"seed", s.seed},
                   {"a1_base", jnum(s.a1_base)},
                   {"pstar_entropy", jnum(s.pstar_entropy)},
                   {"base_entropy", jnum(s.base_entropy)}};
    if (s.has_references) {
      e["references"] = {{"fkl_ref_validity", jnum(s.refs.fkl_ref_validity)},
                         {"fkl_ref_kl", jnum(s.refs.fkl_ref_kl)},
                         {"fkl_ref_kl_closed", jnum(s.refs.fkl_ref_kl_closed)},
                         {"tvd_ref_tvd", jnum(s.refs.tvd_ref_tvd)},
                         {"tvd_ref_fkl", jnum(s.refs.tvd_ref_fkl)}};
    }
    try {
      const auto dip = tvd_dip_diagnostic(s);
      e["tvd_dip"] = {{"dip_present", dip.dip_present},
                      {"argmin_lambda", jnum(dip.argmin_lambda)},
                      {"fkl_monotone", dip.fkl_monotone},
                      {"worst_fkl_drop", jnum(dip.worst_fkl_drop)}};
    } catch (const DomainError&) {
      e["tvd_dip"] = nullptr;
    }
    seeds.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string config_echo(const RunConfig& cfg, const Provenance& prov) {
  return "# " + prov.line() + "\n" + serialize_config(cfg);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir + "'" +
                  (ec ? ": " + ec.message() : std::string{}));
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace klgeo
