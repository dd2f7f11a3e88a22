// Serialization of study results: CSV tables, the JSON summary, the config
// echo and the shared provenance header. Column orders are listed in FORMATS.md.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "klgeo/config.hpp"
#include "klgeo/experiments.hpp"

namespace klgeo {

inline constexpr const char* kLibraryVersion = "0.1.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Provenance {
  std::string command;
  std::vector<std::uint64_t> seeds;

  /// "klgeo 0.1.0; rng=mt19937_64+box-muller; seeds=1,2; command=sweep"
  std::string line() const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

/// Header comment "# <provenance>", then the column header and rows, LF endings.
std::string to_csv(const CsvTable& table, const Provenance& prov);
/// Inverse of to_csv; '#' lines are skipped. Throws StructuralError on ragged rows.
CsvTable parse_csv(const std::string& text);

CsvTable sweep_table(const std::vector<SeedSummary>& seeds);
CsvTable refs_table(const std::vector<SeedSummary>& seeds);
CsvTable geometry_table(const std::vector<GeometryRow>& rows);
CsvTable betamu_csv(const std::vector<BetaMuRow>& rows);
CsvTable ordering_table(const OrderingIllustration& ill);

/// sweep.csv rows back to records. policy_probs and top-sequence indices are
/// not stored in the file and stay empty / zero.
std::vector<SweepRecord> read_sweep_records(const CsvTable& table);

/// summary.json for sweeps: provenance, per-lambda statistics, references,
/// per-seed data and, where the grid allows, the TVD-dip diagnostic.
std::string sweep_summary_json(const MultiSeedSummary& summary, const Provenance& prov);

/// Provenance header followed by serialize_config.
std::string config_echo(const RunConfig& cfg, const Provenance& prov);

/// Creates `dir` (and parents) when missing; throws IoError otherwise.
void ensure_directory(const std::string& dir);
/// Throws IoError when the file cannot be written completely.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace klgeo
