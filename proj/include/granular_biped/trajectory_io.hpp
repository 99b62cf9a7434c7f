#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "granular_biped/sim.hpp"
#include "granular_biped/terrain.hpp"

namespace granular_biped {

/// CSV column names in output order. Vector quantities are 1-based:
/// q_s1..q_s7, dq_s1..dq_s7, q_f1..q_f5, dq_f1..dq_f5, q_a1..q_a6, dq_a1..dq_a6,
/// tau_a1..tau_a6.
const std::vector<std::string>& record_columns();
bool is_record_column(std::string_view name);
/// Throws DomainError for an unknown name.
double record_field(const SimRecord& r, std::string_view name);

/// Header row then one row per record; doubles printed with 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj);
/// Accepts any column order; unknown columns raise FormatError with the line number.
Trajectory read_csv(std::istream& is);

/// Two-column penetration test data with a header row: `depth_m,force_N` for
/// vertical tests, `disp_m,force_N` for horizontal ones. Throws
/// FormatError with the line number.
std::vector<PenetrationRecord> read_penetration_csv(std::istream& is, PenetrationDirection direction);

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// {"metadata": {...}, "columns": [...], "records": [[...], ...]}
void write_json(std::ostream& os, const Trajectory& traj, const Metadata& metadata);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::string started;   ///< ISO 8601 UTC
  std::string finished;
  std::vector<std::string> outputs;
  Metadata summary;
};

void write_manifest(std::ostream& os, const RunManifest& manifest);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace granular_biped
