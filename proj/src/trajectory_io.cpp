#include "granular_biped/trajectory_io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

struct Column {
  std::string name;
  std::function<double(const SimRecord&)> get;
  std::function<void(SimRecord&, double)> set;
};

template <class V>
void add_vector(std::vector<Column>& cols, const std::string& prefix, int n, V SimRecord::*member) {
  for (int i = 0; i < n; ++i) {
    cols.push_back({prefix + std::to_string(i + 1), [member, i](const SimRecord& r) { return (r.*member)(i); },
                    [member, i](SimRecord& r, double v) { (r.*member)(i) = v; }});
  }
}

template <class T>
void add_scalar(std::vector<Column>& cols, const std::string& name, T SimRecord::*member) {
  cols.push_back({name, [member](const SimRecord& r) { return static_cast<double>(r.*member); },
                  [member](SimRecord& r, double v) { r.*member = static_cast<T>(v); }});
}

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = [] {
    std::vector<Column> c;
    add_scalar(c, "t", &SimRecord::t);
    add_scalar(c, "stance_leg", &SimRecord::stance_leg);
    add_scalar(c, "stance_index", &SimRecord::stance_index);
    add_scalar(c, "stance_phase", &SimRecord::stance_phase);
    add_vector(c, "q_s", 7, &SimRecord::q_s);
    add_vector(c, "dq_s", 7, &SimRecord::dq_s);
    add_vector(c, "q_f", 5, &SimRecord::q_f);
    add_vector(c, "dq_f", 5, &SimRecord::dq_f);
    add_vector(c, "q_a", 6, &SimRecord::q_a);
    add_vector(c, "dq_a", 6, &SimRecord::dq_a);
    add_vector(c, "tau_a", 6, &SimRecord::tau_a);
    add_scalar(c, "F_x", &SimRecord::F_x);
    add_scalar(c, "F_y", &SimRecord::F_y);
    add_scalar(c, "F_z", &SimRecord::F_z);
    add_scalar(c, "x_s", &SimRecord::x_s);
    add_scalar(c, "y_s", &SimRecord::y_s);
    add_scalar(c, "z_s", &SimRecord::z_s);
    add_scalar(c, "theta_r", &SimRecord::theta_r);
    add_scalar(c, "delta_theta_r", &SimRecord::delta_theta_r);
    add_scalar(c, "gamma", &SimRecord::gamma);
    add_scalar(c, "gamma_defined", &SimRecord::gamma_defined);
    add_scalar(c, "R_eff", &SimRecord::R_eff);
    add_scalar(c, "stuck", &SimRecord::stuck);
    add_scalar(c, "power", &SimRecord::power);
    add_scalar(c, "power_sagittal", &SimRecord::power_sagittal);
    add_scalar(c, "power_frontal", &SimRecord::power_frontal);
    add_scalar(c, "com_x", &SimRecord::com_x);
    add_scalar(c, "com_z", &SimRecord::com_z);
    add_scalar(c, "com_vx", &SimRecord::com_vx);
    add_scalar(c, "com_vz", &SimRecord::com_vz);
    return c;
  }();
  return cols;
}

const std::unordered_map<std::string, std::size_t>& column_index() {
  static const std::unordered_map<std::string, std::size_t> idx = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto& c = columns();
    for (std::size_t i = 0; i < c.size(); ++i) m.emplace(c[i].name, i);
    return m;
  }();
  return idx;
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.push_back(c.name);
    return n;
  }();
  return names;
}

bool is_record_column(std::string_view name) { return column_index().count(std::string(name)) > 0; }

double record_field(const SimRecord& r, std::string_view name) {
  const auto it = column_index().find(std::string(name));
  if (it == column_index().end()) throw DomainError(fmt::format("unknown trajectory field '{}'", name));
  return columns()[it->second].get(r);
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  const auto& cols = columns();
  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) line += ',';
    line += cols[i].name;
  }
  os << line << '\n';
  for (const auto& r : traj) {
    line.clear();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) line += ',';
      line += number(cols[i].get(r));
    }
    os << line << '\n';
  }
}

Trajectory read_csv(std::istream& is) {
  std::string line;
  int line_no = 0;
  if (!std::getline(is, line)) throw FormatError("empty trajectory file: missing header", 1);
  ++line_no;
  boost::algorithm::trim(line);
  std::vector<std::string> header;
  boost::algorithm::split(header, line, boost::is_any_of(","));
  std::vector<std::size_t> target;
  bool has_t = false;
  for (auto& h : header) {
    boost::algorithm::trim(h);
    const auto it = column_index().find(h);
    if (it == column_index().end()) {
      throw FormatError(fmt::format("line {}: unknown column '{}' (missing or malformed header?)", line_no, h),
                        line_no);
    }
    has_t = has_t || h == "t";
    target.push_back(it->second);
  }
  if (!has_t) throw FormatError("line 1: header has no 't' column", 1);

  Trajectory traj;
  std::vector<std::string> cells;
  while (std::getline(is, line)) {
    ++line_no;
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    boost::algorithm::split(cells, line, boost::is_any_of(","));
    if (cells.size() != target.size()) {
      throw FormatError(fmt::format("line {}: expected {} fields, found {}", line_no, target.size(), cells.size()),
                        line_no);
    }
    SimRecord r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != boost::algorithm::trim_copy(cells[i]).size()) {
        throw FormatError(fmt::format("line {}: malformed number '{}'", line_no, cells[i]), line_no);
      }
      columns()[target[i]].set(r, v);
    }
    traj.push_back(r);
  }
  return traj;
}

std::vector<PenetrationRecord> read_penetration_csv(std::istream& is, PenetrationDirection direction) {
  const std::string x_name = direction == PenetrationDirection::Vertical ? "depth_m" : "disp_m";
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty penetration file: missing header", 1);
  std::vector<std::string> cells;
  boost::algorithm::trim(line);
  boost::algorithm::split(cells, line, boost::is_any_of(","));
  for (auto& c : cells) boost::algorithm::trim(c);
  if (cells.size() != 2 || cells[0] != x_name || cells[1] != "force_N") {
    throw FormatError(fmt::format("line 1: expected header '{},force_N'", x_name), 1);
  }
  std::vector<PenetrationRecord> out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    boost::algorithm::split(cells, line, boost::is_any_of(","));
    if (cells.size() != 2) {
      throw FormatError(fmt::format("line {}: expected 2 fields, found {}", line_no, cells.size()), line_no);
    }
    double v[2];
    for (int i = 0; i < 2; ++i) {
      const std::string c = boost::algorithm::trim_copy(cells[i]);
      std::size_t used = 0;
      try {
        v[i] = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size() || !std::isfinite(v[i])) {
        throw FormatError(fmt::format("line {}: malformed number '{}'", line_no, cells[i]), line_no);
      }
    }
    out.push_back({v[0], v[1], direction});
  }
  if (out.empty()) throw FormatError("penetration file has no data rows", line_no);
  return out;
}

void write_json(std::ostream& os, const Trajectory& traj, const Metadata& metadata) {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;
  j["columns"] = record_columns();
  auto& rows = j["records"] = nlohmann::ordered_json::array();
  const auto& cols = columns();
  for (const auto& r : traj) {
    auto row = nlohmann::ordered_json::array();
    for (const auto& c : cols) row.push_back(c.get(r));
    rows.push_back(std::move(row));
  }
  os << j.dump(1) << '\n';
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

void write_manifest(std::ostream& os, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["tool_version"] = m.tool_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["outputs"] = m.outputs;
  j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.summary) j["summary"][k] = v;
  os << j.dump(2) << '\n';
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace granular_biped
