#include "qmf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

namespace qmf {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& text, const std::string& field) {
  std::string t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  std::size_t start = 0;
  while (start < t.size() && std::isspace(static_cast<unsigned char>(t[start]))) ++start;
  t = t.substr(start);
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (t == "inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double scale = 1.0;
  // "0.5pi" and "pi" are accepted for angles.
  if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
    scale = 3.141592653589793;
    t.resize(t.size() - 2);
    while (!t.empty() && (t.back() == '*' || std::isspace(static_cast<unsigned char>(t.back())))) t.pop_back();
    if (t.empty() || t == "+") return scale;
    if (t == "-") return -scale;
  }
  double v = 0.0;
  const char* b = t.data();
  if (!t.empty() && *b == '+') ++b;
  const auto r = std::from_chars(b, t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
    throw std::invalid_argument(field + ": '" + text + "' is not a number");
  return v * scale;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_trajectories_csv(const fs::path& path, const std::vector<TrajectoryRecord>& records) {
  std::ofstream out = open_out(path);
  out << kTrajectoryHeader << '\n';
  for (const auto& r : records) {
    const std::string shot = std::to_string(r.meta.shot);
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << shot;
      for (double v : {r.t[i], r.x[i], r.y[i], r.z[i], r.j_true[i], r.meas[i], r.ctl_z[i], r.ctl_x[i], r.j_est[i]})
        out << ',' << format_double(v);
      out << '\n';
    }
  }
  finish(out, path);
}

std::vector<TrajectoryRecord> read_trajectories_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader)
    throw IoError(path.string() + ": unexpected trajectory header");
  std::vector<TrajectoryRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 10) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 10 columns");
    const auto shot = static_cast<std::uint64_t>(std::stoull(cols[0]));
    if (out.empty() || out.back().meta.shot != shot) {
      out.emplace_back();
      out.back().meta.shot = shot;
    }
    auto& r = out.back();
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::vector<double>* dst[] = {&r.t, &r.x, &r.y, &r.z, &r.j_true, &r.meas, &r.ctl_z, &r.ctl_x, &r.j_est};
    for (std::size_t c = 0; c < 9; ++c) dst[c]->push_back(parse_double(cols[c + 1], where));
  }
  return out;
}

void write_trajectories_json(const fs::path& path, const std::vector<TrajectoryRecord>& records) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["trajectories"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json t;
    t["shot"] = r.meta.shot;
    t["t"] = r.t;
    t["x"] = r.x;
    t["y"] = r.y;
    t["z"] = r.z;
    t["j_true"] = r.j_true;
    t["meas"] = r.meas;
    t["ctl_z"] = r.ctl_z;
    t["ctl_x"] = r.ctl_x;
    t["j_est"] = r.j_est;
    j["trajectories"].push_back(std::move(t));
  }
  write_json(path, j);
}

void write_stroboscopic_csv(const fs::path& path, const std::vector<TrajectoryRecord>& records) {
  std::ofstream out = open_out(path);
  out << kStroboscopicHeader << '\n';
  for (const auto& r : records) {
    for (std::size_t n = 0; n < r.strobe_states.size(); ++n) {
      // Step 0 is the initial state; step n >= 1 pairs with gap sample n-1.
      const long long idx = n == 0 ? -1 : static_cast<long long>(r.strobe_index.at(n - 1));
      const double t = n == 0 ? 0.0 : r.t.at(static_cast<std::size_t>(idx));
      const auto& s = r.strobe_states[n];
      out << r.meta.shot << ',' << n << ',' << idx << ',' << format_double(t) << ',' << format_double(s.x) << ','
          << format_double(s.y) << ',' << format_double(s.z) << '\n';
    }
  }
  finish(out, path);
}

nlohmann::json sidecar_json(const std::vector<TrajectoryRecord>& records, const std::string& config_hash) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["columns"] = kTrajectoryHeader;
  j["config_hash"] = config_hash;
  j["shots"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json s;
    s["shot"] = r.meta.shot;
    s["master_seed"] = r.meta.master_seed;
    s["model"] = r.meta.model;
    for (const auto& [k, v] : r.meta.params) s["params"][k] = v;
    s["samples"] = r.size();
    j["shots"].push_back(std::move(s));
  }
  return j;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out = open_out(path);
  for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? "," : "") << table.header[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  finish(out, path);
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  t.header = split(line, ',');
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != t.header.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": column count mismatch");
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(parse_double(c, path.string() + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["seed"] = seed;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}});
  return j;
}

nlohmann::json error_json(const std::string& kind, const std::string& message, const std::string& field) {
  nlohmann::json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  if (!field.empty()) j["error"]["field"] = field;
  return j;
}

}  // namespace qmf
