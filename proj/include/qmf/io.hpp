#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "qmf/loop.hpp"

namespace qmf {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kTrajectoryHeader = "shot,t,x,y,z,j_true,meas,ctl_z,ctl_x,j_est";
inline constexpr const char* kStroboscopicHeader = "shot,step,sample_index,t,x,y,z";

// 17 significant digits, so the text reads back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& field);

// Thrown for I/O problems; what() names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectories_csv(const std::filesystem::path& path);
void write_trajectories_json(const std::filesystem::path& path, const std::vector<TrajectoryRecord>& records);
void write_stroboscopic_csv(const std::filesystem::path& path, const std::vector<TrajectoryRecord>& records);

// Seed, model parameters and format version for a trajectory file.
nlohmann::json sidecar_json(const std::vector<TrajectoryRecord>& records, const std::string& config_hash);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string file;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::string version = QMF_VERSION;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  std::vector<ManifestEntry> outputs;
  nlohmann::json to_json() const;
};

nlohmann::json error_json(const std::string& kind, const std::string& message, const std::string& field = "");

}  // namespace qmf
