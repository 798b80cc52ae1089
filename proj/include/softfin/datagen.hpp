#pragma once

// data collection against the plant: random command streams logged at 100 hz,
// persisted as one csv per log plus a json `manifest` that records seeds,
// plant parameters and the train/test split.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "softfin/config.hpp"
#include "softfin/plant.hpp"
#include "softfin/rng.hpp"

namespace softfin {

// one 100 hz log: struct-of-arrays, all columns the same length
struct LogData {
  std::vector<double> t;          // s, exactly k * dt
  std::vector<double> cmd_angle;  // rad, command active while this row was taken
  std::vector<double> cmd_omega;  // rad/s
  std::vector<double> theta;      // rad, base angle after the tick
  std::vector<double> fx, fy;     // N

  std::size_t size() const { return t.size(); }
};

struct ManifestEntry {
  std::string file;    // e.g. "log_000.csv", relative to the dataset dir
  std::string split;   // "train" | "test"
  std::uint64_t seed;  // per-log rng seed
  std::size_t rows;
};

struct DatasetManifest {
  std::uint64_t seed = 0;          // master seed the dataset was generated from
  std::string plant_params;        // plant parameters as "key=value ..." text
  std::vector<ManifestEntry> logs;

  std::vector<ManifestEntry> split(const std::string& tag) const;
};

// draws target angle ~ U(-pi/2, pi/2) and speed ~ U(1, pi)
MotorCommand sample_command(Rng& rng);

// runs the plant for n_samples ticks; a fresh command is drawn whenever the
// base comes within `reissue_tol` rad of the target or the command has been
// held for `reissue_timeout` seconds
LogData collect_log(const PlantParams& params, std::size_t n_samples, double reissue_tol,
                    double reissue_timeout, Rng& rng);

// generates cfg.train_logs + cfg.test_logs logs from per-log seeds derived off
// `seed`, writes them plus the manifest into `dir`, and returns the manifest
DatasetManifest collect_dataset(const Config& cfg, std::uint64_t seed,
                                const std::filesystem::path& dir);

void write_log(const std::filesystem::path& path, const LogData& log);
LogData read_log(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& dir);

// loads every log with the given split tag, in manifest order
std::vector<LogData> load_split(const std::filesystem::path& dir, const std::string& tag);

std::string plant_params_text(const PlantParams& p);

}  // namespace softfin
