#include "softfin/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "softfin/csvio.hpp"

namespace softfin {

namespace {

const std::vector<std::string> kLogHeader = {"t", "cmd_angle", "cmd_omega", "theta", "fx", "fy"};

std::string log_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "log_%03zu.csv", index);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ManifestEntry> DatasetManifest::split(const std::string& tag) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : logs)
    if (e.split == tag) out.push_back(e);
  return out;
}

MotorCommand sample_command(Rng& rng) {
  MotorCommand cmd;
  cmd.angle = rng.uniform(kCmdAngleLo, kCmdAngleHi);
  // uniform() can return exactly 0; the command range is open at -pi/2
  if (cmd.angle <= kCmdAngleLo) cmd.angle = std::nextafter(kCmdAngleLo, 0.0);
  cmd.omega = rng.uniform(kCmdOmegaLo, kCmdOmegaHi);
  return cmd;
}

LogData collect_log(const PlantParams& params, std::size_t n_samples, double reissue_tol,
                    double reissue_timeout, Rng& rng) {
  LogData log;
  log.t.reserve(n_samples);
  log.cmd_angle.reserve(n_samples);
  log.cmd_omega.reserve(n_samples);
  log.theta.reserve(n_samples);
  log.fx.reserve(n_samples);
  log.fy.reserve(n_samples);

  PlantState state;
  MotorCommand cmd = sample_command(rng);
  double held = 0.0;  // s since the active command was issued
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (std::abs(state.theta_m - cmd.angle) < reissue_tol || held >= reissue_timeout) {
      cmd = sample_command(rng);
      held = 0.0;
    }
    const ForceSample f = plant_step(state, cmd, params, rng);
    held += params.dt;
    log.t.push_back(static_cast<double>(i) * params.dt);
    log.cmd_angle.push_back(cmd.angle);
    log.cmd_omega.push_back(cmd.omega);
    log.theta.push_back(state.theta_m);
    log.fx.push_back(f.fx);
    log.fy.push_back(f.fy);
  }
  return log;
}

std::string plant_params_text(const PlantParams& p) {
  return "dt=" + fmt(p.dt) + " a_max=" + fmt(p.a_max) + " tau=" + fmt(p.tau) +
         " c_n=" + fmt(p.c_n) + " c_a=" + fmt(p.c_a) + " sigma=" + fmt(p.sigma);
}

void write_log(const std::filesystem::path& path, const LogData& log) {
  std::vector<std::vector<double>> rows;
  rows.reserve(log.size());
  for (std::size_t i = 0; i < log.size(); ++i)
    rows.push_back({log.t[i], log.cmd_angle[i], log.cmd_omega[i], log.theta[i], log.fx[i],
                    log.fy[i]});
  csv::write(path, kLogHeader, rows);
}

LogData read_log(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  csv::require_header(table, kLogHeader, path.string());
  LogData log;
  log.t.reserve(table.rows.size());
  log.cmd_angle.reserve(table.rows.size());
  log.theta.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    log.t.push_back(row[0]);
    log.cmd_angle.push_back(row[1]);
    log.cmd_omega.push_back(row[2]);
    log.theta.push_back(row[3]);
    log.fx.push_back(row[4]);
    log.fy.push_back(row[5]);
  }
  return log;
}

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["seed"] = m.seed;
  j["plant_params"] = m.plant_params;
  j["logs"] = nlohmann::ordered_json::array();
  for (const auto& e : m.logs) {
    nlohmann::ordered_json je;
    je["file"] = e.file;
    je["split"] = e.split;
    je["seed"] = e.seed;
    je["rows"] = e.rows;
    j["logs"].push_back(je);
  }
  std::ofstream os(dir / "manifest", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + (dir / "manifest").string() + "'");
  os << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest";
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  nlohmann::ordered_json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.plant_params = j.at("plant_params").get<std::string>();
    for (const auto& je : j.at("logs")) {
      ManifestEntry e;
      e.file = je.at("file").get<std::string>();
      e.split = je.at("split").get<std::string>();
      e.seed = je.at("seed").get<std::uint64_t>();
      e.rows = je.at("rows").get<std::size_t>();
      m.logs.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  for (const auto& e : m.logs)
    if (!std::filesystem::exists(dir / e.file))
      throw std::runtime_error(path.string() + ": listed file '" + e.file + "' does not exist");
  return m;
}

DatasetManifest collect_dataset(const Config& cfg, std::uint64_t seed,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.seed = seed;
  m.plant_params = plant_params_text(cfg.plant);
  const std::size_t total = cfg.train_logs + cfg.test_logs;
  for (std::size_t i = 0; i < total; ++i) {
    ManifestEntry e;
    e.file = log_filename(i);
    e.split = i < cfg.train_logs ? "train" : "test";
    e.seed = derive_seed(seed, "datagen/log", i);
    e.rows = cfg.log_ticks;
    Rng rng(e.seed);
    const LogData log =
        collect_log(cfg.plant, cfg.log_ticks, cfg.reissue_tol, cfg.reissue_timeout, rng);
    write_log(dir / e.file, log);
    m.logs.push_back(e);
  }
  write_manifest(dir, m);
  return m;
}

std::vector<LogData> load_split(const std::filesystem::path& dir, const std::string& tag) {
  const DatasetManifest m = read_manifest(dir);
  std::vector<LogData> out;
  for (const auto& e : m.split(tag)) out.push_back(read_log(dir / e.file));
  return out;
}

}  // namespace softfin
