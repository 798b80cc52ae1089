#pragma once

// sim2real-analog evaluation: controllers trained on the surrogate are scored
// against the plant over 30 s dual-rate runs, logged at 100 hz. summary
// statistics follow the experiment convention: "error" is the mean absolute
// deviation of the 200-sample moving average from the reference, "std" is
// that moving average's spread; the raw-force std is reported alongside since
// the smoothed one understates sample-to-sample noise.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "softfin/config.hpp"
#include "softfin/datagen.hpp"
#include "softfin/plant.hpp"
#include "softfin/reward.hpp"
#include "softfin/rl.hpp"

namespace softfin {

// ---------------------------------------------------------------------------
// run statistics

struct EvalSummary {
  double ref_x = 0.0, ref_y = 0.0;
  double err_x = 0.0, err_y = 0.0;          // mean |moving_average(F) - ref|
  double std_x = 0.0, std_y = 0.0;          // std of the moving-averaged force
  double raw_std_x = 0.0, raw_std_y = 0.0;  // std of the raw 100 hz force
  double mean_reward = 0.0;                 // mean per-control-step reward
  std::size_t control_steps = 0;
  std::size_t ticks = 0;
};

struct EvalResult {
  EvalSummary summary;
  LogData trace;  // 100 hz, one row per tick
};

// raised when the environment dies mid-run; carries whatever was logged
class EvalFault : public std::runtime_error {
 public:
  EvalFault(const std::string& what, LogData partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const LogData& partial_trace() const { return partial_; }

 private:
  LogData partial_;
};

// ---------------------------------------------------------------------------
// controllers: anything that maps (base angle, reference) to the next motor
// command. closures own their recurrent state, so build a fresh controller
// per run; policy/bank are captured by reference and must outlive it.

using Controller = std::function<MotorCommand(double theta, double ref_x, double ref_y)>;

// mean (noise-free) actions from a trained policy; the action-history length
// is recovered from the policy's own input width
Controller make_policy_controller(const Policy& policy);

// nearest-reference dispatch over a trained bank; a reference change mid-run
// re-selects and restarts that policy's recurrent state
Controller make_grid_controller(const GridBank& bank);

// seeded uniform commands, the comparison floor
Controller make_random_controller(std::uint64_t seed);

// ---------------------------------------------------------------------------
// evaluation runs

// dual-rate loop against any environment: 3 hz decisions over 100 hz ticks in
// the 33/33/34 pattern, every tick logged. control_steps >= 6 (2 s). faults
// (env exception or non-finite telemetry) raise EvalFault with the partial
// trace. summary covers at most the first 30 s (3000 ticks).
EvalResult run_evaluation_env(ControlEnv& env, const Controller& ctrl, double ref_x, double ref_y,
                              std::size_t control_steps, const RewardParams& rp,
                              std::uint64_t env_seed);

// the headline run: always against the plant (training-side code paths take a
// surrogate and cannot reach this)
EvalResult run_evaluation(const Controller& ctrl, const PlantParams& plant, double ref_x,
                          double ref_y, std::size_t control_steps, const RewardParams& rp,
                          std::uint64_t seed);

// recomputes a summary from a saved trace; run_evaluation's own summary goes
// through this, so saved traces and summaries always agree. throws if the
// trace length does not align with the 33/33/34 tick pattern.
EvalSummary summarize_trace(const LogData& trace, double ref_x, double ref_y,
                            const RewardParams& rp);

void write_summary_csv(const std::filesystem::path& path, const std::vector<EvalSummary>& rows);
std::vector<EvalSummary> read_summary_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// controller comparison (single vs grid, per reference and overall)

struct CompareCell {
  double err_x = 0.0, std_x = 0.0, err_y = 0.0, std_y = 0.0;  // seed-averaged
};

struct CompareRow {
  bool overall = false;  // true on the final mean-over-references row
  double ref_x = 0.0, ref_y = 0.0;
  CompareCell single, grid;
};

struct ComparisonTable {
  std::vector<CompareRow> rows;  // one per reference, then the overall row
  // per-seed overall mean x error (single, grid): lets callers flag seeds
  // where the grid bank lost even if the seed average holds
  std::vector<std::pair<double, double>> seed_overall_x;
};

ComparisonTable compare_controllers(const Policy& single, const GridBank& bank,
                                    const std::vector<std::pair<double, double>>& references,
                                    std::size_t n_seeds, const PlantParams& plant,
                                    const RewardParams& rp, std::size_t control_steps,
                                    std::uint64_t seed);

void write_compare_csv(const std::filesystem::path& path, const ComparisonTable& table);
ComparisonTable read_compare_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// plot-data emission

// writes polar.csv (first 5 s = 500 rows: time, base angle in degrees),
// force.csv (first 10 s = 1000 rows: raw forces + trailing moving average)
// and a deterministic svg rendering of each. trace must cover >= 10 s.
void emit_plots(const LogData& trace, const std::filesystem::path& dir,
                std::size_t ma_window = 200);

// ---------------------------------------------------------------------------
// run plumbing for the cli

enum class ControllerKind { single, grid, random_baseline };

std::string to_string(ControllerKind k);
ControllerKind controller_kind_from_string(const std::string& s);

struct RunConfig {
  std::uint64_t seed = 0;
  ControllerKind kind = ControllerKind::single;
  std::vector<std::pair<double, double>> references;
  PlantParams plant;
  std::filesystem::path out_dir;
};

// references must sit inside the configured training ranges
void validate_run_config(const RunConfig& rc, const Config& cfg);

}  // namespace softfin
