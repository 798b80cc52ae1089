#include "softfin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "softfin/csvio.hpp"
#include "softfin/datagen.hpp"
#include "softfin/metrics.hpp"
#include "softfin/rng.hpp"

namespace softfin {

namespace {

constexpr std::size_t kSummaryCapTicks = 3000;  // statistics stop at 30 s

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

// action-history length k from the policy's input width 3 + 2 (k + 1)
std::size_t history_k_of(const Policy& policy) {
  const std::size_t dim = policy.config().state_dim;
  if (dim < 5 || (dim - 5) % 2 != 0)
    throw std::invalid_argument("controller: policy input width " + std::to_string(dim) +
                                " does not decompose as 3 + 2 (k + 1)");
  return (dim - 5) / 2;
}

// one policy being driven step by step: recurrent state plus action history
struct Drive {
  const Policy* policy = nullptr;
  std::vector<nn::LstmState> lstm;
  std::vector<MotorCommand> history;
  std::size_t k = 0;
  Rng rng{0};  // never drawn from: evaluation takes mean actions

  void attach(const Policy& p) {
    policy = &p;
    lstm = p.initial_state();
    history.clear();
    k = history_k_of(p);
  }

  MotorCommand step(double theta, double rx, double ry) {
    const std::vector<double> obs = encode_state(theta, rx, ry, history, k);
    const Policy::Act a = policy->act(obs, lstm, /*sample=*/false, rng);
    history.insert(history.begin(), a.command);
    if (history.size() > k + 1) history.resize(k + 1);
    return a.command;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// controllers

Controller make_policy_controller(const Policy& policy) {
  auto drive = std::make_shared<Drive>();
  drive->attach(policy);
  return [drive](double theta, double rx, double ry) { return drive->step(theta, rx, ry); };
}

Controller make_grid_controller(const GridBank& bank) {
  auto drive = std::make_shared<Drive>();
  return [&bank, drive](double theta, double rx, double ry) {
    const PolicyCheckpoint& pick = grid_select(bank, rx, ry);
    if (drive->policy != &pick.policy) drive->attach(pick.policy);
    return drive->step(theta, rx, ry);
  };
}

Controller make_random_controller(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](double, double, double) { return sample_command(*rng); };
}

// ---------------------------------------------------------------------------
// runs

EvalResult run_evaluation_env(ControlEnv& env, const Controller& ctrl, double ref_x, double ref_y,
                              std::size_t control_steps, const RewardParams& rp,
                              std::uint64_t env_seed) {
  if (control_steps < 6)
    throw std::invalid_argument("evaluation needs at least 2 s (6 control steps), got " +
                                std::to_string(control_steps));
  env.reset(env_seed);

  LogData trace;
  const double dt = 0.01;
  std::vector<ForceSample> forces;
  std::size_t tick = 0, cycle_ticks = 0;
  for (std::size_t t = 0; t < control_steps; ++t) {
    const MotorCommand cmd = ctrl(env.theta(), ref_x, ref_y);
    const std::size_t n = ticks_for_step(t);
    cycle_ticks += n;
    if (t % 3 == 2) {
      if (cycle_ticks != 100)
        throw std::logic_error("evaluation: 3-step cycle has " + std::to_string(cycle_ticks) +
                               " ticks, expected 100");
      cycle_ticks = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      forces.clear();
      try {
        env.run(cmd, 1, forces);
      } catch (const std::exception& e) {
        throw EvalFault("evaluation aborted at tick " + std::to_string(tick) + ": " + e.what(),
                        std::move(trace));
      }
      const double th = env.theta();
      const double fx = forces.at(0).fx, fy = forces.at(0).fy;
      if (!std::isfinite(th) || !std::isfinite(fx) || !std::isfinite(fy))
        throw EvalFault(
            "evaluation aborted at tick " + std::to_string(tick) + ": non-finite telemetry",
            std::move(trace));
      trace.t.push_back(double(tick) * dt);
      trace.cmd_angle.push_back(cmd.angle);
      trace.cmd_omega.push_back(cmd.omega);
      trace.theta.push_back(th);
      trace.fx.push_back(fx);
      trace.fy.push_back(fy);
      ++tick;
    }
  }

  EvalResult out;
  out.summary = summarize_trace(trace, ref_x, ref_y, rp);
  out.trace = std::move(trace);
  return out;
}

EvalResult run_evaluation(const Controller& ctrl, const PlantParams& plant, double ref_x,
                          double ref_y, std::size_t control_steps, const RewardParams& rp,
                          std::uint64_t seed) {
  PlantEnv env(plant);
  return run_evaluation_env(env, ctrl, ref_x, ref_y, control_steps, rp, seed);
}

EvalSummary summarize_trace(const LogData& trace, double ref_x, double ref_y,
                            const RewardParams& rp) {
  if (trace.size() == 0) throw std::invalid_argument("summarize_trace: empty trace");
  const std::size_t n_use = std::min(trace.size(), kSummaryCapTicks);
  std::size_t steps = 0, cum = 0;
  while (cum < n_use) cum += ticks_for_step(steps++);
  if (cum != n_use)
    throw std::invalid_argument("summarize_trace: " + std::to_string(n_use) +
                                " ticks do not align with the 33/33/34 step pattern");

  const std::vector<double> fx(trace.fx.begin(), trace.fx.begin() + std::ptrdiff_t(n_use));
  const std::vector<double> fy(trace.fy.begin(), trace.fy.begin() + std::ptrdiff_t(n_use));
  const std::vector<double> ma_x = metrics::moving_average(fx, rp.window);
  const std::vector<double> ma_y = metrics::moving_average(fy, rp.window);

  EvalSummary s;
  s.ref_x = ref_x;
  s.ref_y = ref_y;
  double ex = 0.0, ey = 0.0;
  for (std::size_t i = 0; i < n_use; ++i) {
    ex += std::abs(ma_x[i] - ref_x);
    ey += std::abs(ma_y[i] - ref_y);
  }
  s.err_x = ex / double(n_use);
  s.err_y = ey / double(n_use);
  s.std_x = std_of(ma_x);
  s.std_y = std_of(ma_y);
  s.raw_std_x = std_of(fx);
  s.raw_std_y = std_of(fy);
  s.control_steps = steps;
  s.ticks = n_use;

  ForceWindow win(rp.window);
  double reward_sum = 0.0;
  std::size_t idx = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t n = ticks_for_step(t);
    for (std::size_t i = 0; i < n; ++i, ++idx) win.push(fx[idx], fy[idx]);
    reward_sum += step_reward(win, ref_x, ref_y, rp);
  }
  s.mean_reward = reward_sum / double(steps);
  return s;
}

// ---------------------------------------------------------------------------
// csv emission

namespace {

const std::vector<std::string> kSummaryHeader = {
    "ref_x",     "ref_y", "err_x",       "std_x", "err_y",         "std_y",
    "raw_std_x", "raw_std_y", "mean_reward", "control_steps", "ticks"};

const std::vector<std::string> kCompareHeader = {
    "overall",      "ref_x",        "ref_y",        "single_err_x", "single_std_x",
    "single_err_y", "single_std_y", "grid_err_x",   "grid_std_x",   "grid_err_y",
    "grid_std_y"};

}  // namespace

void write_summary_csv(const std::filesystem::path& path, const std::vector<EvalSummary>& rows) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const EvalSummary& s : rows)
    out.push_back({s.ref_x, s.ref_y, s.err_x, s.std_x, s.err_y, s.std_y, s.raw_std_x,
                   s.raw_std_y, s.mean_reward, double(s.control_steps), double(s.ticks)});
  csv::write(path, kSummaryHeader, out);
}

std::vector<EvalSummary> read_summary_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, kSummaryHeader, path.string());
  std::vector<EvalSummary> rows;
  for (const auto& r : t.rows) {
    EvalSummary s;
    s.ref_x = r[0];
    s.ref_y = r[1];
    s.err_x = r[2];
    s.std_x = r[3];
    s.err_y = r[4];
    s.std_y = r[5];
    s.raw_std_x = r[6];
    s.raw_std_y = r[7];
    s.mean_reward = r[8];
    s.control_steps = std::size_t(r[9]);
    s.ticks = std::size_t(r[10]);
    rows.push_back(s);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// comparison

ComparisonTable compare_controllers(const Policy& single, const GridBank& bank,
                                    const std::vector<std::pair<double, double>>& references,
                                    std::size_t n_seeds, const PlantParams& plant,
                                    const RewardParams& rp, std::size_t control_steps,
                                    std::uint64_t seed) {
  if (references.empty()) throw std::invalid_argument("compare_controllers: no references");
  if (n_seeds == 0) throw std::invalid_argument("compare_controllers: n_seeds must be >= 1");

  ComparisonTable table;
  table.seed_overall_x.assign(n_seeds, {0.0, 0.0});
  CompareRow overall;
  overall.overall = true;

  for (std::size_t ri = 0; ri < references.size(); ++ri) {
    CompareRow row;
    row.ref_x = references[ri].first;
    row.ref_y = references[ri].second;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      const std::uint64_t rs = derive_seed(seed, "compare/run", ri * n_seeds + si);
      const Controller cs = make_policy_controller(single);
      const EvalSummary a =
          run_evaluation(cs, plant, row.ref_x, row.ref_y, control_steps, rp, rs).summary;
      const Controller cg = make_grid_controller(bank);
      const EvalSummary b =
          run_evaluation(cg, plant, row.ref_x, row.ref_y, control_steps, rp, rs).summary;
      row.single.err_x += a.err_x;
      row.single.std_x += a.std_x;
      row.single.err_y += a.err_y;
      row.single.std_y += a.std_y;
      row.grid.err_x += b.err_x;
      row.grid.std_x += b.std_x;
      row.grid.err_y += b.err_y;
      row.grid.std_y += b.std_y;
      table.seed_overall_x[si].first += a.err_x;
      table.seed_overall_x[si].second += b.err_x;
    }
    for (double* v : {&row.single.err_x, &row.single.std_x, &row.single.err_y, &row.single.std_y,
                      &row.grid.err_x, &row.grid.std_x, &row.grid.err_y, &row.grid.std_y})
      *v /= double(n_seeds);
    overall.single.err_x += row.single.err_x;
    overall.single.std_x += row.single.std_x;
    overall.single.err_y += row.single.err_y;
    overall.single.std_y += row.single.std_y;
    overall.grid.err_x += row.grid.err_x;
    overall.grid.std_x += row.grid.std_x;
    overall.grid.err_y += row.grid.err_y;
    overall.grid.std_y += row.grid.std_y;
    table.rows.push_back(row);
  }

  const double nr = double(references.size());
  for (double* v :
       {&overall.single.err_x, &overall.single.std_x, &overall.single.err_y,
        &overall.single.std_y, &overall.grid.err_x, &overall.grid.std_x, &overall.grid.err_y,
        &overall.grid.std_y})
    *v /= nr;
  for (auto& [s_sum, g_sum] : table.seed_overall_x) {
    s_sum /= nr;
    g_sum /= nr;
  }
  table.rows.push_back(overall);
  return table;
}

void write_compare_csv(const std::filesystem::path& path, const ComparisonTable& table) {
  std::vector<std::vector<double>> out;
  out.reserve(table.rows.size());
  for (const CompareRow& r : table.rows)
    out.push_back({r.overall ? 1.0 : 0.0, r.ref_x, r.ref_y, r.single.err_x, r.single.std_x,
                   r.single.err_y, r.single.std_y, r.grid.err_x, r.grid.std_x, r.grid.err_y,
                   r.grid.std_y});
  csv::write(path, kCompareHeader, out);
}

ComparisonTable read_compare_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  csv::require_header(t, kCompareHeader, path.string());
  ComparisonTable table;
  for (const auto& r : t.rows) {
    CompareRow row;
    row.overall = r[0] != 0.0;
    row.ref_x = r[1];
    row.ref_y = r[2];
    row.single = {r[3], r[4], r[5], r[6]};
    row.grid = {r[7], r[8], r[9], r[10]};
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// run plumbing

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::single: return "single";
    case ControllerKind::grid: return "grid";
    case ControllerKind::random_baseline: return "random";
  }
  throw std::logic_error("unreachable controller kind");
}

ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "single") return ControllerKind::single;
  if (s == "grid") return ControllerKind::grid;
  if (s == "random") return ControllerKind::random_baseline;
  throw std::invalid_argument("unknown controller kind '" + s +
                              "' (expected single | grid | random)");
}

void validate_run_config(const RunConfig& rc, const Config& cfg) {
  for (const auto& [x, y] : rc.references) {
    if (x < cfg.ref_x_lo || x > cfg.ref_x_hi || y < cfg.ref_y_lo || y > cfg.ref_y_hi)
      throw std::invalid_argument(
          "reference (" + std::to_string(x) + ", " + std::to_string(y) +
          ") lies outside the training range [" + std::to_string(cfg.ref_x_lo) + ", " +
          std::to_string(cfg.ref_x_hi) + "] x [" + std::to_string(cfg.ref_y_lo) + ", " +
          std::to_string(cfg.ref_y_hi) + "]");
  }
}

}  // namespace softfin
