#include "softfin/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "softfin/config.hpp"
#include "softfin/datagen.hpp"
#include "softfin/eval.hpp"
#include "softfin/rl.hpp"
#include "softfin/rng.hpp"
#include "softfin/surrogate.hpp"

namespace softfin {

namespace {

namespace fs = std::filesystem;

struct Ctx {
  Config cfg;
  std::uint64_t seed = 0;
  fs::path out = "out";

  fs::path dataset_dir() const { return out / "dataset"; }
  fs::path surrogate_path() const { return out / "surrogate.ckpt"; }
  fs::path metrics_path() const { return out / "metrics.csv"; }
  fs::path single_path() const { return out / "policy_single.ckpt"; }
  fs::path grid_dir() const { return out / "grid"; }
  fs::path eval_dir(ControllerKind k) const { return out / ("eval_" + to_string(k)); }
  fs::path compare_path() const { return out / "compare.csv"; }
  fs::path plots_dir() const { return out / "plots"; }
};

std::string trace_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trace_%03zu.csv", i);
  return buf;
}

void print_checkpoint_size(const fs::path& p) {
  std::printf("  %s (%ju bytes)\n", p.string().c_str(),
              std::uintmax_t(fs::file_size(p)));
}

void do_collect(const Ctx& ctx) {
  const DatasetManifest m = collect_dataset(ctx.cfg, ctx.seed, ctx.dataset_dir());
  std::printf("collect: wrote %zu logs (%zu train, %zu test) to %s\n", m.logs.size(),
              m.split("train").size(), m.split("test").size(),
              ctx.dataset_dir().string().c_str());
}

void do_train_surrogate(const Ctx& ctx) {
  const std::vector<LogData> train = load_split(ctx.dataset_dir(), "train");
  const std::vector<LogData> test = load_split(ctx.dataset_dir(), "test");
  SurrogateTraining curves;
  const SurrogateModel m =
      train_surrogate(train, ctx.cfg, derive_seed(ctx.seed, "cli/surrogate"), &curves);
  save_surrogate(m, ctx.surrogate_path());
  const SurrogateEval e = evaluate_surrogate(m, test);
  write_metrics_table(ctx.metrics_path(), m, e);
  std::printf("train-surrogate: posnet %zu epochs, forcenet %zu epochs\n",
              curves.posnet.train_mse.size(), curves.forcenet.train_mse.size());
  std::printf("train-surrogate: angle R2 %.4f, force rmse (%.4f, %.4f) vs std (%.4f, %.4f)\n",
              e.posnet_r2, e.force_rmse_x, e.force_rmse_y, e.force_std_x, e.force_std_y);
  std::printf("train-surrogate: wrote %s and %s\n", ctx.surrogate_path().string().c_str(),
              ctx.metrics_path().string().c_str());
  print_checkpoint_size(ctx.surrogate_path());
}

void do_train_rl(const Ctx& ctx, const std::string& mode) {
  const SurrogateModel m = load_surrogate(ctx.surrogate_path());
  if (mode == "single") {
    TrainStats st;
    const PolicyCheckpoint ck =
        train_single(m, ctx.cfg, derive_seed(ctx.seed, "cli/rl-single"), &st);
    save_policy(ck, ctx.single_path());
    const std::size_t n = st.episode_rewards.size();
    const std::size_t w = std::min<std::size_t>(10, n);
    double first = 0.0, last = 0.0, ev = 0.0;
    for (std::size_t i = 0; i < w; ++i) first += st.episode_rewards[i];
    for (std::size_t i = n - w; i < n; ++i) last += st.episode_rewards[i];
    for (double r : st.eval_rewards) ev += r;
    std::printf("train-rl[single]: %zu episodes, first-10 mean %.4f, last-10 mean %.4f, "
                "eval mean %.4f\n",
                n, first / double(w), last / double(w),
                ev / double(st.eval_rewards.size()));
    std::printf("train-rl[single]: wrote %s\n", ctx.single_path().string().c_str());
    print_checkpoint_size(ctx.single_path());
    return;
  }
  // grid
  const GridBank bank = train_grid(m, default_grid_points(), ctx.cfg,
                                   derive_seed(ctx.seed, "cli/rl-grid"));
  for (const GridBank::Failure& f : bank.failures)
    std::printf("train-rl[grid]: point (%g, %g) FAILED: %s\n", f.ref_x, f.ref_y,
                f.what.c_str());
  if (bank.policies.empty()) throw std::runtime_error("train-rl: every grid point failed");
  save_grid(bank, ctx.grid_dir());
  std::printf("train-rl[grid]: trained %zu/%zu points, wrote %s\n", bank.policies.size(),
              default_grid_points().size(), ctx.grid_dir().string().c_str());
  for (std::size_t i = 0; i < bank.policies.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "policy_%03zu.ckpt", i);
    print_checkpoint_size(ctx.grid_dir() / buf);
  }
}

void do_evaluate(const Ctx& ctx, const std::string& kind_str) {
  RunConfig rc;
  rc.seed = ctx.seed;
  rc.kind = controller_kind_from_string(kind_str);
  rc.references = default_grid_points();
  rc.plant = ctx.cfg.plant;
  rc.out_dir = ctx.eval_dir(rc.kind);
  validate_run_config(rc, ctx.cfg);

  // load once; controllers are rebuilt per run so recurrent state never leaks
  PolicyCheckpoint single;
  GridBank bank;
  if (rc.kind == ControllerKind::single) single = load_policy(ctx.single_path());
  if (rc.kind == ControllerKind::grid) bank = load_grid(ctx.grid_dir());

  fs::create_directories(rc.out_dir);
  std::vector<EvalSummary> rows;
  for (std::size_t ri = 0; ri < rc.references.size(); ++ri) {
    const auto [rx, ry] = rc.references[ri];
    const std::uint64_t run_seed = derive_seed(rc.seed, "cli/eval/" + kind_str, ri);
    Controller ctrl;
    switch (rc.kind) {
      case ControllerKind::single: ctrl = make_policy_controller(single.policy); break;
      case ControllerKind::grid: ctrl = make_grid_controller(bank); break;
      case ControllerKind::random_baseline:
        ctrl = make_random_controller(derive_seed(rc.seed, "cli/eval/random-cmd", ri));
        break;
    }
    EvalResult res;
    try {
      res = run_evaluation(ctrl, rc.plant, rx, ry, ctx.cfg.eval_steps, ctx.cfg.reward, run_seed);
    } catch (const EvalFault& f) {
      const fs::path partial = rc.out_dir / ("partial_" + trace_name(ri));
      write_log(partial, f.partial_trace());
      throw std::runtime_error(std::string(f.what()) + " (partial trace: " + partial.string() +
                               ")");
    }
    write_log(rc.out_dir / trace_name(ri), res.trace);
    rows.push_back(res.summary);
    std::printf("evaluate[%s] (%g, %g): err (%.4f, %.4f), ma std (%.4f, %.4f), reward %.4f\n",
                kind_str.c_str(), rx, ry, res.summary.err_x, res.summary.err_y,
                res.summary.std_x, res.summary.std_y, res.summary.mean_reward);
  }
  write_summary_csv(rc.out_dir / "summary.csv", rows);
  std::printf("evaluate[%s]: wrote %s\n", kind_str.c_str(),
              (rc.out_dir / "summary.csv").string().c_str());
}

void do_compare(const Ctx& ctx) {
  const PolicyCheckpoint single = load_policy(ctx.single_path());
  const GridBank bank = load_grid(ctx.grid_dir());
  const ComparisonTable table = compare_controllers(
      single.policy, bank, default_grid_points(), ctx.cfg.eval_seeds, ctx.cfg.plant,
      ctx.cfg.reward, ctx.cfg.eval_steps, derive_seed(ctx.seed, "cli/compare"));
  write_compare_csv(ctx.compare_path(), table);
  const CompareRow& overall = table.rows.back();
  std::printf("compare: overall x error single %.4f vs grid %.4f (%s)\n", overall.single.err_x,
              overall.grid.err_x,
              overall.grid.err_x <= overall.single.err_x ? "grid <= single"
                                                         : "ORDERING VIOLATED");
  for (std::size_t si = 0; si < table.seed_overall_x.size(); ++si) {
    const auto& [s, g] = table.seed_overall_x[si];
    if (g > s)
      std::printf("compare: note: seed %zu ordering violated (grid %.4f > single %.4f)\n", si, g,
                  s);
  }
  std::printf("compare: wrote %s\n", ctx.compare_path().string().c_str());
}

void do_plot(const Ctx& ctx, fs::path trace_path) {
  if (trace_path.empty())
    trace_path = ctx.eval_dir(ControllerKind::single) / trace_name(0);
  const LogData trace = read_log(trace_path);
  emit_plots(trace, ctx.plots_dir(), ctx.cfg.reward.window);
  std::printf("plot: wrote polar.csv / force.csv / polar.svg / force.svg to %s\n",
              ctx.plots_dir().string().c_str());
}

void do_pipeline(const Ctx& ctx) {
  do_collect(ctx);
  do_train_surrogate(ctx);
  do_train_rl(ctx, "single");
  do_train_rl(ctx, "grid");
  do_evaluate(ctx, "single");
  do_evaluate(ctx, "grid");
  do_evaluate(ctx, "random");
  do_compare(ctx);
  do_plot(ctx, {});
  std::printf("pipeline: done, outputs in %s\n", ctx.out.string().c_str());
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"softfin: desk-scale real2sim2real force control laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string config_file;
  std::string out = "out";
  app.add_option("--seed", seed, "master seed every stage derives from (default 0)");
  app.add_option("--config", config_file, "key = value file overriding any config default");
  app.add_option("--out", out, "output directory (default ./out)");

  app.add_subcommand("collect", "generate the plant dataset (logs + manifest)");
  app.add_subcommand("train-surrogate", "fit posnet + forcenet on the collected dataset");
  auto* rl = app.add_subcommand("train-rl", "train the force controller on the surrogate");
  std::string mode = "single";
  rl->add_option("--mode", mode, "single | grid (default single)")
      ->check(CLI::IsMember({"single", "grid"}));
  auto* ev = app.add_subcommand("evaluate", "run a trained controller against the plant");
  std::string controller = "single";
  ev->add_option("--controller", controller, "single | grid | random (default single)")
      ->check(CLI::IsMember({"single", "grid", "random"}));
  auto* plot = app.add_subcommand("plot", "emit trajectory/force plot data from a trace");
  std::string trace_file;
  plot->add_option("--trace", trace_file,
                   "trace csv to plot (default <out>/eval_single/trace_000.csv)");
  app.add_subcommand("compare", "single vs grid controller table over the references");
  app.add_subcommand("pipeline", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return 2;
  }

  Ctx ctx;
  ctx.seed = seed;
  ctx.out = out;
  try {
    if (!config_file.empty()) ctx.cfg = Config::from_file(config_file);
    std::filesystem::create_directories(ctx.out);
    const std::string sub = app.get_subcommands().at(0)->get_name();
    if (sub == "collect") do_collect(ctx);
    else if (sub == "train-surrogate") do_train_surrogate(ctx);
    else if (sub == "train-rl") do_train_rl(ctx, mode);
    else if (sub == "evaluate") do_evaluate(ctx, controller);
    else if (sub == "compare") do_compare(ctx);
    else if (sub == "plot") do_plot(ctx, trace_file);
    else if (sub == "pipeline") do_pipeline(ctx);
    else throw std::logic_error("unhandled subcommand " + sub);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace softfin
