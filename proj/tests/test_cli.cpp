#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "softfin/cli.hpp"
#include "softfin/config.hpp"
#include "softfin/datagen.hpp"
#include "softfin/eval.hpp"

using namespace softfin;
namespace fs = std::filesystem;

namespace {

// the reduced desk-smoke configuration: every stage runs in seconds
const char* kTinyConfig =
    "train_logs = 3\n"
    "test_logs = 1\n"
    "log_ticks = 260\n"
    "window = 20\n"
    "surrogate_max_epochs = 2\n"
    "surrogate_patience = 2\n"
    "posnet_stride = 2\n"
    "forcenet_stride = 4\n"
    "single_steps = 128\n"
    "grid_steps = 64\n"
    "horizon = 64\n"
    "minibatch = 16\n"
    "ppo_epochs = 2\n"
    "episode_steps = 32\n"
    "eval_seeds = 2\n";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE_MESSAGE(bool(is), "cannot open " << p.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// redirects an fd into a file for the duration of a cli_main call so the
// test can assert on diagnostics without forking
class CaptureFd {
 public:
  CaptureFd(int fd, fs::path path) : fd_(fd), path_(std::move(path)) {
    std::fflush(nullptr);
    std::cout.flush();
    std::cerr.flush();
    saved_ = dup(fd_);
    const int file = open(path_.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(file, fd_);
    close(file);
  }
  std::string finish() {
    if (saved_ < 0) return {};
    std::fflush(nullptr);
    std::cout.flush();
    std::cerr.flush();
    dup2(saved_, fd_);
    close(saved_);
    saved_ = -1;
    return slurp(path_);
  }
  ~CaptureFd() { finish(); }

 private:
  int fd_, saved_ = -1;
  fs::path path_;
};

struct CliRun {
  int exit_code = 0;
  std::string out, err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  static int invocation = 0;
  const fs::path dir = fs::temp_directory_path() / "softfin_test_cli_io";
  fs::create_directories(dir);
  const fs::path out_file = dir / ("out." + std::to_string(invocation));
  const fs::path err_file = dir / ("err." + std::to_string(invocation));
  ++invocation;

  std::vector<std::string> full = {"softfin"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());

  CliRun r;
  {
    CaptureFd cap_out(1, out_file), cap_err(2, err_file);
    r.exit_code = cli_main(int(argv.size()), argv.data());
    r.out = cap_out.finish();
    r.err = cap_err.finish();
  }
  return r;
}

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.cfg";
  std::ofstream(p) << kTinyConfig;
  return p;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// sorted relative paths of every regular file under root
std::vector<fs::path> tree_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_CASE("help is a successful exit and unknown inputs are usage errors") {
  const CliRun help = run_cli({"--help"});
  CHECK(help.exit_code == 0);
  CHECK(contains(help.out, "pipeline"));
  CHECK(contains(help.out, "--seed"));

  const CliRun sub_help = run_cli({"evaluate", "--help"});
  CHECK(sub_help.exit_code == 0);
  CHECK(contains(sub_help.out, "--controller"));

  const CliRun bad_sub = run_cli({"frobnicate"});
  CHECK(bad_sub.exit_code == 2);
  CHECK(contains(bad_sub.err, "collect"));  // usage text lists the subcommands
  CHECK(contains(bad_sub.err, "pipeline"));

  CHECK(run_cli({"--bogus"}).exit_code == 2);
  CHECK(run_cli({"evaluate", "--frob"}).exit_code == 2);
  CHECK(run_cli({"evaluate", "--controller", "hybrid"}).exit_code == 2);
  CHECK(run_cli({}).exit_code == 2);  // a subcommand is required
}

TEST_CASE("runtime failures exit 1 and name the missing file") {
  const fs::path dir = fresh_dir("softfin_test_cli_missing");
  const std::string out = (dir / "out").string();

  const CliRun ev = run_cli({"--out", out, "evaluate", "--controller", "single"});
  CHECK(ev.exit_code == 1);
  CHECK(contains(ev.err, "error:"));
  CHECK(contains(ev.err, "policy_single.ckpt"));

  const CliRun tr = run_cli({"--out", out, "train-surrogate"});
  CHECK(tr.exit_code == 1);
  CHECK(contains(tr.err, "manifest"));

  const CliRun pl = run_cli({"--out", out, "plot"});
  CHECK(pl.exit_code == 1);
  CHECK(contains(pl.err, "trace"));

  SUBCASE("config problems are runtime failures with the offending detail") {
    const fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "not_a_real_key = 3\n";
    const CliRun unknown = run_cli({"--config", bad.string(), "--out", out, "collect"});
    CHECK(unknown.exit_code == 1);
    CHECK(contains(unknown.err, "unknown key"));
    CHECK(contains(unknown.err, "not_a_real_key"));

    const CliRun missing =
        run_cli({"--config", (dir / "nope.cfg").string(), "--out", out, "collect"});
    CHECK(missing.exit_code == 1);
    CHECK(contains(missing.err, "nope.cfg"));
  }
}

TEST_CASE("the pipeline fills the artifact tree and reruns bitwise-identically") {
  const fs::path dir = fresh_dir("softfin_test_cli_pipeline");
  const fs::path cfg_path = write_tiny_config(dir);
  const std::string cfg = cfg_path.string();
  const fs::path out1 = dir / "run1", out2 = dir / "run2", out3 = dir / "run3";

  const CliRun r1 =
      run_cli({"--seed", "7", "--config", cfg, "--out", out1.string(), "pipeline"});
  REQUIRE_MESSAGE(r1.exit_code == 0, r1.err);
  CHECK(contains(r1.out, "pipeline: done"));
  CHECK(contains(r1.out, "overall x error"));

  for (const char* f :
       {"dataset/manifest", "surrogate.ckpt", "metrics.csv", "policy_single.ckpt",
        "grid/manifest", "compare.csv", "eval_single/summary.csv", "eval_grid/summary.csv",
        "eval_random/summary.csv", "eval_single/trace_000.csv", "plots/polar.csv",
        "plots/polar.svg", "plots/force.csv", "plots/force.svg"})
    CHECK_MESSAGE(fs::exists(out1 / f), "missing " << f);

  Config tiny;
  Config loaded = Config::from_file(cfg_path);
  const std::size_t n_refs = default_grid_points().size();
  CHECK(tree_files(out1 / "grid").size() == n_refs + 1);  // one ckpt per point + manifest

  SUBCASE("the same seed reproduces every artifact byte for byte") {
    const CliRun r2 =
        run_cli({"--seed", "7", "--config", cfg, "--out", out2.string(), "pipeline"});
    REQUIRE_MESSAGE(r2.exit_code == 0, r2.err);
    const auto files1 = tree_files(out1), files2 = tree_files(out2);
    REQUIRE(files1 == files2);
    for (const fs::path& f : files1)
      CHECK_MESSAGE(slurp(out1 / f) == slurp(out2 / f), "differs: " << f.string());
  }

  SUBCASE("a different seed produces different data") {
    const CliRun r3 = run_cli(
        {"--seed", "8", "--config", cfg, "--out", out3.string(), "collect"});
    REQUIRE_MESSAGE(r3.exit_code == 0, r3.err);
    CHECK(slurp(out1 / "dataset/log_000.csv") != slurp(out3 / "dataset/log_000.csv"));
  }

  SUBCASE("every saved summary recomputes from its saved trace") {
    for (const char* kind : {"eval_single", "eval_grid", "eval_random"}) {
      const std::vector<EvalSummary> rows =
          read_summary_csv(out1 / kind / "summary.csv");
      REQUIRE(rows.size() == n_refs);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
        const LogData trace = read_log(out1 / kind / name);
        const EvalSummary re = summarize_trace(trace, rows[i].ref_x, rows[i].ref_y, loaded.reward);
        CHECK(re.err_x == rows[i].err_x);
        CHECK(re.err_y == rows[i].err_y);
        CHECK(re.std_x == rows[i].std_x);
        CHECK(re.mean_reward == rows[i].mean_reward);
        CHECK(re.ticks == rows[i].ticks);
      }
    }
  }

  SUBCASE("the comparison table covers every reference plus the overall mean") {
    const ComparisonTable t = read_compare_csv(out1 / "compare.csv");
    REQUIRE(t.rows.size() == n_refs + 1);
    const auto refs = default_grid_points();
    for (std::size_t i = 0; i < n_refs; ++i) {
      CHECK_FALSE(t.rows[i].overall);
      CHECK(t.rows[i].ref_x == refs[i].first);
      CHECK(t.rows[i].ref_y == refs[i].second);
    }
    CHECK(t.rows[n_refs].overall);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_refs; ++i) acc += t.rows[i].grid.err_x;
    CHECK(t.rows[n_refs].grid.err_x == doctest::Approx(acc / double(n_refs)).epsilon(1e-12));
  }

  SUBCASE("single stages rerun on top of existing artifacts") {
    const CliRun ev = run_cli({"--seed", "7", "--config", cfg, "--out", out1.string(),
                               "evaluate", "--controller", "grid"});
    CHECK_MESSAGE(ev.exit_code == 0, ev.err);
    const CliRun cp =
        run_cli({"--seed", "7", "--config", cfg, "--out", out1.string(), "compare"});
    CHECK_MESSAGE(cp.exit_code == 0, cp.err);
    CHECK(contains(cp.out, "overall x error"));
  }
}

TEST_CASE("every config key is documented with its default") {
  const fs::path doc = fs::path(SOFTFIN_SOURCE_DIR) / "docs" / "config.md";
  const std::string text = slurp(doc);
  const Config defaults;
  for (const auto& [key, value] : defaults.items()) {
    CHECK_MESSAGE(contains(text, "`" + key + "`"), "undocumented key: " << key);
    (void)value;
  }
}
