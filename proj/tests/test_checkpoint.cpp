#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "softfin/checkpoint.hpp"

using namespace softfin;
namespace fs = std::filesystem;

namespace {

fs::path tmpdir() {
  const fs::path p = fs::temp_directory_path() / "softfin_ckpt_test";
  fs::create_directories(p);
  return p;
}

ckpt::Checkpoint sample_checkpoint(std::uint64_t seed) {
  ckpt::Checkpoint c;
  c.set_meta("seed", {"42"});
  c.set_meta_num("norm_scale", {0.125, -3.5, 1e-9});
  c.set_meta("mode", {"single"});
  nn::Network a({nn::Conv1d{2, 3, 3, 1}, nn::Activation{nn::ActKind::relu}, nn::Flatten{},
                 nn::Linear{3 * 6, 4}},
                "alpha");
  nn::Network b({nn::Lstm{2, 5, false}, nn::Dropout{0.2}, nn::Linear{5, 2}}, "beta");
  Rng rng(seed);
  a.init(rng);
  b.init(rng);
  c.nets = {std::move(a), std::move(b)};
  return c;
}

}  // namespace

TEST_CASE("checkpoint round-trips metadata, layers, and parameters exactly") {
  const fs::path path = tmpdir() / "round.ckpt";
  auto c = sample_checkpoint(5);
  ckpt::save(c, path);
  auto r = ckpt::load(path);

  CHECK(r.meta_num("seed") == 42.0);
  CHECK(r.meta_num("norm_scale", 0) == 0.125);
  CHECK(r.meta_num("norm_scale", 1) == -3.5);
  CHECK(r.meta_num("norm_scale", 2) == 1e-9);
  CHECK(r.meta_str("mode") == "single");
  CHECK(r.has_net("alpha"));
  CHECK(r.has_net("beta"));

  for (const auto& name : {"alpha", "beta"}) {
    const auto& orig = c.net(name);
    const auto& back = r.net(name);
    REQUIRE(orig.params().size() == back.params().size());
    CHECK(orig.layers().size() == back.layers().size());
    for (std::size_t p = 0; p < orig.params().size(); ++p) {
      REQUIRE(orig.params()[p].size() == back.params()[p].size());
      for (std::size_t i = 0; i < orig.params()[p].size(); ++i)
        CHECK(orig.params()[p][i] == back.params()[p][i]);  // bit-exact
    }
  }

  // loaded net is directly usable
  Rng rng(9);
  Tensor x({2, 2, 8});
  testutil::fill_rand(x, rng);
  Tensor y0 = c.net("alpha").forward(x, nn::Mode::eval);
  Tensor y1 = r.net("alpha").forward(x, nn::Mode::eval);
  for (std::size_t i = 0; i < y0.size(); ++i) CHECK(y0[i] == y1[i]);
}

TEST_CASE("saving twice yields byte-identical files") {
  const fs::path p1 = tmpdir() / "a.ckpt", p2 = tmpdir() / "b.ckpt";
  auto c = sample_checkpoint(11);
  ckpt::save(c, p1);
  ckpt::save(c, p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(s1.size() > 0);
}

TEST_CASE("layer lines round-trip through the parser") {
  const std::vector<nn::LayerSpec> specs = {
      nn::Conv1d{3, 16, 5, 1},  nn::Linear{2944, 64},
      nn::Lstm{2, 96, false},   nn::Lstm{13, 64, true},
      nn::Dropout{0.2},         nn::Activation{nn::ActKind::tanh},
      nn::Activation{nn::ActKind::relu}, nn::Flatten{}};
  for (const auto& s : specs) {
    const auto parsed = ckpt::parse_layer_line(ckpt::layer_line(s));
    CHECK(ckpt::layer_line(parsed) == ckpt::layer_line(s));
  }
  CHECK_THROWS_AS(ckpt::parse_layer_line("layer pooling 2"), std::runtime_error);
  CHECK_THROWS_AS(ckpt::parse_layer_line("layer lstm 2 96"), std::runtime_error);
}

TEST_CASE("loader rejects corrupt containers with specific errors") {
  const fs::path dir = tmpdir();

  {
    std::ofstream os(dir / "magic.ckpt", std::ios::binary);
    os << "NOT-A-CKPT 1\nblob 0\n";
  }
  CHECK_THROWS_WITH_AS(ckpt::load(dir / "magic.ckpt"),
                       doctest::Contains("not a checkpoint file"), std::runtime_error);

  {
    std::ofstream os(dir / "version.ckpt", std::ios::binary);
    os << "SOFTFIN-CKPT 9\nblob 0\n";
  }
  CHECK_THROWS_WITH_AS(ckpt::load(dir / "version.ckpt"), doctest::Contains("version"),
                       std::runtime_error);

  {
    // blob declares more parameters than the layers need
    std::ofstream os(dir / "mismatch.ckpt", std::ios::binary);
    os << "SOFTFIN-CKPT 1\nnet solo\nlayer linear 2 1\nend\nblob 7\n";
  }
  CHECK_THROWS_WITH_AS(ckpt::load(dir / "mismatch.ckpt"), doctest::Contains("layers require"),
                       std::runtime_error);

  {
    // header is fine but the blob is cut short
    auto c = sample_checkpoint(3);
    ckpt::save(c, dir / "trunc.ckpt");
    const auto full = fs::file_size(dir / "trunc.ckpt");
    fs::resize_file(dir / "trunc.ckpt", full - 11);
  }
  CHECK_THROWS_WITH_AS(ckpt::load(dir / "trunc.ckpt"), doctest::Contains("truncated"),
                       std::runtime_error);

  CHECK_THROWS_AS(ckpt::load(dir / "does_not_exist.ckpt"), std::runtime_error);
}

TEST_CASE("meta accessors validate keys and indices") {
  auto c = sample_checkpoint(1);
  CHECK(c.has_meta("seed"));
  CHECK(!c.has_meta("missing"));
  CHECK_THROWS_AS(c.meta_num("missing"), std::runtime_error);
  CHECK_THROWS_AS(c.meta_num("seed", 5), std::runtime_error);
  CHECK_THROWS_AS(c.net("nope"), std::runtime_error);
  CHECK_THROWS_AS(c.set_meta("bad key", {"x"}), std::logic_error);
  c.set_meta("seed", {"43"});  // overwrite in place
  CHECK(c.meta_num("seed") == 43.0);
  CHECK(c.meta.size() == 3);
}
