#pragma once

// self-describing model container shared by every stage: a versioned text
// header (metadata + per-network layer specs) followed by one little-endian
// f64 blob holding all parameters in declaration order. loaders rebuild the
// networks from the header alone and refuse size mismatches, so files survive
// architecture changes with a hard error instead of silent garbage.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "softfin/nn.hpp"

namespace softfin::ckpt {

struct Checkpoint {
  // insertion-ordered so serialization is byte-deterministic
  std::vector<std::pair<std::string, std::vector<std::string>>> meta;
  std::vector<nn::Network> nets;

  void set_meta(const std::string& key, std::vector<std::string> values);
  void set_meta_num(const std::string& key, const std::vector<double>& values);
  bool has_meta(const std::string& key) const;
  const std::vector<std::string>& meta_values(const std::string& key) const;
  double meta_num(const std::string& key, std::size_t idx = 0) const;
  const std::string& meta_str(const std::string& key, std::size_t idx = 0) const;

  nn::Network& net(const std::string& name);
  const nn::Network& net(const std::string& name) const;
  bool has_net(const std::string& name) const;
};

void save(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

// header line for one layer spec (also used by tests and tooling)
std::string layer_line(const nn::LayerSpec& spec);
nn::LayerSpec parse_layer_line(const std::string& line);

std::string format_f64(double v);  // round-trip exact

}  // namespace softfin::ckpt
