#include "softfin/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace softfin::ckpt {

namespace {

constexpr const char* kMagic = "SOFTFIN-CKPT";
constexpr int kVersion = 1;

void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\n\r") != std::string::npos)
    throw std::logic_error(std::string("checkpoint ") + what + " must be a non-empty token: '" +
                           s + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_num(const std::string& s, const char* ctx) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error(std::string("checkpoint: bad number '") + s + "' in " + ctx);
  return v;
}

void write_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (is.gcount() != 8) throw std::runtime_error("checkpoint: truncated parameter blob");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

std::string format_f64(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Checkpoint::set_meta(const std::string& key, std::vector<std::string> values) {
  check_token(key, "meta key");
  for (const auto& v : values) check_token(v, "meta value");
  for (auto& kv : meta)
    if (kv.first == key) {
      kv.second = std::move(values);
      return;
    }
  meta.emplace_back(key, std::move(values));
}

void Checkpoint::set_meta_num(const std::string& key, const std::vector<double>& values) {
  std::vector<std::string> toks;
  toks.reserve(values.size());
  for (double v : values) toks.push_back(format_f64(v));
  set_meta(key, std::move(toks));
}

bool Checkpoint::has_meta(const std::string& key) const {
  for (const auto& kv : meta)
    if (kv.first == key) return true;
  return false;
}

const std::vector<std::string>& Checkpoint::meta_values(const std::string& key) const {
  for (const auto& kv : meta)
    if (kv.first == key) return kv.second;
  throw std::runtime_error("checkpoint: missing meta key '" + key + "'");
}

double Checkpoint::meta_num(const std::string& key, std::size_t idx) const {
  const auto& vals = meta_values(key);
  if (idx >= vals.size())
    throw std::runtime_error("checkpoint: meta key '" + key + "' has no index " +
                             std::to_string(idx));
  return parse_num(vals[idx], key.c_str());
}

const std::string& Checkpoint::meta_str(const std::string& key, std::size_t idx) const {
  const auto& vals = meta_values(key);
  if (idx >= vals.size())
    throw std::runtime_error("checkpoint: meta key '" + key + "' has no index " +
                             std::to_string(idx));
  return vals[idx];
}

nn::Network& Checkpoint::net(const std::string& name) {
  for (auto& n : nets)
    if (n.name() == name) return n;
  throw std::runtime_error("checkpoint: no network named '" + name + "'");
}

const nn::Network& Checkpoint::net(const std::string& name) const {
  for (const auto& n : nets)
    if (n.name() == name) return n;
  throw std::runtime_error("checkpoint: no network named '" + name + "'");
}

bool Checkpoint::has_net(const std::string& name) const {
  for (const auto& n : nets)
    if (n.name() == name) return true;
  return false;
}

std::string layer_line(const nn::LayerSpec& spec) {
  std::ostringstream os;
  if (const auto* c = std::get_if<nn::Conv1d>(&spec)) {
    os << "layer conv1d " << c->in_ch << " " << c->out_ch << " " << c->kernel << " " << c->stride;
  } else if (const auto* l = std::get_if<nn::Linear>(&spec)) {
    os << "layer linear " << l->in << " " << l->out;
  } else if (const auto* ls = std::get_if<nn::Lstm>(&spec)) {
    os << "layer lstm " << ls->in << " " << ls->hidden << " "
       << (ls->return_sequence ? "seq" : "last");
  } else if (const auto* d = std::get_if<nn::Dropout>(&spec)) {
    os << "layer dropout " << format_f64(d->p);
  } else if (const auto* a = std::get_if<nn::Activation>(&spec)) {
    os << "layer activation " << (a->kind == nn::ActKind::tanh ? "tanh" : "relu");
  } else {
    os << "layer flatten";
  }
  return os.str();
}

nn::LayerSpec parse_layer_line(const std::string& line) {
  const auto t = split(line);
  auto need = [&](std::size_t n) {
    if (t.size() != n) throw std::runtime_error("checkpoint: malformed layer line '" + line + "'");
  };
  if (t.size() < 2 || t[0] != "layer")
    throw std::runtime_error("checkpoint: malformed layer line '" + line + "'");
  const std::string& kind = t[1];
  auto num = [&](std::size_t i) {
    return static_cast<std::size_t>(parse_num(t[i], "layer line"));
  };
  if (kind == "conv1d") {
    need(6);
    return nn::Conv1d{num(2), num(3), num(4), num(5)};
  }
  if (kind == "linear") {
    need(4);
    return nn::Linear{num(2), num(3)};
  }
  if (kind == "lstm") {
    need(5);
    if (t[4] != "seq" && t[4] != "last")
      throw std::runtime_error("checkpoint: malformed layer line '" + line + "'");
    return nn::Lstm{num(2), num(3), t[4] == "seq"};
  }
  if (kind == "dropout") {
    need(3);
    return nn::Dropout{parse_num(t[2], "dropout p")};
  }
  if (kind == "activation") {
    need(3);
    if (t[2] == "tanh") return nn::Activation{nn::ActKind::tanh};
    if (t[2] == "relu") return nn::Activation{nn::ActKind::relu};
    throw std::runtime_error("checkpoint: unknown activation '" + t[2] + "'");
  }
  if (kind == "flatten") {
    need(2);
    return nn::Flatten{};
  }
  throw std::runtime_error("checkpoint: unknown layer kind '" + kind + "'");
}

void save(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for write");

  os << kMagic << " " << kVersion << "\n";
  for (const auto& kv : c.meta) {
    os << "meta " << kv.first;
    for (const auto& v : kv.second) os << " " << v;
    os << "\n";
  }
  std::size_t total = 0;
  for (const auto& n : c.nets) {
    check_token(n.name(), "network name");
    os << "net " << n.name() << "\n";
    for (const auto& l : n.layers()) os << layer_line(l) << "\n";
    os << "end\n";
    total += n.param_count();
  }
  os << "blob " << total << "\n";
  for (const auto& n : c.nets)
    for (const auto& p : n.params())
      for (std::size_t i = 0; i < p.size(); ++i) write_f64_le(os, p[i]);
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: empty file");
  {
    const auto t = split(line);
    if (t.size() != 2 || t[0] != kMagic)
      throw std::runtime_error("checkpoint: '" + path.string() + "' is not a checkpoint file");
    if (parse_num(t[1], "container version") != kVersion)
      throw std::runtime_error("checkpoint: unsupported container version " + t[1]);
  }

  Checkpoint c;
  std::size_t declared = 0;
  bool saw_blob = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto t = split(line);
    if (t[0] == "meta") {
      if (t.size() < 2) throw std::runtime_error("checkpoint: malformed meta line");
      c.meta.emplace_back(t[1], std::vector<std::string>(t.begin() + 2, t.end()));
    } else if (t[0] == "net") {
      if (t.size() != 2) throw std::runtime_error("checkpoint: malformed net line");
      std::vector<nn::LayerSpec> specs;
      std::string name = t[1];
      while (std::getline(is, line)) {
        if (line == "end") break;
        specs.push_back(parse_layer_line(line));
      }
      c.nets.emplace_back(std::move(specs), std::move(name));
    } else if (t[0] == "blob") {
      if (t.size() != 2) throw std::runtime_error("checkpoint: malformed blob line");
      declared = static_cast<std::size_t>(parse_num(t[1], "blob count"));
      saw_blob = true;
      break;
    } else {
      throw std::runtime_error("checkpoint: unknown header line '" + line + "'");
    }
  }
  if (!saw_blob) throw std::runtime_error("checkpoint: missing blob section");

  std::size_t required = 0;
  for (const auto& n : c.nets) required += n.param_count();
  if (declared != required)
    throw std::runtime_error("checkpoint: blob declares " + std::to_string(declared) +
                             " values but layers require " + std::to_string(required));

  for (auto& n : c.nets)
    for (auto& p : n.params_mut())
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = read_f64_le(is);
  return c;
}

}  // namespace softfin::ckpt
