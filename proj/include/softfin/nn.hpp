#pragma once

// minimal f64 training substrate: conv1d / linear / lstm / dropout /
// activation layers with explicit forward tapes and full backprop (bptt for
// the lstm), an adam optimizer, and a finite-difference gradient checker.
// everything runs on the kernel lanes in kernels.hpp.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "softfin/rng.hpp"
#include "softfin/tensor.hpp"

namespace softfin::nn {

enum class Mode { train, eval };
enum class ActKind { tanh, relu };

struct Conv1d {
  std::size_t in_ch, out_ch, kernel, stride;
};
struct Linear {
  std::size_t in, out;
};
struct Lstm {
  std::size_t in, hidden;
  bool return_sequence;
};
struct Dropout {
  double p;
};
struct Activation {
  ActKind kind;
};
struct Flatten {};

using LayerSpec = std::variant<Conv1d, Linear, Lstm, Dropout, Activation, Flatten>;

// recurrent carry for one lstm layer, batch-major [B, H]
struct LstmState {
  Tensor h, c;
};

class Network;

// forward record for one backward pass. single-use safety: the tape pins the
// parameter version it was recorded under; backward refuses a tape taken
// before any parameter mutation.
class Tape {
 public:
  std::uint64_t version() const { return version_; }

  struct ConvT {
    Tensor input;
  };
  struct LinearT {
    Tensor input;  // flattened [rows, in]
    std::vector<std::size_t> in_shape;
  };
  struct LstmT {
    Tensor x;       // [B, T, in]
    Tensor h_all;   // [T+1, B, H], slab 0 = incoming state
    Tensor c_all;   // [T+1, B, H]
    Tensor gates;   // [T, B, 4H] post-activation, order (i, f, g, o)
    Tensor tanh_c;  // [T, B, H]
  };
  struct DropT {
    Tensor mask;  // 0 or 1/(1-p)
  };
  struct ActT {
    Tensor saved;  // tanh: output; relu: input
  };
  struct FlatT {
    std::vector<std::size_t> in_shape;
  };
  using LayerT = std::variant<ConvT, LinearT, LstmT, DropT, ActT, FlatT>;

 private:
  friend class Network;
  std::vector<LayerT> layers_;
  std::uint64_t version_ = 0;
  Mode mode_ = Mode::train;
};

struct Grads {
  std::vector<Tensor> params;  // aligned with Network::params()
  Tensor input;
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<LayerSpec> layers, std::string name = "net");

  void init(Rng& rng);  // uniform +-sqrt(1/fan_in); lstm forget-gate bias = 1

  const std::string& name() const { return name_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t param_count() const;
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<Tensor>& params_mut() {  // mutation handle: invalidates live tapes
    ++version_;
    return params_;
  }
  std::vector<Tensor*> param_ptrs();
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  std::size_t lstm_layer_count() const;
  std::vector<LstmState> initial_state(std::size_t batch) const;

  // state: in-out carry for lstm layers (nullptr = zero state, discarded).
  // dropout_rng must be set for Mode::train when the net has dropout layers.
  Tensor forward(const Tensor& input, Mode mode, Rng* dropout_rng = nullptr,
                 std::vector<LstmState>* state = nullptr, Tape* tape = nullptr) const;
  Grads backward(const Tape& tape, const Tensor& output_grad) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Tensor> params_;
  std::vector<std::size_t> param_offset_;  // layer -> first param tensor index
  std::string name_;
  std::uint64_t version_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// adam with bias correction over one or more networks' parameters. refuses
// non-finite gradients (reports the network/tensor and worst magnitude).
class Adam {
 public:
  explicit Adam(std::vector<Network*> nets, AdamConfig cfg = {});
  void step(const std::vector<Tensor>& grads);  // concatenated in nets order
  std::size_t steps() const { return t_; }
  AdamConfig& config() { return cfg_; }

 private:
  std::vector<Network*> nets_;
  std::vector<Tensor*> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// central-difference check of analytic gradients for an arbitrary scalar loss
// over explicit parameter tensors. caps at 50k parameters (O(params) forward
// passes). rel err per element: |a - n| / max(|a| + |n|, 1e-8).
GradCheckResult gradient_check_fn(const std::vector<Tensor*>& params,
                                  const std::function<double()>& loss,
                                  const std::vector<Tensor>& analytic, double h = 1e-5);

// network convenience wrapper: loss = sum(weights . output), dropout replayed
// from a fixed seed so the loss surface is deterministic during differencing
GradCheckResult gradient_check(Network& net, const Tensor& input, const Tensor& loss_weights,
                               Mode mode, std::uint64_t dropout_seed, double h = 1e-5);

}  // namespace softfin::nn
