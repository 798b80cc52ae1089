#pragma once

// recurrent ppo for force tracking: a tanh-squashed gaussian policy with an
// lstm trunk decides a motor command at 3 hz; the environment (surrogate for
// training, plant for evaluation) integrates 100 hz ticks between decisions
// in a fixed 33/33/34 pattern so three control steps are exactly one second.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "softfin/config.hpp"
#include "softfin/nn.hpp"
#include "softfin/plant.hpp"
#include "softfin/reward.hpp"
#include "softfin/rng.hpp"
#include "softfin/surrogate.hpp"
#include "softfin/tensor.hpp"

namespace softfin {

// ---------------------------------------------------------------------------
// environment interface: the control loop is identical over surrogate and
// plant; only this seam differs (training never sees the plant, evaluation
// never sees the surrogate)

class ControlEnv {
 public:
  virtual ~ControlEnv() = default;
  virtual void reset(std::uint64_t seed) = 0;
  virtual double theta() const = 0;  // latest base angle, rad
  // integrate n_ticks at 100 hz under one held command, appending per-tick
  // forces to out
  virtual void run(const MotorCommand& cmd, std::size_t n_ticks,
                   std::vector<ForceSample>& out) = 0;
};

class PlantEnv final : public ControlEnv {
 public:
  explicit PlantEnv(const PlantParams& params) : params_(params), rng_(0) {}
  void reset(std::uint64_t seed) override;
  double theta() const override { return state_.theta_m; }
  void run(const MotorCommand& cmd, std::size_t n_ticks, std::vector<ForceSample>& out) override;

 private:
  PlantParams params_;
  PlantState state_;
  Rng rng_;
};

class SurrogateEnv final : public ControlEnv {
 public:
  explicit SurrogateEnv(const SurrogateModel& model) : sim_(model) {}
  void reset(std::uint64_t) override { sim_.reset(); }  // deterministic: seed unused
  double theta() const override { return sim_.theta(); }
  void run(const MotorCommand& cmd, std::size_t n_ticks, std::vector<ForceSample>& out) override;

 private:
  SurrogateSim sim_;
};

// ---------------------------------------------------------------------------
// observation encoding

inline constexpr MotorCommand kNeutralAction{0.0, 1.0};

// [theta, ref_x, ref_y, k+1 most recent (angle, omega) pairs, newest first],
// in raw physical units; history shorter than k+1 is padded with the neutral
// action (0, 1)
std::vector<double> encode_state(double theta, double ref_x, double ref_y,
                                 const std::vector<MotorCommand>& history, std::size_t k);
std::size_t state_dim(std::size_t k);  // 3 + 2 (k + 1)

// ---------------------------------------------------------------------------
// policy

struct PolicyConfig {
  std::size_t state_dim = 13;
  std::size_t hidden = 64;
  // log_std = lo + (hi - lo) * sigmoid(raw head output): bounded but smooth,
  // so the std can always be pushed back down (a hard clamp would freeze it
  // at the boundary once saturated)
  double log_std_lo = -4.0, log_std_hi = 1.0;
  double presquash_clamp = 10.0;  // keeps tanh strictly inside (-1, 1)
};

// lstm trunk + relu projection shared by a 4-unit actor head (mean and
// log-std per action dim) and a 1-unit critic head
class Policy {
 public:
  explicit Policy(const PolicyConfig& cfg = {});

  struct Act {
    MotorCommand command;     // squashed into the open command bounds
    double u[2];              // pre-squash sample (stored for ppo ratios)
    double logprob = 0.0;     // density of `command` (change of variables)
    double value = 0.0;
    double entropy = 0.0;     // pre-squash gaussian entropy
  };

  // advances `state` one control step. sample=false takes the mean action.
  Act act(const std::vector<double>& obs, std::vector<nn::LstmState>& state, bool sample,
          Rng& rng) const;

  std::vector<nn::LstmState> initial_state() const { return trunk_.initial_state(1); }

  const PolicyConfig& config() const { return cfg_; }
  nn::Network& trunk() { return trunk_; }
  nn::Network& actor() { return actor_; }
  nn::Network& critic() { return critic_; }
  const nn::Network& trunk() const { return trunk_; }
  const nn::Network& actor() const { return actor_; }
  const nn::Network& critic() const { return critic_; }
  std::size_t param_count() const;
  void init(Rng& rng);

 private:
  PolicyConfig cfg_;
  nn::Network trunk_, actor_, critic_;
};

// logprob of pre-squash sample u under (mean, log_std), including the tanh +
// affine change of variables into command space
double squashed_logprob(const double* u, const double* mean, const double* log_std,
                        const PolicyConfig& cfg);
MotorCommand squash_action(const double* u, const PolicyConfig& cfg);

// ---------------------------------------------------------------------------
// rollout

struct Trajectory {
  std::vector<std::vector<double>> obs;     // per step
  std::vector<double> u;                    // [T * 2] pre-squash actions
  std::vector<double> logprob, value, reward;
  std::vector<std::uint8_t> episode_start;  // 1 where a new episode begins
  std::vector<nn::LstmState> carry;         // trunk state before each step
  std::vector<double> mean_abs_fe_x, mean_abs_fe_y;  // window error magnitudes
  double bootstrap_value = 0.0;             // critic value after the last step
};

// runs `n_control_steps` decisions against env (caller resets the env),
// integrating 33/33/34 ticks per step (asserted: every 3 consecutive steps =
// 100 ticks). the trailing force window feeds step_reward; partial windows
// are allowed from step one. the policy's recurrent state starts fresh.
Trajectory dual_rate_rollout(const Policy& policy, ControlEnv& env, double ref_x, double ref_y,
                             std::size_t n_control_steps, const RewardParams& rp, bool sample,
                             Rng& rng, std::size_t history_k = 4);

// sim ticks for control step index t (33, 33, 34 cycling)
std::size_t ticks_for_step(std::size_t t);

// ---------------------------------------------------------------------------
// ppo

struct GaeResult {
  std::vector<double> advantages;  // raw (normalization happens per update)
  std::vector<double> returns;
};

// generalized advantage estimation over a trajectory that may contain several
// episodes (episode_start flags); values has one entry per step, bootstrap is
// the critic's value after the final step
GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<std::uint8_t>& episode_start, double bootstrap,
                         double gamma, double lambda);

struct PpoDiag {
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  double approx_kl = 0.0, clip_fraction = 0.0;
  std::size_t epochs_run = 0;
  bool kl_stopped = false;
};

struct PpoOpts {
  double clip_eps = 0.2;
  std::size_t epochs = 4;
  std::size_t minibatch = 64;   // contiguous steps per minibatch segment
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  double kl_stop = 0.5;         // skip the offending step and end the update
  double max_grad_norm = 0.5;   // global-norm gradient clip; 0 disables
  std::uint64_t seed = 0;
};

struct PpoSegmentStats {
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  double approx_kl = 0.0, clip_fraction = 0.0;
  double total = 0.0;  // policy + value_coef * value - entropy_coef * entropy
};

// analytic gradient of the ppo objective over one contiguous segment
// [start, start + len): clipped surrogate + value mse - entropy bonus, each
// averaged over the segment. `adv` must already be normalized. grads come
// back concatenated in (trunk, actor, critic) parameter order. exposed so
// gradient checks can finite-difference the objective independently.
PpoSegmentStats ppo_segment_grads(const Policy& policy, const Trajectory& traj,
                                  const std::vector<double>& adv,
                                  const std::vector<double>& returns, std::size_t start,
                                  std::size_t len, const PpoOpts& opts,
                                  std::vector<Tensor>& grads);

// clipped-surrogate update over sequence-contiguous minibatches; recurrent
// state is replayed from the stored per-step carries at segment starts
PpoDiag ppo_update(Policy& policy, const Trajectory& traj, const GaeResult& gae,
                   nn::Adam& adam, const PpoOpts& opts);

// ---------------------------------------------------------------------------
// training drivers

struct PolicyCheckpoint {
  Policy policy;
  std::string mode;          // "single" | "grid"
  double ref_x = 0.0, ref_y = 0.0;  // grid: the trained point; single: unused
  std::uint64_t seed = 0;
  std::size_t steps = 0;
};

struct TrainStats {
  std::vector<double> episode_rewards;  // mean per-step reward per episode
  std::vector<double> eval_rewards;     // post-training deterministic episodes
};

// env-generic ppo training loop: episodes of cfg.episode_steps are batched
// into horizons of >= cfg.horizon steps per update; per-update mean reward
// picks the checkpoint that is returned. fixed_ref nullopt -> the reference
// is drawn per episode from the configured ranges. train_single / train_grid
// wrap this with a SurrogateEnv.
PolicyCheckpoint train_policy_env(ControlEnv& env, const Config& cfg, std::uint64_t seed,
                                  std::optional<std::pair<double, double>> fixed_ref,
                                  std::size_t total_steps, TrainStats* stats = nullptr);

// single conditioned controller: per episode the reference is drawn uniformly
// from [ref_x_lo, ref_x_hi] x [ref_y_lo, ref_y_hi] and encoded in the state
PolicyCheckpoint train_single(const SurrogateModel& surrogate, const Config& cfg,
                              std::uint64_t seed, TrainStats* stats = nullptr);

// one fixed-reference policy per grid point
struct GridBank {
  std::vector<PolicyCheckpoint> policies;  // keyed by (ref_x, ref_y)
  struct Failure {
    double ref_x, ref_y;
    std::string what;
  };
  std::vector<Failure> failures;  // points whose training threw, bank kept
};

std::vector<std::pair<double, double>> default_grid_points();

GridBank train_grid(const SurrogateModel& surrogate,
                    const std::vector<std::pair<double, double>>& points, const Config& cfg,
                    std::uint64_t seed,
                    std::vector<TrainStats>* stats = nullptr);

// euclidean-nearest trained point; ties -> lexicographically smallest (x, y)
const PolicyCheckpoint& grid_select(const GridBank& bank, double ref_x, double ref_y);

// deterministic evaluation episodes (mean actions) on any env
double evaluate_policy(const Policy& policy, ControlEnv& env, double ref_x, double ref_y,
                       std::size_t n_control_steps, const RewardParams& rp,
                       std::uint64_t env_seed);

// uniform-random commands through the same dual-rate loop (baseline)
double random_baseline(ControlEnv& env, double ref_x, double ref_y,
                       std::size_t n_control_steps, const RewardParams& rp, std::uint64_t seed);

void save_policy(const PolicyCheckpoint& p, const std::filesystem::path& path);
PolicyCheckpoint load_policy(const std::filesystem::path& path);
void save_grid(const GridBank& bank, const std::filesystem::path& dir);
GridBank load_grid(const std::filesystem::path& dir);

}  // namespace softfin
