#include "softfin/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "softfin/checkpoint.hpp"
#include "softfin/datagen.hpp"

namespace softfin {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// command-space affine map: command = mid + half * tanh(u)
struct Affine {
  double mid, half;
};

Affine affine_for(std::size_t dim) {
  if (dim == 0) return {(kCmdAngleLo + kCmdAngleHi) / 2.0, (kCmdAngleHi - kCmdAngleLo) / 2.0};
  return {(kCmdOmegaLo + kCmdOmegaHi) / 2.0, (kCmdOmegaHi - kCmdOmegaLo) / 2.0};
}

// log(1 - tanh(u)^2) without catastrophic cancellation at large |u|
double log1m_tanh2(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : 1.0 - 1.0 / (1.0 + std::exp(x)); }

double log_std_from_raw(double raw, const PolicyConfig& cfg) {
  return cfg.log_std_lo + (cfg.log_std_hi - cfg.log_std_lo) * sigmoid(raw);
}

// d(log_std)/d(raw)
double log_std_slope(double raw, const PolicyConfig& cfg) {
  const double s = sigmoid(raw);
  return (cfg.log_std_hi - cfg.log_std_lo) * s * (1.0 - s);
}

}  // namespace

// ---------------------------------------------------------------------------
// environments

void PlantEnv::reset(std::uint64_t seed) {
  state_ = PlantState{};
  rng_ = Rng(seed);
}

void PlantEnv::run(const MotorCommand& cmd, std::size_t n_ticks, std::vector<ForceSample>& out) {
  for (std::size_t i = 0; i < n_ticks; ++i) out.push_back(plant_step(state_, cmd, params_, rng_));
}

void SurrogateEnv::run(const MotorCommand& cmd, std::size_t n_ticks,
                       std::vector<ForceSample>& out) {
  for (std::size_t i = 0; i < n_ticks; ++i) sim_.tick(cmd);
  sim_.flush_forces(out);
}

// ---------------------------------------------------------------------------
// observation encoding

std::size_t state_dim(std::size_t k) { return 3 + 2 * (k + 1); }

std::vector<double> encode_state(double theta, double ref_x, double ref_y,
                                 const std::vector<MotorCommand>& history, std::size_t k) {
  std::vector<double> s;
  s.reserve(state_dim(k));
  s.push_back(theta);
  s.push_back(ref_x);
  s.push_back(ref_y);
  for (std::size_t i = 0; i < k + 1; ++i) {
    const MotorCommand a = i < history.size() ? history[i] : kNeutralAction;
    s.push_back(a.angle);
    s.push_back(a.omega);
  }
  return s;
}

// ---------------------------------------------------------------------------
// policy

Policy::Policy(const PolicyConfig& cfg)
    : cfg_(cfg),
      trunk_({nn::Lstm{cfg.state_dim, cfg.hidden, true}, nn::Linear{cfg.hidden, cfg.hidden},
              nn::Activation{nn::ActKind::relu}},
             "trunk"),
      actor_({nn::Linear{cfg.hidden, 4}}, "actor"),
      critic_({nn::Linear{cfg.hidden, 1}}, "critic") {}

std::size_t Policy::param_count() const {
  return trunk_.param_count() + actor_.param_count() + critic_.param_count();
}

void Policy::init(Rng& rng) {
  trunk_.init(rng);
  actor_.init(rng);
  critic_.init(rng);
}

MotorCommand squash_action(const double* u, const PolicyConfig& cfg) {
  MotorCommand cmd;
  double* out[2] = {&cmd.angle, &cmd.omega};
  for (std::size_t d = 0; d < 2; ++d) {
    const Affine af = affine_for(d);
    const double uc = clampd(u[d], -cfg.presquash_clamp, cfg.presquash_clamp);
    *out[d] = af.mid + af.half * std::tanh(uc);
  }
  return cmd;
}

double squashed_logprob(const double* u, const double* mean, const double* log_std,
                        const PolicyConfig& cfg) {
  (void)cfg;
  double lp = 0.0;
  for (std::size_t d = 0; d < 2; ++d) {
    const Affine af = affine_for(d);
    const double sd = std::exp(log_std[d]);
    const double z = (u[d] - mean[d]) / sd;
    lp += -0.5 * z * z - log_std[d] - 0.5 * kLog2Pi;  // gaussian density at u
    lp -= std::log(af.half) + log1m_tanh2(u[d]);      // tanh + affine jacobian
  }
  return lp;
}

Policy::Act Policy::act(const std::vector<double>& obs, std::vector<nn::LstmState>& state,
                        bool sample, Rng& rng) const {
  if (obs.size() != cfg_.state_dim)
    throw std::invalid_argument("policy: obs has " + std::to_string(obs.size()) +
                                " values, expected " + std::to_string(cfg_.state_dim));
  Tensor x({1, 1, cfg_.state_dim});
  std::memcpy(x.data(), obs.data(), obs.size() * sizeof(double));
  const Tensor feat = trunk_.forward(x, nn::Mode::eval, nullptr, &state);
  const Tensor head = actor_.forward(feat, nn::Mode::eval);
  const Tensor val = critic_.forward(feat, nn::Mode::eval);

  for (std::size_t i = 0; i < 4; ++i)
    if (!std::isfinite(head.data()[i]) || !std::isfinite(val.data()[0]))
      throw std::runtime_error("policy: non-finite network output");

  Act a;
  a.value = val.data()[0];
  double mean[2], log_std[2];
  for (std::size_t d = 0; d < 2; ++d) {
    mean[d] = head.data()[d];
    log_std[d] = log_std_from_raw(head.data()[2 + d], cfg_);
    double u = mean[d];
    if (sample) u += std::exp(log_std[d]) * rng.normal();
    a.u[d] = clampd(u, -cfg_.presquash_clamp, cfg_.presquash_clamp);
    a.entropy += log_std[d] + 0.5 * (1.0 + kLog2Pi);
  }
  a.command = squash_action(a.u, cfg_);
  a.logprob = squashed_logprob(a.u, mean, log_std, cfg_);
  return a;
}

// ---------------------------------------------------------------------------
// rollout

std::size_t ticks_for_step(std::size_t t) { return 33 + (t % 3 == 2 ? 1 : 0); }

Trajectory dual_rate_rollout(const Policy& policy, ControlEnv& env, double ref_x, double ref_y,
                             std::size_t n_control_steps, const RewardParams& rp, bool sample,
                             Rng& rng, std::size_t history_k) {
  Trajectory traj;
  traj.obs.reserve(n_control_steps);
  std::vector<nn::LstmState> state = policy.initial_state();
  std::vector<MotorCommand> history;  // newest first
  ForceWindow win(rp.window);
  std::vector<ForceSample> forces;
  std::size_t cycle_ticks = 0;

  for (std::size_t t = 0; t < n_control_steps; ++t) {
    const std::vector<double> obs = encode_state(env.theta(), ref_x, ref_y, history, history_k);
    traj.carry.push_back(state[0]);
    const Policy::Act a = policy.act(obs, state, sample, rng);

    const std::size_t n_ticks = ticks_for_step(t);
    cycle_ticks += n_ticks;
    if (t % 3 == 2) {
      if (cycle_ticks != 100)
        throw std::logic_error("dual-rate rollout: 3-step cycle has " +
                               std::to_string(cycle_ticks) + " ticks, expected 100");
      cycle_ticks = 0;
    }
    forces.clear();
    env.run(a.command, n_ticks, forces);
    for (const ForceSample& f : forces) win.push(f.fx, f.fy);

    traj.obs.push_back(obs);
    traj.u.push_back(a.u[0]);
    traj.u.push_back(a.u[1]);
    traj.logprob.push_back(a.logprob);
    traj.value.push_back(a.value);
    traj.reward.push_back(step_reward(win, ref_x, ref_y, rp));
    traj.episode_start.push_back(t == 0 ? 1 : 0);
    traj.mean_abs_fe_x.push_back(std::abs(win.mean_x() - ref_x));
    traj.mean_abs_fe_y.push_back(std::abs(win.mean_y() - ref_y));

    history.insert(history.begin(), a.command);
    if (history.size() > history_k + 1) history.resize(history_k + 1);
  }

  // truncation bootstrap: critic value of the state after the last step
  const std::vector<double> obs_end = encode_state(env.theta(), ref_x, ref_y, history, history_k);
  Tensor x({1, 1, obs_end.size()});
  std::memcpy(x.data(), obs_end.data(), obs_end.size() * sizeof(double));
  std::vector<nn::LstmState> end_state = state;
  const Tensor feat = policy.trunk().forward(x, nn::Mode::eval, nullptr, &end_state);
  traj.bootstrap_value = policy.critic().forward(feat, nn::Mode::eval).data()[0];
  return traj;
}

// ---------------------------------------------------------------------------
// gae

GaeResult gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                         const std::vector<std::uint8_t>& episode_start, double bootstrap,
                         double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || episode_start.size() != n)
    throw std::invalid_argument("gae: rewards, values, episode_start must have equal length");
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double carry = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const bool last = i + 1 == n;
    // the final step is truncated (bootstrapped); an interior episode end is a
    // hard boundary with no value beyond it
    const bool boundary = !last && episode_start[i + 1] != 0;
    const double next_value = last ? bootstrap : (boundary ? 0.0 : values[i + 1]);
    if (boundary) carry = 0.0;
    const double delta = rewards[i] + gamma * next_value - values[i];
    carry = delta + gamma * lambda * carry;
    out.advantages[i] = carry;
    out.returns[i] = carry + values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// ppo update

PpoSegmentStats ppo_segment_grads(const Policy& policy, const Trajectory& traj,
                                  const std::vector<double>& adv,
                                  const std::vector<double>& returns, std::size_t start,
                                  std::size_t len, const PpoOpts& opts,
                                  std::vector<Tensor>& grads) {
  if (len == 0 || start + len > traj.obs.size())
    throw std::invalid_argument("ppo_segment_grads: segment out of range");
  const PolicyConfig& pc = policy.config();
  const std::size_t dim = pc.state_dim;
  const std::size_t L = len;

  Tensor x({1, L, dim});
  for (std::size_t i = 0; i < L; ++i)
    std::memcpy(x.data() + i * dim, traj.obs[start + i].data(), dim * sizeof(double));
  std::vector<nn::LstmState> state{{traj.carry[start].h, traj.carry[start].c}};

  nn::Tape trunk_tape, actor_tape, critic_tape;
  const Tensor feat = policy.trunk().forward(x, nn::Mode::train, nullptr, &state, &trunk_tape);
  const Tensor head = policy.actor().forward(feat, nn::Mode::train, nullptr, nullptr, &actor_tape);
  const Tensor val = policy.critic().forward(feat, nn::Mode::train, nullptr, nullptr,
                                             &critic_tape);

  Tensor head_grad({1, L, 4});
  Tensor val_grad({1, L, 1});
  head_grad.fill(0.0);
  val_grad.fill(0.0);

  PpoSegmentStats st;
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t t = start + i;
    const double* h = head.data() + i * 4;
    const double* u = traj.u.data() + t * 2;
    double mean[2], log_std[2], ls_slope[2];
    for (std::size_t d = 0; d < 2; ++d) {
      mean[d] = h[d];
      log_std[d] = log_std_from_raw(h[2 + d], pc);
      ls_slope[d] = log_std_slope(h[2 + d], pc);
    }
    const double lp = squashed_logprob(u, mean, log_std, pc);
    const double ratio = std::exp(lp - traj.logprob[t]);
    const double a = adv[t];
    const double r_clip = clampd(ratio, 1.0 - opts.clip_eps, 1.0 + opts.clip_eps);
    const bool unclipped = ratio * a <= r_clip * a;
    st.policy_loss += -std::min(ratio * a, r_clip * a) / double(L);
    st.approx_kl += ((ratio - 1.0) - (lp - traj.logprob[t])) / double(L);
    if (std::abs(ratio - 1.0) > opts.clip_eps) st.clip_fraction += 1.0 / double(L);

    // d(total)/d(logprob): the surrogate contributes only where the unclipped
    // branch is active (the clamp has zero slope outside the trust region)
    const double dlp = unclipped ? -a * ratio / double(L) : 0.0;
    for (std::size_t d = 0; d < 2; ++d) {
      const double sd = std::exp(log_std[d]);
      const double z = (u[d] - mean[d]) / sd;
      head_grad.data()[i * 4 + d] = dlp * z / sd;
      head_grad.data()[i * 4 + 2 + d] =
          ls_slope[d] * (dlp * (z * z - 1.0) - opts.entropy_coef / double(L));
      st.entropy += (log_std[d] + 0.5 * (1.0 + kLog2Pi)) / double(L);
    }

    const double verr = val.data()[i] - returns[t];
    st.value_loss += verr * verr / double(L);
    val_grad.data()[i] = opts.value_coef * 2.0 * verr / double(L);
  }
  st.total = st.policy_loss + opts.value_coef * st.value_loss - opts.entropy_coef * st.entropy;

  const nn::Grads hg = policy.actor().backward(actor_tape, head_grad);
  const nn::Grads vg = policy.critic().backward(critic_tape, val_grad);
  Tensor feat_grad = hg.input;
  for (std::size_t i = 0; i < feat_grad.size(); ++i) feat_grad.data()[i] += vg.input.data()[i];
  const nn::Grads tg = policy.trunk().backward(trunk_tape, feat_grad);

  grads.clear();
  grads.reserve(tg.params.size() + hg.params.size() + vg.params.size());
  for (const Tensor& g : tg.params) grads.push_back(g);
  for (const Tensor& g : hg.params) grads.push_back(g);
  for (const Tensor& g : vg.params) grads.push_back(g);
  return st;
}

PpoDiag ppo_update(Policy& policy, const Trajectory& traj, const GaeResult& gae, nn::Adam& adam,
                   const PpoOpts& opts) {
  const std::size_t n = traj.obs.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty trajectory");
  if (gae.advantages.size() != n || traj.carry.size() != n)
    throw std::invalid_argument("ppo_update: trajectory/gae size mismatch");

  // advantage normalization over the whole horizon
  std::vector<double> adv(gae.advantages);
  const double a_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / double(n);
  double a_var = 0.0;
  for (double& a : adv) {
    a -= a_mean;
    a_var += a * a;
  }
  const double a_std = std::sqrt(a_var / double(n));
  if (a_std > 1e-8)
    for (double& a : adv) a /= a_std;

  // sequence-contiguous segments, cut at minibatch size and episode starts so
  // each replays from its stored recurrent carry
  struct Segment {
    std::size_t start, len;
  };
  std::vector<Segment> segments;
  std::size_t s = 0;
  while (s < n) {
    std::size_t e = s + 1;
    while (e < n && e - s < opts.minibatch && traj.episode_start[e] == 0) ++e;
    segments.push_back({s, e - s});
    s = e;
  }

  Rng order_rng(derive_seed(opts.seed, "ppo/order"));
  PpoDiag diag;
  double mb_count = 0.0;
  std::vector<Tensor> grads;

  for (std::size_t epoch = 0; epoch < opts.epochs && !diag.kl_stopped; ++epoch) {
    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);
    ++diag.epochs_run;

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const Segment seg = segments[order[oi]];
      const PpoSegmentStats st =
          ppo_segment_grads(policy, traj, adv, gae.returns, seg.start, seg.len, opts, grads);

      diag.policy_loss += st.policy_loss;
      diag.value_loss += st.value_loss;
      diag.entropy += st.entropy;
      diag.clip_fraction += st.clip_fraction;
      diag.approx_kl += st.approx_kl;
      mb_count += 1.0;
      if (st.approx_kl > opts.kl_stop) {
        // the policy already drifted too far from the data: applying this
        // step would act on unreliable ratios, so drop it and end the update
        std::fprintf(stderr, "ppo: early stop, approx KL %.3f exceeds %.3f\n", st.approx_kl,
                     opts.kl_stop);
        diag.kl_stopped = true;
        break;
      }

      if (opts.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (const Tensor& g : grads)
          for (std::size_t i = 0; i < g.size(); ++i) sq += g.data()[i] * g.data()[i];
        const double norm = std::sqrt(sq);
        if (norm > opts.max_grad_norm) {
          const double scale = opts.max_grad_norm / norm;
          for (Tensor& g : grads)
            for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= scale;
        }
      }
      adam.step(grads);
    }
  }

  diag.policy_loss /= mb_count;
  diag.value_loss /= mb_count;
  diag.entropy /= mb_count;
  diag.approx_kl /= mb_count;
  diag.clip_fraction /= mb_count;
  return diag;
}

// ---------------------------------------------------------------------------
// training drivers

PolicyCheckpoint train_policy_env(ControlEnv& env, const Config& cfg, std::uint64_t seed,
                                  std::optional<std::pair<double, double>> fixed_ref,
                                  std::size_t total_steps, TrainStats* stats) {
  if (cfg.episode_steps < 2) throw std::invalid_argument("train: episode_steps must be >= 2");
  PolicyConfig pc;
  pc.state_dim = state_dim(cfg.action_history);
  PolicyCheckpoint best;
  best.policy = Policy(pc);
  best.mode = fixed_ref ? "grid" : "single";
  if (fixed_ref) {
    best.ref_x = fixed_ref->first;
    best.ref_y = fixed_ref->second;
  }
  best.seed = seed;

  Policy policy(pc);
  Rng init_rng(derive_seed(seed, "rl/init"));
  policy.init(init_rng);
  nn::AdamConfig ac;
  ac.lr = cfg.policy_lr;
  nn::Adam adam({&policy.trunk(), &policy.actor(), &policy.critic()}, ac);

  Rng ref_rng(derive_seed(seed, "rl/refs"));
  Rng act_rng(derive_seed(seed, "rl/actions"));

  const std::size_t episodes_per_update =
      std::max<std::size_t>(1, cfg.horizon / cfg.episode_steps);

  double best_reward = -std::numeric_limits<double>::infinity();
  std::size_t done_steps = 0, update_idx = 0, episode_idx = 0;

  while (done_steps < total_steps) {
    Trajectory batch;
    GaeResult batch_gae;
    double update_reward = 0.0;

    for (std::size_t e = 0; e < episodes_per_update; ++e) {
      double rx, ry;
      if (fixed_ref) {
        rx = fixed_ref->first;
        ry = fixed_ref->second;
      } else {
        rx = ref_rng.uniform(cfg.ref_x_lo, cfg.ref_x_hi);
        ry = ref_rng.uniform(cfg.ref_y_lo, cfg.ref_y_hi);
      }
      env.reset(derive_seed(seed, "rl/episode", episode_idx++));
      Trajectory traj = dual_rate_rollout(policy, env, rx, ry, cfg.episode_steps, cfg.reward,
                                          /*sample=*/true, act_rng, cfg.action_history);
      const GaeResult g = gae_advantages(traj.reward, traj.value, traj.episode_start,
                                         traj.bootstrap_value, cfg.gamma, cfg.gae_lambda);
      const double ep_reward =
          std::accumulate(traj.reward.begin(), traj.reward.end(), 0.0) / double(cfg.episode_steps);
      if (stats) stats->episode_rewards.push_back(ep_reward);
      update_reward += ep_reward / double(episodes_per_update);

      batch.obs.insert(batch.obs.end(), traj.obs.begin(), traj.obs.end());
      batch.u.insert(batch.u.end(), traj.u.begin(), traj.u.end());
      batch.logprob.insert(batch.logprob.end(), traj.logprob.begin(), traj.logprob.end());
      batch.value.insert(batch.value.end(), traj.value.begin(), traj.value.end());
      batch.reward.insert(batch.reward.end(), traj.reward.begin(), traj.reward.end());
      batch.episode_start.insert(batch.episode_start.end(), traj.episode_start.begin(),
                                 traj.episode_start.end());
      for (nn::LstmState& c : traj.carry) batch.carry.push_back(std::move(c));
      batch_gae.advantages.insert(batch_gae.advantages.end(), g.advantages.begin(),
                                  g.advantages.end());
      batch_gae.returns.insert(batch_gae.returns.end(), g.returns.begin(), g.returns.end());
      done_steps += cfg.episode_steps;
    }

    PpoOpts po;
    po.clip_eps = cfg.clip_eps;
    po.epochs = cfg.ppo_epochs;
    po.minibatch = cfg.minibatch;
    po.value_coef = cfg.value_coef;
    po.entropy_coef = cfg.entropy_coef;
    po.kl_stop = cfg.kl_stop;
    po.seed = derive_seed(seed, "rl/ppo", update_idx);
    ppo_update(policy, batch, batch_gae, adam, po);
    ++update_idx;

    if (update_reward > best_reward) {
      best_reward = update_reward;
      best.policy = policy;
      best.steps = done_steps;
    }
  }

  if (stats) {
    Rng eval_rng(derive_seed(seed, "rl/eval"));
    for (std::size_t i = 0; i < 10; ++i) {
      double rx = best.ref_x, ry = best.ref_y;
      if (!fixed_ref) {
        rx = eval_rng.uniform(cfg.ref_x_lo, cfg.ref_x_hi);
        ry = eval_rng.uniform(cfg.ref_y_lo, cfg.ref_y_hi);
      }
      stats->eval_rewards.push_back(
          evaluate_policy(best.policy, env, rx, ry, cfg.episode_steps, cfg.reward, i));
    }
  }
  return best;
}

PolicyCheckpoint train_single(const SurrogateModel& surrogate, const Config& cfg,
                              std::uint64_t seed, TrainStats* stats) {
  SurrogateEnv env(surrogate);
  return train_policy_env(env, cfg, seed, std::nullopt, cfg.single_steps, stats);
}

std::vector<std::pair<double, double>> default_grid_points() {
  return {{1.0, -1.0}, {2.0, -1.0}, {2.0, 0.0}, {3.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}};
}

GridBank train_grid(const SurrogateModel& surrogate,
                    const std::vector<std::pair<double, double>>& points, const Config& cfg,
                    std::uint64_t seed, std::vector<TrainStats>* stats) {
  GridBank bank;
  for (std::size_t i = 0; i < points.size(); ++i) {
    TrainStats st;
    SurrogateEnv env(surrogate);
    try {
      bank.policies.push_back(train_policy_env(env, cfg, derive_seed(seed, "rl/grid", i),
                                               points[i], cfg.grid_steps, stats ? &st : nullptr));
    } catch (const std::exception& e) {
      // a blown-up point should not take down the rest of the bank
      bank.failures.push_back({points[i].first, points[i].second, e.what()});
      std::fprintf(stderr, "train_grid: point (%g, %g) failed: %s\n", points[i].first,
                   points[i].second, e.what());
      continue;
    }
    if (stats) stats->push_back(std::move(st));
  }
  return bank;
}

const PolicyCheckpoint& grid_select(const GridBank& bank, double ref_x, double ref_y) {
  if (bank.policies.empty()) throw std::invalid_argument("grid_select: empty bank");
  const PolicyCheckpoint* best = nullptr;
  for (const PolicyCheckpoint& p : bank.policies) {
    if (best == nullptr) {
      best = &p;
      continue;
    }
    const double dx = p.ref_x - ref_x, dy = p.ref_y - ref_y;
    const double bx = best->ref_x - ref_x, by = best->ref_y - ref_y;
    const double d2 = dx * dx + dy * dy, b2 = bx * bx + by * by;
    if (d2 < b2 || (d2 == b2 && (p.ref_x < best->ref_x ||
                                 (p.ref_x == best->ref_x && p.ref_y < best->ref_y))))
      best = &p;
  }
  return *best;
}

double evaluate_policy(const Policy& policy, ControlEnv& env, double ref_x, double ref_y,
                       std::size_t n_control_steps, const RewardParams& rp,
                       std::uint64_t env_seed) {
  env.reset(env_seed);
  Rng unused(0);
  const Trajectory traj = dual_rate_rollout(policy, env, ref_x, ref_y, n_control_steps, rp,
                                            /*sample=*/false, unused);
  return std::accumulate(traj.reward.begin(), traj.reward.end(), 0.0) /
         double(n_control_steps);
}

double random_baseline(ControlEnv& env, double ref_x, double ref_y, std::size_t n_control_steps,
                       const RewardParams& rp, std::uint64_t seed) {
  env.reset(derive_seed(seed, "baseline/env"));
  Rng cmd_rng(derive_seed(seed, "baseline/cmd"));
  ForceWindow win(rp.window);
  std::vector<ForceSample> forces;
  double total = 0.0;
  for (std::size_t t = 0; t < n_control_steps; ++t) {
    const MotorCommand cmd = sample_command(cmd_rng);
    forces.clear();
    env.run(cmd, ticks_for_step(t), forces);
    for (const ForceSample& f : forces) win.push(f.fx, f.fy);
    total += step_reward(win, ref_x, ref_y, rp);
  }
  return total / double(n_control_steps);
}

// ---------------------------------------------------------------------------
// persistence

namespace {

ckpt::Checkpoint to_checkpoint(const PolicyCheckpoint& p) {
  ckpt::Checkpoint c;
  const PolicyConfig& pc = p.policy.config();
  c.set_meta("kind", {"policy"});
  c.set_meta("mode", {p.mode});
  c.set_meta_num("ref", {p.ref_x, p.ref_y});
  c.set_meta_num("seed", {double(p.seed)});
  c.set_meta_num("steps", {double(p.steps)});
  c.set_meta_num("state_dim", {double(pc.state_dim)});
  c.set_meta_num("hidden", {double(pc.hidden)});
  c.set_meta_num("log_std_range", {pc.log_std_lo, pc.log_std_hi});
  c.set_meta_num("presquash_clamp", {pc.presquash_clamp});
  c.nets = {p.policy.trunk(), p.policy.actor(), p.policy.critic()};
  return c;
}

PolicyCheckpoint from_checkpoint(const ckpt::Checkpoint& c, const std::string& where) {
  if (!c.has_meta("kind") || c.meta_str("kind") != "policy")
    throw std::runtime_error(where + ": not a policy checkpoint");
  PolicyConfig pc;
  pc.state_dim = std::size_t(c.meta_num("state_dim"));
  pc.hidden = std::size_t(c.meta_num("hidden"));
  pc.log_std_lo = c.meta_num("log_std_range", 0);
  pc.log_std_hi = c.meta_num("log_std_range", 1);
  pc.presquash_clamp = c.meta_num("presquash_clamp");
  PolicyCheckpoint p;
  p.policy = Policy(pc);
  p.policy.trunk() = c.net("trunk");
  p.policy.actor() = c.net("actor");
  p.policy.critic() = c.net("critic");
  p.mode = c.meta_str("mode");
  p.ref_x = c.meta_num("ref", 0);
  p.ref_y = c.meta_num("ref", 1);
  p.seed = std::uint64_t(c.meta_num("seed"));
  p.steps = std::size_t(c.meta_num("steps"));
  return p;
}

}  // namespace

void save_policy(const PolicyCheckpoint& p, const std::filesystem::path& path) {
  ckpt::save(to_checkpoint(p), path);
}

PolicyCheckpoint load_policy(const std::filesystem::path& path) {
  return from_checkpoint(ckpt::load(path), path.string());
}

void save_grid(const GridBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["policies"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < bank.policies.size(); ++i) {
    const PolicyCheckpoint& p = bank.policies[i];
    char name[32];
    std::snprintf(name, sizeof(name), "policy_%03zu.ckpt", i);
    save_policy(p, dir / name);
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["ref_x"] = p.ref_x;
    entry["ref_y"] = p.ref_y;
    entry["seed"] = p.seed;
    entry["steps"] = p.steps;
    manifest["policies"].push_back(entry);
  }
  std::ofstream out(dir / "manifest");
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_grid: cannot write " + (dir / "manifest").string());
}

GridBank load_grid(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest");
  if (!in) throw std::runtime_error("load_grid: cannot open " + (dir / "manifest").string());
  nlohmann::ordered_json manifest;
  in >> manifest;
  GridBank bank;
  for (const auto& entry : manifest.at("policies"))
    bank.policies.push_back(load_policy(dir / entry.at("file").get<std::string>()));
  return bank;
}

}  // namespace softfin
