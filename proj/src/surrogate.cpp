#include "softfin/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "softfin/checkpoint.hpp"
#include "softfin/metrics.hpp"

namespace softfin {

namespace {

// decompose a shape around the channel axis: x is walked as
// [outer, channels, inner] regardless of rank
void channel_strides(const Tensor& x, std::size_t channel_dim, std::size_t& outer,
                     std::size_t& channels, std::size_t& inner) {
  if (channel_dim >= x.rank()) throw std::runtime_error("channel_dim out of range");
  outer = 1;
  inner = 1;
  for (std::size_t i = 0; i < channel_dim; ++i) outer *= x.dim(i);
  channels = x.dim(channel_dim);
  for (std::size_t i = channel_dim + 1; i < x.rank(); ++i) inner *= x.dim(i);
}

}  // namespace

NormStats compute_stats(const Tensor& x, std::size_t channel_dim) {
  if (!x.all_finite()) throw std::runtime_error("compute_stats: non-finite input");
  std::size_t outer, channels, inner;
  channel_strides(x, channel_dim, outer, channels, inner);
  const std::size_t n = outer * inner;
  if (n == 0) throw std::runtime_error("compute_stats: empty tensor");

  NormStats s;
  s.mean.assign(channels, 0.0);
  s.stddev.assign(channels, 0.0);
  const double* d = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* row = d + (o * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) s.mean[c] += row[i];
    }
  for (std::size_t c = 0; c < channels; ++c) s.mean[c] /= static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      const double* row = d + (o * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const double dv = row[i] - s.mean[c];
        s.stddev[c] += dv * dv;
      }
    }
  for (std::size_t c = 0; c < channels; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(n));
    if (!(s.stddev[c] > 1e-12))
      throw std::runtime_error("compute_stats: channel " + std::to_string(c) +
                               " has zero spread");
  }
  return s;
}

void normalize(Tensor& x, const NormStats& s, std::size_t channel_dim) {
  std::size_t outer, channels, inner;
  channel_strides(x, channel_dim, outer, channels, inner);
  if (channels != s.mean.size()) throw std::runtime_error("normalize: channel count mismatch");
  double* d = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      double* row = d + (o * channels + c) * inner;
      const double mu = s.mean[c], inv = 1.0 / s.stddev[c];
      for (std::size_t i = 0; i < inner; ++i) row[i] = (row[i] - mu) * inv;
    }
}

void denormalize(Tensor& x, const NormStats& s, std::size_t channel_dim) {
  std::size_t outer, channels, inner;
  channel_strides(x, channel_dim, outer, channels, inner);
  if (channels != s.mean.size()) throw std::runtime_error("denormalize: channel count mismatch");
  double* d = x.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      double* row = d + (o * channels + c) * inner;
      const double mu = s.mean[c], sd = s.stddev[c];
      for (std::size_t i = 0; i < inner; ++i) row[i] = row[i] * sd + mu;
    }
}

nn::Network make_posnet(std::size_t window) {
  if (window <= 8) throw std::runtime_error("make_posnet: window must exceed 8");
  const std::size_t flat = 32 * (window - 8);  // two k=5 valid convs: W-4-4
  return nn::Network(
      {
          nn::Conv1d{3, 16, 5, 1},
          nn::Activation{nn::ActKind::relu},
          nn::Conv1d{16, 32, 5, 1},
          nn::Activation{nn::ActKind::relu},
          nn::Flatten{},
          nn::Linear{flat, 64},
          nn::Activation{nn::ActKind::relu},
          nn::Linear{64, 32},
          nn::Activation{nn::ActKind::relu},
          nn::Linear{32, 1},
      },
      "posnet");
}

nn::Network make_forcenet() {
  return nn::Network(
      {
          nn::Lstm{2, 96, false},
          nn::Linear{96, 64},
          nn::Activation{nn::ActKind::relu},
          nn::Linear{64, 32},
          nn::Activation{nn::ActKind::relu},
          nn::Dropout{0.2},
          nn::Linear{32, 2},
      },
      "forcenet");
}

namespace {

// number of windowed examples a log contributes: targets at i = W, W+stride, …
std::size_t window_count(std::size_t rows, std::size_t window, std::size_t stride) {
  if (rows <= window) return 0;
  return (rows - window - 1) / stride + 1;
}

}  // namespace

WindowDataset make_posnet_dataset(const std::vector<LogData>& logs, std::size_t window,
                                  std::size_t stride) {
  if (stride == 0) throw std::runtime_error("make_posnet_dataset: stride must be positive");
  std::size_t n = 0;
  for (const auto& log : logs) n += window_count(log.size(), window, stride);
  WindowDataset ds{Tensor({n, 3, window}), Tensor({n, 1})};
  std::size_t ex = 0;
  for (const auto& log : logs)
    for (std::size_t i = window; i < log.size(); i += stride, ++ex) {
      double* in = ds.inputs.data() + ex * 3 * window;
      for (std::size_t j = 0; j < window; ++j) {
        const std::size_t t = i - window + 1 + j;
        in[0 * window + j] = log.cmd_angle[t];
        in[1 * window + j] = log.cmd_omega[t];
        in[2 * window + j] = log.theta[t - 1];
      }
      ds.targets[ex] = log.theta[i];
    }
  return ds;
}

WindowDataset make_forcenet_dataset(const std::vector<LogData>& logs, std::size_t window,
                                    std::size_t stride, double dt) {
  if (stride == 0) throw std::runtime_error("make_forcenet_dataset: stride must be positive");
  std::size_t n = 0;
  for (const auto& log : logs) n += window_count(log.size(), window, stride);
  WindowDataset ds{Tensor({n, window, 2}), Tensor({n, 2})};
  std::size_t ex = 0;
  for (const auto& log : logs)
    for (std::size_t i = window; i < log.size(); i += stride, ++ex) {
      double* in = ds.inputs.data() + ex * window * 2;
      for (std::size_t j = 0; j < window; ++j) {
        const std::size_t t = i - window + 1 + j;
        in[j * 2 + 0] = log.theta[t];
        in[j * 2 + 1] = (log.theta[t] - log.theta[t - 1]) / dt;
      }
      ds.targets[ex * 2 + 0] = log.fx[i];
      ds.targets[ex * 2 + 1] = log.fy[i];
    }
  return ds;
}

namespace {

// gather dataset rows `idx[first..first+count)` into contiguous batch tensors
void gather(const Tensor& x, const Tensor& y, const std::vector<std::size_t>& idx,
            std::size_t first, std::size_t count, Tensor& xb, Tensor& yb) {
  const std::size_t xrow = x.size() / x.dim(0), yrow = y.size() / y.dim(0);
  std::vector<std::size_t> xs = x.shape(), ys = y.shape();
  xs[0] = count;
  ys[0] = count;
  xb = Tensor(xs);
  yb = Tensor(ys);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t r = idx[first + b];
    std::memcpy(xb.data() + b * xrow, x.data() + r * xrow, xrow * sizeof(double));
    std::memcpy(yb.data() + b * yrow, y.data() + r * yrow, yrow * sizeof(double));
  }
}

double eval_mse(const nn::Network& net, const Tensor& x, const Tensor& y,
                const std::vector<std::size_t>& idx, std::size_t first, std::size_t count,
                std::size_t batch) {
  double sse = 0.0;
  Tensor xb, yb;
  for (std::size_t at = 0; at < count; at += batch) {
    const std::size_t b = std::min(batch, count - at);
    gather(x, y, idx, first + at, b, xb, yb);
    const Tensor out = net.forward(xb, nn::Mode::eval);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out[i] - yb[i];
      sse += d * d;
    }
  }
  return sse / (static_cast<double>(count) * (y.size() / y.dim(0)));
}

}  // namespace

TrainCurve train_regression(nn::Network& net, const Tensor& inputs, const Tensor& targets,
                            const TrainOpts& opts) {
  const std::size_t n = inputs.dim(0);
  if (n == 0) throw std::runtime_error("train_regression: empty dataset");
  if (targets.dim(0) != n) throw std::runtime_error("train_regression: input/target mismatch");
  if (!inputs.all_finite() || !targets.all_finite())
    throw std::runtime_error("train_regression: non-finite data");

  Rng shuffle_rng(derive_seed(opts.seed, "train/shuffle"));
  Rng dropout_rng(derive_seed(opts.seed, "train/dropout"));

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  shuffle_rng.shuffle(idx);
  std::size_t n_val = 0;
  if (opts.holdout > 0.0 && n >= 2)
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                         static_cast<double>(n) * opts.holdout)));
  if (n_val >= n) n_val = n - 1;
  const std::size_t n_train = n - n_val;
  const std::vector<std::size_t> val_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                         idx.end());
  idx.resize(n_train);  // idx is now the train set, reshuffled each epoch
  const std::size_t out_dim = targets.size() / n;

  nn::Adam adam({&net}, {opts.lr, 0.9, 0.999, 1e-8});
  TrainCurve curve;
  double first_epoch_mse = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_params;
  std::size_t since_best = 0;

  Tensor xb, yb;
  for (std::size_t epoch = 0; epoch < opts.max_epochs; ++epoch) {
    shuffle_rng.shuffle(idx);
    double sse = 0.0;
    for (std::size_t at = 0; at < n_train; at += opts.batch) {
      const std::size_t b = std::min(opts.batch, n_train - at);
      gather(inputs, targets, idx, at, b, xb, yb);
      nn::Tape tape;
      const Tensor out = net.forward(xb, nn::Mode::train, &dropout_rng, nullptr, &tape);
      Tensor g = Tensor::zeros_like(out);
      const double scale = 2.0 / static_cast<double>(out.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out[i] - yb[i];
        sse += d * d;
        g[i] = scale * d;
      }
      const nn::Grads grads = net.backward(tape, g);
      adam.step(grads.params);
    }
    const double train_mse = sse / (static_cast<double>(n_train) * out_dim);
    curve.train_mse.push_back(train_mse);
    if (epoch == 0) first_epoch_mse = train_mse;
    if (!std::isfinite(train_mse) || train_mse > 10.0 * first_epoch_mse)
      throw std::runtime_error("train_regression: diverged at epoch " + std::to_string(epoch) +
                               " (mse " + std::to_string(train_mse) + ")");

    if (n_val > 0) {
      const double val = eval_mse(net, inputs, targets, val_idx, 0, n_val, opts.batch);
      curve.val_mse.push_back(val);
      if (val < best_val) {
        best_val = val;
        best_params = net.params();
        curve.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best > opts.patience) {
        break;
      }
    } else {
      curve.best_epoch = epoch;
    }
  }
  if (!best_params.empty()) net.params_mut() = std::move(best_params);
  return curve;
}

SurrogateModel train_surrogate(const std::vector<LogData>& train_logs, const Config& cfg,
                               std::uint64_t seed, SurrogateTraining* curves) {
  SurrogateModel m;
  m.window = cfg.window;
  m.dt = cfg.plant.dt;

  WindowDataset pos = make_posnet_dataset(train_logs, cfg.window, cfg.posnet_stride);
  if (pos.inputs.dim(0) == 0) throw std::runtime_error("train_surrogate: no training windows");
  m.pos_in = compute_stats(pos.inputs, 1);
  m.pos_out = compute_stats(pos.targets, 1);
  normalize(pos.inputs, m.pos_in, 1);
  normalize(pos.targets, m.pos_out, 1);

  TrainOpts opts;
  opts.batch = cfg.surrogate_batch;
  opts.lr = cfg.surrogate_lr;
  opts.max_epochs = cfg.surrogate_max_epochs;
  opts.patience = cfg.surrogate_patience;
  opts.holdout = cfg.surrogate_holdout;

  m.posnet = make_posnet(cfg.window);
  Rng pos_init(derive_seed(seed, "surrogate/posnet"));
  m.posnet.init(pos_init);
  opts.seed = derive_seed(seed, "surrogate/posnet/train");
  const TrainCurve pos_curve = train_regression(m.posnet, pos.inputs, pos.targets, opts);
  pos = WindowDataset{};  // free before assembling the next stage

  WindowDataset rho = make_forcenet_dataset(train_logs, cfg.window, cfg.forcenet_stride,
                                            cfg.plant.dt);
  m.force_in = compute_stats(rho.inputs, 2);
  m.force_out = compute_stats(rho.targets, 1);
  normalize(rho.inputs, m.force_in, 2);
  normalize(rho.targets, m.force_out, 1);

  m.forcenet = make_forcenet();
  Rng force_init(derive_seed(seed, "surrogate/forcenet"));
  m.forcenet.init(force_init);
  opts.seed = derive_seed(seed, "surrogate/forcenet/train");
  const TrainCurve force_curve = train_regression(m.forcenet, rho.inputs, rho.targets, opts);

  if (curves) *curves = SurrogateTraining{pos_curve, force_curve};
  return m;
}

namespace {

void require_window(const Tensor& w, std::initializer_list<std::size_t> shape,
                    const char* who) {
  if (w.shape() != std::vector<std::size_t>(shape))
    throw std::runtime_error(std::string(who) + ": wrong window shape");
  if (!w.all_finite()) throw std::runtime_error(std::string(who) + ": non-finite window");
}

}  // namespace

double posnet_step(const SurrogateModel& m, const Tensor& window) {
  require_window(window, {3, m.window}, "posnet_step");
  Tensor x = window;
  x.reshape({1, 3, m.window});
  normalize(x, m.pos_in, 1);
  const Tensor out = m.posnet.forward(x, nn::Mode::eval);
  return out[0] * m.pos_out.stddev[0] + m.pos_out.mean[0];
}

Tensor forcenet_batch(const SurrogateModel& m, const Tensor& windows) {
  if (windows.rank() != 3 || windows.dim(1) != m.window || windows.dim(2) != 2)
    throw std::runtime_error("forcenet_batch: wrong window shape");
  if (!windows.all_finite()) throw std::runtime_error("forcenet_batch: non-finite window");
  Tensor x = windows;
  normalize(x, m.force_in, 2);
  Tensor out = m.forcenet.forward(x, nn::Mode::eval);
  denormalize(out, m.force_out, 1);
  return out;  // [B, 2]
}

std::pair<double, double> forcenet_step(const SurrogateModel& m, const Tensor& window) {
  require_window(window, {m.window, 2}, "forcenet_step");
  Tensor x = window;
  x.reshape({1, m.window, 2});
  const Tensor out = forcenet_batch(m, x);
  return {out[0], out[1]};
}

SurrogateSim::SurrogateSim(const SurrogateModel& model) : model_(&model) {}

void SurrogateSim::reset() {
  cmd_angle_.clear();
  cmd_omega_.clear();
  theta_hist_.clear();
  omega_hist_.clear();
  ticks_ = 0;
  flushed_ = 0;
}

// history access with rest-state padding for ticks before the episode start
double SurrogateSim::hist(const std::vector<double>& v, std::ptrdiff_t t, double pad) const {
  return t < 0 ? pad : v[static_cast<std::size_t>(t)];
}

void SurrogateSim::tick(const MotorCommand& cmd) {
  validate_command(cmd);
  cmd_angle_.push_back(cmd.angle);
  cmd_omega_.push_back(cmd.omega);
  const std::size_t w = model_->window;
  const std::ptrdiff_t now = static_cast<std::ptrdiff_t>(ticks_);

  Tensor win({3, w});
  for (std::size_t j = 0; j < w; ++j) {
    const std::ptrdiff_t t = now - static_cast<std::ptrdiff_t>(w) + 1 +
                             static_cast<std::ptrdiff_t>(j);
    win[0 * w + j] = hist(cmd_angle_, t, 0.0);
    win[1 * w + j] = hist(cmd_omega_, t, kCmdOmegaLo);
    win[2 * w + j] = hist(theta_hist_, t - 1, 0.0);
  }
  const double theta = posnet_step(*model_, win);
  const double prev = hist(theta_hist_, now - 1, 0.0);
  theta_hist_.push_back(theta);
  omega_hist_.push_back((theta - prev) / model_->dt);
  ++ticks_;
}

void SurrogateSim::flush_forces(std::vector<ForceSample>& out) {
  const std::size_t pending = ticks_ - flushed_;
  if (pending == 0) return;
  const std::size_t w = model_->window;
  Tensor wins({pending, w, 2});
  for (std::size_t q = 0; q < pending; ++q) {
    const std::ptrdiff_t end = static_cast<std::ptrdiff_t>(flushed_ + q);
    double* row = wins.data() + q * w * 2;
    for (std::size_t j = 0; j < w; ++j) {
      const std::ptrdiff_t t = end - static_cast<std::ptrdiff_t>(w) + 1 +
                               static_cast<std::ptrdiff_t>(j);
      row[j * 2 + 0] = hist(theta_hist_, t, 0.0);
      row[j * 2 + 1] = hist(omega_hist_, t, 0.0);
    }
  }
  const Tensor f = forcenet_batch(*model_, wins);
  for (std::size_t q = 0; q < pending; ++q) out.push_back({f[q * 2 + 0], f[q * 2 + 1]});
  flushed_ = ticks_;
}

RolloutSeries surrogate_rollout(const SurrogateModel& m, const std::vector<MotorCommand>& cmds,
                                std::size_t n_ticks) {
  if (cmds.size() < n_ticks)
    throw std::runtime_error("surrogate_rollout: command stream shorter than rollout");
  SurrogateSim sim(m);
  sim.reset();
  RolloutSeries rs;
  std::vector<ForceSample> forces;
  for (std::size_t i = 0; i < n_ticks; ++i) {
    sim.tick(cmds[i]);
    if ((i + 1) % 100 == 0 || i + 1 == n_ticks) sim.flush_forces(forces);
  }
  rs.theta = sim.theta_history();
  rs.fx.resize(n_ticks);
  rs.fy.resize(n_ticks);
  for (std::size_t i = 0; i < n_ticks; ++i) {
    rs.fx[i] = forces[i].fx;
    rs.fy[i] = forces[i].fy;
  }
  return rs;
}

MetricsRow series_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  MetricsRow r;
  r.rmse = metrics::rmse(pred, truth);
  r.mae = metrics::mae(pred, truth);
  r.dtw = metrics::dtw(pred, truth).normalized;
  return r;
}

namespace {

// teacher-forced prediction series for one log: posnet next-angle and
// forcenet per-axis force at every index i in [window, size)
void predict_log(const SurrogateModel& m, const LogData& log, std::vector<double>& pos_pred,
                 std::vector<double>& pos_true, std::vector<double>& fx_pred,
                 std::vector<double>& fy_pred, std::vector<double>& fx_true,
                 std::vector<double>& fy_true) {
  const std::vector<LogData> one{log};
  WindowDataset pos = make_posnet_dataset(one, m.window, 1);
  normalize(pos.inputs, m.pos_in, 1);
  const std::size_t n = pos.inputs.dim(0);
  pos_pred.resize(n);
  pos_true.resize(n);
  const std::size_t chunk = 256;
  const std::size_t row = 3 * m.window;
  for (std::size_t at = 0; at < n; at += chunk) {
    const std::size_t b = std::min(chunk, n - at);
    Tensor xb({b, 3, m.window});
    std::memcpy(xb.data(), pos.inputs.data() + at * row, b * row * sizeof(double));
    const Tensor out = m.posnet.forward(xb, nn::Mode::eval);
    for (std::size_t i = 0; i < b; ++i)
      pos_pred[at + i] = out[i] * m.pos_out.stddev[0] + m.pos_out.mean[0];
  }
  for (std::size_t i = 0; i < n; ++i) pos_true[i] = log.theta[m.window + i];

  WindowDataset rho = make_forcenet_dataset(one, m.window, 1, m.dt);
  fx_pred.resize(n);
  fy_pred.resize(n);
  fx_true.resize(n);
  fy_true.resize(n);
  const std::size_t frow = m.window * 2;
  for (std::size_t at = 0; at < n; at += chunk) {
    const std::size_t b = std::min(chunk, n - at);
    Tensor xb({b, m.window, 2});
    std::memcpy(xb.data(), rho.inputs.data() + at * frow, b * frow * sizeof(double));
    const Tensor out = forcenet_batch(m, xb);
    for (std::size_t i = 0; i < b; ++i) {
      fx_pred[at + i] = out[i * 2 + 0];
      fy_pred[at + i] = out[i * 2 + 1];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    fx_true[i] = log.fx[m.window + i];
    fy_true[i] = log.fy[m.window + i];
  }
}

}  // namespace

SurrogateEval evaluate_surrogate(const SurrogateModel& m, const std::vector<LogData>& test_logs) {
  if (test_logs.empty()) throw std::runtime_error("evaluate_surrogate: no test logs");
  SurrogateEval e;
  double pos_sse = 0.0, fx_sse = 0.0, fy_sse = 0.0;
  double pos_sum = 0.0, fx_sum = 0.0, fy_sum = 0.0;
  std::vector<double> pos_all, fx_all, fy_all;
  for (const auto& log : test_logs) {
    if (log.size() <= m.window)
      throw std::runtime_error("evaluate_surrogate: log shorter than window");
    std::vector<double> pp, pt, fxp, fyp, fxt, fyt;
    predict_log(m, log, pp, pt, fxp, fyp, fxt, fyt);
    const MetricsRow pr = series_metrics(pp, pt);
    const MetricsRow xr = series_metrics(fxp, fxt);
    const MetricsRow yr = series_metrics(fyp, fyt);
    e.posnet.rmse += pr.rmse;
    e.posnet.mae += pr.mae;
    e.posnet.dtw += pr.dtw;
    e.force_x.rmse += xr.rmse;
    e.force_x.mae += xr.mae;
    e.force_x.dtw += xr.dtw;
    e.force_y.rmse += yr.rmse;
    e.force_y.mae += yr.mae;
    e.force_y.dtw += yr.dtw;
    for (std::size_t i = 0; i < pp.size(); ++i) {
      const double dp = pp[i] - pt[i], dx = fxp[i] - fxt[i], dy = fyp[i] - fyt[i];
      pos_sse += dp * dp;
      fx_sse += dx * dx;
      fy_sse += dy * dy;
      pos_sum += pt[i];
      fx_sum += fxt[i];
      fy_sum += fyt[i];
    }
    pos_all.insert(pos_all.end(), pt.begin(), pt.end());
    fx_all.insert(fx_all.end(), fxt.begin(), fxt.end());
    fy_all.insert(fy_all.end(), fyt.begin(), fyt.end());
  }
  const double k = static_cast<double>(test_logs.size());
  e.posnet.rmse /= k;
  e.posnet.mae /= k;
  e.posnet.dtw /= k;
  e.force_x.rmse /= k;
  e.force_x.mae /= k;
  e.force_x.dtw /= k;
  e.force_y.rmse /= k;
  e.force_y.mae /= k;
  e.force_y.dtw /= k;

  const double n = static_cast<double>(pos_all.size());
  const double pos_mean = pos_sum / n, fx_mean = fx_sum / n, fy_mean = fy_sum / n;
  double pos_var = 0.0, fx_var = 0.0, fy_var = 0.0;
  for (double v : pos_all) pos_var += (v - pos_mean) * (v - pos_mean);
  for (double v : fx_all) fx_var += (v - fx_mean) * (v - fx_mean);
  for (double v : fy_all) fy_var += (v - fy_mean) * (v - fy_mean);
  e.posnet_r2 = 1.0 - pos_sse / pos_var;
  e.force_rmse_x = std::sqrt(fx_sse / n);
  e.force_rmse_y = std::sqrt(fy_sse / n);
  e.force_std_x = std::sqrt(fx_var / n);
  e.force_std_y = std::sqrt(fy_var / n);
  return e;
}

void write_metrics_table(const std::filesystem::path& path, const SurrogateModel& m,
                         const SurrogateEval& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << "model,params,RMSE,MAE,DTW\n";
  const auto row = [&os](const char* name, std::size_t params, const MetricsRow& r) {
    os << name << "," << params << "," << ckpt::format_f64(r.rmse) << ","
       << ckpt::format_f64(r.mae) << "," << ckpt::format_f64(r.dtw) << "\n";
  };
  row("posnet", m.posnet.param_count(), e.posnet);
  row("forcenet_x", m.forcenet.param_count(), e.force_x);
  row("forcenet_y", m.forcenet.param_count(), e.force_y);
}

namespace {

void put_stats(ckpt::Checkpoint& c, const std::string& key, const NormStats& s) {
  c.set_meta_num(key + "_mean", s.mean);
  c.set_meta_num(key + "_std", s.stddev);
}

NormStats get_stats(const ckpt::Checkpoint& c, const std::string& key) {
  NormStats s;
  const auto& mean = c.meta_values(key + "_mean");
  const auto& sd = c.meta_values(key + "_std");
  for (std::size_t i = 0; i < mean.size(); ++i) s.mean.push_back(c.meta_num(key + "_mean", i));
  for (std::size_t i = 0; i < sd.size(); ++i) s.stddev.push_back(c.meta_num(key + "_std", i));
  return s;
}

}  // namespace

void save_surrogate(const SurrogateModel& m, const std::filesystem::path& path) {
  ckpt::Checkpoint c;
  c.set_meta("kind", {"surrogate"});
  c.set_meta_num("window", {static_cast<double>(m.window)});
  c.set_meta_num("dt", {m.dt});
  put_stats(c, "pos_in", m.pos_in);
  put_stats(c, "pos_out", m.pos_out);
  put_stats(c, "force_in", m.force_in);
  put_stats(c, "force_out", m.force_out);
  c.nets.push_back(m.posnet);
  c.nets.push_back(m.forcenet);
  ckpt::save(c, path);
}

SurrogateModel load_surrogate(const std::filesystem::path& path) {
  ckpt::Checkpoint c = ckpt::load(path);
  if (!c.has_meta("kind") || c.meta_str("kind") != "surrogate")
    throw std::runtime_error(path.string() + ": not a surrogate checkpoint");
  SurrogateModel m;
  m.window = static_cast<std::size_t>(c.meta_num("window"));
  m.dt = c.meta_num("dt");
  m.pos_in = get_stats(c, "pos_in");
  m.pos_out = get_stats(c, "pos_out");
  m.force_in = get_stats(c, "force_in");
  m.force_out = get_stats(c, "force_out");
  m.posnet = c.net("posnet");
  m.forcenet = c.net("forcenet");
  return m;
}

}  // namespace softfin
