#include "softfin/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "softfin/kernels.hpp"

namespace softfin::nn {

namespace {

const kern::Ops& K() { return kern::ops(); }

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

[[noreturn]] void shape_error(const std::string& net, std::size_t layer, const std::string& what,
                              const std::vector<std::size_t>& got) {
  throw std::logic_error(net + " layer " + std::to_string(layer) + ": " + what +
                         ", got " + shape_str(got));
}

std::size_t conv_t_out(const Conv1d& L, std::size_t t_in) {
  return (t_in - L.kernel) / L.stride + 1;
}

// ---- conv1d ---------------------------------------------------------------

Tensor conv_forward(const Conv1d& L, const Tensor& W, const Tensor& bias, const Tensor& in) {
  const std::size_t B = in.dim(0), T = in.dim(2), To = conv_t_out(L, T);
  Tensor out({B, L.out_ch, To});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < L.out_ch; ++co) {
      double* row = out.data() + (b * L.out_ch + co) * To;
      std::fill(row, row + To, bias[co]);
      for (std::size_t ci = 0; ci < L.in_ch; ++ci) {
        const double* x = in.data() + (b * L.in_ch + ci) * T;
        const double* w = W.data() + (co * L.in_ch + ci) * L.kernel;
        if (L.stride == 1) {
          for (std::size_t kk = 0; kk < L.kernel; ++kk) K().axpy(row, x + kk, w[kk], To);
        } else {
          for (std::size_t t = 0; t < To; ++t) {
            double s = row[t];
            for (std::size_t kk = 0; kk < L.kernel; ++kk) s += w[kk] * x[t * L.stride + kk];
            row[t] = s;
          }
        }
      }
    }
  return out;
}

void conv_backward(const Conv1d& L, const Tensor& W, const Tensor& in, const Tensor& dout,
                   Tensor& dW, Tensor& db, Tensor& din) {
  const std::size_t B = in.dim(0), T = in.dim(2), To = dout.dim(2);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t co = 0; co < L.out_ch; ++co) {
      const double* drow = dout.data() + (b * L.out_ch + co) * To;
      db[co] += K().sum(drow, To);
      for (std::size_t ci = 0; ci < L.in_ch; ++ci) {
        const double* x = in.data() + (b * L.in_ch + ci) * T;
        double* dx = din.data() + (b * L.in_ch + ci) * T;
        double* dw = dW.data() + (co * L.in_ch + ci) * L.kernel;
        const double* w = W.data() + (co * L.in_ch + ci) * L.kernel;
        if (L.stride == 1) {
          for (std::size_t kk = 0; kk < L.kernel; ++kk) {
            dw[kk] += K().dot(drow, x + kk, To);
            K().axpy(dx + kk, drow, w[kk], To);
          }
        } else {
          for (std::size_t t = 0; t < To; ++t)
            for (std::size_t kk = 0; kk < L.kernel; ++kk) {
              dw[kk] += drow[t] * x[t * L.stride + kk];
              dx[t * L.stride + kk] += w[kk] * drow[t];
            }
        }
      }
    }
}

// ---- linear ---------------------------------------------------------------

Tensor linear_forward(const Linear& L, const Tensor& W, const Tensor& bias, const Tensor& in) {
  const std::size_t rows = in.size() / L.in;
  std::vector<std::size_t> out_shape = in.shape();
  out_shape.back() = L.out;
  Tensor out(out_shape);
  K().gemm_nn(out.data(), L.out, in.data(), L.in, W.data(), L.out, rows, L.out, L.in, false);
  for (std::size_t r = 0; r < rows; ++r) K().axpy(out.data() + r * L.out, bias.data(), 1.0, L.out);
  return out;
}

void linear_backward(const Linear& L, const Tensor& W, const Tensor& x_flat, const Tensor& dout,
                     Tensor& dW, Tensor& db, Tensor& din_flat) {
  const std::size_t rows = x_flat.dim(0);
  K().gemm_tn(dW.data(), L.out, x_flat.data(), L.in, dout.data(), L.out, L.in, L.out, rows, true);
  for (std::size_t r = 0; r < rows; ++r) K().axpy(db.data(), dout.data() + r * L.out, 1.0, L.out);
  K().gemm_nt(din_flat.data(), L.in, dout.data(), L.out, W.data(), L.out, rows, L.in, L.out,
              false);
}

// ---- lstm -----------------------------------------------------------------
// gate block order (i, f, g, o); c_t = f.c_{t-1} + i.g; h_t = o.tanh(c_t)

void lstm_gates_forward(double* gates, const double* x_t, std::size_t x_stride,
                        const double* h_prev, const Tensor& Wih, const Tensor& Whh,
                        const Tensor& b, std::size_t B, std::size_t in, std::size_t H) {
  const std::size_t G = 4 * H;
  for (std::size_t r = 0; r < B; ++r) std::memcpy(gates + r * G, b.data(), G * sizeof(double));
  K().gemm_nn(gates, G, x_t, x_stride, Wih.data(), G, B, G, in, true);
  K().gemm_nn(gates, G, h_prev, H, Whh.data(), G, B, G, H, true);
  for (std::size_t r = 0; r < B; ++r) {
    double* g = gates + r * G;
    K().vsigmoid(g, g, 2 * H);              // i, f
    K().vtanh(g + 2 * H, g + 2 * H, H);     // g
    K().vsigmoid(g + 3 * H, g + 3 * H, H);  // o
  }
}

Tensor lstm_forward(const Lstm& L, const Tensor& Wih, const Tensor& Whh, const Tensor& b,
                    const Tensor& in, std::vector<LstmState>* state, std::size_t state_idx,
                    Tape::LstmT* tp) {
  const std::size_t B = in.dim(0), T = in.dim(1), H = L.hidden, G = 4 * H;

  Tensor h0({B, H}), c0({B, H});
  if (state) {
    if ((*state)[state_idx].h.size() != B * H)
      throw std::logic_error("lstm state batch mismatch");
    h0 = (*state)[state_idx].h;
    c0 = (*state)[state_idx].c;
  }

  Tensor scratch_gates, scratch_h, scratch_c, scratch_tc;
  if (tp) {
    tp->x = in;
    tp->h_all = Tensor({T + 1, B, H});
    tp->c_all = Tensor({T + 1, B, H});
    tp->gates = Tensor({T, B, G});
    tp->tanh_c = Tensor({T, B, H});
    std::memcpy(tp->h_all.data(), h0.data(), B * H * sizeof(double));
    std::memcpy(tp->c_all.data(), c0.data(), B * H * sizeof(double));
  } else {
    scratch_gates = Tensor({B, G});
    scratch_tc = Tensor({B, H});
    scratch_h = h0;
    scratch_c = c0;
  }

  Tensor out = L.return_sequence ? Tensor({B, T, H}) : Tensor({B, H});

  for (std::size_t t = 0; t < T; ++t) {
    double* gates = tp ? tp->gates.data() + t * B * G : scratch_gates.data();
    const double* h_prev = tp ? tp->h_all.data() + t * B * H : scratch_h.data();
    const double* c_prev = tp ? tp->c_all.data() + t * B * H : scratch_c.data();
    double* h_cur = tp ? tp->h_all.data() + (t + 1) * B * H : scratch_h.data();
    double* c_cur = tp ? tp->c_all.data() + (t + 1) * B * H : scratch_c.data();
    double* tc = tp ? tp->tanh_c.data() + t * B * H : scratch_tc.data();

    lstm_gates_forward(gates, in.data() + t * L.in, T * L.in, h_prev, Wih, Whh, b, B, L.in, H);
    for (std::size_t r = 0; r < B; ++r) {
      const double* g = gates + r * G;
      const double* cp = c_prev + r * H;
      double* cc = c_cur + r * H;
      for (std::size_t j = 0; j < H; ++j) cc[j] = g[H + j] * cp[j] + g[j] * g[2 * H + j];
    }
    K().vtanh(tc, c_cur, B * H);
    for (std::size_t r = 0; r < B; ++r) {
      const double* g = gates + r * G;
      double* hc = h_cur + r * H;
      for (std::size_t j = 0; j < H; ++j) hc[j] = g[3 * H + j] * tc[r * H + j];
      if (L.return_sequence)
        std::memcpy(out.data() + (r * T + t) * H, hc, H * sizeof(double));
    }
    if (!L.return_sequence && t + 1 == T)
      std::memcpy(out.data(), h_cur, B * H * sizeof(double));
  }

  if (state) {
    const double* hT = tp ? tp->h_all.data() + T * B * H : scratch_h.data();
    const double* cT = tp ? tp->c_all.data() + T * B * H : scratch_c.data();
    std::memcpy((*state)[state_idx].h.data(), hT, B * H * sizeof(double));
    std::memcpy((*state)[state_idx].c.data(), cT, B * H * sizeof(double));
  }
  return out;
}

Tensor lstm_backward(const Lstm& L, const Tensor& Wih, const Tensor& Whh, const Tape::LstmT& tp,
                     const Tensor& dout, Tensor& dWih, Tensor& dWhh, Tensor& db) {
  const std::size_t B = tp.x.dim(0), T = tp.x.dim(1), H = L.hidden, G = 4 * H;
  Tensor dx({B, T, L.in});
  Tensor dh({B, H}), dc({B, H}), dgates({B, G}), dh_rec({B, H});

  for (std::size_t tt = T; tt-- > 0;) {
    // upstream gradient for h_t
    if (L.return_sequence) {
      for (std::size_t r = 0; r < B; ++r)
        K().axpy(dh.data() + r * H, dout.data() + (r * T + tt) * H, 1.0, H);
    } else if (tt + 1 == T) {
      K().axpy(dh.data(), dout.data(), 1.0, B * H);
    }

    const double* gates = tp.gates.data() + tt * B * G;
    const double* tc = tp.tanh_c.data() + tt * B * H;
    const double* c_prev = tp.c_all.data() + tt * B * H;
    for (std::size_t r = 0; r < B; ++r) {
      const double* g = gates + r * G;
      double* dg = dgates.data() + r * G;
      for (std::size_t j = 0; j < H; ++j) {
        const std::size_t idx = r * H + j;
        const double i_v = g[j], f_v = g[H + j], g_v = g[2 * H + j], o_v = g[3 * H + j];
        const double tc_v = tc[idx], dh_v = dh[idx];
        const double dc_v = dc[idx] + dh_v * o_v * (1.0 - tc_v * tc_v);
        dg[j] = dc_v * g_v * i_v * (1.0 - i_v);
        dg[H + j] = dc_v * c_prev[idx] * f_v * (1.0 - f_v);
        dg[2 * H + j] = dc_v * i_v * (1.0 - g_v * g_v);
        dg[3 * H + j] = dh_v * tc_v * o_v * (1.0 - o_v);
        dc[idx] = dc_v * f_v;
      }
    }

    // parameter grads and downstream grads
    K().gemm_tn(dWih.data(), G, tp.x.data() + tt * L.in, T * L.in, dgates.data(), G, L.in, G, B,
                true);
    K().gemm_tn(dWhh.data(), G, tp.h_all.data() + tt * B * H, H, dgates.data(), G, H, G, B, true);
    for (std::size_t r = 0; r < B; ++r) K().axpy(db.data(), dgates.data() + r * G, 1.0, G);
    for (std::size_t r = 0; r < B; ++r)
      K().gemm_nt(dx.data() + (r * T + tt) * L.in, L.in, dgates.data() + r * G, G, Wih.data(), G,
                  1, L.in, G, false);
    K().gemm_nt(dh_rec.data(), H, dgates.data(), G, Whh.data(), G, B, H, G, false);
    std::swap(dh, dh_rec);
  }
  return dx;
}

}  // namespace

// ---- network --------------------------------------------------------------

Network::Network(std::vector<LayerSpec> layers, std::string name)
    : layers_(std::move(layers)), name_(std::move(name)) {
  for (const auto& l : layers_) {
    param_offset_.push_back(params_.size());
    if (const auto* c = std::get_if<Conv1d>(&l)) {
      params_.emplace_back(std::vector<std::size_t>{c->out_ch, c->in_ch, c->kernel});
      params_.emplace_back(std::vector<std::size_t>{c->out_ch});
    } else if (const auto* li = std::get_if<Linear>(&l)) {
      params_.emplace_back(std::vector<std::size_t>{li->in, li->out});
      params_.emplace_back(std::vector<std::size_t>{li->out});
    } else if (const auto* ls = std::get_if<Lstm>(&l)) {
      params_.emplace_back(std::vector<std::size_t>{ls->in, 4 * ls->hidden});
      params_.emplace_back(std::vector<std::size_t>{ls->hidden, 4 * ls->hidden});
      params_.emplace_back(std::vector<std::size_t>{4 * ls->hidden});
    }
  }
  param_offset_.push_back(params_.size());
}

void Network::init(Rng& rng) {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const std::size_t p0 = param_offset_[li];
    if (const auto* c = std::get_if<Conv1d>(&layers_[li])) {
      const double bound = std::sqrt(1.0 / double(c->in_ch * c->kernel));
      for (std::size_t i = 0; i < params_[p0].size(); ++i)
        params_[p0][i] = rng.uniform(-bound, bound);
      for (std::size_t i = 0; i < params_[p0 + 1].size(); ++i)
        params_[p0 + 1][i] = rng.uniform(-bound, bound);
    } else if (const auto* l = std::get_if<Linear>(&layers_[li])) {
      const double bound = std::sqrt(1.0 / double(l->in));
      for (std::size_t i = 0; i < params_[p0].size(); ++i)
        params_[p0][i] = rng.uniform(-bound, bound);
      for (std::size_t i = 0; i < params_[p0 + 1].size(); ++i)
        params_[p0 + 1][i] = rng.uniform(-bound, bound);
    } else if (const auto* ls = std::get_if<Lstm>(&layers_[li])) {
      const double bound = std::sqrt(1.0 / double(ls->hidden));
      for (std::size_t pi = p0; pi < p0 + 3; ++pi)
        for (std::size_t i = 0; i < params_[pi].size(); ++i)
          params_[pi][i] = rng.uniform(-bound, bound);
      // forget-gate bias starts open so long-range credit flows early in training
      for (std::size_t j = 0; j < ls->hidden; ++j) params_[p0 + 2][ls->hidden + j] = 1.0;
    }
  }
  ++version_;
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::vector<Tensor*> Network::param_ptrs() {
  std::vector<Tensor*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::size_t Network::lstm_layer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    if (std::holds_alternative<Lstm>(l)) ++n;
  return n;
}

std::vector<LstmState> Network::initial_state(std::size_t batch) const {
  std::vector<LstmState> st;
  for (const auto& l : layers_)
    if (const auto* ls = std::get_if<Lstm>(&l))
      st.push_back(LstmState{Tensor({batch, ls->hidden}), Tensor({batch, ls->hidden})});
  return st;
}

Tensor Network::forward(const Tensor& input, Mode mode, Rng* dropout_rng,
                        std::vector<LstmState>* state, Tape* tape) const {
  if (tape) {
    tape->layers_.clear();
    tape->version_ = version_;
    tape->mode_ = mode;
  }
  Tensor cur = input;
  std::size_t lstm_idx = 0;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const std::size_t p0 = param_offset_[li];
    const LayerSpec& spec = layers_[li];

    if (const auto* c = std::get_if<Conv1d>(&spec)) {
      if (cur.rank() != 3 || cur.dim(1) != c->in_ch || cur.dim(2) < c->kernel)
        shape_error(name_, li, "conv1d expects [B," + std::to_string(c->in_ch) + ",T>=k]",
                    cur.shape());
      if (tape) tape->layers_.emplace_back(Tape::ConvT{cur});
      cur = conv_forward(*c, params_[p0], params_[p0 + 1], cur);
    } else if (const auto* l = std::get_if<Linear>(&spec)) {
      if (cur.rank() < 1 || cur.shape().back() != l->in)
        shape_error(name_, li, "linear expects [...," + std::to_string(l->in) + "]", cur.shape());
      if (tape) {
        Tensor flat = cur;
        flat.reshape({cur.size() / l->in, l->in});
        tape->layers_.emplace_back(Tape::LinearT{std::move(flat), cur.shape()});
      }
      cur = linear_forward(*l, params_[p0], params_[p0 + 1], cur);
    } else if (const auto* ls = std::get_if<Lstm>(&spec)) {
      if (cur.rank() != 3 || cur.dim(2) != ls->in || cur.dim(1) == 0)
        shape_error(name_, li, "lstm expects [B,T," + std::to_string(ls->in) + "]", cur.shape());
      Tape::LstmT* tp = nullptr;
      if (tape) {
        tape->layers_.emplace_back(Tape::LstmT{});
        tp = &std::get<Tape::LstmT>(tape->layers_.back());
      }
      cur = lstm_forward(*ls, params_[p0], params_[p0 + 1], params_[p0 + 2], cur, state,
                         lstm_idx, tp);
      ++lstm_idx;
    } else if (const auto* d = std::get_if<Dropout>(&spec)) {
      if (mode == Mode::train) {
        if (!dropout_rng)
          throw std::logic_error(name_ + " layer " + std::to_string(li) +
                                 ": dropout in train mode needs an rng");
        const double scale = 1.0 / (1.0 - d->p);
        Tensor mask(cur.shape());
        for (std::size_t i = 0; i < mask.size(); ++i)
          mask[i] = dropout_rng->uniform() < d->p ? 0.0 : scale;
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] *= mask[i];
        if (tape) tape->layers_.emplace_back(Tape::DropT{std::move(mask)});
      } else {
        if (tape) tape->layers_.emplace_back(Tape::DropT{Tensor()});
      }
    } else if (const auto* a = std::get_if<Activation>(&spec)) {
      if (a->kind == ActKind::tanh) {
        Tensor out(cur.shape());
        K().vtanh(out.data(), cur.data(), cur.size());
        if (tape) tape->layers_.emplace_back(Tape::ActT{out});
        cur = std::move(out);
      } else {
        if (tape) tape->layers_.emplace_back(Tape::ActT{cur});
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = cur[i] > 0.0 ? cur[i] : 0.0;
      }
    } else if (std::holds_alternative<Flatten>(spec)) {
      if (cur.rank() < 2) shape_error(name_, li, "flatten expects rank >= 2", cur.shape());
      if (tape) tape->layers_.emplace_back(Tape::FlatT{cur.shape()});
      cur.reshape({cur.dim(0), cur.size() / cur.dim(0)});
    }
  }
  return cur;
}

Grads Network::backward(const Tape& tape, const Tensor& output_grad) const {
  if (tape.version() != version_)
    throw std::logic_error(name_ + ": tape is stale (parameters mutated after forward)");
  if (tape.layers_.size() != layers_.size())
    throw std::logic_error(name_ + ": tape/layer count mismatch");

  Grads g;
  g.params.reserve(params_.size());
  for (const auto& p : params_) g.params.emplace_back(Tensor::zeros_like(p));

  Tensor d = output_grad;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const std::size_t p0 = param_offset_[li];
    const LayerSpec& spec = layers_[li];

    if (const auto* c = std::get_if<Conv1d>(&spec)) {
      const auto& tp = std::get<Tape::ConvT>(tape.layers_[li]);
      Tensor din(tp.input.shape());
      conv_backward(*c, params_[p0], tp.input, d, g.params[p0], g.params[p0 + 1], din);
      d = std::move(din);
    } else if (const auto* l = std::get_if<Linear>(&spec)) {
      const auto& tp = std::get<Tape::LinearT>(tape.layers_[li]);
      Tensor dflat({tp.input.dim(0), l->in});
      Tensor dout = d;
      dout.reshape({d.size() / l->out, l->out});
      linear_backward(*l, params_[p0], tp.input, dout, g.params[p0], g.params[p0 + 1], dflat);
      dflat.reshape(tp.in_shape);
      d = std::move(dflat);
    } else if (const auto* ls = std::get_if<Lstm>(&spec)) {
      const auto& tp = std::get<Tape::LstmT>(tape.layers_[li]);
      d = lstm_backward(*ls, params_[p0], params_[p0 + 1], tp, d, g.params[p0], g.params[p0 + 1],
                        g.params[p0 + 2]);
    } else if (std::holds_alternative<Dropout>(spec)) {
      const auto& tp = std::get<Tape::DropT>(tape.layers_[li]);
      if (tp.mask.size() != 0)
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= tp.mask[i];
    } else if (const auto* a = std::get_if<Activation>(&spec)) {
      const auto& tp = std::get<Tape::ActT>(tape.layers_[li]);
      if (a->kind == ActKind::tanh) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - tp.saved[i] * tp.saved[i];
      } else {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = tp.saved[i] > 0.0 ? d[i] : 0.0;
      }
    } else if (std::holds_alternative<Flatten>(spec)) {
      const auto& tp = std::get<Tape::FlatT>(tape.layers_[li]);
      d.reshape(tp.in_shape);
    }
  }
  g.input = std::move(d);
  return g;
}

// ---- adam -----------------------------------------------------------------

Adam::Adam(std::vector<Network*> nets, AdamConfig cfg) : nets_(std::move(nets)), cfg_(cfg) {
  for (Network* n : nets_)
    for (Tensor* p : n->param_ptrs()) {
      params_.push_back(p);
      m_.emplace_back(Tensor::zeros_like(*p));
      v_.emplace_back(Tensor::zeros_like(*p));
    }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != params_.size())
    throw std::logic_error("adam: gradient list size mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params_[i]->size())
      throw std::logic_error("adam: gradient shape mismatch at tensor " + std::to_string(i));
    if (!grads[i].all_finite())
      throw std::runtime_error("adam: non-finite gradient in tensor " + std::to_string(i) +
                               " (abs max " + std::to_string(grads[i].abs_max()) + ")");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i)
    K().adam(params_[i]->data(), grads[i].data(), m_[i].data(), v_[i].data(), params_[i]->size(),
             cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, bc1, bc2);
  for (Network* n : nets_) n->bump_version();
}

// ---- gradient check -------------------------------------------------------

GradCheckResult gradient_check_fn(const std::vector<Tensor*>& params,
                                  const std::function<double()>& loss,
                                  const std::vector<Tensor>& analytic, double h) {
  std::size_t total = 0;
  for (const Tensor* p : params) total += p->size();
  if (total > 50000)
    throw std::logic_error("gradient_check: " + std::to_string(total) +
                           " parameters exceeds the 50k cap");
  if (analytic.size() != params.size())
    throw std::logic_error("gradient_check: analytic gradient list size mismatch");

  GradCheckResult r;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + h;
      const double lp = loss();
      p[i] = orig - h;
      const double lm = loss();
      p[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8);
      if (rel > r.max_rel_err) {
        r.max_rel_err = rel;
        r.worst_analytic = a;
        r.worst_numeric = numeric;
      }
    }
  }
  return r;
}

GradCheckResult gradient_check(Network& net, const Tensor& input, const Tensor& loss_weights,
                               Mode mode, std::uint64_t dropout_seed, double h) {
  auto loss = [&]() {
    Rng drop(dropout_seed);
    Tensor out = net.forward(input, mode, &drop);
    return K().dot(out.data(), loss_weights.data(), out.size());
  };
  Rng drop(dropout_seed);
  Tape tape;
  Tensor out = net.forward(input, mode, &drop, nullptr, &tape);
  if (out.size() != loss_weights.size())
    throw std::logic_error("gradient_check: loss weight shape mismatch");
  Grads g = net.backward(tape, loss_weights);
  return gradient_check_fn(net.param_ptrs(), loss, g.params, h);
}

}  // namespace softfin::nn
