#include "radrec/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace radrec::nn {

Tensor Tensor::zeros(std::vector<size_t> shape) {
  Tensor t;
  size_t n = 1;
  for (size_t d : shape) n *= d;
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

Param& ParamSet::add(const std::string& name, std::vector<size_t> shape) {
  if (params_.count(name)) throw std::logic_error("duplicate parameter: " + name);
  Param p;
  p.name = name;
  p.value = Tensor::zeros(shape);
  p.grad = Tensor::zeros(shape);
  p.m = Tensor::zeros(shape);
  p.v = Tensor::zeros(std::move(shape));
  auto [it, _] = params_.emplace(name, std::move(p));
  return it->second;
}

Param& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

const Param& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

void ParamSet::zero_grads() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

size_t ParamSet::total_values() const {
  size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

std::map<std::string, Tensor> ParamSet::snapshot_values() const {
  std::map<std::string, Tensor> snap;
  for (const auto& [name, p] : params_) snap.emplace(name, p.value);
  return snap;
}

void ParamSet::restore_values(const std::map<std::string, Tensor>& snapshot) {
  for (auto& [name, p] : params_) {
    auto it = snapshot.find(name);
    if (it == snapshot.end()) throw std::logic_error("snapshot missing parameter " + name);
    p.value = it->second;
  }
}

// --- elementary math -----------------------------------------------------------

void matvec_add(const Tensor& w, const Vec& x, Vec& y) {
  const size_t rows = w.rows(), cols = w.cols();
  const double* wd = w.data.data();
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = wd + r * cols;
    for (size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

void matvec_t_add(const Tensor& w, const Vec& dy, Vec& dx) {
  const size_t rows = w.rows(), cols = w.cols();
  const double* wd = w.data.data();
  for (size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    const double* row = wd + r * cols;
    for (size_t c = 0; c < cols; ++c) dx[c] += row[c] * g;
  }
}

void outer_add(Tensor& dw, const Vec& dy, const Vec& x) {
  const size_t rows = dw.rows(), cols = dw.cols();
  double* wd = dw.data.data();
  for (size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    double* row = wd + r * cols;
    for (size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

double dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec softmax(const Vec& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

XentResult softmax_xent(const Vec& logits, size_t target, const Vec* class_weights) {
  XentResult r;
  r.probs = softmax(logits);
  double w = class_weights ? (*class_weights)[target] : 1.0;
  // log p_y computed from shifted logits directly for stability
  double mx = *std::max_element(logits.begin(), logits.end());
  double lse = 0.0;
  for (double l : logits) lse += std::exp(l - mx);
  double logp = (logits[target] - mx) - std::log(lse);
  r.loss = -w * logp;
  r.grad = r.probs;
  for (double& g : r.grad) g *= w;
  r.grad[target] -= w;
  return r;
}

Vec dropout(const Vec& x, double rate, Mode mode, Rng& rng, std::vector<uint8_t>* mask) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  if (mode == Mode::Eval || rate == 0.0) {
    if (mask) mask->assign(x.size(), 1);
    return x;
  }
  const double keep = 1.0 - rate;
  Vec out(x.size());
  if (mask) mask->assign(x.size(), 0);
  for (size_t i = 0; i < x.size(); ++i) {
    bool kept = rng.uniform() >= rate;
    if (kept) {
      out[i] = x[i] / keep;
      if (mask) (*mask)[i] = 1;
    }
  }
  return out;
}

Vec dropout_backward(const Vec& dy, double rate, const std::vector<uint8_t>& mask) {
  const double keep = 1.0 - rate;
  Vec dx(dy.size(), 0.0);
  for (size_t i = 0; i < dy.size(); ++i) {
    if (mask[i]) dx[i] = dy[i] / keep;
  }
  return dx;
}

// --- dense -----------------------------------------------------------------

Dense::Dense(ParamSet& params, const std::string& prefix, size_t in, size_t out)
    : in_dim(in), out_dim(out) {
  w = &params.add(prefix + ".w", {out, in});
  b = &params.add(prefix + ".b", {out});
}

Vec Dense::forward(const Vec& x, DenseCache* cache) const {
  if (x.size() != in_dim) throw std::invalid_argument("Dense: input dim mismatch");
  Vec y = b->value.data;
  matvec_add(w->value, x, y);
  if (cache) cache->x = x;
  return y;
}

Vec Dense::backward(const DenseCache& cache, const Vec& dy) const {
  outer_add(w->grad, dy, cache.x);
  for (size_t i = 0; i < out_dim; ++i) b->grad.data[i] += dy[i];
  Vec dx(in_dim, 0.0);
  matvec_t_add(w->value, dy, dx);
  return dx;
}

// --- GRU -----------------------------------------------------------------

GruCell::GruCell(ParamSet& params, const std::string& prefix, size_t input, size_t hidden)
    : input_dim(input), hidden_dim(hidden) {
  wz = &params.add(prefix + ".wz", {hidden, input});
  uz = &params.add(prefix + ".uz", {hidden, hidden});
  bz = &params.add(prefix + ".bz", {hidden});
  wr = &params.add(prefix + ".wr", {hidden, input});
  ur = &params.add(prefix + ".ur", {hidden, hidden});
  br = &params.add(prefix + ".br", {hidden});
  wh = &params.add(prefix + ".wh", {hidden, input});
  uh = &params.add(prefix + ".uh", {hidden, hidden});
  bh = &params.add(prefix + ".bh", {hidden});
}

Vec GruCell::step(const Vec& x, const Vec& h_prev, GruStepCache* cache) const {
  if (x.size() != input_dim || h_prev.size() != hidden_dim)
    throw std::invalid_argument("GruCell: dimension mismatch");
  const size_t H = hidden_dim;

  Vec z = bz->value.data;
  matvec_add(wz->value, x, z);
  matvec_add(uz->value, h_prev, z);
  for (double& v : z) v = sigmoid(v);

  Vec r = br->value.data;
  matvec_add(wr->value, x, r);
  matvec_add(ur->value, h_prev, r);
  for (double& v : r) v = sigmoid(v);

  Vec rh(H);
  for (size_t i = 0; i < H; ++i) rh[i] = r[i] * h_prev[i];

  Vec hc = bh->value.data;
  matvec_add(wh->value, x, hc);
  matvec_add(uh->value, rh, hc);
  for (double& v : hc) v = std::tanh(v);

  Vec h(H);
  for (size_t i = 0; i < H; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];

  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->rh = std::move(rh);
    cache->hcand = std::move(hc);
  }
  return h;
}

void GruCell::backward_step(const GruStepCache& c, const Vec& dh, Vec& dx, Vec& dh_prev) const {
  const size_t H = hidden_dim;
  Vec dz(H), dhc(H), da_h(H), da_z(H), da_r(H), drh(H, 0.0), dr(H);

  for (size_t i = 0; i < H; ++i) {
    dz[i] = dh[i] * (c.hcand[i] - c.h_prev[i]);
    dhc[i] = dh[i] * c.z[i];
    dh_prev[i] += dh[i] * (1.0 - c.z[i]);
    da_h[i] = dhc[i] * (1.0 - c.hcand[i] * c.hcand[i]);
  }

  outer_add(wh->grad, da_h, c.x);
  outer_add(uh->grad, da_h, c.rh);
  for (size_t i = 0; i < H; ++i) bh->grad.data[i] += da_h[i];
  matvec_t_add(wh->value, da_h, dx);
  matvec_t_add(uh->value, da_h, drh);

  for (size_t i = 0; i < H; ++i) {
    dr[i] = drh[i] * c.h_prev[i];
    dh_prev[i] += drh[i] * c.r[i];
    da_z[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
    da_r[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
  }

  outer_add(wz->grad, da_z, c.x);
  outer_add(uz->grad, da_z, c.h_prev);
  for (size_t i = 0; i < H; ++i) bz->grad.data[i] += da_z[i];
  matvec_t_add(wz->value, da_z, dx);
  matvec_t_add(uz->value, da_z, dh_prev);

  outer_add(wr->grad, da_r, c.x);
  outer_add(ur->grad, da_r, c.h_prev);
  for (size_t i = 0; i < H; ++i) br->grad.data[i] += da_r[i];
  matvec_t_add(wr->value, da_r, dx);
  matvec_t_add(ur->value, da_r, dh_prev);
}

// --- LSTM -----------------------------------------------------------------

LstmCell::LstmCell(ParamSet& params, const std::string& prefix, size_t input, size_t hidden)
    : input_dim(input), hidden_dim(hidden) {
  wi = &params.add(prefix + ".wi", {hidden, input});
  ui = &params.add(prefix + ".ui", {hidden, hidden});
  bi = &params.add(prefix + ".bi", {hidden});
  wf = &params.add(prefix + ".wf", {hidden, input});
  uf = &params.add(prefix + ".uf", {hidden, hidden});
  bf = &params.add(prefix + ".bf", {hidden});
  wo = &params.add(prefix + ".wo", {hidden, input});
  uo = &params.add(prefix + ".uo", {hidden, hidden});
  bo = &params.add(prefix + ".bo", {hidden});
  wg = &params.add(prefix + ".wg", {hidden, input});
  ug = &params.add(prefix + ".ug", {hidden, hidden});
  bg = &params.add(prefix + ".bg", {hidden});
}

LstmState LstmCell::step(const Vec& x, const LstmState& prev, LstmStepCache* cache) const {
  if (x.size() != input_dim || prev.h.size() != hidden_dim || prev.c.size() != hidden_dim)
    throw std::invalid_argument("LstmCell: dimension mismatch");
  const size_t H = hidden_dim;

  auto gate = [&](const Param* w, const Param* u, const Param* b) {
    Vec a = b->value.data;
    matvec_add(w->value, x, a);
    matvec_add(u->value, prev.h, a);
    return a;
  };

  Vec i = gate(wi, ui, bi);
  Vec f = gate(wf, uf, bf);
  Vec o = gate(wo, uo, bo);
  Vec g = gate(wg, ug, bg);
  for (size_t k = 0; k < H; ++k) {
    i[k] = sigmoid(i[k]);
    f[k] = sigmoid(f[k]);
    o[k] = sigmoid(o[k]);
    g[k] = std::tanh(g[k]);
  }

  LstmState next;
  next.c.resize(H);
  next.h.resize(H);
  Vec tanh_c(H);
  for (size_t k = 0; k < H; ++k) {
    next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
    tanh_c[k] = std::tanh(next.c[k]);
    next.h[k] = o[k] * tanh_c[k];
  }

  if (cache) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

void LstmCell::backward_step(const LstmStepCache& c, const Vec& dh, const Vec& dc_in, Vec& dx,
                             Vec& dh_prev, Vec& dc_prev) const {
  const size_t H = hidden_dim;
  Vec dc(H), da_i(H), da_f(H), da_o(H), da_g(H);

  for (size_t k = 0; k < H; ++k) {
    double do_ = dh[k] * c.tanh_c[k];
    dc[k] = dc_in[k] + dh[k] * c.o[k] * (1.0 - c.tanh_c[k] * c.tanh_c[k]);
    double di = dc[k] * c.g[k];
    double df = dc[k] * c.c_prev[k];
    double dg = dc[k] * c.i[k];
    dc_prev[k] += dc[k] * c.f[k];
    da_i[k] = di * c.i[k] * (1.0 - c.i[k]);
    da_f[k] = df * c.f[k] * (1.0 - c.f[k]);
    da_o[k] = do_ * c.o[k] * (1.0 - c.o[k]);
    da_g[k] = dg * (1.0 - c.g[k] * c.g[k]);
  }

  auto accumulate = [&](Param* w, Param* u, Param* b, const Vec& da) {
    outer_add(w->grad, da, c.x);
    outer_add(u->grad, da, c.h_prev);
    for (size_t k = 0; k < H; ++k) b->grad.data[k] += da[k];
    matvec_t_add(w->value, da, dx);
    matvec_t_add(u->value, da, dh_prev);
  };
  accumulate(wi, ui, bi, da_i);
  accumulate(wf, uf, bf, da_f);
  accumulate(wo, uo, bo, da_o);
  accumulate(wg, ug, bg, da_g);
}

// --- bidirectional encoders ----------------------------------------------------

BiGru::BiGru(ParamSet& params, const std::string& prefix, size_t input, size_t hidden)
    : fwd(params, prefix + ".fwd", input, hidden), bwd(params, prefix + ".bwd", input, hidden) {}

std::vector<Vec> BiGru::forward(const std::vector<Vec>& xs, BiGruCache* cache) const {
  if (xs.empty()) throw std::invalid_argument("BiGru: empty sequence");
  const size_t T = xs.size(), H = fwd.hidden_dim;
  std::vector<Vec> hf(T), hb(T);

  if (cache) {
    cache->fwd.resize(T);
    cache->bwd.resize(T);
  }
  Vec h(H, 0.0);
  for (size_t t = 0; t < T; ++t) {
    h = fwd.step(xs[t], h, cache ? &cache->fwd[t] : nullptr);
    hf[t] = h;
  }
  h.assign(H, 0.0);
  for (size_t t = T; t-- > 0;) {
    h = bwd.step(xs[t], h, cache ? &cache->bwd[t] : nullptr);
    hb[t] = h;
  }

  std::vector<Vec> out(T);
  for (size_t t = 0; t < T; ++t) out[t] = concat(hf[t], hb[t]);
  return out;
}

std::vector<Vec> BiGru::backward(const BiGruCache& cache, const std::vector<Vec>& dys) const {
  const size_t T = dys.size(), H = fwd.hidden_dim, I = fwd.input_dim;
  std::vector<Vec> dxs(T, Vec(I, 0.0));

  // forward direction: iterate back in time
  Vec dh(H, 0.0);
  for (size_t t = T; t-- > 0;) {
    for (size_t k = 0; k < H; ++k) dh[k] += dys[t][k];
    Vec dh_prev(H, 0.0);
    fwd.backward_step(cache.fwd[t], dh, dxs[t], dh_prev);
    dh = std::move(dh_prev);
  }
  // backward direction: its "previous" step is t+1, so iterate forward
  dh.assign(H, 0.0);
  for (size_t t = 0; t < T; ++t) {
    for (size_t k = 0; k < H; ++k) dh[k] += dys[t][H + k];
    Vec dh_prev(H, 0.0);
    bwd.backward_step(cache.bwd[t], dh, dxs[t], dh_prev);
    dh = std::move(dh_prev);
  }
  return dxs;
}

BiLstm::BiLstm(ParamSet& params, const std::string& prefix, size_t input, size_t hidden)
    : fwd(params, prefix + ".fwd", input, hidden), bwd(params, prefix + ".bwd", input, hidden) {}

std::vector<Vec> BiLstm::forward(const std::vector<Vec>& xs, BiLstmCache* cache) const {
  if (xs.empty()) throw std::invalid_argument("BiLstm: empty sequence");
  const size_t T = xs.size(), H = fwd.hidden_dim;
  std::vector<Vec> hf(T), hb(T);
  if (cache) {
    cache->fwd.resize(T);
    cache->bwd.resize(T);
  }
  LstmState s{Vec(H, 0.0), Vec(H, 0.0)};
  for (size_t t = 0; t < T; ++t) {
    s = fwd.step(xs[t], s, cache ? &cache->fwd[t] : nullptr);
    hf[t] = s.h;
  }
  s = LstmState{Vec(H, 0.0), Vec(H, 0.0)};
  for (size_t t = T; t-- > 0;) {
    s = bwd.step(xs[t], s, cache ? &cache->bwd[t] : nullptr);
    hb[t] = s.h;
  }
  std::vector<Vec> out(T);
  for (size_t t = 0; t < T; ++t) out[t] = concat(hf[t], hb[t]);
  return out;
}

std::vector<Vec> BiLstm::backward(const BiLstmCache& cache, const std::vector<Vec>& dys) const {
  const size_t T = dys.size(), H = fwd.hidden_dim, I = fwd.input_dim;
  std::vector<Vec> dxs(T, Vec(I, 0.0));

  Vec dh(H, 0.0), dc(H, 0.0);
  for (size_t t = T; t-- > 0;) {
    for (size_t k = 0; k < H; ++k) dh[k] += dys[t][k];
    Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
    fwd.backward_step(cache.fwd[t], dh, dc, dxs[t], dh_prev, dc_prev);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  dh.assign(H, 0.0);
  dc.assign(H, 0.0);
  for (size_t t = 0; t < T; ++t) {
    for (size_t k = 0; k < H; ++k) dh[k] += dys[t][H + k];
    Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
    bwd.backward_step(cache.bwd[t], dh, dc, dxs[t], dh_prev, dc_prev);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return dxs;
}

Vec BiLstm::encode_final(const std::vector<Vec>& xs, BiLstmCache* cache) const {
  if (xs.empty()) throw std::invalid_argument("BiLstm: empty sequence");
  const size_t T = xs.size(), H = fwd.hidden_dim;
  if (cache) {
    cache->fwd.resize(T);
    cache->bwd.resize(T);
  }
  LstmState s{Vec(H, 0.0), Vec(H, 0.0)};
  for (size_t t = 0; t < T; ++t) s = fwd.step(xs[t], s, cache ? &cache->fwd[t] : nullptr);
  Vec hf = s.h;
  s = LstmState{Vec(H, 0.0), Vec(H, 0.0)};
  for (size_t t = T; t-- > 0;) s = bwd.step(xs[t], s, cache ? &cache->bwd[t] : nullptr);
  return concat(hf, s.h);
}

std::vector<Vec> BiLstm::backward_final(const BiLstmCache& cache, const Vec& dfinal) const {
  const size_t T = cache.fwd.size(), H = fwd.hidden_dim, I = fwd.input_dim;
  std::vector<Vec> dxs(T, Vec(I, 0.0));

  // Only the last forward state receives gradient; propagate back through time.
  Vec dh(dfinal.begin(), dfinal.begin() + H);
  Vec dc(H, 0.0);
  for (size_t t = T; t-- > 0;) {
    Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
    fwd.backward_step(cache.fwd[t], dh, dc, dxs[t], dh_prev, dc_prev);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  // Backward direction final state is at t = 0; its chain runs toward T-1.
  dh.assign(dfinal.begin() + H, dfinal.end());
  dc.assign(H, 0.0);
  for (size_t t = 0; t < T; ++t) {
    Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
    bwd.backward_step(cache.bwd[t], dh, dc, dxs[t], dh_prev, dc_prev);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return dxs;
}

// --- attention --------------------------------------------------------------

AttentionPool::AttentionPool(ParamSet& params, const std::string& prefix, size_t input,
                             size_t attn)
    : input_dim(input), attn_dim(attn) {
  w = &params.add(prefix + ".w", {attn, input});
  b = &params.add(prefix + ".b", {attn});
  u = &params.add(prefix + ".u", {attn});
}

Vec AttentionPool::forward(const std::vector<Vec>& hs, AttnCache* cache, Vec* alpha_out) const {
  if (hs.empty()) throw std::invalid_argument("AttentionPool: empty sequence");
  const size_t T = hs.size();
  std::vector<Vec> m(T);
  Vec e(T);
  for (size_t t = 0; t < T; ++t) {
    Vec a = b->value.data;
    matvec_add(w->value, hs[t], a);
    for (double& v : a) v = std::tanh(v);
    e[t] = dot(u->value.data, a);
    m[t] = std::move(a);
  }
  Vec alpha = softmax(e);
  Vec pooled(input_dim, 0.0);
  for (size_t t = 0; t < T; ++t) {
    for (size_t k = 0; k < input_dim; ++k) pooled[k] += alpha[t] * hs[t][k];
  }
  if (alpha_out) *alpha_out = alpha;
  if (cache) {
    cache->hs = hs;
    cache->m = std::move(m);
    cache->alpha = std::move(alpha);
    cache->pooled = pooled;
  }
  return pooled;
}

std::vector<Vec> AttentionPool::backward(const AttnCache& c, const Vec& dpooled) const {
  const size_t T = c.hs.size();
  std::vector<Vec> dhs(T, Vec(input_dim, 0.0));

  Vec dalpha(T);
  for (size_t t = 0; t < T; ++t) {
    dalpha[t] = dot(dpooled, c.hs[t]);
    for (size_t k = 0; k < input_dim; ++k) dhs[t][k] += c.alpha[t] * dpooled[k];
  }

  // softmax jacobian: de_t = alpha_t (dalpha_t - sum_s alpha_s dalpha_s)
  double mix = 0.0;
  for (size_t t = 0; t < T; ++t) mix += c.alpha[t] * dalpha[t];
  Vec de(T);
  for (size_t t = 0; t < T; ++t) de[t] = c.alpha[t] * (dalpha[t] - mix);

  for (size_t t = 0; t < T; ++t) {
    // e_t = u . m_t
    Vec dm(attn_dim);
    for (size_t k = 0; k < attn_dim; ++k) {
      u->grad.data[k] += de[t] * c.m[t][k];
      dm[k] = de[t] * u->value.data[k];
    }
    Vec da(attn_dim);
    for (size_t k = 0; k < attn_dim; ++k) da[k] = dm[k] * (1.0 - c.m[t][k] * c.m[t][k]);
    outer_add(w->grad, da, c.hs[t]);
    for (size_t k = 0; k < attn_dim; ++k) b->grad.data[k] += da[k];
    matvec_t_add(w->value, da, dhs[t]);
  }
  return dhs;
}

// --- optimizers ----------------------------------------------------------------

void adam_step_param(Param& p, const AdamConfig& cfg, uint64_t t) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (size_t i = 0; i < p.value.size(); ++i) {
    double g = p.grad.data[i];
    p.m.data[i] = cfg.beta1 * p.m.data[i] + (1.0 - cfg.beta1) * g;
    p.v.data[i] = cfg.beta2 * p.v.data[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = p.m.data[i] / bc1;
    double vhat = p.v.data[i] / bc2;
    p.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(ParamSet& params, const AdamConfig& cfg, uint64_t t) {
  if (t == 0) throw std::invalid_argument("adam_step: t is 1-based");
  for (auto& [_, p] : params.entries()) adam_step_param(p, cfg, t);
}

void sgd_step(ParamSet& params, double lr) {
  for (auto& [_, p] : params.entries()) {
    for (size_t i = 0; i < p.value.size(); ++i) p.value.data[i] -= lr * p.grad.data[i];
  }
}

void clip_grad_norm(ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (auto& [_, p] : params.entries()) {
    for (double g : p.grad.data) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  double scale = max_norm / norm;
  for (auto& [_, p] : params.entries()) {
    for (double& g : p.grad.data) g *= scale;
  }
}

void xavier_init(Tensor& t, size_t fan_in, size_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
}

void init_params_xavier(ParamSet& params, Rng& rng) {
  for (auto& [name, p] : params.entries()) {
    if (p.value.shape.size() == 2) {
      xavier_init(p.value, p.value.cols(), p.value.rows(), rng);
    } else {
      p.value.fill(0.0);  // biases
    }
  }
}

// --- checkpoints ----------------------------------------------------------------

static constexpr char kMagic[4] = {'R', 'R', 'C', 'K'};
static constexpr uint32_t kVersion = 1;

template <typename T>
static void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
static void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void save_checkpoint(const ParamSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, uint64_t(params.entries().size()));
  for (const auto& [name, p] : params.entries()) {
    write_pod(out, uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_pod(out, uint32_t(p.value.shape.size()));
    for (size_t d : p.value.shape) write_pod(out, uint64_t(d));
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              std::streamsize(p.value.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

void load_checkpoint(ParamSet& params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t version = 0;
  read_pod(in, version);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  uint64_t count = 0;
  read_pod(in, count);
  size_t seen = 0;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = 0;
    read_pod(in, name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t ndim = 0;
    read_pod(in, ndim);
    std::vector<size_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      uint64_t v = 0;
      read_pod(in, v);
      shape[d] = size_t(v);
    }
    if (!params.contains(name))
      throw std::runtime_error("checkpoint has unknown parameter " + name);
    Param& p = params.at(name);
    if (p.value.shape != shape)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(p.value.data.data()),
            std::streamsize(p.value.data.size() * sizeof(double)));
    ++seen;
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  if (seen != params.entries().size())
    throw std::runtime_error("checkpoint missing parameters (" + std::to_string(seen) + " of " +
                             std::to_string(params.entries().size()) + ")");
}

}  // namespace radrec::nn
