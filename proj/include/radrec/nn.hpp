#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radrec/rng.hpp"

namespace radrec::nn {

using Vec = std::vector<double>;

struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<size_t> shape);

  size_t size() const { return data.size(); }
  size_t rows() const { return shape.at(0); }
  size_t cols() const { return shape.at(1); }
  double& at(size_t r, size_t c) { return data[r * cols() + c]; }
  double at(size_t r, size_t c) const { return data[r * cols() + c]; }
  void fill(double v);
};

// A parameter with its gradient buffer and Adam moments. Gradients accumulate
// across a batch; the optimizer consumes and the trainer zeroes them.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
};

// Named parameter bundle. Owned by exactly one training loop at a time;
// frozen parameters are safe to share read-only across threads.
class ParamSet {
 public:
  Param& add(const std::string& name, std::vector<size_t> shape);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grads();
  size_t total_values() const;

  std::map<std::string, Param>& entries() { return params_; }
  const std::map<std::string, Param>& entries() const { return params_; }

  std::map<std::string, Tensor> snapshot_values() const;
  void restore_values(const std::map<std::string, Tensor>& snapshot);

 private:
  std::map<std::string, Param> params_;
};

// --- elementary math -------------------------------------------------------

void matvec_add(const Tensor& w, const Vec& x, Vec& y);    // y += W x
void matvec_t_add(const Tensor& w, const Vec& dy, Vec& dx);  // dx += W^T dy
void outer_add(Tensor& dw, const Vec& dy, const Vec& x);   // dW += dy x^T
double dot(const Vec& a, const Vec& b);
Vec concat(const Vec& a, const Vec& b);

Vec softmax(const Vec& logits);

struct XentResult {
  double loss = 0.0;
  Vec grad;  // d loss / d logits
  Vec probs;
};
// Numerically stable cross-entropy; optional per-class loss weights.
XentResult softmax_xent(const Vec& logits, size_t target, const Vec* class_weights = nullptr);

enum class Mode { Train, Eval };

// Inverted dropout: surviving activations scale by 1/keep so eval is identity.
Vec dropout(const Vec& x, double rate, Mode mode, Rng& rng, std::vector<uint8_t>* mask = nullptr);
Vec dropout_backward(const Vec& dy, double rate, const std::vector<uint8_t>& mask);

// --- layers -----------------------------------------------------------------

struct DenseCache {
  Vec x;
};

struct Dense {
  Param* w = nullptr;  // [out, in]
  Param* b = nullptr;  // [out]
  size_t in_dim = 0, out_dim = 0;

  Dense() = default;
  Dense(ParamSet& params, const std::string& prefix, size_t in, size_t out);

  Vec forward(const Vec& x, DenseCache* cache = nullptr) const;
  Vec backward(const DenseCache& cache, const Vec& dy) const;  // returns dx
};

struct GruStepCache {
  Vec x, h_prev, z, r, rh, hcand;
};

// Standard GRU: z,r gates, candidate state, h = (1-z) * h_prev + z * hcand.
struct GruCell {
  Param *wz = nullptr, *uz = nullptr, *bz = nullptr;
  Param *wr = nullptr, *ur = nullptr, *br = nullptr;
  Param *wh = nullptr, *uh = nullptr, *bh = nullptr;
  size_t input_dim = 0, hidden_dim = 0;

  GruCell() = default;
  GruCell(ParamSet& params, const std::string& prefix, size_t input, size_t hidden);

  Vec step(const Vec& x, const Vec& h_prev, GruStepCache* cache = nullptr) const;
  // Accumulates parameter gradients; adds input gradients into dx/dh_prev.
  void backward_step(const GruStepCache& cache, const Vec& dh, Vec& dx, Vec& dh_prev) const;
};

struct LstmState {
  Vec h, c;
};

struct LstmStepCache {
  Vec x, h_prev, c_prev, i, f, o, g, c, tanh_c;
};

struct LstmCell {
  Param *wi = nullptr, *ui = nullptr, *bi = nullptr;
  Param *wf = nullptr, *uf = nullptr, *bf = nullptr;
  Param *wo = nullptr, *uo = nullptr, *bo = nullptr;
  Param *wg = nullptr, *ug = nullptr, *bg = nullptr;
  size_t input_dim = 0, hidden_dim = 0;

  LstmCell() = default;
  LstmCell(ParamSet& params, const std::string& prefix, size_t input, size_t hidden);

  LstmState step(const Vec& x, const LstmState& prev, LstmStepCache* cache = nullptr) const;
  void backward_step(const LstmStepCache& cache, const Vec& dh, const Vec& dc, Vec& dx,
                     Vec& dh_prev, Vec& dc_prev) const;
};

// --- bidirectional encoders --------------------------------------------------

struct BiGruCache {
  std::vector<GruStepCache> fwd, bwd;
};

struct BiGru {
  GruCell fwd, bwd;

  BiGru() = default;
  BiGru(ParamSet& params, const std::string& prefix, size_t input, size_t hidden);

  // outputs[t] = concat(h_fwd[t], h_bwd[t]); length preserved, width 2*hidden.
  std::vector<Vec> forward(const std::vector<Vec>& xs, BiGruCache* cache = nullptr) const;
  std::vector<Vec> backward(const BiGruCache& cache, const std::vector<Vec>& dys) const;
};

struct BiLstmCache {
  std::vector<LstmStepCache> fwd, bwd;
};

struct BiLstm {
  LstmCell fwd, bwd;

  BiLstm() = default;
  BiLstm(ParamSet& params, const std::string& prefix, size_t input, size_t hidden);

  std::vector<Vec> forward(const std::vector<Vec>& xs, BiLstmCache* cache = nullptr) const;
  std::vector<Vec> backward(const BiLstmCache& cache, const std::vector<Vec>& dys) const;

  // Final hidden states of each direction concatenated, as used by the
  // character encoder.
  Vec encode_final(const std::vector<Vec>& xs, BiLstmCache* cache = nullptr) const;
  std::vector<Vec> backward_final(const BiLstmCache& cache, const Vec& dfinal) const;
};

// --- attention ---------------------------------------------------------------

struct AttnCache {
  std::vector<Vec> hs, m;
  Vec alpha, pooled;
};

// e_t = u . tanh(W h_t + b); alpha = softmax(e); pooled = sum alpha_t h_t.
struct AttentionPool {
  Param *w = nullptr, *b = nullptr, *u = nullptr;
  size_t input_dim = 0, attn_dim = 0;

  AttentionPool() = default;
  AttentionPool(ParamSet& params, const std::string& prefix, size_t input, size_t attn);

  Vec forward(const std::vector<Vec>& hs, AttnCache* cache = nullptr,
              Vec* alpha_out = nullptr) const;
  std::vector<Vec> backward(const AttnCache& cache, const Vec& dpooled) const;
};

// --- optimizers ---------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam; t is the 1-based step count.
void adam_step(ParamSet& params, const AdamConfig& cfg, uint64_t t);
void adam_step_param(Param& p, const AdamConfig& cfg, uint64_t t);
void sgd_step(ParamSet& params, double lr);
// Optional global max-norm clip, off by default in the trainers.
void clip_grad_norm(ParamSet& params, double max_norm);

// Uniform Xavier/Glorot by explicit fan-in/out.
void xavier_init(Tensor& t, size_t fan_in, size_t fan_out, Rng& rng);
void init_params_xavier(ParamSet& params, Rng& rng);

// --- checkpoints ---------------------------------------------------------------

// Versioned little-endian binary: magic "RRCK", u32 version, u64 count, then
// (u32 name_len, name, u32 ndim, u64 dims..., f64 data...) per tensor, sorted
// by name. Byte-identical for identical parameter values.
void save_checkpoint(const ParamSet& params, const std::string& path);
// Shapes and names must match the registered parameters exactly.
void load_checkpoint(ParamSet& params, const std::string& path);

}  // namespace radrec::nn
