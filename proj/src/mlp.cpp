#include "ebst/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ebst/numerics.hpp"
#include "ebst/text.hpp"

namespace ebst {

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2)
    throw std::invalid_argument("MlpParams: need at least input and output dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("MlpParams: zero layer dimension");
}

void check_input(const MlpParams& p, std::span<const double> x) {
  if (x.size() != p.input_dim())
    throw std::invalid_argument("forward: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(p.input_dim()));
}

}  // namespace

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

bool MlpParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].all_finite()) return false;
    if (!ebst::all_finite(biases[l])) return false;
  }
  return true;
}

MlpParams MlpParams::zeros(std::vector<std::size_t> dims) {
  check_dims(dims);
  MlpParams p;
  p.layer_dims = std::move(dims);
  for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
    p.weights.emplace_back(p.layer_dims[l + 1], p.layer_dims[l]);
    p.biases.emplace_back(p.layer_dims[l + 1], 0.0);
  }
  return p;
}

MlpParams MlpParams::glorot(std::vector<std::size_t> dims, Rng& rng) {
  MlpParams p = zeros(std::move(dims));
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    double fan_in = static_cast<double>(p.layer_dims[l]);
    double fan_out = static_cast<double>(p.layer_dims[l + 1]);
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : p.weights[l].data()) w = rng.uniform(-bound, bound);
  }
  return p;
}

Gradients Gradients::zeros_like(const MlpParams& p) {
  Gradients g;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    g.biases.emplace_back(p.biases[l].size(), 0.0);
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto dst = weights[l].data();
    auto src = other.weights[l].data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i)
      biases[l][i] += s * other.biases[l][i];
  }
}

void Gradients::scale(double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double& v : weights[l].data()) v *= s;
    for (double& v : biases[l]) v *= s;
  }
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double v : weights[l].data()) m = std::max(m, std::abs(v));
    for (double v : biases[l]) m = std::max(m, std::abs(v));
  }
  return m;
}

bool Gradients::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].all_finite()) return false;
    if (!ebst::all_finite(biases[l])) return false;
  }
  return true;
}

namespace {

// Flat layout: W0 row-major, b0, W1, b1, ...
template <typename Params, typename Fn>
decltype(auto) with_flat_slot(Params& p, std::size_t i, Fn&& fn) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    if (i < p.weights[l].size()) return fn(p.weights[l].data()[i]);
    i -= p.weights[l].size();
    if (i < p.biases[l].size()) return fn(p.biases[l][i]);
    i -= p.biases[l].size();
  }
  throw std::out_of_range("flat parameter index out of range");
}

}  // namespace

double get_param(const MlpParams& p, std::size_t i) {
  return with_flat_slot(p, i, [](const double& v) { return v; });
}

void set_param(MlpParams& p, std::size_t i, double v) {
  with_flat_slot(p, i, [v](double& slot) { slot = v; });
}

double get_grad(const Gradients& g, std::size_t i) {
  return with_flat_slot(g, i, [](const double& v) { return v; });
}

void set_grad(Gradients& g, std::size_t i, double v) {
  with_flat_slot(g, i, [v](double& slot) { slot = v; });
}

ForwardTrace forward_trace(const MlpParams& p, std::span<const double> x) {
  check_input(p, x);
  ForwardTrace t;
  t.acts.reserve(p.n_layers() + 1);
  t.acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const Matrix& W = p.weights[l];
    const std::vector<double>& in = t.acts.back();
    std::vector<double> out(W.rows());
    for (std::size_t r = 0; r < W.rows(); ++r) {
      double acc = p.biases[l][r];
      auto wrow = W.row(r);
      for (std::size_t c = 0; c < W.cols(); ++c) acc += wrow[c] * in[c];
      out[r] = acc;
    }
    if (l + 1 < p.n_layers())
      for (double& v : out) v = std::tanh(v);
    t.acts.push_back(std::move(out));
  }
  return t;
}

std::vector<double> forward(const MlpParams& p, std::span<const double> x) {
  return forward_trace(p, x).acts.back();
}

std::vector<double> predict_proba(const MlpParams& p, std::span<const double> x) {
  return softmax(forward(p, x));
}

Matrix predict_proba_all(const MlpParams& p, const Matrix& X) {
  Matrix out(X.rows(), p.output_dim());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::vector<double> probs = predict_proba(p, X.row(r));
    for (std::size_t k = 0; k < probs.size(); ++k) out(r, k) = probs[k];
  }
  return out;
}

void backprop_logits(const MlpParams& p, const ForwardTrace& trace,
                     std::span<const double> dlogits, Gradients& grads,
                     std::vector<double>* dx) {
  if (dlogits.size() != p.output_dim())
    throw std::invalid_argument("backprop_logits: dlogits size mismatch");
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  for (std::size_t l = p.n_layers(); l-- > 0;) {
    const Matrix& W = p.weights[l];
    const std::vector<double>& in = trace.acts[l];
    Matrix& gW = grads.weights[l];
    std::vector<double>& gb = grads.biases[l];
    for (std::size_t r = 0; r < W.rows(); ++r) {
      gb[r] += delta[r];
      auto grow = gW.row(r);
      for (std::size_t c = 0; c < W.cols(); ++c) grow[c] += delta[r] * in[c];
    }
    if (l == 0) {
      if (dx != nullptr) {
        dx->assign(W.cols(), 0.0);
        for (std::size_t r = 0; r < W.rows(); ++r) {
          auto wrow = W.row(r);
          for (std::size_t c = 0; c < W.cols(); ++c)
            (*dx)[c] += wrow[c] * delta[r];
        }
      }
      break;
    }
    std::vector<double> back(W.cols(), 0.0);
    for (std::size_t r = 0; r < W.rows(); ++r) {
      auto wrow = W.row(r);
      for (std::size_t c = 0; c < W.cols(); ++c) back[c] += wrow[c] * delta[r];
    }
    // in == tanh(z) for the layer below, so tanh' = 1 - in^2.
    for (std::size_t c = 0; c < W.cols(); ++c) back[c] *= 1.0 - in[c] * in[c];
    delta = std::move(back);
  }
}

namespace {

void check_target(const std::vector<double>& target, std::size_t k) {
  if (target.size() != k)
    throw std::invalid_argument("ce target has wrong dimension");
  double sum = 0.0;
  for (double v : target) {
    if (v < -1e-9)
      throw std::invalid_argument("ce target has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("ce target does not sum to 1");
}

// loss of one example: lse(z) - sum_k y_k z_k  (== -sum_k y_k log p_k).
double ce_example_loss(const std::vector<double>& logits,
                       const std::vector<double>& target) {
  double lse = log_sum_exp(logits);
  double dot = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) dot += target[k] * logits[k];
  return lse - dot;
}

}  // namespace

CeResult ce_backward(const MlpParams& p, const DistBatch& batch) {
  if (batch.empty()) throw std::domain_error("ce_backward: empty batch");
  const std::size_t k = p.output_dim();
  CeResult res;
  res.grads = Gradients::zeros_like(p);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dlogits(k);
  for (const TrainExample& ex : batch) {
    check_target(ex.target, k);
    ForwardTrace trace = forward_trace(p, ex.x);
    const std::vector<double>& logits = trace.acts.back();
    res.loss += ce_example_loss(logits, ex.target) * inv_b;
    std::vector<double> probs = softmax(logits);
    for (std::size_t i = 0; i < k; ++i)
      dlogits[i] = (probs[i] - ex.target[i]) * inv_b;
    backprop_logits(p, trace, dlogits, res.grads);
  }
  return res;
}

double ce_loss(const MlpParams& p, const DistBatch& batch) {
  if (batch.empty()) throw std::domain_error("ce_loss: empty batch");
  const std::size_t k = p.output_dim();
  double loss = 0.0;
  for (const TrainExample& ex : batch) {
    check_target(ex.target, k);
    loss += ce_example_loss(forward(p, ex.x), ex.target);
  }
  return loss / static_cast<double>(batch.size());
}

void save_checkpoint(const MlpParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << "ebst-mlp-v1";
  for (std::size_t d : p.layer_dims) out << ' ' << d;
  out << '\n';
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    auto w = p.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i)
      out << (i == 0 ? "" : " ") << format_double(w[i]);
    out << '\n';
    for (std::size_t i = 0; i < p.biases[l].size(); ++i)
      out << (i == 0 ? "" : " ") << format_double(p.biases[l][i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

namespace {

std::vector<double> parse_tensor_line(std::istream& in, std::size_t expected,
                                      const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint truncated: " + path);
  std::vector<double> vals;
  vals.reserve(expected);
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    double v;
    if (!parse_double(tok, v) || !std::isfinite(v))
      throw std::runtime_error("checkpoint has a bad value '" + tok + "': " + path);
    vals.push_back(v);
  }
  if (vals.size() != expected)
    throw std::runtime_error("checkpoint tensor has " + std::to_string(vals.size()) +
                             " values, expected " + std::to_string(expected) + ": " + path);
  return vals;
}

}  // namespace

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("checkpoint is empty: " + path);
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "ebst-mlp-v1")
    throw std::runtime_error("unrecognized checkpoint format '" + magic + "': " + path);
  std::vector<std::size_t> dims;
  std::size_t d;
  while (hs >> d) dims.push_back(d);
  MlpParams p = MlpParams::zeros(dims);
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    std::vector<double> w = parse_tensor_line(in, p.weights[l].size(), path);
    std::copy(w.begin(), w.end(), p.weights[l].data().begin());
    p.biases[l] = parse_tensor_line(in, p.biases[l].size(), path);
  }
  return p;
}

}  // namespace ebst
