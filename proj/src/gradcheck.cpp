#include "ebst/gradcheck.hpp"

#include <cmath>

#include "ebst/energy.hpp"
#include "ebst/selftrain.hpp"

namespace ebst {

Gradients fd_param_gradient(const MlpParams& params,
                            const std::function<double(const MlpParams&)>& loss,
                            double h) {
  MlpParams work = params;
  Gradients fd = Gradients::zeros_like(params);
  const std::size_t n = params.param_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get_param(work, i);
    set_param(work, i, v + h);
    const double up = loss(work);
    set_param(work, i, v - h);
    const double down = loss(work);
    set_param(work, i, v);
    set_grad(fd, i, (up - down) / (2.0 * h));
  }
  return fd;
}

std::vector<double> fd_input_gradient(
    std::span<const double> x,
    const std::function<double(std::span<const double>)>& loss, double h) {
  std::vector<double> work(x.begin(), x.end());
  std::vector<double> fd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = work[i];
    work[i] = v + h;
    const double up = loss(work);
    work[i] = v - h;
    const double down = loss(work);
    work[i] = v;
    fd[i] = (up - down) / (2.0 * h);
  }
  return fd;
}

namespace {

double rel(double a, double b, double floor_val) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_val});
}

}  // namespace

double max_rel_err(const Gradients& a, const Gradients& b, double floor_val) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    auto aw = a.weights[l].data();
    auto bw = b.weights[l].data();
    for (std::size_t i = 0; i < aw.size(); ++i)
      worst = std::max(worst, rel(aw[i], bw[i], floor_val));
    for (std::size_t i = 0; i < a.biases[l].size(); ++i)
      worst = std::max(worst, rel(a.biases[l][i], b.biases[l][i], floor_val));
  }
  return worst;
}

double max_rel_err(std::span<const double> a, std::span<const double> b,
                   double floor_val) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, rel(a[i], b[i], floor_val));
  return worst;
}

namespace {

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double sum = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());  // Exp(1); normalized -> Dirichlet(1)
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

std::vector<double> one_hot(std::size_t k, std::size_t cls) {
  std::vector<double> v(k, 0.0);
  v[cls] = 1.0;
  return v;
}

std::vector<double> smoothed(std::size_t k, std::size_t cls, double eps) {
  std::vector<double> v(k, eps / static_cast<double>(k - 1));
  v[cls] = 1.0 - eps;
  return v;
}

DistBatch random_batch(Rng& rng, std::size_t n, std::size_t d,
                       const std::function<std::vector<double>()>& make_target) {
  DistBatch batch(n);
  for (TrainExample& ex : batch) {
    ex.x = rng.gaussian_vec(d);
    ex.target = make_target();
  }
  return batch;
}

Matrix batch_features(const DistBatch& batch) {
  Matrix m(batch.size(), batch.front().x.size());
  for (std::size_t r = 0; r < batch.size(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = batch[r].x[c];
  return m;
}

}  // namespace

GradcheckReport run_gradcheck_suite(std::size_t n_configs, std::uint64_t seed,
                                    double tolerance, double h) {
  GradcheckReport report;
  Rng rng(seed);
  for (std::size_t cfg_i = 0; cfg_i < n_configs; ++cfg_i) {
    report.configs += 1;
    const std::size_t d = 2 + rng.index_below(6);   // 2..7
    const std::size_t k = 2 + rng.index_below(4);   // 2..5
    std::vector<std::size_t> dims{d};
    const std::size_t n_hidden = rng.index_below(3);  // 0..2 hidden layers
    for (std::size_t i = 0; i < n_hidden; ++i)
      dims.push_back(2 + rng.index_below(11));  // 2..12
    dims.push_back(k);
    MlpParams params = MlpParams::glorot(dims, rng);
    const std::size_t batch_n = 1 + rng.index_below(6);

    auto record = [&](const std::string& name, double err) {
      report.checks += 1;
      report.worst = std::max(report.worst, err);
      if (!(err < tolerance))
        report.failures.push_back("config " + std::to_string(cfg_i) + " " +
                                  name + ": rel err " + std::to_string(err));
    };

    // source CE (one-hot), pseudo CE (one-hot), smoothed CE
    for (int kind = 0; kind < 3; ++kind) {
      DistBatch batch = random_batch(rng, batch_n, d, [&]() -> std::vector<double> {
        std::size_t cls = rng.index_below(k);
        if (kind == 2) return smoothed(k, cls, 0.05 + 0.4 * rng.uniform());
        return one_hot(k, cls);
      });
      CeResult analytic = ce_backward(params, batch);
      Gradients fd = fd_param_gradient(
          params, [&](const MlpParams& p) { return ce_loss(p, batch); }, h);
      const char* names[] = {"source-ce", "pseudo-ce", "smoothed-ce"};
      record(names[kind], max_rel_err(analytic.grads, fd));
    }

    // energy w.r.t. parameters
    DistBatch ebatch = random_batch(rng, batch_n, d,
                                    [&]() { return random_simplex(rng, k); });
    Matrix feats = batch_features(ebatch);
    {
      Gradients analytic = energy_grad_params(params, feats);
      Gradients fd = fd_param_gradient(
          params, [&](const MlpParams& p) { return mean_energy(p, feats); }, h);
      record("energy-dw", max_rel_err(analytic, fd));
    }

    // energy w.r.t. the input
    {
      std::vector<double> x = rng.gaussian_vec(d);
      std::vector<double> analytic = energy_grad_input(params, x);
      std::vector<double> fd = fd_input_gradient(
          x, [&](std::span<const double> v) { return energy(params, v); }, h);
      record("energy-dx", max_rel_err(analytic, fd));
    }

    // combined retraining loss: source CE + scaled pseudo CE + alpha * energy
    {
      DistBatch src = random_batch(rng, batch_n, d, [&]() {
        return one_hot(k, rng.index_below(k));
      });
      const std::size_t n_sel = 1 + rng.index_below(batch_n);
      DistBatch sel(ebatch.begin(), ebatch.begin() + n_sel);
      for (TrainExample& ex : sel) ex.target = one_hot(k, rng.index_below(k));
      const double sel_scale = static_cast<double>(n_sel) /
                               static_cast<double>(ebatch.size());
      const double alpha = 0.5 + rng.uniform();

      auto combined_loss = [&](const MlpParams& p) {
        return ce_loss(p, src) + sel_scale * ce_loss(p, sel) +
               alpha * mean_energy(p, feats);
      };
      Gradients analytic = ce_backward(params, src).grads;
      analytic.add_scaled(ce_backward(params, sel).grads, sel_scale);
      Gradients energy_part = energy_grad_params(params, feats);
      analytic.add_scaled(energy_part, alpha);
      Gradients fd = fd_param_gradient(params, combined_loss, h);
      record("combined-step2", max_rel_err(analytic, fd));
    }
  }
  return report;
}

}  // namespace ebst
