#include "sdnguard/learn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::learn {

namespace {

// Rows per gradient chunk. Chunks are reduced in a fixed order, so the
// summed gradient is identical for every thread count.
constexpr std::size_t kChunk = 32;

struct Workspace {
  std::vector<std::vector<double>> acts;    // acts[l] has sizes[l] entries
  std::vector<std::vector<double>> deltas;  // deltas[l] for layer output l+1

  explicit Workspace(const std::vector<std::size_t>& sizes) {
    for (auto s : sizes) acts.emplace_back(s, 0.0);
    for (std::size_t l = 1; l < sizes.size(); ++l) deltas.emplace_back(sizes[l], 0.0);
  }
};

/// Fills ws.acts; the last layer holds logits. Returns log-sum-exp.
double forward(const MlpParameters& p, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const std::size_t L = p.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = p.sizes[l], out = p.sizes[l + 1];
    auto& z = ws.acts[l + 1];
    std::copy(p.biases[l].begin(), p.biases[l].end(), z.begin());
    const double* w = p.weights[l].data();
    const auto& a = ws.acts[l];
    for (std::size_t i = 0; i < in; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      const double* wi = w + i * out;
      for (std::size_t o = 0; o < out; ++o) z[o] += ai * wi[o];
    }
    if (l + 1 < L)
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
  }
  const auto& logits = ws.acts[L];
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return mx + std::log(s);
}

double chunk_loss(const MlpParameters& p, const Matrix& X, std::span<const int> y,
                  std::span<const std::size_t> rows, MlpParameters* grad, Workspace& ws) {
  const std::size_t L = p.weights.size();
  double loss = 0.0;
  for (auto r : rows) {
    const double lse = forward(p, X.row(r), ws);
    const auto label = static_cast<std::size_t>(y[r]);
    loss += lse - ws.acts[L][label];
    if (!grad) continue;
    auto& top = ws.deltas[L - 1];
    for (std::size_t c = 0; c < top.size(); ++c) top[c] = std::exp(ws.acts[L][c] - lse);
    top[label] -= 1.0;
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = p.sizes[l], out = p.sizes[l + 1];
      const auto& delta = ws.deltas[l];
      const auto& a = ws.acts[l];
      double* gw = grad->weights[l].data();
      for (std::size_t i = 0; i < in; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        double* gwi = gw + i * out;
        for (std::size_t o = 0; o < out; ++o) gwi[o] += ai * delta[o];
      }
      auto& gb = grad->biases[l];
      for (std::size_t o = 0; o < out; ++o) gb[o] += delta[o];
      if (l == 0) break;
      auto& prev = ws.deltas[l - 1];
      const double* w = p.weights[l].data();
      for (std::size_t i = 0; i < in; ++i) {
        if (a[i] <= 0.0) {
          prev[i] = 0.0;
          continue;
        }
        const double* wi = w + i * out;
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += wi[o] * delta[o];
        prev[i] = s;
      }
    }
  }
  return loss;
}

void add_scaled(MlpParameters& dst, const MlpParameters& src, double scale) {
  for (std::size_t l = 0; l < dst.weights.size(); ++l) {
    for (std::size_t i = 0; i < dst.weights[l].size(); ++i) dst.weights[l][i] += scale * src.weights[l][i];
    for (std::size_t i = 0; i < dst.biases[l].size(); ++i) dst.biases[l][i] += scale * src.biases[l][i];
  }
}

}  // namespace

MlpParameters MlpParameters::zeros_like(const MlpParameters& p) {
  MlpParameters z;
  z.sizes = p.sizes;
  for (const auto& w : p.weights) z.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : p.biases) z.biases.emplace_back(b.size(), 0.0);
  return z;
}

std::size_t MlpParameters::count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

double mlp_loss(const MlpParameters& params, const Matrix& X, std::span<const int> y,
                std::span<const std::size_t> rows, double l2, MlpParameters* grad) {
  if (rows.empty()) throw DataError("mlp loss over zero rows");
  const std::size_t n_chunks = (rows.size() + kChunk - 1) / kChunk;
  std::vector<double> losses(n_chunks, 0.0);
  std::vector<MlpParameters> grads;
  if (grad) grads.assign(n_chunks, MlpParameters::zeros_like(params));

  const auto nc = static_cast<std::ptrdiff_t>(n_chunks);
#pragma omp parallel
  {
    Workspace ws(params.sizes);
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) {
      const auto begin = static_cast<std::size_t>(c) * kChunk;
      const auto len = std::min(kChunk, rows.size() - begin);
      losses[static_cast<std::size_t>(c)] =
          chunk_loss(params, X, y, rows.subspan(begin, len), grad ? &grads[static_cast<std::size_t>(c)] : nullptr, ws);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (double l : losses) loss += l;
  loss *= inv_n;
  double sq = 0.0;
  for (const auto& w : params.weights)
    for (double v : w) sq += v * v;
  loss += 0.5 * l2 * sq;

  if (grad) {
    *grad = MlpParameters::zeros_like(params);
    for (const auto& g : grads) add_scaled(*grad, g, 1.0);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      auto& gw = grad->weights[l];
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] = gw[i] * inv_n + l2 * params.weights[l][i];
      for (auto& gb : grad->biases[l]) gb *= inv_n;
    }
  }
  return loss;
}

MlpParameters init_mlp(std::span<const std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw UsageError("an mlp needs input and output layers");
  for (auto s : sizes)
    if (s == 0) throw UsageError("mlp layer sizes must be positive");
  MlpParameters p;
  p.sizes.assign(sizes.begin(), sizes.end());
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(sizes[l]));
    std::vector<double> w(sizes[l] * sizes[l + 1]);
    for (auto& v : w) v = sd * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(sizes[l + 1], 0.0);
  }
  return p;
}

Matrix MlpModel::predict_proba(const Matrix& X) const {
  check_width(X);
  const std::size_t C = n_classes();
  Matrix out(X.rows(), C);
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
  const std::size_t L = params_.weights.size();
#pragma omp parallel
  {
    Workspace ws(params_.sizes);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double lse = forward(params_, X.row(static_cast<std::size_t>(i)), ws);
      auto dst = out.row(static_cast<std::size_t>(i));
      for (std::size_t c = 0; c < C; ++c) dst[c] = std::exp(ws.acts[L][c] - lse);
      double s = 0.0;
      for (double v : dst) s += v;
      for (auto& v : dst) v /= s;
    }
  }
  return out;
}

Record MlpModel::to_record() const {
  Record r("mlp");
  r.put_int("seed", static_cast<std::int64_t>(seed_));
  r.put("sizes", std::vector<std::int64_t>(params_.sizes.begin(), params_.sizes.end()));
  r.put("hyper", std::vector<double>{static_cast<double>(hyper_.epochs), static_cast<double>(hyper_.batch_size),
                                     hyper_.learning_rate, hyper_.beta1, hyper_.beta2, hyper_.epsilon, hyper_.l2});
  for (std::size_t l = 0; l < params_.weights.size(); ++l) {
    r.put("W" + std::to_string(l), params_.weights[l]);
    r.put("b" + std::to_string(l), params_.biases[l]);
  }
  return r;
}

MlpModel MlpModel::from_record(const Record& r) {
  r.expect_type("mlp");
  MlpParameters p;
  for (auto s : r.ints("sizes")) {
    if (s <= 0) throw DataError("bad mlp layer size");
    p.sizes.push_back(static_cast<std::size_t>(s));
  }
  if (p.sizes.size() < 2) throw DataError("mlp record needs at least two layers");
  for (std::size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    p.weights.push_back(r.reals("W" + std::to_string(l)));
    p.biases.push_back(r.reals("b" + std::to_string(l)));
    if (p.weights[l].size() != p.sizes[l] * p.sizes[l + 1] || p.biases[l].size() != p.sizes[l + 1])
      throw DataError("mlp weight shapes disagree with layer sizes");
  }
  MlpParams h;
  const auto& hv = r.reals("hyper");
  if (hv.size() != 7) throw DataError("bad mlp hyperparameter block");
  h.hidden.assign(p.sizes.begin() + 1, p.sizes.end() - 1);
  h.epochs = static_cast<std::size_t>(hv[0]);
  h.batch_size = static_cast<std::size_t>(hv[1]);
  h.learning_rate = hv[2];
  h.beta1 = hv[3];
  h.beta2 = hv[4];
  h.epsilon = hv[5];
  h.l2 = hv[6];
  return MlpModel(std::move(p), std::move(h), static_cast<std::uint64_t>(r.integer("seed")));
}

MlpModel fit_mlp(const Matrix& X, std::span<const int> y, std::size_t n_classes, const MlpParams& hp,
                 std::uint64_t seed) {
  if (y.size() != X.rows() || X.rows() == 0) throw DataError("mlp needs a nonempty labelled matrix");
  if (hp.batch_size == 0) throw UsageError("mlp batch_size must be positive");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw DataError("label outside [0, C)");
  std::vector<std::size_t> sizes{X.cols()};
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(n_classes);
  MlpParameters params = init_mlp(sizes, derive_seed(seed, "init"));
  MlpParameters m = MlpParameters::zeros_like(params), v = m, grad = m;

  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += hp.batch_size) {
      const auto len = std::min(hp.batch_size, order.size() - begin);
      const std::span<const std::size_t> batch(order.data() + begin, len);
      const double loss = mlp_loss(params, X, y, batch, hp.l2, &grad);
      if (!std::isfinite(loss))
        throw NumericalError("mlp loss became non-finite at epoch " + std::to_string(epoch) +
                             "; lower learning_rate or check the input scaling");
      epoch_loss += loss * static_cast<double>(len);
      ++step;
      const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
      auto adam = [&](std::vector<double>& theta, std::vector<double>& mm, std::vector<double>& vv,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
          mm[i] = hp.beta1 * mm[i] + (1.0 - hp.beta1) * g[i];
          vv[i] = hp.beta2 * vv[i] + (1.0 - hp.beta2) * g[i] * g[i];
          theta[i] -= hp.learning_rate * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + hp.epsilon);
        }
      };
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam(params.weights[l], m.weights[l], v.weights[l], grad.weights[l]);
        adam(params.biases[l], m.biases[l], v.biases[l], grad.biases[l]);
      }
    }
    history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  MlpModel model(std::move(params), hp, seed);
  model.set_loss_history(std::move(history));
  return model;
}

}  // namespace sdnguard::learn
