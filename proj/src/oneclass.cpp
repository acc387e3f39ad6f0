#include "maad/oneclass.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maad/eval.hpp"

namespace maad::oneclass {

double gaussian_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size())
    throw ShapeMismatch("gaussian_kernel: dims " + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()));
  double d2 = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

constexpr double kSvEps = 1e-12;  // alpha below this is not a support vector

struct Standardizer {
  std::vector<double> mean, std;

  static Standardizer fit(const std::vector<std::vector<double>>& features) {
    const size_t n = features.size(), d = features.front().size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (const auto& f : features)
      for (size_t j = 0; j < d; ++j) s.mean[j] += f[j];
    for (double& m : s.mean) m /= double(n);
    for (const auto& f : features)
      for (size_t j = 0; j < d; ++j) {
        const double dev = f[j] - s.mean[j];
        s.std[j] += dev * dev;
      }
    for (double& v : s.std) {
      v = std::sqrt(v / double(n));
      if (v < 1e-12) v = 1.0;  // constant dimension
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> f) const {
    std::vector<double> out(f.size());
    for (size_t j = 0; j < f.size(); ++j) out[j] = (f[j] - mean[j]) / std[j];
    return out;
  }
};

}  // namespace

OcSvmModel fit_ocsvm(const std::vector<std::vector<double>>& features, double gamma, double nu,
                     const FitOptions& opts) {
  if (features.empty()) throw EmptyTrainingSet("fit_ocsvm with no features");
  if (nu <= 0.0 || nu > 1.0) throw ConfigError("nu must lie in (0, 1]");
  if (gamma <= 0.0) throw ConfigError("gamma must be positive");
  const size_t n = features.size();
  const size_t dim = features.front().size();
  for (const auto& f : features)
    if (f.size() != dim) throw ShapeMismatch("inconsistent feature dimensions");

  const Standardizer stdz = Standardizer::fit(features);
  std::vector<std::vector<double>> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = stdz.apply(features[i]);

  OcSvmModel model;
  model.gamma = gamma;
  model.nu = nu;
  model.feat_mean = stdz.mean;
  model.feat_std = stdz.std;

  if (n == 1) {
    // degenerate closed form: alpha_1 = 1, rho = k(x,x) = 1
    model.support_vectors = {x[0]};
    model.dual_coeffs = {1.0};
    model.rho = 1.0;
    return model;
  }

  const double cap = 1.0 / (nu * double(n));
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i; j < n; ++j) kernel[i][j] = kernel[j][i] = gaussian_kernel(x[i], x[j], gamma);

  // feasible start: uniform weights; g = K alpha
  std::vector<double> alpha(n, 1.0 / double(n));
  std::vector<double> g(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    g[i] = std::accumulate(kernel[i].begin(), kernel[i].end(), 0.0) / double(n);

  // SMO on maximal-violation pairs: mass moves from the largest gradient
  // (alpha > 0) to the smallest (alpha < cap) until the KKT gap closes
  int64_t iter = 0;
  double violation = 0.0;
  for (; iter < opts.max_iterations; ++iter) {
    int up = -1, down = -1;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
      if (alpha[i] < cap && g[i] < g_min) {
        g_min = g[i];
        up = int(i);
      }
      if (alpha[i] > 0.0 && g[i] > g_max) {
        g_max = g[i];
        down = int(i);
      }
    }
    violation = g_max - g_min;
    if (up < 0 || down < 0 || violation <= opts.tolerance) break;

    const size_t i = size_t(up), j = size_t(down);
    const double eta = kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j];
    double delta = eta > 1e-15 ? violation / eta : std::numeric_limits<double>::infinity();
    delta = std::min(delta, std::min(cap - alpha[i], alpha[j]));
    alpha[i] += delta;
    alpha[j] -= delta;
    for (size_t k = 0; k < n; ++k) g[k] += delta * (kernel[k][i] - kernel[k][j]);
  }
  if (violation > opts.tolerance)
    throw SolverDivergence("SMO hit " + std::to_string(opts.max_iterations) +
                           " iterations with KKT residual " + std::to_string(violation));
  model.iterations = iter;
  model.kkt_residual = std::max(0.0, violation);

  // rho from margin support vectors (0 < alpha < cap); all-bounded fallback
  double rho_sum = 0.0;
  int rho_count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (alpha[i] > kSvEps && alpha[i] < cap - kSvEps) {
      rho_sum += g[i];
      ++rho_count;
    }
  }
  if (rho_count == 0) {
    for (size_t i = 0; i < n; ++i) {
      if (alpha[i] > kSvEps) {
        rho_sum += g[i];
        ++rho_count;
      }
    }
  }
  model.rho = rho_sum / double(rho_count);

  for (size_t i = 0; i < n; ++i) {
    if (alpha[i] > kSvEps) {
      model.support_vectors.push_back(x[i]);
      model.dual_coeffs.push_back(alpha[i]);
    }
  }
  return model;
}

double score_ocsvm(const OcSvmModel& model, std::span<const double> feature) {
  std::vector<double> z(feature.size());
  for (size_t j = 0; j < feature.size(); ++j)
    z[j] = (feature[j] - model.feat_mean[j]) / model.feat_std[j];
  double decision = 0.0;
  for (size_t i = 0; i < model.support_vectors.size(); ++i)
    decision += model.dual_coeffs[i] * gaussian_kernel(model.support_vectors[i], z, model.gamma);
  return model.rho - decision;
}

const std::vector<double>& default_gamma_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int e = -10; e <= -1; ++e) g.push_back(std::pow(2.0, e));
    return g;
  }();
  return grid;
}

const std::vector<double>& default_nu_grid() {
  static const std::vector<double> grid = {0.01, 0.1};
  return grid;
}

GridSearchResult grid_search(const std::vector<std::vector<double>>& features_train,
                             const std::vector<std::vector<double>>& labeled_features,
                             const std::vector<int>& labeled_abnormal,
                             const std::vector<double>& gammas, const std::vector<double>& nus) {
  if (labeled_features.size() != labeled_abnormal.size())
    throw ShapeMismatch("labeled features and flags differ in length");
  const int64_t n_pos = std::count(labeled_abnormal.begin(), labeled_abnormal.end(), 1);
  if (n_pos == 0 || n_pos == int64_t(labeled_abnormal.size()))
    throw DegenerateLabels("grid search needs both classes in the labeled subset");

  // ascending order + strict improvement = ties break to smaller gamma, then nu
  std::vector<double> gamma_grid(gammas.begin(), gammas.end());
  std::vector<double> nu_grid(nus.begin(), nus.end());
  std::sort(gamma_grid.begin(), gamma_grid.end());
  std::sort(nu_grid.begin(), nu_grid.end());

  GridSearchResult result;
  double best = -1.0;
  for (const double gamma : gamma_grid) {
    for (const double nu : nu_grid) {
      OcSvmModel model = fit_ocsvm(features_train, gamma, nu);
      std::vector<eval::Pair> pairs;
      pairs.reserve(labeled_features.size());
      for (size_t i = 0; i < labeled_features.size(); ++i)
        pairs.emplace_back(score_ocsvm(model, labeled_features[i]), labeled_abnormal[i]);
      const double score = eval::aupr(pairs);
      result.cells.push_back({gamma, nu, score});
      if (score > best) {
        best = score;
        result.best_gamma = gamma;
        result.best_nu = nu;
        result.best_model = std::move(model);
      }
    }
  }
  return result;
}

std::vector<size_t> draw_subset_indices(size_t n, double frac, uint64_t seed) {
  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), size_t(0));
  Rng rng = Rng(seed).derive(0x5B);
  for (size_t i = n; i > 1; --i) std::swap(indices[i - 1], indices[size_t(rng.uniform_int(int(i)))]);
  const size_t k = std::max<size_t>(1, size_t(std::lround(frac * double(n))));
  indices.resize(std::min(k, n));
  std::sort(indices.begin(), indices.end());
  return indices;
}

dataio::Checkpoint to_checkpoint(const OcSvmModel& model) {
  dataio::Checkpoint ck;
  ck.architecture = "ocsvm";
  ck.objective = "oneclass";
  const int n = int(model.support_vectors.size());
  const int d = n > 0 ? int(model.support_vectors.front().size()) : 0;
  ck.dims = {{"support_vectors", n}, {"features", d}};
  ck.extra = {{"rho", model.rho},
              {"gamma", model.gamma},
              {"nu", model.nu},
              {"kkt_residual", model.kkt_residual},
              {"iterations", model.iterations}};
  std::vector<double> sv_flat;
  sv_flat.reserve(size_t(n) * size_t(d));
  for (const auto& sv : model.support_vectors) sv_flat.insert(sv_flat.end(), sv.begin(), sv.end());
  ck.tensors.emplace_back("support_vectors", diffcalc::Tensor({n, d}, std::move(sv_flat)));
  ck.tensors.emplace_back("dual_coeffs",
                          diffcalc::Tensor({1, n}, std::vector<double>(model.dual_coeffs)));
  ck.tensors.emplace_back("feat_mean",
                          diffcalc::Tensor({1, d}, std::vector<double>(model.feat_mean)));
  ck.tensors.emplace_back("feat_std",
                          diffcalc::Tensor({1, d}, std::vector<double>(model.feat_std)));
  ck.norm_stats = {{"standardized", true}};
  return ck;
}

OcSvmModel ocsvm_from_checkpoint(const dataio::Checkpoint& ck) {
  if (ck.architecture != "ocsvm")
    throw ArchitectureMismatch("checkpoint holds '" + ck.architecture + "', requested 'ocsvm'");
  OcSvmModel model;
  model.rho = ck.extra.at("rho").get<double>();
  model.gamma = ck.extra.at("gamma").get<double>();
  model.nu = ck.extra.at("nu").get<double>();
  model.kkt_residual = ck.extra.value("kkt_residual", 0.0);
  model.iterations = ck.extra.value("iterations", int64_t(0));
  const diffcalc::Tensor& sv = ck.require("support_vectors");
  const int n = sv.rows(), d = sv.cols();
  model.support_vectors.resize(size_t(n));
  for (int i = 0; i < n; ++i)
    model.support_vectors[size_t(i)] =
        std::vector<double>(sv.data.begin() + i * d, sv.data.begin() + (i + 1) * d);
  model.dual_coeffs = ck.require("dual_coeffs").data;
  model.feat_mean = ck.require("feat_mean").data;
  model.feat_std = ck.require("feat_std").data;
  return model;
}

}  // namespace maad::oneclass
