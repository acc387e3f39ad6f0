#pragma once

#include <span>
#include <vector>

#include "maad/common.hpp"
#include "maad/dataio.hpp"

namespace maad::oneclass {

double gaussian_kernel(std::span<const double> u, std::span<const double> v, double gamma);

// nu-one-class SVM (Schoelkopf dual): min 1/2 a'Ka s.t. 0 <= a_i <= 1/(nu n),
// sum a_i = 1. Features are standardized with training statistics before
// kernel evaluation; support vectors are stored in the standardized space.
struct OcSvmModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> dual_coeffs;  // matching alpha_i > 0
  double rho = 0.0;
  double gamma = 1.0;
  double nu = 0.1;
  std::vector<double> feat_mean;
  std::vector<double> feat_std;
  double kkt_residual = 0.0;
  int64_t iterations = 0;
};

struct FitOptions {
  int64_t max_iterations = 100000;
  double tolerance = 1e-6;
};

OcSvmModel fit_ocsvm(const std::vector<std::vector<double>>& features, double gamma, double nu,
                     const FitOptions& opts = {});

// rho - sum_j alpha_j k(sv_j, x): larger = more abnormal, boundary points ~0.
double score_ocsvm(const OcSvmModel& model, std::span<const double> feature);

const std::vector<double>& default_gamma_grid();  // 2^-10 .. 2^-1
const std::vector<double>& default_nu_grid();     // 0.01, 0.1

struct GridCell {
  double gamma = 0.0;
  double nu = 0.0;
  double aupr_abnormal = 0.0;
};

struct GridSearchResult {
  double best_gamma = 0.0;
  double best_nu = 0.0;
  OcSvmModel best_model;
  std::vector<GridCell> cells;
};

// Fits one model per (gamma, nu) on the unlabeled features and keeps the one
// with the highest AUPR-Abnormal on the labeled subset. Ties break toward
// smaller gamma, then smaller nu.
GridSearchResult grid_search(const std::vector<std::vector<double>>& features_train,
                             const std::vector<std::vector<double>>& labeled_features,
                             const std::vector<int>& labeled_abnormal,
                             const std::vector<double>& gammas = default_gamma_grid(),
                             const std::vector<double>& nus = default_nu_grid());

// Seeded index draw of round(frac*n) labeled frames, for the validation subset.
std::vector<size_t> draw_subset_indices(size_t n, double frac, uint64_t seed);

dataio::Checkpoint to_checkpoint(const OcSvmModel& model);
OcSvmModel ocsvm_from_checkpoint(const dataio::Checkpoint& ck);

}  // namespace maad::oneclass
