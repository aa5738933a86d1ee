#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pipecam/image.hpp"
#include "pipecam/optics.hpp"

namespace pipecam {

/// Dense transfer matrix recovered by impulse probing (or loaded from a
/// TOP1 file), plus the grid shapes needed to reshape flat vectors.
struct CalibratedMatrix {
  enum class Source { kProbed, kLoaded };

  int sensor_h = 0, sensor_w = 0;
  int scene_h = 0, scene_w = 0;
  Source source = Source::kProbed;
  std::vector<double> matrix;  // row-major (sensor px) x (scene px)

  int rows() const { return sensor_h * sensor_w; }
  int cols() const { return scene_h * scene_w; }
};

struct SolverParams {
  double lambda = 1e-3;    // Tikhonov weight
  int max_cg_iters = 500;
  double cg_tol = 1e-8;    // relative residual on the normal equations
  int tsvd_rank = 0;       // 0 = unused
  bool record_history = false;
};

struct SolveResult {
  std::vector<double> x;   // unconstrained minimizer (not clamped)
  bool converged = false;
  int iterations = 0;
  double ne_residual_rel = 0.0;  // ||A'y - (A'A+lI)x|| / ||A'y|| at return
  // sqrt(||Ax-y||^2 + lambda*||x||^2) after each iteration; non-increasing.
  std::vector<double> objective_history;
};

struct CalibrateOptions {
  bool verify_linearity = false;  // probe a subset twice at 2x amplitude
  double linearity_tol = 1e-6;
};

using ForwardFn = std::function<Image(const Image&)>;

/// Recovers the matrix column-by-column: column k is the sensor response to
/// a unit impulse at scene pixel k (single channel). The forward function
/// must be linear and noise-free while probing.
CalibratedMatrix calibrate(const ForwardFn& forward_fn, int scene_h,
                           int scene_w, const CalibrateOptions& opts = {});

CalibratedMatrix matrix_from_operator(const TransferOperator& op);

/// argmin_x ||Ax - y||^2 + lambda ||x||^2 by conjugate gradients on the
/// normal equations; stops at cg_tol relative residual or max_cg_iters and
/// returns the best iterate either way.
SolveResult tikhonov_solve(const CalibratedMatrix& a,
                           std::span<const double> y,
                           const SolverParams& params);

/// Multi-channel convenience wrapper; solves each sensor channel and
/// reshapes to the scene grid. Clamping to [0,1] is opt-in.
Image tikhonov_reconstruct(const CalibratedMatrix& a, const Image& sensor,
                           const SolverParams& params, bool clamp01);

/// Thin SVD via one-sided Jacobi, singular values descending.
struct SvdResult {
  std::vector<double> u;  // rows() x rank, column-major
  std::vector<double> s;  // rank
  std::vector<double> v;  // cols() x rank, column-major
  int rank = 0;
};

SvdResult jacobi_svd(const CalibratedMatrix& a);

/// Truncated-SVD solve: x = sum_{i<k} (u_i'y / s_i) v_i.
std::vector<double> tsvd_solve(const CalibratedMatrix& a,
                               std::span<const double> y, int rank);
std::vector<double> tsvd_solve(const SvdResult& svd, int rows, int cols,
                               std::span<const double> y, int rank);

struct ConditionEstimate {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double ratio = 0.0;
  int power_iters = 0;
};

/// sigma_max by power iteration on A'A, sigma_min by shifted inverse
/// iteration; a diagnostic for how ill-posed the inversion is.
ConditionEstimate estimate_condition(const CalibratedMatrix& a,
                                     int power_iters);

}  // namespace pipecam
