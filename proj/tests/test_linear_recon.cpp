#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pipecam/datagen.hpp"
#include "pipecam/linear_recon.hpp"
#include "pipecam/metrics.hpp"
#include "pipecam/optics.hpp"
#include "pipecam/rng.hpp"

using namespace pipecam;

namespace {

CalibratedMatrix make_matrix(int sh, int sw, int rows_h, int rows_w,
                             const std::vector<double>& values) {
  CalibratedMatrix m;
  m.scene_h = sh;
  m.scene_w = sw;
  m.sensor_h = rows_h;
  m.sensor_w = rows_w;
  m.matrix = values;
  return m;
}

// Dense solve of (A'A + lambda I) x = A'y by Gaussian elimination with
// partial pivoting; the oracle for the CG path.
std::vector<double> dense_normal_solve(const CalibratedMatrix& a,
                                       const std::vector<double>& y,
                                       double lambda) {
  const int rows = a.rows(), cols = a.cols();
  std::vector<double> m(static_cast<std::size_t>(cols) * (cols + 1), 0.0);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < cols; ++j) {
      double s = i == j ? lambda : 0.0;
      for (int r = 0; r < rows; ++r)
        s += a.matrix[static_cast<std::size_t>(r) * cols + i] *
             a.matrix[static_cast<std::size_t>(r) * cols + j];
      m[static_cast<std::size_t>(i) * (cols + 1) + j] = s;
    }
  for (int i = 0; i < cols; ++i) {
    double b = 0.0;
    for (int r = 0; r < rows; ++r)
      b += a.matrix[static_cast<std::size_t>(r) * cols + i] * y[r];
    m[static_cast<std::size_t>(i) * (cols + 1) + cols] = b;
  }
  for (int p = 0; p < cols; ++p) {
    int best = p;
    for (int i = p + 1; i < cols; ++i)
      if (std::abs(m[static_cast<std::size_t>(i) * (cols + 1) + p]) >
          std::abs(m[static_cast<std::size_t>(best) * (cols + 1) + p]))
        best = i;
    for (int j = 0; j <= cols; ++j)
      std::swap(m[static_cast<std::size_t>(p) * (cols + 1) + j],
                m[static_cast<std::size_t>(best) * (cols + 1) + j]);
    const double piv = m[static_cast<std::size_t>(p) * (cols + 1) + p];
    for (int i = p + 1; i < cols; ++i) {
      const double f = m[static_cast<std::size_t>(i) * (cols + 1) + p] / piv;
      for (int j = p; j <= cols; ++j)
        m[static_cast<std::size_t>(i) * (cols + 1) + j] -=
            f * m[static_cast<std::size_t>(p) * (cols + 1) + j];
    }
  }
  std::vector<double> x(cols, 0.0);
  for (int i = cols - 1; i >= 0; --i) {
    double s = m[static_cast<std::size_t>(i) * (cols + 1) + cols];
    for (int j = i + 1; j < cols; ++j)
      s -= m[static_cast<std::size_t>(i) * (cols + 1) + j] * x[j];
    x[i] = s / m[static_cast<std::size_t>(i) * (cols + 1) + i];
  }
  return x;
}

}  // namespace

TEST_CASE("probing the identity simulator recovers the identity matrix") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = cfg.sensor_h = cfg.sensor_w = 8;
  cfg.identity_mode = true;
  const auto op = build_operator(cfg, 0);
  const auto cal = calibrate(
      [&op](const Image& s) { return forward(op, s); }, 8, 8);
  REQUIRE(cal.rows() == 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c)
      CHECK(cal.matrix[static_cast<std::size_t>(r) * 64 + c] ==
            (r == c ? 1.0 : 0.0));
}

TEST_CASE("probing the simulator reproduces its matrix") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = 12;
  cfg.sensor_h = cfg.sensor_w = 14;
  const auto op = build_operator(cfg, 2);
  const auto cal = calibrate(
      [&op](const Image& s) { return forward(op, s); }, 12, 12);
  double worst = 0.0;
  for (int r = 0; r < op.rows; ++r)
    for (int c = 0; c < op.cols; ++c)
      worst = std::max(worst,
                       std::abs(cal.matrix[static_cast<std::size_t>(r) * op.cols + c] -
                                op.entry(r, c)));
  CHECK(worst < 1e-6);
}

TEST_CASE("verification flags a biased forward function") {
  OpticalConfig cfg;
  cfg.scene_h = cfg.scene_w = cfg.sensor_h = cfg.sensor_w = 8;
  cfg.identity_mode = true;
  const auto op = build_operator(cfg, 0);
  auto biased = [&op](const Image& s) {
    Image out = forward(op, s);
    for (auto& v : out.data) v += 0.05f;
    return out;
  };
  CalibrateOptions opts;
  opts.verify_linearity = true;
  CHECK_THROWS_WITH_AS(calibrate(biased, 8, 8, opts),
                       doctest::Contains("not linear"), std::runtime_error);
  // without verification the probe happily records the biased columns
  CHECK_NOTHROW(calibrate(biased, 8, 8));
}

TEST_CASE("tikhonov: identity system with zero lambda returns y") {
  auto a = make_matrix(2, 2, 2, 2,
                       {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  SolverParams p;
  p.lambda = 0.0;
  const std::vector<double> y = {0.3, -0.1, 0.9, 0.44};
  const auto res = tikhonov_solve(a, y, p);
  CHECK(res.converged);
  for (int i = 0; i < 4; ++i)
    CHECK(res.x[i] == doctest::Approx(y[i]).epsilon(1e-10));
}

TEST_CASE("tikhonov scalar oracle: A=[2], y=[4], lambda=2 -> 4/3") {
  auto a = make_matrix(1, 1, 1, 1, {2.0});
  SolverParams p;
  p.lambda = 2.0;
  const auto res = tikhonov_solve(a, std::vector<double>{4.0}, p);
  CHECK(res.x[0] == doctest::Approx(8.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("dominant regularizer crushes the solution") {
  auto a = make_matrix(2, 1, 2, 1, {1.0, 0.5, 0.5, 2.0});
  SolverParams p;
  p.lambda = 1e12;
  const std::vector<double> y = {1.0, 1.0};
  const auto res = tikhonov_solve(a, y, p);
  // ||x|| < 1e-9 * ||A'y||
  double xn = std::hypot(res.x[0], res.x[1]);
  double bn = std::hypot(1.0 * 1 + 0.5 * 1, 0.5 * 1 + 2.0 * 1);
  CHECK(xn < 1e-9 * bn);
}

TEST_CASE("CG matches the dense normal-equation solve on random 8x8 systems") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int scene = 8 * 8, sensor = 10 * 10;
    CalibratedMatrix a;
    a.scene_h = a.scene_w = 8;
    a.sensor_h = a.sensor_w = 10;
    a.matrix.resize(static_cast<std::size_t>(sensor) * scene);
    for (auto& v : a.matrix) v = rng.next_unit() / scene;
    std::vector<double> y(sensor);
    for (auto& v : y) v = rng.next_unit();

    SolverParams p;
    p.lambda = 1e-3;
    p.max_cg_iters = 2000;
    p.cg_tol = 1e-12;
    const auto res = tikhonov_solve(a, y, p);
    const auto oracle = dense_normal_solve(a, y, p.lambda);
    double worst = 0.0;
    for (int i = 0; i < scene; ++i)
      worst = std::max(worst, std::abs(res.x[i] - oracle[i]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("CG objective residuals are non-increasing") {
  SplitMix64 rng(77);
  CalibratedMatrix a;
  a.scene_h = a.scene_w = 6;
  a.sensor_h = a.sensor_w = 8;
  a.matrix.resize(static_cast<std::size_t>(a.rows()) * a.cols());
  for (auto& v : a.matrix) v = rng.next_unit() / a.cols();
  std::vector<double> y(a.rows());
  for (auto& v : y) v = rng.next_unit();

  SolverParams p;
  p.lambda = 1e-3;
  p.record_history = true;
  const auto res = tikhonov_solve(a, y, p);
  REQUIRE(res.objective_history.size() > 2);
  for (std::size_t i = 1; i < res.objective_history.size(); ++i)
    CHECK(res.objective_history[i] <=
          res.objective_history[i - 1] + 1e-10);
}

TEST_CASE("normal-equation optimality at convergence") {
  SplitMix64 rng(13);
  CalibratedMatrix a;
  a.scene_h = a.scene_w = 6;
  a.sensor_h = a.sensor_w = 7;
  a.matrix.resize(static_cast<std::size_t>(a.rows()) * a.cols());
  for (auto& v : a.matrix) v = rng.next_unit() / a.cols();
  std::vector<double> y(a.rows());
  for (auto& v : y) v = rng.next_unit();
  SolverParams p;
  p.lambda = 1e-3;
  const auto res = tikhonov_solve(a, y, p);
  REQUIRE(res.converged);
  // recompute ||A'y - (A'A+lI)x|| directly
  const int rows = a.rows(), cols = a.cols();
  std::vector<double> ax(rows, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      ax[r] += a.matrix[static_cast<std::size_t>(r) * cols + c] * res.x[c];
  std::vector<double> resid(cols, 0.0);
  double bnorm = 0.0;
  for (int c = 0; c < cols; ++c) {
    double aty = 0.0, atax = 0.0;
    for (int r = 0; r < rows; ++r) {
      aty += a.matrix[static_cast<std::size_t>(r) * cols + c] * y[r];
      atax += a.matrix[static_cast<std::size_t>(r) * cols + c] * ax[r];
    }
    resid[c] = aty - atax - p.lambda * res.x[c];
    bnorm += aty * aty;
  }
  double rnorm = 0.0;
  for (double v : resid) rnorm += v * v;
  CHECK(std::sqrt(rnorm) <= p.cg_tol * std::sqrt(bnorm) * 1.01);
}

TEST_CASE("tsvd: diagonal oracle and rank validation") {
  auto a = make_matrix(2, 1, 2, 1, {3.0, 0.0, 0.0, 1.0});
  const std::vector<double> y = {3.0, 1.0};
  const auto x1 = tsvd_solve(a, y, 1);
  CHECK(x1[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(x1[1] == doctest::Approx(0.0).epsilon(1e-10));
  const auto x2 = tsvd_solve(a, y, 2);
  CHECK(x2[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(x2[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(tsvd_solve(a, y, 0), std::invalid_argument);
  CHECK_THROWS_AS(tsvd_solve(a, y, 3), std::invalid_argument);
}

TEST_CASE("tsvd: full rank on an orthogonal matrix inverts exactly") {
  // 4x4 permutation-with-signs matrix is orthogonal
  auto a = make_matrix(2, 2, 2, 2,
                       {0, 1, 0, 0,
                        0, 0, 0, -1,
                        1, 0, 0, 0,
                        0, 0, 1, 0});
  SplitMix64 rng(3);
  std::vector<double> x_true(4);
  for (auto& v : x_true) v = rng.next_unit();
  // y = A x
  std::vector<double> y(4, 0.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      y[r] += a.matrix[static_cast<std::size_t>(r) * 4 + c] * x_true[c];
  const auto x = tsvd_solve(a, y, 4);
  for (int i = 0; i < 4; ++i)
    CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-8));
}

TEST_CASE("jacobi svd recovers singular values of a random matrix") {
  SplitMix64 rng(55);
  CalibratedMatrix a;
  a.scene_h = 3;
  a.scene_w = 2;
  a.sensor_h = 4;
  a.sensor_w = 2;
  a.matrix.resize(48);
  for (auto& v : a.matrix) v = rng.next_unit() - 0.3;
  const auto svd = jacobi_svd(a);
  REQUIRE(svd.rank == 6);
  // reconstruct A from U S V' and compare
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 6; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 6; ++k)
        acc += svd.u[static_cast<std::size_t>(k) * 8 + r] * svd.s[k] *
               svd.v[static_cast<std::size_t>(k) * 6 + c];
      CHECK(acc ==
            doctest::Approx(a.matrix[static_cast<std::size_t>(r) * 6 + c])
                .epsilon(1e-9));
    }
  for (int k = 1; k < 6; ++k) CHECK(svd.s[k - 1] >= svd.s[k]);
}

TEST_CASE("condition estimates: identity and diagonal oracles") {
  auto eye = make_matrix(2, 1, 2, 1, {1.0, 0.0, 0.0, 1.0});
  const auto ce = estimate_condition(eye, 50);
  CHECK(ce.ratio == doctest::Approx(1.0).epsilon(1e-6));

  auto diag = make_matrix(2, 1, 2, 1, {10.0, 0.0, 0.0, 0.1});
  const auto cd = estimate_condition(diag, 200);
  CHECK(cd.ratio == doctest::Approx(100.0).epsilon(0.01));

  CHECK_THROWS_AS(estimate_condition(eye, 5), std::invalid_argument);
}

TEST_CASE("noiseless desk round trip recovers glyphs and flags ill-conditioning") {
  OpticalConfig cfg;  // default desk scale, 32x32 -> 40x40
  const auto op = build_operator(cfg, cfg.ref_depth_index());
  const auto cal = matrix_from_operator(op);

  NoiseParams off;
  off.enabled = false;
  auto glyphs = gen_glyphs(10, 10, 32, 1234, nullptr);
  SolverParams p;  // default lambda 1e-3
  double total_mae = 0.0;
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    const Image sensor = sense(forward(op, glyphs[i]), off,
                               splitmix64_hash(4000 + i));
    const Image rec = tikhonov_reconstruct(cal, sensor, p, true);
    total_mae += mae(rec, quantize_8bit(glyphs[i]));
  }
  CHECK(total_mae / glyphs.size() < 0.02);

  const auto ce = estimate_condition(cal, 60);
  CHECK(ce.ratio > 10.0);
}
