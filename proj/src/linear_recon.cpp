#include "pipecam/linear_recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pipecam {

namespace {

void matvec(const std::vector<double>& a, int rows, int cols,
            const double* x, double* y) {
  for (int r = 0; r < rows; ++r) {
    const double* row = &a[static_cast<std::size_t>(r) * cols];
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const std::vector<double>& a, int rows, int cols,
              const double* y, double* x) {
  std::fill(x, x + cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    const double* row = &a[static_cast<std::size_t>(r) * cols];
    const double v = y[r];
    if (v == 0.0) continue;
    for (int c = 0; c < cols; ++c) x[c] += row[c] * v;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

CalibratedMatrix calibrate(const ForwardFn& forward_fn, int scene_h,
                           int scene_w, const CalibrateOptions& opts) {
  if (scene_h < 1 || scene_w < 1)
    throw std::invalid_argument("calibrate: bad scene dims");
  const int cols = scene_h * scene_w;

  Image impulse(1, scene_h, scene_w);
  impulse.at(0, 0, 0) = 1.0f;
  Image first = forward_fn(impulse);
  if (first.channels != 1)
    throw std::invalid_argument("calibrate: forward must return one channel");

  CalibratedMatrix cal;
  cal.sensor_h = first.height;
  cal.sensor_w = first.width;
  cal.scene_h = scene_h;
  cal.scene_w = scene_w;
  cal.source = CalibratedMatrix::Source::kProbed;
  const int rows = cal.rows();
  cal.matrix.assign(static_cast<std::size_t>(rows) * cols, 0.0);

  // Verification pixels: evenly spaced sample re-probed at 2x amplitude.
  const int verify_stride = std::max(1, cols / 32);

  for (int k = 0; k < cols; ++k) {
    Image probe(1, scene_h, scene_w);
    probe.data[k] = 1.0f;
    const Image response = k == 0 ? first : forward_fn(probe);
    if (response.height != cal.sensor_h || response.width != cal.sensor_w ||
        response.channels != 1)
      throw std::runtime_error(
          "calibrate: forward output dims changed at probe " +
          std::to_string(k));
    for (int r = 0; r < rows; ++r)
      cal.matrix[static_cast<std::size_t>(r) * cols + k] = response.data[r];

    if (opts.verify_linearity && k % verify_stride == 0) {
      probe.data[k] = 2.0f;  // deliberately outside [0,1]; probing is analog
      const Image doubled = forward_fn(probe);
      for (int r = 0; r < rows; ++r) {
        const double expect = 2.0 * response.data[r];
        if (std::abs(doubled.data[r] - expect) > opts.linearity_tol)
          throw std::runtime_error(
              "calibrate: forward function is not linear at scene pixel " +
              std::to_string(k) + " (|f(2e_k) - 2 f(e_k)| = " +
              std::to_string(std::abs(doubled.data[r] - expect)) + ")");
      }
    }
  }
  return cal;
}

CalibratedMatrix matrix_from_operator(const TransferOperator& op) {
  CalibratedMatrix cal;
  cal.sensor_h = op.sensor_h;
  cal.sensor_w = op.sensor_w;
  cal.scene_h = op.scene_h;
  cal.scene_w = op.scene_w;
  cal.source = CalibratedMatrix::Source::kLoaded;
  cal.matrix.assign(op.matrix.begin(), op.matrix.end());
  return cal;
}

SolveResult tikhonov_solve(const CalibratedMatrix& a,
                           std::span<const double> y,
                           const SolverParams& params) {
  const int rows = a.rows(), cols = a.cols();
  if (static_cast<int>(y.size()) != rows)
    throw std::invalid_argument("tikhonov_solve: y size mismatch");
  if (params.lambda < 0.0)
    throw std::invalid_argument("tikhonov_solve: lambda must be >= 0");
  if (params.cg_tol <= 0.0)
    throw std::invalid_argument("tikhonov_solve: cg_tol must be > 0");

  // b = A'y; normal operator applied as x -> A'(Ax) + lambda x.
  std::vector<double> b(cols), tmp_rows(rows), bx(cols);
  matvec_t(a.matrix, rows, cols, y.data(), b.data());
  const double b_norm = norm2(b);
  const double y_norm2 = dot(y, y);

  SolveResult res;
  res.x.assign(cols, 0.0);
  if (b_norm == 0.0) {
    res.converged = true;
    return res;
  }

  auto apply_normal = [&](const std::vector<double>& x, std::vector<double>& out) {
    matvec(a.matrix, rows, cols, x.data(), tmp_rows.data());
    matvec_t(a.matrix, rows, cols, tmp_rows.data(), out.data());
    if (params.lambda != 0.0)
      for (int c = 0; c < cols; ++c) out[c] += params.lambda * x[c];
  };

  std::vector<double> x(cols, 0.0), r = b, p = b, ap(cols);
  std::vector<double> best_x = x;
  double rr = dot(r, r);
  double best_rel = 1.0;
  const double tol2 = params.cg_tol * params.cg_tol * b_norm * b_norm;

  int it = 0;
  for (; it < params.max_cg_iters && rr > tol2; ++it) {
    apply_normal(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) break;  // numerical breakdown; keep best iterate
    const double alpha = rr / pap;
    for (int c = 0; c < cols; ++c) {
      x[c] += alpha * p[c];
      r[c] -= alpha * ap[c];
    }
    const double rr_new = dot(r, r);
    const double rel = std::sqrt(rr_new) / b_norm;
    if (rel < best_rel) {
      best_rel = rel;
      best_x = x;
    }
    if (params.record_history) {
      // ||Ax-y||^2 + lambda||x||^2 = ||y||^2 - b'x - r'x, monotone under CG.
      const double obj = y_norm2 - dot(b, x) - dot(r, x);
      res.objective_history.push_back(std::sqrt(std::max(0.0, obj)));
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int c = 0; c < cols; ++c) p[c] = r[c] + beta * p[c];
  }

  const double final_rel = std::sqrt(rr) / b_norm;
  if (final_rel <= best_rel) {
    res.x = std::move(x);
    res.ne_residual_rel = final_rel;
  } else {
    res.x = std::move(best_x);
    res.ne_residual_rel = best_rel;
  }
  res.iterations = it;
  res.converged = res.ne_residual_rel <= params.cg_tol;
  return res;
}

Image tikhonov_reconstruct(const CalibratedMatrix& a, const Image& sensor,
                           const SolverParams& params, bool clamp01) {
  if (sensor.height * sensor.width != a.rows())
    throw std::invalid_argument(
        "tikhonov_reconstruct: sensor dims do not match matrix");
  Image out(sensor.channels, a.scene_h, a.scene_w);
  std::vector<double> y(a.rows());
  for (int c = 0; c < sensor.channels; ++c) {
    const float* src = sensor.channel(c);
    for (int i = 0; i < a.rows(); ++i) y[i] = src[i];
    SolveResult res = tikhonov_solve(a, y, params);
    float* dst = out.channel(c);
    for (int i = 0; i < a.cols(); ++i) {
      double v = res.x[i];
      if (clamp01) v = std::clamp(v, 0.0, 1.0);
      dst[i] = static_cast<float>(v);
    }
  }
  return out;
}

SvdResult jacobi_svd(const CalibratedMatrix& a) {
  // One-sided Jacobi on columns. Works on A directly when rows >= cols,
  // otherwise on A'; U and V swap accordingly.
  const bool transposed = a.rows() < a.cols();
  const int m = transposed ? a.cols() : a.rows();
  const int n = transposed ? a.rows() : a.cols();

  // Column-major working copy of the (possibly transposed) matrix.
  std::vector<double> w(static_cast<std::size_t>(m) * n);
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) {
      const double v = a.matrix[static_cast<std::size_t>(r) * a.cols() + c];
      if (transposed)
        w[static_cast<std::size_t>(r) * m + c] = v;  // column r, row c
      else
        w[static_cast<std::size_t>(c) * m + r] = v;  // column c, row r
    }

  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

  const double eps = 1e-14;
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_off = 0.0;
    for (int p = 0; p < n - 1; ++p) {
      double* cp = &w[static_cast<std::size_t>(p) * m];
      for (int q = p + 1; q < n; ++q) {
        double* cq = &w[static_cast<std::size_t>(q) * m];
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += cp[i] * cp[i];
          aqq += cq[i] * cq[i];
          apq += cp[i] * cq[i];
        }
        const double denom = std::sqrt(app * aqq);
        if (denom == 0.0) continue;
        const double off = std::abs(apq) / denom;
        max_off = std::max(max_off, off);
        if (off <= eps) continue;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (int i = 0; i < m; ++i) {
          const double wp = cp[i], wq = cq[i];
          cp[i] = cs * wp - sn * wq;
          cq[i] = sn * wp + cs * wq;
        }
        double* vp = &v[static_cast<std::size_t>(p) * n];
        double* vq = &v[static_cast<std::size_t>(q) * n];
        for (int i = 0; i < n; ++i) {
          const double tp = vp[i], tq = vq[i];
          vp[i] = cs * tp - sn * tq;
          vq[i] = sn * tp + cs * tq;
        }
      }
    }
    if (max_off <= eps) break;
  }

  std::vector<double> sigma(n);
  for (int c = 0; c < n; ++c) {
    const double* col = &w[static_cast<std::size_t>(c) * m];
    sigma[c] = norm2(std::span<const double>(col, static_cast<std::size_t>(m)));
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.rank = n;
  out.s.resize(n);
  out.u.assign(static_cast<std::size_t>(m) * n, 0.0);
  out.v.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int c = 0; c < n; ++c) {
    const int src = order[c];
    out.s[c] = sigma[src];
    const double* wc = &w[static_cast<std::size_t>(src) * m];
    double* uc = &out.u[static_cast<std::size_t>(c) * m];
    if (sigma[src] > 0.0) {
      const double inv = 1.0 / sigma[src];
      for (int i = 0; i < m; ++i) uc[i] = wc[i] * inv;
    }
    const double* vs = &v[static_cast<std::size_t>(src) * n];
    double* vd = &out.v[static_cast<std::size_t>(c) * n];
    std::copy(vs, vs + n, vd);
  }

  if (transposed) std::swap(out.u, out.v);
  return out;
}

std::vector<double> tsvd_solve(const SvdResult& svd, int rows, int cols,
                               std::span<const double> y, int rank) {
  if (rank < 1 || rank > svd.rank)
    throw std::invalid_argument("tsvd_solve: rank must be in [1, " +
                                std::to_string(svd.rank) + "]");
  if (static_cast<int>(y.size()) != rows)
    throw std::invalid_argument("tsvd_solve: y size mismatch");
  std::vector<double> x(cols, 0.0);
  for (int i = 0; i < rank; ++i) {
    if (svd.s[i] == 0.0) break;
    const double* u_i = &svd.u[static_cast<std::size_t>(i) * rows];
    const double coef =
        dot(std::span<const double>(u_i, y.size()), y) / svd.s[i];
    const double* v_i = &svd.v[static_cast<std::size_t>(i) * cols];
    for (int c = 0; c < cols; ++c) x[c] += coef * v_i[c];
  }
  return x;
}

std::vector<double> tsvd_solve(const CalibratedMatrix& a,
                               std::span<const double> y, int rank) {
  const SvdResult svd = jacobi_svd(a);
  return tsvd_solve(svd, a.rows(), a.cols(), y, rank);
}

ConditionEstimate estimate_condition(const CalibratedMatrix& a,
                                     int power_iters) {
  if (power_iters < 10)
    throw std::invalid_argument("estimate_condition: power_iters must be >= 10");
  const int rows = a.rows(), cols = a.cols();
  std::vector<double> v(cols), tmp_rows(rows), next(cols);
  for (int i = 0; i < cols; ++i) v[i] = 1.0 + 1e-6 * i;
  double nv = norm2(v);
  for (double& x : v) x /= nv;

  auto apply_gram = [&](const std::vector<double>& in, std::vector<double>& out) {
    matvec(a.matrix, rows, cols, in.data(), tmp_rows.data());
    matvec_t(a.matrix, rows, cols, tmp_rows.data(), out.data());
  };

  double lambda_max = 0.0;
  for (int it = 0; it < power_iters; ++it) {
    apply_gram(v, next);
    lambda_max = dot(next, v);
    const double nn = norm2(next);
    if (nn == 0.0) break;
    for (int i = 0; i < cols; ++i) v[i] = next[i] / nn;
  }

  // Smallest singular value by inverse iteration on A'A + mu I, with the
  // inner solves done by CG.
  const double mu = std::max(lambda_max, 1.0) * 1e-12;
  std::vector<double> w(cols);
  for (int i = 0; i < cols; ++i) w[i] = 1.0 + 1e-6 * (cols - i);
  nv = norm2(w);
  for (double& x : w) x /= nv;

  auto apply_shifted = [&](const std::vector<double>& in, std::vector<double>& out) {
    apply_gram(in, out);
    for (int i = 0; i < cols; ++i) out[i] += mu * in[i];
  };

  std::vector<double> x(cols), r(cols), p(cols), ap(cols);
  double lambda_min = lambda_max;
  for (int it = 0; it < power_iters; ++it) {
    // CG solve (A'A + mu I) x = w.
    std::fill(x.begin(), x.end(), 0.0);
    r = w;
    p = w;
    double rr = dot(r, r);
    const double stop = rr * 1e-20;
    for (int k = 0; k < 4 * cols && rr > stop; ++k) {
      apply_shifted(p, ap);
      const double pap = dot(p, ap);
      if (pap <= 0.0) break;
      const double alpha = rr / pap;
      for (int i = 0; i < cols; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (int i = 0; i < cols; ++i) p[i] = r[i] + beta * p[i];
    }
    const double nx = norm2(x);
    if (nx == 0.0) break;
    for (int i = 0; i < cols; ++i) w[i] = x[i] / nx;
    apply_gram(w, next);
    lambda_min = dot(next, w);
  }

  ConditionEstimate est;
  est.sigma_max = std::sqrt(std::max(0.0, lambda_max));
  est.sigma_min = std::sqrt(std::max(0.0, lambda_min));
  est.ratio = est.sigma_min > 0.0 ? est.sigma_max / est.sigma_min
                                  : std::numeric_limits<double>::infinity();
  est.power_iters = power_iters;
  return est;
}

}  // namespace pipecam
