#include "mdelab/krylov.hpp"

#include <cmath>
#include <vector>

namespace mdelab {

namespace {

// Complex Givens rotation zeroing b in (a, b).
void givens(Complex a, Complex b, double& c, Complex& s) {
  const double na = std::abs(a);
  const double nb = std::abs(b);
  if (nb == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (na == 0.0) {
    c = 0.0;
    s = 1.0;
    return;
  }
  const double r = std::hypot(na, nb);
  c = na / r;
  s = (a / na) * std::conj(b) / r;
}

}  // namespace

GmresResult gmres(const LinearMap& a, const Vector& b, double rel_tol, int max_iter, int restart,
                  const Vector* x0) {
  GmresResult out;
  const Eigen::Index n = b.size();
  out.x = x0 ? *x0 : Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  const int m = std::max(1, std::min<int>(restart, static_cast<int>(n)));
  int total = 0;
  while (total < max_iter) {
    Vector r = b - a(out.x);
    double beta = r.norm();
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
    std::vector<Vector> v;
    v.reserve(m + 1);
    v.push_back(r / beta);
    Matrix h = Matrix::Zero(m + 1, m);
    std::vector<double> cs(m);
    std::vector<Complex> sn(m);
    Vector g = Vector::Zero(m + 1);
    g(0) = beta;
    int k = 0;
    for (; k < m && total < max_iter; ++k, ++total) {
      Vector w = a(v[k]);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = v[i].dot(w);
        w -= h(i, k) * v[i];
      }
      // one reorthogonalization pass
      for (int i = 0; i <= k; ++i) {
        const Complex c = v[i].dot(w);
        h(i, k) += c;
        w -= c * v[i];
      }
      h(k + 1, k) = w.norm();
      const bool breakdown = std::abs(h(k + 1, k)) < 1e-300;
      if (!breakdown) v.push_back(w / h(k + 1, k).real());
      for (int i = 0; i < k; ++i) {
        const Complex t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -std::conj(sn[i]) * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      givens(h(k, k), h(k + 1, k), cs[k], sn[k]);
      h(k, k) = cs[k] * h(k, k) + sn[k] * h(k + 1, k);
      h(k + 1, k) = 0.0;
      g(k + 1) = -std::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      out.relative_residual = std::abs(g(k + 1)) / bnorm;
      if (out.relative_residual <= rel_tol || breakdown) {
        ++k;
        ++total;
        break;
      }
    }
    // back substitution on the k x k triangle
    Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) out.x += y(i) * v[i];
    out.iterations = total;
    if (out.relative_residual <= rel_tol) {
      // confirm with a true residual
      const double true_rel = (b - a(out.x)).norm() / bnorm;
      out.relative_residual = true_rel;
      if (true_rel <= 10.0 * rel_tol) {
        out.converged = true;
        return out;
      }
    }
  }
  out.relative_residual = (b - a(out.x)).norm() / bnorm;
  out.converged = out.relative_residual <= rel_tol;
  return out;
}

LanczosExtremes lanczos_extremes(const LinearMap& herm, const Vector& start, int max_steps,
                                 double tol) {
  LanczosExtremes out;
  const Eigen::Index n = start.size();
  const int m = std::max(1, std::min<int>(max_steps, static_cast<int>(n)));
  std::vector<Vector> q;
  q.reserve(m + 1);
  q.push_back(start.normalized());
  std::vector<double> alpha, beta;
  double prev_min = 0.0, prev_max = 0.0;
  for (int k = 0; k < m; ++k) {
    Vector w = herm(q[k]);
    alpha.push_back(q[k].dot(w).real());
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& qi : q) w -= qi.dot(w) * qi;
    }
    const double b = w.norm();
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) {
      t(i, i) = alpha[i];
      if (i < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    out.min = es.eigenvalues()(0);
    out.max = es.eigenvalues()(k);
    out.steps = k + 1;
    const double scale = std::max({std::abs(out.min), std::abs(out.max), 1e-300});
    if (b <= tol * scale) break;
    if (k > 2 && std::abs(out.min - prev_min) <= tol * scale &&
        std::abs(out.max - prev_max) <= tol * scale)
      break;
    prev_min = out.min;
    prev_max = out.max;
    beta.push_back(b);
    q.push_back(w / b);
  }
  return out;
}

}  // namespace mdelab
