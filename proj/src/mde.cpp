#include "mdelab/mde.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "mdelab/error.hpp"
#include "mdelab/krylov.hpp"

namespace mdelab {

SpectralParam::SpectralParam(Complex z) : z_(z) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw InvalidArgument("spectral parameter must have Im z > 0");
}

DataPair::DataPair(HermMatrix a, SelfEnergy s, std::optional<IndexMetric> m)
    : bare(std::move(a)), self_energy(std::move(s)), metric(std::move(m)) {
  if (bare.dim() != self_energy.dim()) throw DimensionMismatch("DataPair: A and S dimensions differ");
  if (metric && metric->dim() != bare.dim()) throw DimensionMismatch("DataPair: metric dimension");
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("solver tol must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("solver damping must lie in (0, 1]");
  if (max_iter <= 0) throw InvalidArgument("solver max_iter must be positive");
  if (!(newton_switch > 0.0)) throw InvalidArgument("newton_switch must be positive");
}

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::fixed_point: return "fixed_point";
    case SolveMethod::newton: return "newton";
    case SolveMethod::circulant_fixed_point: return "circulant_fixed_point";
    case SolveMethod::circulant_newton: return "circulant_newton";
  }
  return "unknown";
}

bool is_circulant(const Matrix& a) {
  const Eigen::Index n = a.rows();
  const Vector row = a.row(0).transpose();
  // column y holds row(y), row(y-1), ..., wrapping around
  for (Eigen::Index y = 0; y < n; ++y) {
    const auto col = a.col(y);
    for (Eigen::Index x = 0; x <= y; ++x)
      if (col(x) != row(y - x)) return false;
    for (Eigen::Index x = y + 1; x < n; ++x)
      if (col(x) != row(n + y - x)) return false;
  }
  return true;
}

double residual(const Matrix& m, const DataPair& data, SpectralParam zeta) {
  const int n = data.dim();
  if (m.rows() != n || m.cols() != n) throw DimensionMismatch("residual: dimension");
  Matrix b = -data.bare.matrix() + data.self_energy(m);
  b.diagonal().array() += zeta.value();
  Matrix r = b * m;
  r.diagonal().array() += 1.0;
  return max_norm(r);
}

double residual(const Matrix& m, const DataPair& data, SpectralParam zeta, const Matrix& defect) {
  Matrix b = -data.bare.matrix() + data.self_energy(m);
  b.diagonal().array() += zeta.value();
  Matrix r = b * m + defect;
  r.diagonal().array() += 1.0;
  return max_norm(r);
}

namespace {

constexpr int kDenseNewtonCutoff = kBruteForceCutoff;
constexpr double kMinDamping = 0x1.0p-20;

class DenseBackend {
 public:
  using State = Matrix;
  struct Eval {
    double residual;
    Matrix image;
    Matrix k;  // (z - A + S[M])^{-1}
  };

  DenseBackend(const DataPair& data, Complex z, const Matrix* defect)
      : data_(data), n_(data.dim()), defect_(defect) {
    base_ = -data.bare.matrix();
    base_.diagonal().array() += z;
    rhs_ = Matrix::Identity(n_, n_);
    if (defect_) rhs_ += *defect_;
  }

  Eval evaluate(const State& m) const {
    Matrix b = base_ + data_.self_energy(m);
    Matrix r = b * m + rhs_;
    Eval e;
    e.residual = max_norm(r);
    Eigen::PartialPivLU<Matrix> lu(b);
    e.k = lu.inverse();
    e.image = -e.k * rhs_;
    return e;
  }

  bool positive(const State& m) const {
    Eigen::LLT<Matrix> llt(imag_part(m));
    return llt.info() == Eigen::Success;
  }

  // Newton: D + K S[D] T = T - M with T the fixed-point image.
  std::optional<State> newton(const State& m, const Eval& e, double tol) const {
    const Matrix rhs = e.image - m;
    const SelfEnergy& s = data_.self_energy;
    auto apply = [&](const Matrix& d) -> Matrix { return d + e.k * s(d) * e.image; };
    if (n_ <= kDenseNewtonCutoff) {
      const int n2 = n_ * n_;
      Matrix l(n2, n2);
      Matrix unit = Matrix::Zero(n_, n_);
      for (int k = 0; k < n2; ++k) {
        unit(k % n_, k / n_) = 1.0;
        l.col(k) = vec(apply(unit));
        unit(k % n_, k / n_) = 0.0;
      }
      Vector d = l.partialPivLu().solve(vec(rhs));
      if (!d.allFinite()) return std::nullopt;
      return State(m + unvec(d, n_));
    }
    LinearMap op = [&](const Vector& v) { return vec(apply(unvec(v, n_))); };
    const Vector b = vec(rhs);
    const double rel = std::clamp(0.1 * tol / std::max(max_norm(rhs), 1e-300), 1e-15, 1e-2);
    GmresResult g = gmres(op, b, rel, 400, 60);
    if (!g.x.allFinite()) return std::nullopt;
    return State(m + unvec(g.x, n_));
  }

  Matrix to_matrix(const State& m) const { return m; }
  State from_matrix(const Matrix& m) const { return m; }

 private:
  const DataPair& data_;
  int n_;
  const Matrix* defect_;
  Matrix base_;
  Matrix rhs_;
};

// Translation-invariant data: M is circulant and diagonal in Fourier space.
// State is the symbol m^(k) = sum_q mu(q) e^{2 pi i k q / N}, mu the first row.
class CirculantBackend {
 public:
  using State = Vector;
  struct Eval {
    double residual;
    Vector image;
    Vector k;
  };

  CirculantBackend(const DataPair& data, Complex z) : data_(data), n_(data.dim()), z_(z) {
    const Vector a_row = data.bare.matrix().row(0).transpose();
    a_hat_ = symbol(a_row);
  }

  Vector symbol(const Vector& mu) const {
    Vector out(n_);
    fft().inv(out, mu);
    return out * static_cast<double>(n_);
  }

  Vector first_row(const Vector& sym) const {
    Vector out(n_);
    fft().fwd(out, sym);
    return out / static_cast<double>(n_);
  }

  Eval evaluate(const State& m) const {
    const Vector s_hat = symbol(data_.self_energy.apply_circulant(first_row(m)));
    Vector b = (z_ - a_hat_.array() + s_hat.array()).matrix();
    Eval e;
    Vector r = (Vector::Ones(n_).array() + b.array() * m.array()).matrix();
    e.residual = first_row(r).cwiseAbs().maxCoeff();
    e.k = b.cwiseInverse();
    e.image = -e.k;
    return e;
  }

  bool positive(const State& m) const { return m.imag().minCoeff() > 0.0; }

  std::optional<State> newton(const State& m, const Eval& e, double tol) const {
    const Vector rhs = e.image - m;
    LinearMap op = [&](const Vector& d) -> Vector {
      const Vector sd = symbol(data_.self_energy.apply_circulant(first_row(d)));
      return (d.array() + e.k.array() * sd.array() * e.image.array()).matrix();
    };
    const double rhs_max = first_row(rhs).cwiseAbs().maxCoeff();
    const double rel = std::clamp(0.1 * tol / std::max(rhs_max, 1e-300), 1e-15, 1e-2);
    GmresResult g = gmres(op, rhs, rel, 400, 60);
    if (!g.x.allFinite()) return std::nullopt;
    return State(m + g.x);
  }

  Matrix to_matrix(const State& sym) const {
    const Vector mu = first_row(sym);
    Matrix out(n_, n_);
    for (int y = 0; y < n_; ++y) {
      for (int x = 0; x <= y; ++x) out(x, y) = mu(y - x);
      for (int x = y + 1; x < n_; ++x) out(x, y) = mu(n_ + y - x);
    }
    return out;
  }

  State from_matrix(const Matrix& m) const { return symbol(m.row(0).transpose()); }

 private:
  const DataPair& data_;
  int n_;
  Complex z_;
  Vector a_hat_;

  // plans are cached per size, so one instance per thread serves every solve
  static Eigen::FFT<double>& fft() {
    thread_local Eigen::FFT<double> f;
    return f;
  }
};

struct LoopResult {
  int iterations = 0;
  bool used_newton = false;
  double residual = 0.0;
};

template <class Backend>
LoopResult run_loop(const Backend& be, typename Backend::State& state, const SolverConfig& cfg,
                    bool check_positivity, double eta) {
  LoopResult out;
  double alpha = cfg.damping;
  bool newton_ok = cfg.newton;
  int newton_failures = 0;
  auto e = be.evaluate(state);
  for (int it = 0; it < cfg.max_iter; ++it) {
    out.iterations = it;
    out.residual = e.residual;
    if (e.residual <= cfg.tol) return out;
    if (!std::isfinite(e.residual)) break;
    if (newton_ok && e.residual < cfg.newton_switch) {
      std::optional<typename Backend::State> cand = be.newton(state, e, cfg.tol);
      if (cand && (!check_positivity || be.positive(*cand))) {
        auto ce = be.evaluate(*cand);
        if (std::isfinite(ce.residual) && ce.residual < e.residual) {
          state = std::move(*cand);
          e = std::move(ce);
          out.used_newton = true;
          continue;
        }
      }
      if (++newton_failures > 3) newton_ok = false;
    }
    typename Backend::State cand = (1.0 - alpha) * state + alpha * e.image;
    if (check_positivity && !be.positive(cand)) {
      alpha *= 0.5;
      if (alpha < kMinDamping)
        throw ConvergenceFailure("MDE solver: damping underflow while keeping Im M positive",
                                 e.residual, eta);
      continue;
    }
    state = std::move(cand);
    e = be.evaluate(state);
  }
  out.residual = e.residual;
  if (e.residual <= cfg.tol) return out;
  throw ConvergenceFailure("MDE solver: no convergence after " + std::to_string(cfg.max_iter) +
                               " iterations (residual " + std::to_string(e.residual) + ")",
                           e.residual, eta);
}

bool use_circulant(const DataPair& data, const SolverConfig& cfg) {
  return cfg.allow_circulant && data.dim() >= cfg.circulant_min_dim &&
         data.self_energy.translation_invariant() && is_circulant(data.bare.matrix());
}

// `circulant` carries a path decision already made by the caller.
MdeSolution solve_impl(const DataPair& data, SpectralParam zeta, const SolverConfig& cfg, const Matrix* warm_start,
                       std::optional<bool> circulant) {
  const int n = data.dim();
  const Complex z = zeta.value();
  if (warm_start && (warm_start->rows() != n || warm_start->cols() != n))
    throw DimensionMismatch("solve_at: warm start dimension");
  const char* bad_start = "solve_at: warm start must have positive semidefinite imaginary part";

  MdeSolution sol;
  sol.zeta = zeta;
  if (!circulant) circulant = use_circulant(data, cfg) && (!warm_start || is_circulant(*warm_start));
  if (*circulant) {
    // circulant matrices are diagonal in the Fourier basis, so checks stay O(N log N)
    CirculantBackend be(data, z);
    Vector state = warm_start ? be.from_matrix(*warm_start) : Vector::Constant(n, -1.0 / z);
    if (warm_start && state.imag().minCoeff() < 0.0) throw InvalidArgument(bad_start);
    LoopResult lr = run_loop(be, state, cfg, true, zeta.eta());
    sol.m = be.to_matrix(state);
    sol.iterations = lr.iterations;
    sol.method = lr.used_newton ? SolveMethod::circulant_newton : SolveMethod::circulant_fixed_point;
    sol.im_min_eig = state.imag().minCoeff();
    sol.residual = be.evaluate(state).residual;
  } else {
    if (warm_start && !is_psd(imag_part(*warm_start), 0.0)) throw InvalidArgument(bad_start);
    DenseBackend be(data, z, nullptr);
    Matrix state = warm_start ? *warm_start : Matrix(Matrix::Identity(n, n) * (-1.0 / z));
    LoopResult lr = run_loop(be, state, cfg, true, zeta.eta());
    sol.m = std::move(state);
    sol.iterations = lr.iterations;
    sol.method = lr.used_newton ? SolveMethod::newton : SolveMethod::fixed_point;
    sol.im_min_eig = min_eigenvalue(imag_part(sol.m));
    sol.residual = residual(sol.m, data, zeta);
  }
  if (!(sol.im_min_eig > 0.0))
    throw ConvergenceFailure("MDE solver: Im M lost positivity", sol.residual, zeta.eta());
  return sol;
}

}  // namespace

MdeSolution solve_at(const DataPair& data, SpectralParam zeta, const SolverConfig& cfg,
                     const std::optional<Matrix>& warm_start) {
  cfg.validate();
  return solve_impl(data, zeta, cfg, warm_start ? &*warm_start : nullptr, std::nullopt);
}

Matrix solve_perturbed(const DataPair& data, SpectralParam zeta, const Matrix& defect,
                       const Matrix& start, const SolverConfig& cfg) {
  cfg.validate();
  if (defect.rows() != data.dim() || start.rows() != data.dim())
    throw DimensionMismatch("solve_perturbed: dimension");
  DenseBackend be(data, zeta.value(), &defect);
  Matrix state = start;
  run_loop(be, state, cfg, false, zeta.eta());
  return state;
}

std::vector<double> default_eta_grid(double kappa, double eta_target) {
  if (!(eta_target > 0.0)) throw InvalidArgument("eta target must be positive");
  const double top = std::max(10.0, 2.0 * kappa);
  std::vector<double> grid;
  double eta = eta_target;
  grid.push_back(eta);
  while (eta < top) {
    eta *= 2.0;
    grid.push_back(eta);
  }
  std::reverse(grid.begin(), grid.end());
  return grid;
}

std::vector<MdeSolution> continuation_sweep(const DataPair& data, double tau,
                                            std::span<const double> eta_grid,
                                            const SolverConfig& cfg) {
  if (eta_grid.empty()) throw InvalidArgument("continuation_sweep: empty eta grid");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > 0.0)) throw InvalidArgument("continuation_sweep: eta must be positive");
    if (i > 0 && !(eta_grid[i] < eta_grid[i - 1]))
      throw InvalidArgument("continuation_sweep: eta grid must be strictly descending");
  }
  std::vector<MdeSolution> out;
  out.reserve(eta_grid.size());
  cfg.validate();
  // a circulant-path solution is circulant, so the decision holds for the whole sweep
  const bool circulant = use_circulant(data, cfg);
  for (double eta : eta_grid) {
    try {
      // out is reserved, so the previous solution stays in place
      const Matrix* warm = out.empty() ? nullptr : &out.back().m;
      out.push_back(solve_impl(data, SpectralParam(tau, eta), cfg, warm, circulant));
    } catch (const ConvergenceFailure& e) {
      throw ConvergenceFailure(std::string(e.what()) + " at eta = " + std::to_string(eta),
                               e.last_residual(), eta);
    }
  }
  return out;
}

SuperOperator stability_operator(const Matrix& m, const SelfEnergy& s) {
  const Matrix ms = m.adjoint();
  return SuperOperator(
      static_cast<int>(m.rows()), [m, s](const Matrix& r) { return Matrix(r - m * s(r) * m); },
      [ms, s](const Matrix& r) { return Matrix(r - s(ms * r * ms)); });
}

double smallest_singular_value(const SuperOperator& t) {
  const double inv = t.dim() <= kBruteForceCutoff ? dense_inverse_sp_norm(t) : inverse_sp_norm_iterative(t);
  return std::isfinite(inv) ? 1.0 / inv : 0.0;
}

double imaginary_identity_residual(const MdeSolution& sol, const SelfEnergy& s) {
  const Matrix& m = sol.m;
  const Matrix im = imag_part(m);
  return max_norm(im - sol.zeta.eta() * m.adjoint() * m - m.adjoint() * s(im) * m);
}

}  // namespace mdelab
