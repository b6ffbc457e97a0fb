#include "orbistab/floquet.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "orbistab/errors.hpp"
#include "orbistab/ode.hpp"
#include "orbistab/rootfind.hpp"

namespace orbistab {

namespace {

using Vec9 = Eigen::Matrix<double, 9, 1>;

Vec9 flatten(const Mat3& m) {
  Vec9 v;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) v[3 * c + r] = m(r, c);
  return v;
}

Mat3 unflatten(const Vec9& v) {
  Mat3 m;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) m(r, c) = v[3 * c + r];
  return m;
}

AdaptiveOptions ode_opts(double tol) {
  AdaptiveOptions o;
  o.rtol = tol;
  o.atol = tol * 1e-3;
  return o;
}

// One projective adjoint sweep of the normal candidate from tau_hi down to
// tau_lo, renormalizing in segments; optionally records the value at uniform
// grid nodes (visited in descending order).
Vec3 adjoint_sweep(const TransverseLinearization& lin, Vec3 n, double tau_hi,
                   double tau_lo, double tol, std::vector<Vec3>* record) {
  auto rhs = [&](double t, const Vec3& v) -> Vec3 {
    const Mat3 At = lin.A_at(t).transpose();
    const Vec3 w = At * v;
    return -(w - v * v.dot(w));
  };
  const int segs = record ? int(record->size()) : 32;
  const double h = (tau_hi - tau_lo) / segs;
  for (int k = 0; k < segs; ++k) {
    const double a = tau_hi - k * h;
    const double b = (k + 1 == segs) ? tau_lo : tau_hi - (k + 1) * h;
    n = integrate_adaptive(rhs, a, b, n, ode_opts(tol));
    n.normalize();
    if (record) {
      // node b corresponds to grid index segs - 1 - k, with index 0 stored
      // from the final segment endpoint tau_lo (one period below the seam).
      (*record)[std::size_t(segs - 1 - k)] = n;
    }
  }
  return n;
}

}  // namespace

Monodromy monodromy(const TransverseLinearization& lin, const FloquetOptions& opt) {
  auto rhs = [&](double t, const Vec9& v) -> Vec9 {
    return flatten(lin.A_at(t) * unflatten(v));
  };
  const Vec9 x0 = flatten(Mat3::Identity());
  const Vec9 xT =
      integrate_adaptive(rhs, lin.tau0, lin.tau0 + kTauPeriod, x0, ode_opts(opt.integ_tol));
  Monodromy out;
  out.Psi = unflatten(xT);
  out.det = out.Psi.determinant();

  Eigen::EigenSolver<Mat3> es(out.Psi);
  if (es.info() != Eigen::Success)
    throw DefectivePsi("eigendecomposition of the period map failed");
  std::array<int, 3> order{0, 1, 2};
  const auto& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(ev[a]) < std::abs(ev[b]); });
  for (int i = 0; i < 3; ++i) out.multipliers[i] = ev[order[i]];

  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(es.eigenvectors());
  const double smin = svd.singularValues()(2);
  out.eigvec_cond =
      (smin > 0.0) ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
  if (!(out.eigvec_cond < opt.cond_cap))
    throw DefectivePsi("period map is numerically defective (eigenvector condition " +
                       std::to_string(out.eigvec_cond) + ")");
  return out;
}

StableSubspace StableSubspace::from_samples(double tau0, std::vector<Vec3> n,
                                            std::vector<double> b, double zero_margin) {
  if (n.size() != b.size() || n.size() < 3)
    throw NumericError("subspace samples: need matching n/b lists");
  StableSubspace sub;
  sub.tau0 = tau0;
  const int m = int(n.size());
  sub.tau.resize(m);
  for (int j = 0; j < m; ++j) sub.tau[j] = tau0 + j * kTauPeriod / m;
  sub.n = std::move(n);
  sub.b = std::move(b);
  sub.build_splines(zero_margin);
  return sub;
}

void StableSubspace::build_splines(double zero_margin) {
  const std::size_t m = tau.size();
  std::vector<double> col(m);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < m; ++j) col[j] = n[j][c];
    sN_[c] = PeriodicCubicSpline(tau, col, kTauPeriod);
  }
  sB_ = PeriodicCubicSpline(tau, b, kTauPeriod);

  b_max_abs = 0.0;
  for (double v : b) b_max_abs = std::max(b_max_abs, std::abs(v));
  zeros.clear();
  if (b_max_abs == 0.0) return;

  for (std::size_t j = 0; j < m; ++j) {
    const double b0 = b[j], b1 = b[(j + 1) % m];
    const double t0 = tau[j];
    const double t1 = (j + 1 < m) ? tau[j + 1] : tau0 + kTauPeriod;
    if (b0 == 0.0) {
      zeros.push_back(t0);
    } else if (b0 * b1 < 0.0) {
      zeros.push_back(brent([&](double t) { return sB_.eval(t); }, t0, t1, 1e-13));
    }
  }
  std::sort(zeros.begin(), zeros.end());
  zeros.erase(std::unique(zeros.begin(), zeros.end(),
                          [](double a, double b2) { return std::abs(a - b2) < 1e-9; }),
              zeros.end());
  for (double z : zeros) {
    if (std::abs(sB_.deriv(z)) < zero_margin * b_max_abs)
      throw NonSimpleZero("input gain b has a non-simple zero at phase " + std::to_string(z));
  }
}

StableSubspace stable_normal(const TransverseLinearization& lin, const SubspaceOptions& opt) {
  const Monodromy mono = monodromy(lin, {opt.integ_tol, 1e12});
  const double mu_dom = std::abs(mono.multipliers[2]);
  const double mu_stab = std::max(std::abs(mono.multipliers[0]), std::abs(mono.multipliers[1]));
  const double gap = (mu_stab > 0.0) ? mu_dom / mu_stab : std::numeric_limits<double>::infinity();
  if (!(gap >= opt.gap_floor))
    throw NoDominance("multiplier gap " + std::to_string(gap) + " below the separation floor");
  if (!(mono.multipliers[2].real() > 0.0) ||
      std::abs(mono.multipliers[2].imag()) > 1e-6 * mu_dom)
    throw NoConvergence("dominant multiplier is not positive real; the normal direction "
                        "cannot close periodically");

  // Deterministic first guess: left eigenvector of Psi for the dominant
  // multiplier; random restarts only if that fails to settle.
  Vec3 first_guess;
  {
    Eigen::EigenSolver<Mat3> es(mono.Psi.transpose());
    int k = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double a = std::abs(es.eigenvalues()[i]);
      if (a > best) best = a, k = i;
    }
    Eigen::Vector3cd v = es.eigenvectors().col(k);
    int kmax = 0;
    v.cwiseAbs().maxCoeff(&kmax);
    v *= std::conj(v[kmax]) / std::abs(v[kmax]);
    first_guess = v.real().normalized();
  }

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double hi = lin.tau0 + kTauPeriod;

  for (int attempt = 0; attempt < std::max(1, opt.restarts); ++attempt) {
    Vec3 v = first_guess;
    if (attempt > 0) {
      do {
        v = Vec3(gauss(rng), gauss(rng), gauss(rng));
      } while (v.norm() < 1e-3);
      v.normalize();
    }
    bool converged = false;
    int used = 0;
    for (int k = 1; k <= opt.max_periods; ++k) {
      const Vec3 prev = v;
      v = adjoint_sweep(lin, v, hi, lin.tau0, opt.integ_tol, nullptr);
      if (v.dot(prev) < 0.0) v = -v;  // align for the convergence test
      used = k;
      if ((v - prev).norm() < opt.tol) {
        converged = true;
        break;
      }
    }
    if (!converged) continue;

    // Recording sweep over one more period; verify it closes on itself.  The
    // normal is sampled on the linearization grid refined grid_refine times,
    // since it can rotate much faster than A(tau) itself varies.
    const std::size_t m = lin.tau.size() * std::size_t(std::max(1, opt.grid_refine));
    std::vector<Vec3> rec(m);
    const Vec3 end = adjoint_sweep(lin, v, hi, lin.tau0, opt.integ_tol, &rec);
    const double mism = std::min((end - v).norm(), (end + v).norm());
    if (mism > opt.tol) continue;
    if ((end - v).norm() > (end + v).norm())
      throw NoConvergence("period map reverses the normal orientation");

    StableSubspace sub;
    sub.tau0 = lin.tau0;
    sub.tau.resize(m);
    for (std::size_t j = 0; j < m; ++j)
      sub.tau[j] = lin.tau0 + double(j) * kTauPeriod / double(m);
    sub.n = std::move(rec);
    sub.periods_used = used;
    sub.period_mismatch = mism;

    int kmax = 0;
    sub.n[0].cwiseAbs().maxCoeff(&kmax);
    const double flip = (sub.n[0][kmax] < 0.0) ? -1.0 : 1.0;
    sub.b.resize(sub.n.size());
    for (std::size_t j = 0; j < sub.n.size(); ++j) {
      sub.n[j] *= flip;
      sub.b[j] = sub.n[j].dot(lin.B_at(sub.tau[j]));
    }
    sub.build_splines(opt.zero_margin);
    return sub;
  }
  throw NoConvergence("normal-direction iteration failed to settle within the allowed "
                      "periods and restarts");
}

SubspaceDiagnostics verify_subspace(const TransverseLinearization& lin,
                                    const StableSubspace& sub, const FloquetOptions& opt) {
  SubspaceDiagnostics diag;
  diag.period_mismatch = sub.period_mismatch;

  const Monodromy mono = monodromy(lin, opt);
  {
    Eigen::EigenSolver<Mat3> es(mono.Psi.transpose());
    int k = 0;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double a = std::abs(es.eigenvalues()[i]);
      if (a > best) best = a, k = i;
    }
    Eigen::Vector3cd v = es.eigenvectors().col(k);
    int kmax = 0;
    v.cwiseAbs().maxCoeff(&kmax);
    v *= std::conj(v[kmax]) / std::abs(v[kmax]);
    diag.alignment = std::abs(v.real().normalized().dot(sub.n_at(sub.tau0).normalized()));
  }

  for (const Vec3& v : sub.n)
    diag.max_norm_error = std::max(diag.max_norm_error, std::abs(v.norm() - 1.0));

  const int dense = 4 * int(sub.tau.size());
  for (int j = 0; j < dense; ++j) {
    const double t = sub.tau0 + (j + 0.5) * kTauPeriod / dense;
    const Vec3 nv = sub.n_at(t);
    const Vec3 w = lin.A_at(t).transpose() * nv;
    const Vec3 resid = sub.dn_at(t) + (w - nv * nv.dot(w));
    diag.max_ode_residual = std::max(diag.max_ode_residual, resid.norm());
  }

  // Forward-propagate a basis of the stable plane; the recorded normal must
  // stay orthogonal to it at every knot.
  std::vector<Vec3> basis;
  {
    Eigen::EigenSolver<Mat3> es(mono.Psi);
    std::array<int, 3> order{0, 1, 2};
    const auto& ev = es.eigenvalues();
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(ev[a]) < std::abs(ev[b]); });
    const Eigen::Vector3cd v0 = es.eigenvectors().col(order[0]);
    const Eigen::Vector3cd v1 = es.eigenvectors().col(order[1]);
    if (std::abs(ev[order[0]].imag()) > 0.0 &&
        std::abs((ev[order[0]] - std::conj(ev[order[1]])).imag()) <
            1e-9 * std::abs(ev[order[0]])) {
      basis.push_back(v0.real());
      basis.push_back(v0.imag());
    } else {
      basis.push_back(v0.real());
      basis.push_back(v1.real());
    }
    basis[0].normalize();
    basis[1] -= basis[0] * basis[0].dot(basis[1]);
    if (basis[1].norm() < 1e-12)
      throw DefectivePsi("stable plane basis is numerically dependent");
    basis[1].normalize();
  }
  auto flow = [&](double t, const Vec3& v) -> Vec3 { return lin.A_at(t) * v; };
  const std::size_t m = sub.tau.size();
  for (Vec3 e : basis) {
    for (std::size_t j = 0; j + 1 <= m; ++j) {
      const double a = sub.tau0 + j * kTauPeriod / m;
      const double b = sub.tau0 + (j + 1) * kTauPeriod / m;
      diag.max_invariance_residual =
          std::max(diag.max_invariance_residual, std::abs(sub.n[j % m].dot(e)));
      e = integrate_adaptive(flow, a, b, e, ode_opts(opt.integ_tol));
      e.normalize();
    }
  }
  return diag;
}

}  // namespace orbistab
