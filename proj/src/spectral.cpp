#include "ringtdvp/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ringtdvp {

namespace {

bool near_degenerate(cxd a, cxd b) {
  return std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(a));
}

// Restarted GMRES on D x D matrices under the Frobenius inner product.
Mat gmres(const std::function<Mat(const Mat&)>& op, const Mat& b, double rel_tol,
          int max_iters, int restart = 40) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Mat::Zero(b.rows(), b.cols());
  Mat x = Mat::Zero(b.rows(), b.cols());
  int done = 0;
  while (done < max_iters) {
    Mat r = b - op(x);
    double beta = r.norm();
    if (beta <= rel_tol * bnorm) return x;
    int m = std::min(restart, max_iters - done);
    std::vector<Mat> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    int k = 0;
    for (; k < m; ++k) {
      Mat w = op(V[k]);
      for (int j = 0; j <= k; ++j) {
        H(j, k) = frob(V[j], w);
        w -= H(j, k) * V[j];
      }
      // one re-orthogonalization pass for stability
      for (int j = 0; j <= k; ++j) {
        cxd h2 = frob(V[j], w);
        H(j, k) += h2;
        w -= h2 * V[j];
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) < 1e-14 * beta) {
        ++k;
        break;
      }
      V.push_back(w / H(k + 1, k));
    }
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(k + 1);
    e1(0) = beta;
    Eigen::VectorXcd ym =
        H.topLeftCorner(k + 1, k).colPivHouseholderQr().solve(e1);
    for (int j = 0; j < k; ++j) x += ym(j) * V[j];
    done += k;
    if ((b - op(x)).norm() <= rel_tol * bnorm) return x;
    if (k == 0) break;
  }
  if ((b - op(x)).norm() > rel_tol * bnorm * 10)
    throw solver_error("gmres: no convergence after max iterations");
  return x;
}

}  // namespace

ArnoldiResult arnoldi_leading(const std::function<Mat(const Mat&)>& op, int D, int nev,
                              double eig_tol, int max_dim) {
  const int n = D * D;
  nev = std::min(nev, n);
  if (max_dim <= 0) max_dim = std::min(n, std::max(4 * nev + 20, 60));
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss;
  Mat v0(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) v0(i, j) = cxd(gauss(rng), gauss(rng));

  ArnoldiResult res;
  while (true) {
    std::vector<Mat> V;
    V.push_back(v0 / v0.norm());
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(max_dim + 1, max_dim);
    int k = 0;
    bool breakdown = false;
    for (; k < max_dim && k < n; ++k) {
      Mat w = op(V[k]);
      for (int j = 0; j <= k; ++j) {
        H(j, k) = frob(V[j], w);
        w -= H(j, k) * V[j];
      }
      for (int j = 0; j <= k; ++j) {
        cxd h2 = frob(V[j], w);
        H(j, k) += h2;
        w -= h2 * V[j];
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) < 1e-13) {
        breakdown = true;
        ++k;
        break;
      }
      V.push_back(w / H(k + 1, k));
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(H.topLeftCorner(k, k));
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      cxd la = ces.eigenvalues()(a), lb = ces.eigenvalues()(b);
      if (la.real() != lb.real()) return la.real() > lb.real();
      return la.imag() > lb.imag();
    });
    res.values.clear();
    res.vectors.clear();
    res.max_residual = 0.0;
    bool converged = true;
    const double hk = (k < max_dim + 1) ? std::abs(H(k, k - 1)) : 0.0;
    for (int t = 0; t < std::min(nev, k); ++t) {
      int a = idx[t];
      cxd theta = ces.eigenvalues()(a);
      Eigen::VectorXcd y = ces.eigenvectors().col(a);
      double resid = breakdown ? 0.0 : hk * std::abs(y(k - 1));
      res.max_residual = std::max(res.max_residual, resid);
      if (resid > eig_tol * std::max(1.0, std::abs(theta))) converged = false;
      Mat rv = Mat::Zero(D, D);
      for (int j = 0; j < k; ++j) rv += y(j) * V[j];
      rv /= rv.norm();
      res.values.push_back(theta);
      res.vectors.push_back(rv);
    }
    if (converged || breakdown || max_dim >= n) return res;
    max_dim = std::min(n, 2 * max_dim);
    // restart from the span of current Ritz vectors
    v0 = Mat::Zero(D, D);
    for (auto& rv : res.vectors) v0 += rv;
    if (v0.norm() < 1e-14) v0 = res.vectors.empty() ? v0 : res.vectors[0];
  }
}

SpectralData spectral_decompose(const Mat& Q, const Mat& R, double L, double tol,
                                int dense_threshold) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("spectral_decompose: tol out of range");
  const int D = static_cast<int>(Q.rows());
  const int n = D * D;
  SpectralData sd;
  sd.Q = Q;
  sd.R = R;
  sd.L = L;
  sd.tol = tol;
  sd.D = D;

  auto weight_ok = [&](cxd lam, double factor) {
    return factor * std::exp(L * lam.real()) >= tol;
  };

  if (n <= dense_threshold) {
    sd.has_full = true;
    sd.T_dense = dense_transfer_matrix(Q, R);
    Eigen::ComplexEigenSolver<Mat> ces(sd.T_dense, true);
    if (ces.info() != Eigen::Success)
      throw solver_error("spectral_decompose: dense eigensolver failed");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      cxd la = ces.eigenvalues()(a), lb = ces.eigenvalues()(b);
      if (la.real() != lb.real()) return la.real() > lb.real();
      return la.imag() > lb.imag();
    });
    Mat V(n, n);
    for (int t = 0; t < n; ++t) V.col(t) = ces.eigenvectors().col(idx[t]);
    // defectiveness guard: a (numerically) incomplete eigenbasis means the
    // spectral sums are meaningless
    Eigen::PartialPivLU<Mat> lu(V);
    Mat Vinv = lu.inverse();
    double cond1 = V.cwiseAbs().colwise().sum().maxCoeff() *
                   Vinv.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(cond1) || cond1 > 1e14)
      throw solver_error("spectral_decompose: degenerate (defective) transfer spectrum");
    sd.full_lambdas.resize(n);
    sd.full_right.resize(n);
    sd.full_left.resize(n);
    for (int t = 0; t < n; ++t) {
      sd.full_lambdas[t] = ces.eigenvalues()(idx[t]);
      sd.full_right[t] = unvec(V.col(t), D);
      sd.full_left[t] = unvec(Vinv.row(t).adjoint(), D);
    }
    auto count = [&](double factor) {
      int m = 0;
      while (m < n && weight_ok(sd.full_lambdas[m], factor)) ++m;
      m = std::max(m, 1);
      while (m < n && near_degenerate(sd.full_lambdas[m - 1], sd.full_lambdas[m])) ++m;
      return m;
    };
    sd.m1 = count(1.0);
    sd.m2 = std::max(sd.m1, count(L));
    sd.m3 = std::max(sd.m2, count(L * L / 2));
    int keep = sd.m3;
    sd.lambdas.assign(sd.full_lambdas.begin(), sd.full_lambdas.begin() + keep);
    sd.right_vecs.assign(sd.full_right.begin(), sd.full_right.begin() + keep);
    sd.left_vecs.assign(sd.full_left.begin(), sd.full_left.begin() + keep);
    return sd;
  }

  // Krylov path: expand the request until the tail is below all cutoffs.
  TransferAction fwd{Q, R, TransferAction::Forward};
  TransferAction adj{Q, R, TransferAction::Adjoint};
  int nev = std::min(n, 16);
  ArnoldiResult right;
  while (true) {
    right = arnoldi_leading([&](const Mat& x) { return fwd(x); }, D, nev, 1e-11);
    int got = static_cast<int>(right.values.size());
    if (got == n || !weight_ok(right.values.back(), L * L / 2)) break;
    if (nev == n) break;
    nev = std::min(n, 2 * nev);
  }
  if (right.max_residual > 1e-8)
    throw solver_error("spectral_decompose: Arnoldi residual " +
                       std::to_string(right.max_residual));
  int got = static_cast<int>(right.values.size());
  ArnoldiResult left = arnoldi_leading([&](const Mat& x) { return adj(x); }, D, got, 1e-11);

  // match left Ritz pairs (eigenvalues of T^dag are conjugates) to right ones
  std::vector<Mat> lvecs(got);
  std::vector<bool> used(left.values.size(), false);
  for (int i = 0; i < got; ++i) {
    int best = -1;
    double bd = 1e300;
    for (size_t j = 0; j < left.values.size(); ++j) {
      if (used[j]) continue;
      double d = std::abs(std::conj(left.values[j]) - right.values[i]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    if (best < 0 || bd > 1e-6 * std::max(1.0, std::abs(right.values[i])))
      throw solver_error("spectral_decompose: left/right eigenvalue matching failed");
    used[best] = true;
    lvecs[i] = left.vectors[best];
  }
  // biorthonormalize: l'_i = sum_k (C^-dag)_{ki} l_k with C_{kj} = <l_k|r_j>
  Mat C(got, got);
  for (int k = 0; k < got; ++k)
    for (int j = 0; j < got; ++j) C(k, j) = frob(lvecs[k], right.vectors[j]);
  Mat A = C.partialPivLu().inverse().adjoint();
  std::vector<Mat> lnew(got);
  for (int i = 0; i < got; ++i) {
    Mat acc = Mat::Zero(D, D);
    for (int k = 0; k < got; ++k) acc += A(k, i) * lvecs[k];
    lnew[i] = acc;
  }
  sd.lambdas = right.values;
  sd.right_vecs = right.vectors;
  sd.left_vecs = lnew;
  auto countk = [&](double factor) {
    int m = 0;
    while (m < got && weight_ok(sd.lambdas[m], factor)) ++m;
    m = std::max(m, 1);
    while (m < got && near_degenerate(sd.lambdas[m - 1], sd.lambdas[m])) ++m;
    return m;
  };
  sd.m1 = countk(1.0);
  sd.m2 = std::max(sd.m1, countk(L));
  sd.m3 = std::max(sd.m2, countk(L * L / 2));
  return sd;
}

Mat SpectralData::project_off(int m, const Mat& b, bool adjoint) const {
  Mat out = b;
  for (int k = 0; k < m; ++k) {
    if (!adjoint)
      out -= right_vecs[k] * frob(left_vecs[k], b);
    else
      out -= left_vecs[k] * frob(right_vecs[k], b);
  }
  return out;
}

Mat SpectralData::pinv_once(int i, int m, const Mat& b, bool adjoint) const {
  if (i >= m) throw std::invalid_argument("pinv_apply: i must be <= m");
  Mat rhs = project_off(m, b, adjoint);
  if (has_full) {
    std::shared_ptr<Eigen::PartialPivLU<Mat>> lu;
    {
      std::lock_guard<std::mutex> lock(cache_->mtx);
      auto it = cache_->lu.find({i, m});
      if (it != cache_->lu.end()) lu = it->second;
    }
    if (!lu) {
      const int n = D * D;
      Mat A = lambdas[i] * Mat::Identity(n, n) - T_dense;
      for (int k = 0; k < m; ++k) {
        Vec rk = vec(right_vecs[k]);
        Vec lk = vec(left_vecs[k]);
        A += (1.0 - lambdas[i] + lambdas[k]) * (rk * lk.adjoint());
      }
      lu = std::make_shared<Eigen::PartialPivLU<Mat>>(A);
      std::lock_guard<std::mutex> lock(cache_->mtx);
      cache_->lu.emplace(std::make_pair(i, m), lu);
    }
    Vec y = adjoint ? Vec(lu->adjoint().solve(vec(rhs))) : Vec(lu->solve(vec(rhs)));
    return project_off(m, unvec(y, D), adjoint);
  }
  return pinv_gmres(i, m, rhs, adjoint);
}

Mat SpectralData::pinv_gmres(int i, int m, const Mat& rhs, bool adjoint) const {
  TransferAction fwd{Q, R, TransferAction::Forward};
  TransferAction adj{Q, R, TransferAction::Adjoint};
  std::function<Mat(const Mat&)> op;
  if (!adjoint) {
    op = [&, i, m](const Mat& x) {
      Mat out = lambdas[i] * x - fwd(x);
      for (int k = 0; k < m; ++k)
        out += (1.0 - lambdas[i] + lambdas[k]) * right_vecs[k] * frob(left_vecs[k], x);
      return out;
    };
  } else {
    op = [&, i, m](const Mat& x) {
      Mat out = std::conj(lambdas[i]) * x - adj(x);
      for (int k = 0; k < m; ++k)
        out += std::conj(1.0 - lambdas[i] + lambdas[k]) * left_vecs[k] * frob(right_vecs[k], x);
      return out;
    };
  }
  Mat y = gmres(op, rhs, 1e-12, 5 * D * D);
  return project_off(m, y, adjoint);
}

Mat SpectralData::pinv_apply(int i, int m, int power, const Mat& b, bool adjoint) const {
  if (power != 1 && power != 2) throw std::invalid_argument("pinv_apply: power must be 1 or 2");
  Mat y = pinv_once(i, m, b, adjoint);
  if (power == 2) y = pinv_once(i, m, y, adjoint);
  return y;
}

}  // namespace ringtdvp
