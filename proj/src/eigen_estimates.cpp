#include "sfb/eigen_estimates.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <random>

namespace sfb {

namespace {

Eigen::MatrixXd rm_rows(const BlockSystem& sys) {
  if (!sys.with_rm) throw std::invalid_argument("spectral estimates need the rigid-motion rows in the system");
  const BlockLayout& L = sys.layout;
  return Eigen::MatrixXd(SparseMatrix(sys.matrix.block(L.rm(), L.phi(), L.n_rm, L.n_phi)));
}

SparseMatrix sigma_constraints(const BlockSystem& sys) {
  const BlockLayout& L = sys.layout;
  return sys.matrix.block(L.u(), 0, L.n_u + L.n_chi + L.n_lambda, L.n_sigma);
}

Eigen::VectorXd multiplier_mass(const NormBlocks& n, const Eigen::VectorXd& y) {
  const int nu = static_cast<int>(n.M_velocity.size()), nc = static_cast<int>(n.M_vorticity.size());
  Eigen::VectorXd r(y.size());
  r.head(nu) = n.M_velocity.cwiseProduct(y.head(nu));
  r.segment(nu, nc) = n.M_vorticity.cwiseProduct(y.segment(nu, nc));
  const int nl = static_cast<int>(y.size()) - nu - nc;
  if (nl > 0) r.tail(nl) = n.M_lambda * y.tail(nl);
  return r;
}

// Symmetric part of T^T A as an operator on the primal unknowns.
struct SymmetricPart {
  SparseMatrix A, At;
  const TTransform* t = nullptr;
  Eigen::VectorXd w;  // A^T psi

  SymmetricPart(const BlockSystem& sys, const TTransform* tt) : A(sys.a_block()), t(tt) {
    At = A.transpose();
    if (t) w = At * t->psi;
  }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd ax = A * x, atx = At * x;
    if (t && t->delta != 0.0) {
      ax += (t->delta * t->psi.dot(ax)) * t->c;
      atx += (t->delta * t->c.dot(x)) * w;
    }
    return 0.5 * (ax + atx);
  }
};

}  // namespace

LanczosResult lanczos_extremes(const LinearOp& op, const LinearOp& M, const Eigen::VectorXd& start,
                               const LanczosOptions& opt) {
  const Eigen::Index n = start.size();
  std::vector<Eigen::VectorXd> Q, MQ;
  std::vector<double> alpha, beta;
  LanczosResult res;

  Eigen::VectorXd q = start, mq = M(start);
  double nrm = std::sqrt(std::max(0.0, q.dot(mq)));
  if (!(nrm > 0.0)) throw std::invalid_argument("lanczos: zero start vector");
  q /= nrm;
  mq /= nrm;
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.max_iterations, n));
  for (int k = 0; k < kmax; ++k) {
    Q.push_back(q);
    MQ.push_back(mq);
    Eigen::VectorXd w = op(q);
    alpha.push_back(w.dot(mq));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < Q.size(); ++j) w -= w.dot(MQ[j]) * Q[j];
    // The recurrence amplifies rounding errors that leave the constraint set.
    if (opt.restore && (k + 1) % opt.restore_every == 0) {
      w = opt.restore(w);
      for (std::size_t j = 0; j < Q.size(); ++j) w -= w.dot(MQ[j]) * Q[j];
    }
    Eigen::VectorXd mw = M(w);
    const double b = std::sqrt(std::max(0.0, w.dot(mw)));

    const int m = k + 1;
    const bool check = m % 5 == 0 || m == kmax || !(b > 0.0);
    if (check) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      const auto& v = es.eigenvalues();
      const auto& S = es.eigenvectors();
      res.min = v[0];
      res.max = v[m - 1];
      res.min_residual = std::abs(b * S(m - 1, 0));
      res.max_residual = std::abs(b * S(m - 1, m - 1));
      res.iterations = m;
      const double scale = std::max(std::abs(res.min), std::abs(res.max));
      const bool ok_min = !opt.want_min || res.min_residual <= opt.tolerance * scale;
      const bool ok_max = !opt.want_max || res.max_residual <= opt.tolerance * scale;
      if ((ok_min && ok_max) || !(b > 1e-14 * scale)) {
        res.converged = true;
        return res;
      }
    }
    beta.push_back(b);
    q = w / b;
    mq = mw / b;
  }
  return res;
}

NormBlocks norm_blocks(const Discretization& d, OperatorCache& cache) {
  NormBlocks n;
  n.N_sigma = d.stress->hdiv_gram();
  n.N_phi = cache.get(d.level - d.trace_coarsening, d.trace_mesh, kOpW).W;
  n.N_phi += Eigen::MatrixXd(mass_p1(d.trace_mesh));
  n.M_velocity = velocity_mass(*d.mesh);
  n.M_vorticity = vorticity_mass(*d.mesh);
  if (d.has_lambda()) {
    // Inner-boundary operators are kept apart from the outer ones in the cache.
    n.M_lambda = cache.get(-1 - (d.level - d.lambda_coarsening), d.lambda_mesh, kOpW).W;
    n.M_lambda += Eigen::MatrixXd(mass_p1(d.lambda_mesh));
  }
  return n;
}

KernelProjector::KernelProjector(const BlockSystem& sys, const NormBlocks& norms)
    : n_sigma_(sys.layout.n_sigma), n_phi_(sys.layout.n_phi) {
  const auto t0 = std::chrono::steady_clock::now();
  N_sigma_ = norms.N_sigma;
  N_phi_ = norms.N_phi;
  B_ = sigma_constraints(sys);
  n_mult_ = static_cast<int>(B_.rows());
  Triplets tr;
  tr.reserve(N_sigma_.nonZeros() + 2 * B_.nonZeros());
  for (int c = 0; c < N_sigma_.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(N_sigma_, c); it; ++it) tr.emplace_back(it.row(), it.col(), it.value());
  for (int c = 0; c < B_.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(B_, c); it; ++it) {
      tr.emplace_back(n_sigma_ + it.row(), it.col(), it.value());
      tr.emplace_back(it.col(), n_sigma_ + it.row(), it.value());
    }
  K_.resize(n_sigma_ + n_mult_, n_sigma_ + n_mult_);
  K_.setFromTriplets(tr.begin(), tr.end());
  lu_ = std::make_unique<SparseLU>(K_);
  if (!lu_->ok()) throw std::runtime_error("null-space extraction failed: sigma saddle system " + lu_->message());

  R_ = rm_rows(sys);
  const int nr = static_cast<int>(R_.rows());
  Eigen::MatrixXd Kp = Eigen::MatrixXd::Zero(n_phi_ + nr, n_phi_ + nr);
  Kp.topLeftCorner(n_phi_, n_phi_) = N_phi_;
  Kp.topRightCorner(n_phi_, nr) = R_.transpose();
  Kp.bottomLeftCorner(nr, n_phi_) = R_;
  phi_lu_.compute(Kp);
  factor_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd KernelProjector::apply_N(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r(x.size());
  r.head(n_sigma_) = N_sigma_ * x.head(n_sigma_);
  r.tail(n_phi_) = N_phi_ * x.tail(n_phi_);
  return r;
}

Eigen::VectorXd KernelProjector::solve(const Eigen::VectorXd& g) const {
  Eigen::VectorXd z(n_sigma_ + n_phi_);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_sigma_ + n_mult_);
  rhs.head(n_sigma_) = g.head(n_sigma_);
  z.head(n_sigma_) = lu_->solve(rhs).head(n_sigma_);
  Eigen::VectorXd rp = Eigen::VectorXd::Zero(n_phi_ + R_.rows());
  rp.head(n_phi_) = g.tail(n_phi_);
  z.tail(n_phi_) = phi_lu_.solve(rp).head(n_phi_);
  return z;
}

Eigen::VectorXd KernelProjector::project(const Eigen::VectorXd& x) const { return solve(apply_N(x)); }

Eigen::VectorXd KernelProjector::schur_inverse(const Eigen::VectorXd& y) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_sigma_ + n_mult_);
  rhs.tail(n_mult_) = y;
  return -lu_->solve(rhs).tail(n_mult_);
}

CoercivityReport kernel_coercivity(const BlockSystem& sys, const KernelProjector& P, const TTransform* t,
                                   const LanczosOptions& opt) {
  const SymmetricPart H(sys, t);
  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x0(P.primal_size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = nd(rng);
  x0 = P.project(x0);
  const LinearOp op = [&](const Eigen::VectorXd& x) { return P.solve(H(x)); };
  const LinearOp M = [&](const Eigen::VectorXd& x) { return P.apply_N(x); };
  LanczosOptions o = opt;
  if (!o.restore) o.restore = [&](const Eigen::VectorXd& x) { return P.project(x); };
  const LanczosResult r = lanczos_extremes(op, M, x0, o);
  CoercivityReport rep;
  rep.delta = t ? t->delta : 0.0;
  rep.min_eig = r.min;
  rep.max_eig = r.max;
  rep.iterations = r.iterations;
  rep.converged = r.converged;
  return rep;
}

InfSupReport discrete_infsup(const BlockSystem&, const KernelProjector& P, const NormBlocks& norms,
                             const LanczosOptions& opt_in) {
  LanczosOptions opt = opt_in;
  opt.want_min = false;
  opt.want_max = true;
  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd y0(P.multiplier_size());
  for (Eigen::Index i = 0; i < y0.size(); ++i) y0[i] = nd(rng);
  const LinearOp op = [&](const Eigen::VectorXd& y) { return P.schur_inverse(multiplier_mass(norms, y)); };
  const LinearOp M = [&](const Eigen::VectorXd& y) { return multiplier_mass(norms, y); };
  const LanczosResult r = lanczos_extremes(op, M, y0, opt);
  InfSupReport rep;
  rep.beta = r.max > 0.0 ? 1.0 / std::sqrt(r.max) : 0.0;
  rep.iterations = r.iterations;
  rep.converged = r.converged;
  return rep;
}

double dense_kernel_min_eig(const BlockSystem& sys, const NormBlocks& norms, const TTransform* t) {
  const BlockLayout& L = sys.layout;
  const int np = L.primal();
  const Eigen::MatrixXd Bs = Eigen::MatrixXd(sigma_constraints(sys));
  const Eigen::MatrixXd R = rm_rows(sys);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(Bs.rows() + R.rows(), np);
  C.topLeftCorner(Bs.rows(), L.n_sigma) = Bs;
  C.bottomRightCorner(R.rows(), L.n_phi) = R;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-10 * s[0]) ++rank;
  const Eigen::MatrixXd Z = svd.matrixV().rightCols(np - rank);

  const SymmetricPart H(sys, t);
  Eigen::MatrixXd HZ(np, Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) HZ.col(j) = H(Z.col(j));
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(np, np);
  N.topLeftCorner(L.n_sigma, L.n_sigma) = Eigen::MatrixXd(norms.N_sigma);
  N.bottomRightCorner(L.n_phi, L.n_phi) = norms.N_phi;
  const Eigen::MatrixXd Hk = Z.transpose() * HZ;
  const Eigen::MatrixXd Nk = Z.transpose() * N * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hk + Hk.transpose()), Nk,
                                                               Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

double dense_infsup(const BlockSystem& sys, const NormBlocks& norms) {
  const Eigen::MatrixXd B = Eigen::MatrixXd(sigma_constraints(sys));
  const Eigen::MatrixXd N = Eigen::MatrixXd(norms.N_sigma);
  const Eigen::MatrixXd S = B * Eigen::LLT<Eigen::MatrixXd>(N).solve(B.transpose());
  Eigen::MatrixXd MY = Eigen::MatrixXd::Zero(B.rows(), B.rows());
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(B.rows(), i);
    MY.col(i) = multiplier_mass(norms, e);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), MY,
                                                               Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()[0]));
}

}  // namespace sfb
