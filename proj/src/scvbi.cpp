#include "gridcs/scvbi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "gridcs/special.hpp"

namespace gridcs {

namespace {

constexpr double kPi = std::numbers::pi;

/* <ln Gamma(rho; shape, rate)> given first/log moments of rho. */
double gamma_cross(double shape, double rate, double ln_mean, double mean) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * ln_mean - rate * mean;
}

/* <||y - A x||^2> under q(x) = CN(mu, diag(sigma2)). */
double expected_residual_sq(const CVec& mu, const RVec& sigma2, const ObservationModel& model,
                            const kernels::Exec& ex) {
  CVec amu = kernels::matvec(ex, model.sensing, mu);
  double res = 0.0;
  for (std::size_t i = 0; i < amu.size(); ++i) res += std::norm(model.y[i] - amu[i]);
  double svar = 0.0;
  for (std::size_t j = 0; j < sigma2.size(); ++j) svar += sigma2[j] * model.col_sqnorms[j];
  return res + svar;
}

void check_state(const VariationalState& state) {
  std::size_t n = state.mu.size();
  if (state.sigma2.size() != n || state.a_tilde.size() != n || state.b_tilde.size() != n ||
      state.lambda_tilde.size() != n)
    throw std::invalid_argument("variational state: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(state.sigma2[i] > 0.0)) throw std::invalid_argument("variational state: sigma2 <= 0");
    if (!(state.a_tilde[i] > 0.0) || !(state.b_tilde[i] > 0.0))
      throw std::invalid_argument("variational state: Gamma parameters <= 0");
    if (!(state.lambda_tilde[i] >= 0.0) || !(state.lambda_tilde[i] <= 1.0))
      throw std::invalid_argument("variational state: lambda_tilde outside [0,1]");
  }
  if (!(state.c_tilde > 0.0) || !(state.d_tilde > 0.0))
    throw std::invalid_argument("variational state: noise Gamma parameters <= 0");
}

}  // namespace

Moments compute_moments(const VariationalState& state) {
  check_state(state);
  std::size_t n = state.mu.size();
  Moments mom;
  mom.rho_mean.resize(n);
  mom.ln_rho_mean.resize(n);
  mom.x2_mean.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mom.rho_mean[i] = state.a_tilde[i] / state.b_tilde[i];
    mom.ln_rho_mean[i] = digamma(state.a_tilde[i]) - std::log(state.b_tilde[i]);
    mom.x2_mean[i] = std::norm(state.mu[i]) + state.sigma2[i];
  }
  mom.kappa_mean = state.c_tilde / state.d_tilde;
  mom.s_mean = state.lambda_tilde;
  return mom;
}

QuadraticSurrogate::QuadraticSurrogate(const ObservationModel& model, RVec rho_mean,
                                       double kappa_mean, const kernels::Exec& ex)
    : model_(&model), rho_mean_(std::move(rho_mean)), kappa_mean_(kappa_mean), ex_(ex) {
  if (rho_mean_.size() != model.n())
    throw std::invalid_argument("surrogate: rho size mismatch");
  if (model.y.size() != model.m()) throw std::invalid_argument("surrogate: y size mismatch");
  if (!(kappa_mean_ > 0.0)) throw std::invalid_argument("surrogate: kappa_mean <= 0");
  for (double r : rho_mean_)
    if (!(r > 0.0)) throw std::invalid_argument("surrogate: rho_mean <= 0");
  kernels::matvec_adj(ex_, model.sensing, model.y, b_);
  for (auto& v : b_) v *= kappa_mean_;
}

CVec QuadraticSurrogate::apply(const CVec& u) const {
  CVec au = kernels::matvec(ex_, model_->sensing, u);
  CVec w = kernels::matvec_adj(ex_, model_->sensing, au);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rho_mean_[i] * u[i] + kappa_mean_ * w[i];
  return w;
}

double QuadraticSurrogate::diag(std::size_t i) const {
  return rho_mean_[i] + kappa_mean_ * model_->col_sqnorms[i];
}

double QuadraticSurrogate::phi(const CVec& u, CVec* wu_out) const {
  CVec wu = apply(u);
  double quad = std::real(kernels::vdot(ex_, u, wu));
  double lin = std::real(kernels::vdot(ex_, u, b_));
  if (wu_out) *wu_out = std::move(wu);
  return quad - 2.0 * lin;
}

CVec QuadraticSurrogate::gradient(const CVec& u) const {
  CVec g = apply(u);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b_[i];
  return g;
}

double QuadraticSurrogate::lipschitz() const {
  double rho_max = *std::max_element(rho_mean_.begin(), rho_mean_.end());
  return rho_max + kappa_mean_ * opnorm_sq_estimate(*model_, ex_);
}

CVec subspace_init(const SupportEstimate& support, const QuadraticSurrogate& surrogate,
                   const CVec& y, SubspaceInitInfo* info) {
  const std::vector<std::size_t>& idx = support.indices;
  std::size_t k = idx.size();
  std::size_t n = surrogate.n();
  std::size_t m = surrogate.m();
  if (k == 0) throw std::invalid_argument("subspace_init: empty support");
  if (y.size() != m) throw std::invalid_argument("subspace_init: y size mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    if (idx[i] >= n) throw std::invalid_argument("subspace_init: index out of range");
    if (i > 0 && idx[i] <= idx[i - 1])
      throw std::invalid_argument("subspace_init: indices must be sorted and unique");
  }

  const CMat& a = surrogate.model().sensing;
  double kappa = surrogate.kappa_mean();
  CMat ws(k, k);
  for (std::size_t jj = 0; jj < k; ++jj) {
    for (std::size_t ii = 0; ii < jj; ++ii) {
      cplx v = kappa * kernels::serial::vdot(a.col(idx[ii]), a.col(idx[jj]), m);
      ws(ii, jj) = v;
      ws(jj, ii) = std::conj(v);
    }
    ws(jj, jj) = surrogate.diag(idx[jj]);
  }
  CVec bs(k);
  for (std::size_t ii = 0; ii < k; ++ii)
    bs[ii] = kappa * kernels::serial::vdot(a.col(idx[ii]), y.data(), m);

  CVec xs;
  HpdSolveInfo hi = solve_hpd(std::move(ws), bs, xs, 1e-10);
  if (info) {
    info->jittered = hi.jittered;
    info->oversized = k > m;
    info->cond_estimate = hi.cond_estimate;
  }

  CVec mu0(n, cplx(0.0, 0.0));
  for (std::size_t ii = 0; ii < k; ++ii) mu0[idx[ii]] = xs[ii];
  return mu0;
}

CVec robust_select_init(const CVec& mu0, const CVec& mu_prev,
                        const QuadraticSurrogate& surrogate) {
  double f0 = surrogate.phi(mu0);
  double fp = surrogate.phi(mu_prev);
  return fp < f0 ? mu_prev : mu0;
}

CVec refine_mean_gradient(CVec mu, const QuadraticSurrogate& surrogate, std::size_t b_x,
                          RefineInfo* info) {
  if (b_x < 1) throw std::invalid_argument("refine_mean_gradient: b_x must be >= 1");
  const kernels::Exec& ex = surrogate.exec();
  const CVec& b = surrogate.rhs();
  std::size_t n = mu.size();
  if (n != surrogate.n()) throw std::invalid_argument("refine_mean_gradient: size mismatch");

  double grad_floor = 1e-12 * std::sqrt(kernels::sqnorm(ex, b));
  double l = surrogate.lipschitz();
  double eps0 = l > 0.0 ? 1.0 / l : 1.0;

  CVec wu;
  double phi_cur = surrogate.phi(mu, &wu);
  RefineInfo ri;
  CVec g(n), wg;
  for (std::size_t step = 0; step < b_x; ++step) {
    for (std::size_t i = 0; i < n; ++i) g[i] = wu[i] - b[i];
    double gnorm2 = kernels::sqnorm(ex, g);
    if (std::sqrt(gnorm2) <= grad_floor) break;

    wg = surrogate.apply(g);
    double gwg = std::real(kernels::vdot(ex, g, wg));
    /* phi(mu - eps g) = phi(mu) - 2 eps |g|^2 + eps^2 g^H W g exactly, so
     * every trial step reuses the one W-apply above. */
    double eps = eps0;
    bool accepted = false;
    for (int h = 0; h <= 50; ++h) {
      double phi_trial = phi_cur - 2.0 * eps * gnorm2 + eps * eps * gwg;
      if (phi_trial <= phi_cur - 1e-4 * eps * 2.0 * gnorm2) {
        accepted = true;
        break;
      }
      eps *= 0.5;
    }
    if (!accepted) {
      ri.stalled = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) mu[i] -= eps * g[i];
    for (std::size_t i = 0; i < n; ++i) wu[i] -= eps * wg[i];
    phi_cur = phi_cur - 2.0 * eps * gnorm2 + eps * eps * gwg;
    ++ri.steps_taken;
  }

  for (std::size_t i = 0; i < n; ++i) g[i] = wu[i] - b[i];
  ri.grad_norm = std::sqrt(kernels::sqnorm(ex, g));
  if (info) *info = ri;
  return mu;
}

RVec update_qx_variances(const QuadraticSurrogate& surrogate) {
  std::size_t n = surrogate.n();
  RVec sigma2(n);
  for (std::size_t i = 0; i < n; ++i) sigma2[i] = 1.0 / surrogate.diag(i);
  return sigma2;
}

void update_q_rho(const Moments& moments, const PriorHyperParams& hyper,
                  RVec& a_tilde, RVec& b_tilde) {
  std::size_t n = moments.s_mean.size();
  a_tilde.resize(n);
  b_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = moments.s_mean[i];
    a_tilde[i] = s * hyper.a[i] + (1.0 - s) * hyper.a_bar[i] + 1.0;
    b_tilde[i] = s * hyper.b[i] + (1.0 - s) * hyper.b_bar[i] + moments.x2_mean[i];
  }
}

RVec update_q_s(const Moments& moments, const PriorHyperParams& hyper, const RVec& prior_msg) {
  std::size_t n = moments.rho_mean.size();
  if (prior_msg.size() != n) throw std::invalid_argument("update_q_s: message size mismatch");
  RVec lambda_tilde(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lam = prior_msg[i];
    if (lam <= 0.0 || lam >= 1.0) {
      lambda_tilde[i] = std::clamp(lam, 0.0, 1.0);
      continue;
    }
    double ln_c = gamma_cross(hyper.a[i], hyper.b[i], moments.ln_rho_mean[i], moments.rho_mean[i]);
    double ln_c_bar =
        gamma_cross(hyper.a_bar[i], hyper.b_bar[i], moments.ln_rho_mean[i], moments.rho_mean[i]);
    lambda_tilde[i] = logistic(logit(lam) + ln_c - ln_c_bar);
  }
  return lambda_tilde;
}

void update_q_kappa(const VariationalState& state, const ObservationModel& model,
                    const PriorHyperParams& hyper, double& c_tilde, double& d_tilde,
                    const kernels::Exec& ex) {
  c_tilde = hyper.c + static_cast<double>(model.m());
  d_tilde = hyper.d + expected_residual_sq(state.mu, state.sigma2, model, ex);
}

SupportEstimate estimate_support(const CVec& mu, double kappa_mean, const SupportPolicy& policy) {
  if (!(kappa_mean > 0.0)) throw std::invalid_argument("estimate_support: kappa_mean <= 0");
  std::size_t n = mu.size();
  SupportEstimate est;
  est.policy = policy;

  if (policy.kind == SupportPolicy::Kind::Threshold) {
    est.threshold = policy.threshold_multiple / kappa_mean;
    for (std::size_t i = 0; i < n; ++i)
      if (std::norm(mu[i]) > est.threshold) est.indices.push_back(i);
  } else {
    RVec energy(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += energy[i] = std::norm(mu[i]);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return energy[a] != energy[b] ? energy[a] > energy[b] : a < b;
    });
    double target = policy.energy_fraction * total;
    double cum = 0.0;
    for (std::size_t i : order) {
      if (cum >= target) break;
      cum += energy[i];
      est.indices.push_back(i);
      est.threshold = energy[i];
    }
    std::sort(est.indices.begin(), est.indices.end());
  }

  if (est.indices.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::norm(mu[i]) > std::norm(mu[best])) best = i;
    est.indices.push_back(best);
    est.fallback = true;
  }
  return est;
}

CVec exact_icvbi_mean(const QuadraticSurrogate& surrogate, const CVec& y, HpdSolveInfo* info) {
  const ObservationModel& model = surrogate.model();
  if (y.size() != model.m()) throw std::invalid_argument("exact_icvbi_mean: y size mismatch");
  CMat w = kernels::gram(surrogate.exec(), model.sensing);
  double kappa = surrogate.kappa_mean();
  for (auto& v : w.data) v *= kappa;
  for (std::size_t i = 0; i < w.rows; ++i) w(i, i) += surrogate.rho_mean()[i];

  CVec b = kernels::matvec_adj(surrogate.exec(), model.sensing, y);
  for (auto& v : b) v *= kappa;

  CVec mu;
  HpdSolveInfo hi = solve_hpd(std::move(w), b, mu, 1e-12);
  if (info) *info = hi;
  return mu;
}

double free_energy(const VariationalState& state, const ObservationModel& model,
                   const PriorHyperParams& hyper, const RVec& prior_msg,
                   const kernels::Exec& ex) {
  std::size_t n = model.n();
  std::size_t m = model.m();
  if (state.mu.size() != n || prior_msg.size() != n)
    throw std::invalid_argument("free_energy: size mismatch");
  validate_hyperparams(hyper, n);
  Moments mom = compute_moments(state);
  double ln_kappa = digamma(state.c_tilde) - std::log(state.d_tilde);

  double entropy_neg = 0.0;  // <ln q>
  for (std::size_t i = 0; i < n; ++i) {
    entropy_neg -= std::log(kPi * state.sigma2[i]) + 1.0;
    entropy_neg +=
        gamma_cross(state.a_tilde[i], state.b_tilde[i], mom.ln_rho_mean[i], mom.rho_mean[i]);
    entropy_neg += xlogy(mom.s_mean[i], mom.s_mean[i]) +
                   xlogy(1.0 - mom.s_mean[i], 1.0 - mom.s_mean[i]);
  }
  entropy_neg += gamma_cross(state.c_tilde, state.d_tilde, ln_kappa, mom.kappa_mean);

  double cross = 0.0;  // <ln p(y, v)> under the activity message
  cross += static_cast<double>(m) * (ln_kappa - std::log(kPi)) -
           mom.kappa_mean * expected_residual_sq(state.mu, state.sigma2, model, ex);
  for (std::size_t i = 0; i < n; ++i) {
    cross += mom.ln_rho_mean[i] - std::log(kPi) - mom.rho_mean[i] * mom.x2_mean[i];
    cross += mom.s_mean[i] *
                 gamma_cross(hyper.a[i], hyper.b[i], mom.ln_rho_mean[i], mom.rho_mean[i]) +
             (1.0 - mom.s_mean[i]) *
                 gamma_cross(hyper.a_bar[i], hyper.b_bar[i], mom.ln_rho_mean[i], mom.rho_mean[i]);
    cross += xlogy(mom.s_mean[i], clamp_prob(prior_msg[i])) +
             xlogy(1.0 - mom.s_mean[i], clamp_prob(1.0 - prior_msg[i]));
  }
  cross += gamma_cross(hyper.c, hyper.d, ln_kappa, mom.kappa_mean);

  return entropy_neg - cross;
}

RVec extrinsic_from_scvbi(const RVec& lambda_tilde, const RVec& prior_msg,
                          bool* degenerate_flag) {
  std::size_t n = lambda_tilde.size();
  if (prior_msg.size() != n) throw std::invalid_argument("extrinsic: size mismatch");
  RVec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lam = prior_msg[i];
    double lt = lambda_tilde[i];
    if (lam <= 0.0 || lam >= 1.0) {
      if ((lam <= 0.0 && lt >= 1.0) || (lam >= 1.0 && lt <= 0.0))
        throw std::domain_error("extrinsic: contradictory degenerate messages");
      out[i] = lt;
      if (degenerate_flag) *degenerate_flag = true;
      continue;
    }
    out[i] = logistic(logit(clamp_prob(lt)) - logit(lam));
  }
  return out;
}

VariationalState initial_state(const ObservationModel& model, const PriorHyperParams& hyper,
                               const RVec& prior_msg, const kernels::Exec& ex) {
  std::size_t n = model.n();
  validate_hyperparams(hyper, n);
  if (prior_msg.size() != n) throw std::invalid_argument("initial_state: message size mismatch");
  VariationalState st;
  st.mu.assign(n, cplx(0.0, 0.0));
  st.sigma2.assign(n, 1.0);
  st.a_tilde.resize(n);
  st.b_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.a_tilde[i] = hyper.a[i] + 1.0;
    st.b_tilde[i] = hyper.b[i] + 1.0;
  }
  st.lambda_tilde = prior_msg;
  for (double& p : st.lambda_tilde) p = std::clamp(p, 0.0, 1.0);
  st.c_tilde = hyper.c + static_cast<double>(model.m());
  st.d_tilde = hyper.d + kernels::sqnorm(ex, model.y);
  return st;
}

RoundResult scvbi_round(const VariationalState& state, const ObservationModel& model,
                        const PriorHyperParams& hyper, const RVec& prior_msg, std::size_t b_x,
                        const SupportPolicy& policy, const SupportEstimate* support_in,
                        const kernels::Exec& ex) {
  std::size_t n = model.n();
  if (state.mu.size() != n || prior_msg.size() != n)
    throw std::invalid_argument("scvbi_round: size mismatch");
  validate_hyperparams(hyper, n);

  Moments mom = compute_moments(state);
  QuadraticSurrogate surrogate(model, mom.rho_mean, mom.kappa_mean, ex);
  SupportEstimate seed =
      support_in ? *support_in : estimate_support(state.mu, mom.kappa_mean, policy);

  RoundResult out;
  out.state = state;

  SubspaceInitInfo si;
  CVec mu0 = subspace_init(seed, surrogate, model.y, &si);
  out.diag.init_jittered = si.jittered;
  CVec start = robust_select_init(mu0, state.mu, surrogate);
  if (b_x >= 1) {
    RefineInfo ri;
    out.state.mu = refine_mean_gradient(std::move(start), surrogate, b_x, &ri);
    out.diag.stalled = ri.stalled;
    out.diag.grad_norm = ri.grad_norm;
  } else {
    out.state.mu = std::move(start);
    out.diag.grad_norm = std::sqrt(kernels::sqnorm(ex, surrogate.gradient(out.state.mu)));
  }
  out.state.sigma2 = update_qx_variances(surrogate);

  for (std::size_t i = 0; i < n; ++i)
    mom.x2_mean[i] = std::norm(out.state.mu[i]) + out.state.sigma2[i];
  update_q_rho(mom, hyper, out.state.a_tilde, out.state.b_tilde);
  for (std::size_t i = 0; i < n; ++i) {
    mom.rho_mean[i] = out.state.a_tilde[i] / out.state.b_tilde[i];
    mom.ln_rho_mean[i] = digamma(out.state.a_tilde[i]) - std::log(out.state.b_tilde[i]);
  }
  out.state.lambda_tilde = update_q_s(mom, hyper, prior_msg);
  update_q_kappa(out.state, model, hyper, out.state.c_tilde, out.state.d_tilde, ex);

  out.support = estimate_support(out.state.mu, out.state.c_tilde / out.state.d_tilde, policy);
  out.diag.support_fallback = out.support.fallback;
  out.diag.support_size = out.support.indices.size();
  out.extrinsic = extrinsic_from_scvbi(out.state.lambda_tilde, prior_msg);
  return out;
}

}  // namespace gridcs
