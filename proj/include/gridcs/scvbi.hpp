#pragma once

#include <cstdint>
#include <vector>

#include "gridcs/kernels.hpp"
#include "gridcs/linalg.hpp"
#include "gridcs/model.hpp"
#include "gridcs/prior.hpp"
#include "gridcs/types.hpp"

namespace gridcs {

/* Parameters of the factorized posterior approximation
 * q(x) q(rho) q(s) q(kappa). */
struct VariationalState {
  CVec mu;
  RVec sigma2;
  RVec a_tilde, b_tilde;
  RVec lambda_tilde;
  double c_tilde = 0.0;
  double d_tilde = 0.0;
};

struct Moments {
  RVec rho_mean;     // a_tilde / b_tilde
  double kappa_mean = 0.0;
  RVec s_mean;       // lambda_tilde
  RVec ln_rho_mean;  // digamma(a_tilde) - ln b_tilde
  RVec x2_mean;      // |mu|^2 + sigma2
};

/* Matrix-free view of the quadratic form
 *   phi(u) = u^H W u - 2 Re{u^H b},  W = diag(<rho>) + <kappa> A^H A,
 * whose minimizer is the exact posterior mean. W is applied through two
 * products with the sensing matrix and never assembled here. */
class QuadraticSurrogate {
 public:
  QuadraticSurrogate(const ObservationModel& model, RVec rho_mean, double kappa_mean,
                     const kernels::Exec& ex = {});

  std::size_t n() const { return model_->n(); }
  std::size_t m() const { return model_->m(); }
  const ObservationModel& model() const { return *model_; }
  const RVec& rho_mean() const { return rho_mean_; }
  double kappa_mean() const { return kappa_mean_; }
  const CVec& rhs() const { return b_; }  // b = <kappa> A^H y
  const kernels::Exec& exec() const { return ex_; }

  CVec apply(const CVec& u) const;            // W u
  double diag(std::size_t i) const;           // W_ii
  double phi(const CVec& u, CVec* wu_out = nullptr) const;
  CVec gradient(const CVec& u) const;         // W u - b
  double lipschitz() const;                   // max<rho> + <kappa> ||A||^2

 private:
  const ObservationModel* model_;
  RVec rho_mean_;
  double kappa_mean_;
  CVec b_;
  kernels::Exec ex_;
};

struct SupportPolicy {
  enum class Kind { Threshold, EnergyFraction };
  Kind kind = Kind::Threshold;
  double threshold_multiple = 2.5;  // of the noise power 1/<kappa>
  double energy_fraction = 0.95;
};

struct SupportEstimate {
  std::vector<std::size_t> indices;  // sorted, duplicate-free
  double threshold = 0.0;            // energy cutoff actually applied
  SupportPolicy policy;
  bool fallback = false;  // set when the policy selected nothing
};

Moments compute_moments(const VariationalState& state);

struct SubspaceInitInfo {
  bool jittered = false;
  bool oversized = false;  // |S| > m
  double cond_estimate = 0.0;
};

/* Dense Hermitian solve of the system restricted to the support estimate;
 * entries off the support are exactly zero. Touches only |S| columns of the
 * sensing matrix. */
CVec subspace_init(const SupportEstimate& support, const QuadraticSurrogate& surrogate,
                   const CVec& y, SubspaceInitInfo* info = nullptr);

/* Whichever of the two candidates has the lower phi value; ties go to mu0. */
CVec robust_select_init(const CVec& mu0, const CVec& mu_prev,
                        const QuadraticSurrogate& surrogate);

struct RefineInfo {
  bool stalled = false;      // line search exhausted its 50 halvings
  double grad_norm = 0.0;    // ||W mu - b|| at exit
  std::size_t steps_taken = 0;
};

/* b_x Armijo-backtracked gradient steps on phi. Initial step 1/L, halving
 * factor 0.5, sufficient-decrease constant 1e-4, at most 50 halvings; a
 * failed search returns the iterate unchanged with the stall flag set. */
CVec refine_mean_gradient(CVec mu, const QuadraticSurrogate& surrogate, std::size_t b_x,
                          RefineInfo* info = nullptr);

RVec update_qx_variances(const QuadraticSurrogate& surrogate);

void update_q_rho(const Moments& moments, const PriorHyperParams& hyper,
                  RVec& a_tilde, RVec& b_tilde);

RVec update_q_s(const Moments& moments, const PriorHyperParams& hyper, const RVec& prior_msg);

void update_q_kappa(const VariationalState& state, const ObservationModel& model,
                    const PriorHyperParams& hyper, double& c_tilde, double& d_tilde,
                    const kernels::Exec& ex = {});

SupportEstimate estimate_support(const CVec& mu, double kappa_mean, const SupportPolicy& policy);

/* Full N-dimensional dense solve mu = W^{-1} b. Reference oracle; cubic cost. */
CVec exact_icvbi_mean(const QuadraticSurrogate& surrogate, const CVec& y,
                      HpdSolveInfo* info = nullptr);

/* Variational objective <ln q(v)> - <ln p(y|x,kappa) p(x,rho,s) p(kappa)> up
 * to the constant ln p(y); non-increasing under every block update. */
double free_energy(const VariationalState& state, const ObservationModel& model,
                   const PriorHyperParams& hyper, const RVec& prior_msg,
                   const kernels::Exec& ex = {});

/* Divides the prior activity message out of the posterior, in log-odds form.
 * A degenerate prior entry passes lambda_tilde through (flag raised); a hard
 * contradiction between the two is an error. */
RVec extrinsic_from_scvbi(const RVec& lambda_tilde, const RVec& prior_msg,
                          bool* degenerate_flag = nullptr);

VariationalState initial_state(const ObservationModel& model, const PriorHyperParams& hyper,
                               const RVec& prior_msg, const kernels::Exec& ex = {});

struct RoundDiagnostics {
  double grad_norm = 0.0;
  std::size_t support_size = 0;
  bool stalled = false;
  bool support_fallback = false;
  bool init_jittered = false;
};

struct RoundResult {
  VariationalState state;
  SupportEstimate support;  // estimated from the refined mean
  RVec extrinsic;
  RoundDiagnostics diag;
};

/* One full coordinate round: q(x) mean (subspace init, robust select, b_x
 * gradient steps) and variances, then q(rho), q(s), q(kappa), then the
 * support estimate and the extrinsic activity message. support_in seeds the
 * subspace solve; when absent it is estimated from the incoming mean. */
RoundResult scvbi_round(const VariationalState& state, const ObservationModel& model,
                        const PriorHyperParams& hyper, const RVec& prior_msg, std::size_t b_x,
                        const SupportPolicy& policy, const SupportEstimate* support_in = nullptr,
                        const kernels::Exec& ex = {});

}  // namespace gridcs
