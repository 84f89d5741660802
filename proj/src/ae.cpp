#include "gridcs/ae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "gridcs/linalg.hpp"
#include "gridcs/special.hpp"

namespace gridcs {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double block_change(const RVec& prev, const RVec& next) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    double e = next[i] - prev[i];
    d += e * e;
    s += next[i] * next[i];
  }
  return std::sqrt(d) / (1.0 + std::sqrt(s));
}

double block_change(const CVec& prev, const CVec& next) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    d += std::norm(next[i] - prev[i]);
    s += std::norm(next[i]);
  }
  return std::sqrt(d) / (1.0 + std::sqrt(s));
}

}  // namespace

void validate_config(const SolverConfig& config) {
  if (config.max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
  if (config.first_round_scvbi_repeats < 1)
    throw std::invalid_argument("config: first_round_scvbi_repeats must be >= 1");
  if (!(config.stop_tol > 0.0)) throw std::invalid_argument("config: stop_tol must be > 0");
  if (config.ssi_sweeps < 1) throw std::invalid_argument("config: ssi_sweeps must be >= 1");
  if (!(config.ssi_damping >= 0.0) || config.ssi_damping >= 1.0)
    throw std::invalid_argument("config: ssi_damping must be in [0, 1)");
  if (config.grid_refinement_enabled && config.b_theta < 1)
    throw std::invalid_argument("config: grid refinement needs b_theta >= 1");
  if (!(config.support_policy.threshold_multiple > 0.0))
    throw std::invalid_argument("config: threshold_multiple must be > 0");
  if (!(config.support_policy.energy_fraction > 0.0) ||
      config.support_policy.energy_fraction > 1.0)
    throw std::invalid_argument("config: energy_fraction must be in (0, 1]");
  if (config.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

SupportEstimate omp_initial_support(const CMat& a, const CVec& y, std::size_t k_max) {
  std::size_t m = a.rows, n = a.cols;
  if (y.size() != m) throw std::invalid_argument("omp_initial_support: size mismatch");
  if (k_max < 1 || k_max > m)
    throw std::invalid_argument("omp_initial_support: k_max must be in [1, m]");

  kernels::Exec ex;
  RVec norms = kernels::col_sqnorms(ex, a);
  for (double& v : norms) v = std::sqrt(v);

  double y_norm = std::sqrt(kernels::sqnorm(ex, y));
  CVec r = y;
  std::vector<std::size_t> sel;
  std::vector<char> picked(n, 0);
  CVec coef;

  for (std::size_t step = 0; step < k_max; ++step) {
    std::size_t best = n;
    double best_val = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (picked[j] || norms[j] <= 0.0) continue;
      double c = std::abs(kernels::serial::vdot(a.col(j), r.data(), m)) / norms[j];
      if (c > best_val) {
        best_val = c;
        best = j;
      }
    }
    if (best == n || best_val <= 1e-12 * y_norm) break;
    picked[best] = 1;
    sel.push_back(best);

    std::size_t k = sel.size();
    CMat g(k, k);
    CVec rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j)
        g(i, j) = kernels::serial::vdot(a.col(sel[i]), a.col(sel[j]), m);
      rhs[i] = kernels::serial::vdot(a.col(sel[i]), y.data(), m);
    }
    solve_hpd(std::move(g), rhs, coef, 1e-12);

    r = y;
    for (std::size_t i = 0; i < k; ++i) {
      const cplx* aj = a.col(sel[i]);
      for (std::size_t row = 0; row < m; ++row) r[row] -= coef[i] * aj[row];
    }
    if (kernels::sqnorm(ex, r) <= 1e-24 * y_norm * y_norm) break;
  }

  SupportEstimate out;
  if (sel.empty()) {
    out.indices.push_back(0);
    out.fallback = true;
  } else {
    std::sort(sel.begin(), sel.end());
    out.indices = std::move(sel);
  }
  return out;
}

RoundResult icvbi_round(const VariationalState& state, const ObservationModel& model,
                        const PriorHyperParams& hyper, const RVec& prior_msg,
                        const SupportPolicy& policy, const kernels::Exec& ex) {
  std::size_t n = model.n();
  if (state.mu.size() != n || prior_msg.size() != n)
    throw std::invalid_argument("icvbi_round: size mismatch");
  validate_hyperparams(hyper, n);

  Moments mom = compute_moments(state);
  QuadraticSurrogate surrogate(model, mom.rho_mean, mom.kappa_mean, ex);

  RoundResult out;
  out.state = state;
  out.state.mu = exact_icvbi_mean(surrogate, model.y);
  out.diag.grad_norm = std::sqrt(kernels::sqnorm(ex, surrogate.gradient(out.state.mu)));
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

CVec reconstruct_channel(const ObservationModel& model, const CVec& x_hat,
                         const kernels::Exec& ex) {
  if (!model.mimo) throw std::invalid_argument("reconstruct_channel: model has no array context");
  return kernels::matvec(ex, model.mimo->steering, x_hat);
}

double nmse_db(const CVec& estimate, const CVec& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("nmse_db: size mismatch");
  kernels::Exec ex;
  double t = kernels::sqnorm(ex, truth);
  if (t <= 0.0) throw std::invalid_argument("nmse_db: truth vector is zero");
  double e = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) e += std::norm(estimate[i] - truth[i]);
  if (e <= 0.0) return -300.0;
  return std::max(10.0 * std::log10(e / t), -300.0);
}

double xi_change(const VariationalState& prev, const VariationalState& next) {
  double xi = block_change(prev.mu, next.mu);
  xi = std::max(xi, block_change(prev.sigma2, next.sigma2));
  xi = std::max(xi, block_change(prev.a_tilde, next.a_tilde));
  xi = std::max(xi, block_change(prev.b_tilde, next.b_tilde));
  xi = std::max(xi, block_change(prev.lambda_tilde, next.lambda_tilde));
  RVec pk{prev.c_tilde, prev.d_tilde}, nk{next.c_tilde, next.d_tilde};
  return std::max(xi, block_change(pk, nk));
}

SolveResult solve(const ObservationModel& model_in, const PriorHyperParams& hyper,
                  const SupportPrior& support_prior, const SolverConfig& config,
                  const ChannelTruth* truth) {
  validate_config(config);
  ObservationModel model = model_in;  // grid refinement rewrites sensing columns
  std::size_t n = model.n(), m = model.m();
  validate_hyperparams(hyper, n);
  validate_support(support_prior, n);
  if (config.grid_refinement_enabled && !model.mimo)
    throw std::invalid_argument("solve: grid refinement needs an array model");

  kernels::Exec ex;
  ex.threads = config.threads;

  RVec prior_msg = prior_activity(support_prior);
  VariationalState state = initial_state(model, hyper, prior_msg, ex);

  // seed: subspace support entering a round; estimate: support derived from
  // the round's refined mean. The seed is only advanced between outer
  // iterations, so the first-iteration repeats all start from the same
  // initial support while the noise precision calibrates itself.
  SupportEstimate seed, estimate;
  bool have_seed = false;
  if (config.init == InitPolicy::Omp) {
    std::size_t k_max = config.omp_k_max;
    if (k_max == 0) {
      double expected = 0.0;
      for (double v : prior_msg) expected += v;
      auto k_auto = static_cast<std::size_t>(std::ceil(2.0 * expected));
      k_max = std::min(std::max<std::size_t>(k_auto, 1), std::max<std::size_t>(m / 2, 1));
    }
    seed = omp_initial_support(model.sensing, model.y, k_max);
    have_seed = true;
  }

  SolveResult out;
  out.trace.reserve(config.max_iters);
  out.phase_free_energy.reserve(config.max_iters);

  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    VariationalState prev = state;
    std::size_t rounds = (iter == 1) ? config.first_round_scvbi_repeats : 1;

    RVec phase_f;
    phase_f.reserve(rounds + 1);
    phase_f.push_back(free_energy(state, model, hyper, prior_msg, ex));
    RoundDiagnostics diag;
    RVec extrinsic;
    for (std::size_t r = 0; r < rounds; ++r) {
      RoundResult rr = (config.algorithm == Algorithm::IcVbiOracle)
                           ? icvbi_round(state, model, hyper, prior_msg, config.support_policy, ex)
                           : scvbi_round(state, model, hyper, prior_msg, config.b_x,
                                         config.support_policy, have_seed ? &seed : nullptr, ex);
      state = std::move(rr.state);
      estimate = std::move(rr.support);
      extrinsic = std::move(rr.extrinsic);
      diag = rr.diag;
      phase_f.push_back(free_energy(state, model, hyper, prior_msg, ex));
    }
    seed = estimate;
    have_seed = true;
    out.phase_free_energy.push_back(phase_f);
    out.prior_msg = prior_msg;

    RVec next_prior =
        ssi_extrinsic(extrinsic, support_prior, config.ssi_sweeps, config.ssi_damping);

    double grid_ll = kNan;
    if (config.grid_refinement_enabled) {
      double kappa_hat = state.c_tilde / state.d_tilde;
      GridLikelihoodContext ctx = make_grid_context(model, state.mu, kappa_hat, estimate);
      model.grid = grid_ascent(model.grid, ctx, config.b_theta);
      refresh_sensing_columns(model, estimate.indices, ex);
      grid_ll = grid_likelihood(model.grid, ctx);
    }

    TraceRecord rec;
    rec.iteration = iter;
    rec.free_energy = phase_f.back();
    rec.support_size = estimate.indices.size();
    rec.grad_norm = diag.grad_norm;
    rec.grid_likelihood = grid_ll;
    rec.nmse_db = kNan;
    if (truth) {
      if (model.mimo && truth->h.size() == model.mimo->steering.rows)
        rec.nmse_db = nmse_db(reconstruct_channel(model, state.mu, ex), truth->h);
      else if (truth->x_true.size() == n)
        rec.nmse_db = nmse_db(state.mu, truth->x_true);
    }
    rec.xi_change = xi_change(prev, state);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    out.trace.push_back(rec);
    out.iterations = iter;

    prior_msg = std::move(next_prior);
    if (rec.xi_change < config.stop_tol) {
      out.converged = true;
      break;
    }
  }

  out.x_hat = state.mu;
  out.support = estimate;
  out.grid_hat = model.grid;
  out.kappa_hat = state.c_tilde / state.d_tilde;
  out.state = std::move(state);
  return out;
}

}  // namespace gridcs
