#pragma once

#include <cstdint>
#include <vector>

#include "gridcs/gridest.hpp"
#include "gridcs/model.hpp"
#include "gridcs/prior.hpp"
#include "gridcs/scvbi.hpp"
#include "gridcs/ssi.hpp"

namespace gridcs {

enum class Algorithm { ScVbi, IcVbiOracle };
enum class InitPolicy { Omp, Prior };

struct SolverConfig {
  std::size_t max_iters = 50;
  std::size_t b_x = 3;
  std::size_t b_theta = 2;
  std::size_t ssi_sweeps = 5;
  double ssi_damping = 0.3;
  SupportPolicy support_policy;
  std::size_t first_round_scvbi_repeats = 5;
  double stop_tol = 1e-6;  // on the relative parameter change per iteration
  bool grid_refinement_enabled = false;
  std::uint64_t rng_seed = 0;  // carried in configs; the solve itself draws nothing
  Algorithm algorithm = Algorithm::ScVbi;
  InitPolicy init = InitPolicy::Omp;
  std::size_t omp_k_max = 0;  // 0 = min(m/2, 2 * expected active count)
  int threads = 1;
};

void validate_config(const SolverConfig& config);

struct TraceRecord {
  std::size_t iteration = 0;  // 1-based
  double free_energy = 0.0;
  double nmse_db = 0.0;  // NaN when no truth was supplied
  std::size_t support_size = 0;
  double grid_likelihood = 0.0;  // NaN when the grid stage did not run
  double wall_ms = 0.0;
  double grad_norm = 0.0;
  double xi_change = 0.0;
};

struct SolveResult {
  CVec x_hat;
  SupportEstimate support;
  DynamicGrid grid_hat;
  double kappa_hat = 0.0;
  std::vector<TraceRecord> trace;
  /* Free energy after each solver round inside each outer iteration,
   * prefixed with the value entering the phase; the monotonicity guarantee
   * applies within each of these sequences. */
  std::vector<RVec> phase_free_energy;
  VariationalState state;       // final variational parameters
  BernoulliMessage prior_msg;   // activity message the final round used
  std::size_t iterations = 0;
  bool converged = false;
};

/* Greedy max-correlation support seed with least-squares refits. */
SupportEstimate omp_initial_support(const CMat& a, const CVec& y, std::size_t k_max);

/* The dense-oracle counterpart of scvbi_round: same block updates, but the
 * posterior mean comes from the full Hermitian solve. */
RoundResult icvbi_round(const VariationalState& state, const ObservationModel& model,
                        const PriorHyperParams& hyper, const RVec& prior_msg,
                        const SupportPolicy& policy, const kernels::Exec& ex = {});

/* Rebuilds the channel vector implied by the coefficient estimate on the
 * model's current grid. */
CVec reconstruct_channel(const ObservationModel& model, const CVec& x_hat,
                         const kernels::Exec& ex = {});

/* 10 log10(||estimate - truth||^2 / ||truth||^2), floored at -300 dB (the
 * floor doubles as the exact-match value). A zero truth vector is an error. */
double nmse_db(const CVec& estimate, const CVec& truth);

/* Relative parameter change between consecutive outer iterations: max over
 * parameter blocks of ||delta|| / (1 + ||new block||). */
double xi_change(const VariationalState& prev, const VariationalState& next);

/* Alternating estimation: solver rounds, structured-support message
 * exchange, then grid refinement, until the parameter change drops below
 * stop_tol or max_iters is hit. Deterministic given model and config.
 * truth (optional) only feeds the NMSE trace column. */
SolveResult solve(const ObservationModel& model, const PriorHyperParams& hyper,
                  const SupportPrior& support_prior, const SolverConfig& config,
                  const ChannelTruth* truth = nullptr);

}  // namespace gridcs
