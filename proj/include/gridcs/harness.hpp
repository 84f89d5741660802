#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gridcs/ae.hpp"

namespace gridcs {

/* One experiment sweep: the cross product of compression ratios, SNR
 * points, seeds, and algorithms on a shared array geometry. An SNR at or
 * above 300 dB means a noise-free observation. */
struct ExperimentSpec {
  std::string scenario = "default";
  std::size_t nx = 8, ny = 8;  // receive array
  std::size_t n1 = 16, n2 = 8; // angular grid
  std::vector<std::size_t> compression_ratios = {4};  // n_r / n_rf
  std::size_t k_paths = 3;
  RVec snr_db = {10.0};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<Algorithm> algorithms = {Algorithm::ScVbi};
  SupportPrior::Kind prior = SupportPrior::Kind::IID;
  double prior_lambda = 0.0;  // 0 = k_paths / (n1*n2)
  std::size_t markov_mean_run = 3;
  bool clustered_truth = false;  // sample the true support from the Markov field
  bool off_grid = false;
  SolverConfig solver;
  std::string out_path;
};

void validate_spec(const ExperimentSpec& spec);

struct MetricRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  long iteration = 0;  // -1 marks the per-solve summary row
  double nmse_db = 0.0;
  double free_energy = 0.0;
  std::size_t support_size = 0;
  double wall_ms = 0.0;
  std::string algorithm;
  double snr_db = 0.0;
  double compression_ratio = 0.0;
};

extern const char* const kMetricHeader;

std::string to_csv_row(const MetricRecord& rec);
void write_csv(std::ostream& os, const std::vector<MetricRecord>& records);
void write_csv_file(const std::string& path, const std::vector<MetricRecord>& records);

const char* algorithm_name(Algorithm alg);
Algorithm algorithm_from_name(const std::string& name);

ExperimentSpec spec_from_json(const std::string& text);
ExperimentSpec load_spec(const std::string& path);

/* Everything run_experiment derives for one sweep cell; exposed so single
 * solves and tests can build the identical instance. */
struct InstanceBundle {
  ObservationModel model;
  ChannelTruth truth;
  SupportPrior support_prior;
  PriorHyperParams hyper;
  double kappa_true = 0.0;
};

InstanceBundle make_instance(const ExperimentSpec& spec, std::uint64_t seed, double snr_db,
                             std::size_t compression_ratio);

/* Runs the full sweep deterministically (row order: ratio, SNR, seed,
 * algorithm) and returns per-iteration plus summary records; writes
 * spec.out_path when set. Two runs differ only in the wall_ms column. */
std::vector<MetricRecord> run_experiment(const ExperimentSpec& spec);

struct ScalingRow {
  std::size_t n = 0, m = 0;
  double scvbi_round_ms = 0.0;
  double icvbi_solve_ms = 0.0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double scvbi_slope = 0.0;  // log-log least-squares fit against n
  double icvbi_slope = 0.0;
  double checksum = 0.0;  // keeps the timed solves observable
};

/* Median over `repeats` timings of one solver round (fixed support size)
 * and one full dense solve, per (n, m) size. */
ScalingResult run_scaling_benchmark(const std::vector<std::size_t>& n_list,
                                    const std::vector<std::size_t>& m_list, std::size_t repeats,
                                    std::uint64_t seed);

std::string scaling_csv(const ScalingResult& res);

}  // namespace gridcs
