#include "gridcs/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace gridcs {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t k = v.size();
  if (k == 0) return 0.0;
  return (k % 2) ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double k = static_cast<double>(pts.size());
  double den = k * sxx - sx * sx;
  if (den <= 0.0) return 0.0;
  return (k * sxy - sx * sy) / den;
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw std::invalid_argument(std::string("config: unknown key '") + it.key() +
                                         "' in " + where);
  }
}

SupportPolicy policy_from_json(const json& j) {
  require_keys(j, {"kind", "threshold_multiple", "energy_fraction"}, "support_policy");
  SupportPolicy p;
  std::string kind = j.value("kind", "threshold");
  if (kind == "threshold")
    p.kind = SupportPolicy::Kind::Threshold;
  else if (kind == "energy_fraction")
    p.kind = SupportPolicy::Kind::EnergyFraction;
  else
    throw std::invalid_argument("config: unknown support policy '" + kind + "'");
  p.threshold_multiple = j.value("threshold_multiple", p.threshold_multiple);
  p.energy_fraction = j.value("energy_fraction", p.energy_fraction);
  return p;
}

SolverConfig solver_from_json(const json& j) {
  require_keys(j,
               {"max_iters", "b_x", "b_theta", "ssi_sweeps", "ssi_damping", "support_policy",
                "first_round_scvbi_repeats", "stop_tol", "init", "omp_k_max", "threads"},
               "solver");
  SolverConfig c;
  c.max_iters = j.value("max_iters", c.max_iters);
  c.b_x = j.value("b_x", c.b_x);
  c.b_theta = j.value("b_theta", c.b_theta);
  c.ssi_sweeps = j.value("ssi_sweeps", c.ssi_sweeps);
  c.ssi_damping = j.value("ssi_damping", c.ssi_damping);
  c.first_round_scvbi_repeats =
      j.value("first_round_scvbi_repeats", c.first_round_scvbi_repeats);
  c.stop_tol = j.value("stop_tol", c.stop_tol);
  c.omp_k_max = j.value("omp_k_max", c.omp_k_max);
  c.threads = j.value("threads", c.threads);
  if (j.contains("support_policy")) c.support_policy = policy_from_json(j.at("support_policy"));
  if (j.contains("init")) {
    std::string init = j.at("init").get<std::string>();
    if (init == "omp")
      c.init = InitPolicy::Omp;
    else if (init == "prior")
      c.init = InitPolicy::Prior;
    else
      throw std::invalid_argument("config: unknown init policy '" + init + "'");
  }
  return c;
}

}  // namespace

const char* const kMetricHeader =
    "scenario,seed,iteration,nmse_db,free_energy,support_size,wall_ms,algorithm,snr_db,"
    "compression_ratio";

const char* algorithm_name(Algorithm alg) {
  switch (alg) {
    case Algorithm::ScVbi: return "sc_vbi";
    case Algorithm::IcVbiOracle: return "ic_vbi_oracle";
  }
  return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "sc_vbi") return Algorithm::ScVbi;
  if (name == "ic_vbi_oracle") return Algorithm::IcVbiOracle;
  throw std::invalid_argument("config: unknown algorithm '" + name + "'");
}

std::string to_csv_row(const MetricRecord& rec) {
  std::ostringstream os;
  os << csv_escape(rec.scenario) << ',' << rec.seed << ',' << rec.iteration << ','
     << fmt_double(rec.nmse_db) << ',' << fmt_double(rec.free_energy) << ','
     << rec.support_size << ',' << fmt_double(rec.wall_ms) << ','
     << csv_escape(rec.algorithm) << ',' << fmt_double(rec.snr_db) << ','
     << fmt_double(rec.compression_ratio);
  return os.str();
}

void write_csv(std::ostream& os, const std::vector<MetricRecord>& records) {
  os << kMetricHeader << '\n';
  for (const MetricRecord& rec : records) os << to_csv_row(rec) << '\n';
}

void write_csv_file(const std::string& path, const std::vector<MetricRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  write_csv(os, records);
  if (!os.good()) throw std::runtime_error("write failed: " + path);
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw std::invalid_argument("spec: array dims must be >= 1");
  if (spec.n1 < 1 || spec.n2 < 1) throw std::invalid_argument("spec: grid dims must be >= 1");
  std::size_t nr = spec.nx * spec.ny;
  if (spec.compression_ratios.empty())
    throw std::invalid_argument("spec: compression_ratios is empty");
  for (std::size_t r : spec.compression_ratios) {
    if (r < 1 || nr % r != 0)
      throw std::invalid_argument("spec: compression ratio must divide the array size");
  }
  if (spec.snr_db.empty()) throw std::invalid_argument("spec: snr_db is empty");
  if (spec.seeds.empty()) throw std::invalid_argument("spec: seeds is empty");
  if (spec.algorithms.empty()) throw std::invalid_argument("spec: algorithms is empty");
  if (!spec.clustered_truth) {
    if (spec.k_paths < 1 || spec.k_paths > spec.n1 * spec.n2)
      throw std::invalid_argument("spec: k_paths out of range");
  }
  if (spec.prior_lambda < 0.0 || spec.prior_lambda >= 1.0)
    throw std::invalid_argument("spec: prior_lambda must be in [0, 1)");
  if (spec.markov_mean_run < 1) throw std::invalid_argument("spec: markov_mean_run must be >= 1");
  validate_config(spec.solver);
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  require_keys(j,
               {"scenario", "nx", "ny", "n1", "n2", "compression_ratios", "k_paths", "snr_db",
                "seeds", "algorithms", "prior", "prior_lambda", "markov_mean_run",
                "clustered_truth", "off_grid", "grid_refinement", "solver", "out_path"},
               "top level");

  ExperimentSpec spec;
  spec.scenario = j.value("scenario", spec.scenario);
  spec.nx = j.value("nx", spec.nx);
  spec.ny = j.value("ny", spec.ny);
  spec.n1 = j.value("n1", spec.n1);
  spec.n2 = j.value("n2", spec.n2);
  if (j.contains("compression_ratios"))
    spec.compression_ratios = j.at("compression_ratios").get<std::vector<std::size_t>>();
  spec.k_paths = j.value("k_paths", spec.k_paths);
  if (j.contains("snr_db")) spec.snr_db = j.at("snr_db").get<RVec>();
  if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("algorithms")) {
    spec.algorithms.clear();
    for (const auto& name : j.at("algorithms"))
      spec.algorithms.push_back(algorithm_from_name(name.get<std::string>()));
  }
  if (j.contains("prior")) {
    std::string p = j.at("prior").get<std::string>();
    if (p == "iid")
      spec.prior = SupportPrior::Kind::IID;
    else if (p == "markov2d")
      spec.prior = SupportPrior::Kind::Markov2D;
    else
      throw std::invalid_argument("config: unknown prior '" + p + "'");
  }
  spec.prior_lambda = j.value("prior_lambda", spec.prior_lambda);
  spec.markov_mean_run = j.value("markov_mean_run", spec.markov_mean_run);
  spec.clustered_truth = j.value("clustered_truth", spec.clustered_truth);
  spec.off_grid = j.value("off_grid", spec.off_grid);
  if (j.contains("solver")) spec.solver = solver_from_json(j.at("solver"));
  spec.solver.grid_refinement_enabled =
      j.value("grid_refinement", spec.solver.grid_refinement_enabled);
  spec.out_path = j.value("out_path", spec.out_path);
  validate_spec(spec);
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return spec_from_json(buf.str());
}

InstanceBundle make_instance(const ExperimentSpec& spec, std::uint64_t seed, double snr_db,
                             std::size_t compression_ratio) {
  std::size_t nr = spec.nx * spec.ny;
  if (compression_ratio < 1 || nr % compression_ratio != 0)
    throw std::invalid_argument("make_instance: bad compression ratio");
  std::size_t nrf = nr / compression_ratio;

  kernels::Exec ex;
  ex.threads = spec.solver.threads;

  DynamicGrid grid = uniform_grid(spec.n1, spec.n2);
  HybridCombiner comb = generate_combiner(nr, nrf, mix_seed(seed, {0xC0, compression_ratio}));
  ObservationModel model = build_sensing_matrix(grid, comb, spec.nx, spec.ny, ex);
  std::size_t n = model.n();

  double lambda =
      spec.prior_lambda > 0.0 ? spec.prior_lambda : static_cast<double>(spec.k_paths) / n;
  SupportPrior sprior = (spec.prior == SupportPrior::Kind::Markov2D)
                            ? markov2d_from_sparsity(lambda, spec.markov_mean_run, spec.n1,
                                                     spec.n2)
                            : iid_support(n, lambda);

  Rng chan_rng(mix_seed(seed, {0xC1}));
  ChannelTruth truth;
  if (spec.clustered_truth) {
    // truth support always comes from the Markov field, so the same
    // instances are solved whichever prior the solver runs
    SupportPrior field =
        markov2d_from_sparsity(lambda, spec.markov_mean_run, spec.n1, spec.n2);
    std::vector<std::size_t> idx;
    for (int attempt = 0; attempt < 100 && idx.empty(); ++attempt) {
      std::vector<std::uint8_t> s = sample_support(field, chan_rng);
      for (std::size_t q = 0; q < s.size(); ++q)
        if (s[q]) idx.push_back(q);
    }
    if (idx.empty()) throw std::runtime_error("make_instance: empty support after 100 draws");
    truth = channel_from_support(idx, grid, spec.off_grid, spec.nx, spec.ny, chan_rng);
  } else {
    truth = generate_channel(spec.k_paths, grid, spec.off_grid, spec.nx, spec.ny, chan_rng);
  }

  double kappa = std::numeric_limits<double>::infinity();
  if (snr_db < 300.0) {
    CVec y0 = kernels::matvec(ex, model.mimo->front, truth.h);
    double p = kernels::sqnorm(ex, y0) / static_cast<double>(model.m());
    if (p <= 0.0) throw std::runtime_error("make_instance: zero received signal");
    kappa = std::pow(10.0, snr_db / 10.0) / p;
  }
  Rng noise_rng(mix_seed(seed, {0xC2, std::bit_cast<std::uint64_t>(snr_db)}));
  model.y = observe_channel(model, truth.h, kappa, noise_rng);

  InstanceBundle out;
  out.model = std::move(model);
  out.truth = std::move(truth);
  out.support_prior = std::move(sprior);
  out.hyper = default_hyperparams(n);
  out.kappa_true = kappa;
  return out;
}

std::vector<MetricRecord> run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  std::vector<MetricRecord> records;

  for (std::size_t ratio : spec.compression_ratios) {
    for (double snr : spec.snr_db) {
      for (std::uint64_t seed : spec.seeds) {
        InstanceBundle bundle = make_instance(spec, seed, snr, ratio);
        for (Algorithm alg : spec.algorithms) {
          SolverConfig config = spec.solver;
          config.algorithm = alg;
          config.rng_seed = seed;
          SolveResult res =
              solve(bundle.model, bundle.hyper, bundle.support_prior, config, &bundle.truth);

          MetricRecord base;
          base.scenario = spec.scenario;
          base.seed = seed;
          base.algorithm = algorithm_name(alg);
          base.snr_db = snr;
          base.compression_ratio = static_cast<double>(ratio);

          double total_ms = 0.0;
          for (const TraceRecord& tr : res.trace) {
            MetricRecord rec = base;
            rec.iteration = static_cast<long>(tr.iteration);
            rec.nmse_db = tr.nmse_db;
            rec.free_energy = tr.free_energy;
            rec.support_size = tr.support_size;
            rec.wall_ms = tr.wall_ms;
            records.push_back(std::move(rec));
            total_ms += tr.wall_ms;
          }
          MetricRecord fin = base;
          fin.iteration = -1;
          const TraceRecord& last = res.trace.back();
          fin.nmse_db = last.nmse_db;
          fin.free_energy = last.free_energy;
          fin.support_size = res.support.indices.size();
          fin.wall_ms = total_ms;
          records.push_back(std::move(fin));
        }
      }
    }
  }

  if (!spec.out_path.empty()) write_csv_file(spec.out_path, records);
  return records;
}

ScalingResult run_scaling_benchmark(const std::vector<std::size_t>& n_list,
                                    const std::vector<std::size_t>& m_list, std::size_t repeats,
                                    std::uint64_t seed) {
  if (n_list.empty() || m_list.empty() || repeats < 1)
    throw std::invalid_argument("run_scaling_benchmark: empty size lists");

  kernels::Exec ex;
  ScalingResult out;
  std::vector<std::pair<double, double>> sc_pts, ic_pts;

  for (std::size_t m : m_list) {
    for (std::size_t n : n_list) {
      Rng rng(mix_seed(seed, {n, m}));
      CMat a(m, n);
      for (std::size_t j = 0; j < n; ++j) {
        cplx* cj = a.col(j);
        for (std::size_t i = 0; i < m; ++i) cj[i] = rng.cgaussian(1.0);
        double nn = std::sqrt(kernels::serial::sqnorm(cj, m));
        for (std::size_t i = 0; i < m; ++i) cj[i] /= nn;
      }
      ObservationModel model = model_from_matrix(std::move(a), ex);

      std::size_t k = std::min<std::size_t>(8, std::max<std::size_t>(1, n / 16));
      CVec x(n, cplx(0, 0));
      SupportEstimate support;
      for (std::size_t i = 0; i < k; ++i) {
        std::size_t q = (i * n) / k;
        support.indices.push_back(q);
        x[q] = rng.cgaussian(1.0);
      }
      model.y = observe(model, x, 1e4, rng);

      PriorHyperParams hyper = default_hyperparams(n);
      RVec prior_msg(n, static_cast<double>(k) / static_cast<double>(n));
      VariationalState state = initial_state(model, hyper, prior_msg, ex);
      SupportPolicy policy;

      // warm up: populates the cached spectral-norm estimate and touches
      // every code path once before timing starts
      RoundResult warm = scvbi_round(state, model, hyper, prior_msg, 3, policy, &support, ex);
      out.checksum += std::abs(warm.state.mu[0]);

      std::vector<double> sc_ms, ic_ms;
      for (std::size_t rep = 0; rep < repeats; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        RoundResult rr = scvbi_round(state, model, hyper, prior_msg, 3, policy, &support, ex);
        auto t1 = std::chrono::steady_clock::now();
        sc_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        out.checksum += std::abs(rr.state.mu[n - 1]);
      }
      Moments mom = compute_moments(state);
      QuadraticSurrogate surrogate(model, mom.rho_mean, mom.kappa_mean, ex);
      for (std::size_t rep = 0; rep < repeats; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        CVec mu = exact_icvbi_mean(surrogate, model.y);
        auto t1 = std::chrono::steady_clock::now();
        ic_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        out.checksum += std::abs(mu[n - 1]);
      }

      ScalingRow row;
      row.n = n;
      row.m = m;
      row.scvbi_round_ms = median_of(sc_ms);
      row.icvbi_solve_ms = median_of(ic_ms);
      out.rows.push_back(row);
      sc_pts.emplace_back(static_cast<double>(n), std::max(row.scvbi_round_ms, 1e-6));
      ic_pts.emplace_back(static_cast<double>(n), std::max(row.icvbi_solve_ms, 1e-6));
    }
  }

  out.scvbi_slope = loglog_slope(sc_pts);
  out.icvbi_slope = loglog_slope(ic_pts);
  return out;
}

std::string scaling_csv(const ScalingResult& res) {
  std::ostringstream os;
  os << "n,m,scvbi_round_ms,icvbi_solve_ms\n";
  for (const ScalingRow& row : res.rows)
    os << row.n << ',' << row.m << ',' << fmt_double(row.scvbi_round_ms) << ','
       << fmt_double(row.icvbi_solve_ms) << '\n';
  return os.str();
}

}  // namespace gridcs
