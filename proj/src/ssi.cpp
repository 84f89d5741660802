#include "gridcs/ssi.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridcs/special.hpp"

namespace gridcs {

namespace {

struct Dir {
  double p01, p10;
  double p11() const { return 1.0 - p10; }
  double p00() const { return 1.0 - p01; }
};

/* Forward message: predictive activity of the next site given the cavity
 * distribution (alpha, beta) of the previous one. */
double forward_msg(const Dir& d, double alpha, double beta) {
  double den = alpha + beta;
  if (!(den > 0.0)) return 0.5;
  return clamp_prob((d.p11() * alpha + d.p01 * beta) / den);
}

/* Backward message: normalized likelihood of the current site given the
 * cavity distribution of the next one. */
double backward_msg(const Dir& d, double alpha, double beta) {
  double den = (d.p11() + d.p01) * alpha + (d.p00() + d.p10) * beta;
  if (!(den > 0.0)) return 0.5;
  return clamp_prob((d.p11() * alpha + d.p10 * beta) / den);
}

double mix(double damping, double old_v, double new_v) {
  return damping * old_v + (1.0 - damping) * new_v;
}

/* Activation probability of a site under the ancestral factorization, given
 * the already-assigned sites above and to the left. Mirrors sample_support. */
double site_cond_active(const Markov2DParams& mk, const std::vector<std::uint8_t>& s,
                        std::size_t i1, std::size_t i2) {
  auto step = [](double p01, double p10, int prev) { return prev ? 1.0 - p10 : p01; };
  std::size_t q = i2 * mk.n1 + i1;
  if (i1 == 0 && i2 == 0) return mk.lambda;
  if (i2 == 0) return step(mk.p01_row, mk.p10_row, s[q - 1]);
  if (i1 == 0) return step(mk.p01_col, mk.p10_col, s[q - mk.n1]);
  double t1 = step(mk.p01_row, mk.p10_row, s[q - 1]) * step(mk.p01_col, mk.p10_col, s[q - mk.n1]);
  double t0 = (1.0 - step(mk.p01_row, mk.p10_row, s[q - 1])) *
              (1.0 - step(mk.p01_col, mk.p10_col, s[q - mk.n1]));
  return t1 / (t1 + t0);
}

}  // namespace

BernoulliMessage ssi_iid(const SupportPrior& prior) {
  if (prior.kind != SupportPrior::Kind::IID)
    throw std::invalid_argument("ssi_iid: prior is not independent");
  return prior.lambda;
}

BernoulliMessage ssi_markov2d(const BernoulliMessage& input_msg, const SupportPrior& prior,
                              std::size_t sweeps, double damping, MessageGrid* grid_out) {
  if (prior.kind != SupportPrior::Kind::Markov2D)
    throw std::invalid_argument("ssi_markov2d: prior is not a Markov field");
  const Markov2DParams& mk = prior.markov;
  std::size_t n1 = mk.n1, n2 = mk.n2, n = n1 * n2;
  if (input_msg.size() != n) throw std::invalid_argument("ssi_markov2d: message size mismatch");
  if (sweeps < 1) throw std::invalid_argument("ssi_markov2d: sweeps must be >= 1");
  if (!(damping >= 0.0) || !(damping < 1.0))
    throw std::invalid_argument("ssi_markov2d: damping outside [0,1)");

  Dir row{mk.p01_row, mk.p10_row};
  Dir col{mk.p01_col, mk.p10_col};

  RVec pin(n);
  for (std::size_t q = 0; q < n; ++q) pin[q] = clamp_prob(input_msg[q]);
  auto unary = [&](std::size_t q) { return q == 0 ? mk.lambda : 0.5; };

  MessageGrid g;
  g.n1 = n1;
  g.n2 = n2;
  g.gamma_l.assign(n, g.boundary);
  g.gamma_r.assign(n, g.boundary);
  g.gamma_t.assign(n, g.boundary);
  g.gamma_b.assign(n, g.boundary);

  /* Cavity mass of site q seen from direction `skip`: the input likelihood,
   * the unary, and the three messages other than the one being replied to. */
  auto cavity = [&](std::size_t q, char skip, double& alpha, double& beta) {
    double a = unary(q) * pin[q];
    double b = (1.0 - unary(q)) * (1.0 - pin[q]);
    if (skip != 'l') { a *= g.gamma_l[q]; b *= 1.0 - g.gamma_l[q]; }
    if (skip != 'r') { a *= g.gamma_r[q]; b *= 1.0 - g.gamma_r[q]; }
    if (skip != 't') { a *= g.gamma_t[q]; b *= 1.0 - g.gamma_t[q]; }
    if (skip != 'b') { a *= g.gamma_b[q]; b *= 1.0 - g.gamma_b[q]; }
    alpha = a;
    beta = b;
  };

  for (std::size_t round = 0; round < sweeps; ++round) {
    double theta = round == 0 ? 0.0 : damping;
    double alpha, beta;
    for (std::size_t i2 = 0; i2 < n2; ++i2) {        // left to right
      for (std::size_t i1 = 1; i1 < n1; ++i1) {
        std::size_t q = i2 * n1 + i1;
        cavity(q - 1, 'r', alpha, beta);
        g.gamma_l[q] = mix(theta, g.gamma_l[q], forward_msg(row, alpha, beta));
      }
    }
    for (std::size_t i2 = 0; i2 < n2; ++i2) {        // right to left
      for (std::size_t i1 = n1 - 1; i1-- > 0;) {
        std::size_t q = i2 * n1 + i1;
        cavity(q + 1, 'l', alpha, beta);
        g.gamma_r[q] = mix(theta, g.gamma_r[q], backward_msg(row, alpha, beta));
      }
    }
    for (std::size_t i2 = 1; i2 < n2; ++i2) {        // top to bottom
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        std::size_t q = i2 * n1 + i1;
        cavity(q - n1, 'b', alpha, beta);
        g.gamma_t[q] = mix(theta, g.gamma_t[q], forward_msg(col, alpha, beta));
      }
    }
    for (std::size_t i2 = n2 - 1; i2-- > 0;) {       // bottom to top
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        std::size_t q = i2 * n1 + i1;
        cavity(q + n1, 't', alpha, beta);
        g.gamma_b[q] = mix(theta, g.gamma_b[q], backward_msg(col, alpha, beta));
      }
    }
  }

  BernoulliMessage out(n);
  for (std::size_t q = 0; q < n; ++q) {
    double a = unary(q) * g.gamma_l[q] * g.gamma_r[q] * g.gamma_t[q] * g.gamma_b[q];
    double b = (1.0 - unary(q)) * (1.0 - g.gamma_l[q]) * (1.0 - g.gamma_r[q]) *
               (1.0 - g.gamma_t[q]) * (1.0 - g.gamma_b[q]);
    out[q] = a + b > 0.0 ? a / (a + b) : 0.5;
  }
  if (grid_out) *grid_out = std::move(g);
  return out;
}

BernoulliMessage brute_force_marginals(const BernoulliMessage& input_msg,
                                       const SupportPrior& prior) {
  std::size_t n = prior.size();
  if (input_msg.size() != n)
    throw std::invalid_argument("brute_force_marginals: message size mismatch");
  if (prior.kind == SupportPrior::Kind::IID) return prior.lambda;
  if (n > 20) throw std::invalid_argument("brute_force_marginals: grid too large");
  const Markov2DParams& mk = prior.markov;

  RVec sum1(n, 0.0), sum0(n, 0.0);
  std::vector<std::uint8_t> s(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t q = 0; q < n; ++q) s[q] = (mask >> q) & 1u;
    double joint = 1.0;
    for (std::size_t i2 = 0; i2 < mk.n2; ++i2) {
      for (std::size_t i1 = 0; i1 < mk.n1; ++i1) {
        double p1 = site_cond_active(mk, s, i1, i2);
        joint *= s[i2 * mk.n1 + i1] ? p1 : 1.0 - p1;
      }
    }
    double like_prod = 1.0;
    std::size_t zeros = 0;
    std::size_t zero_at = 0;
    for (std::size_t q = 0; q < n; ++q) {
      double lk = s[q] ? input_msg[q] : 1.0 - input_msg[q];
      if (lk == 0.0) {
        ++zeros;
        zero_at = q;
      } else {
        like_prod *= lk;
      }
    }
    for (std::size_t q = 0; q < n; ++q) {
      double excl;  // product of all likelihoods except site q's own
      if (zeros == 0) {
        double lk = s[q] ? input_msg[q] : 1.0 - input_msg[q];
        excl = like_prod / lk;
      } else if (zeros == 1 && zero_at == q) {
        excl = like_prod;
      } else {
        excl = 0.0;
      }
      (s[q] ? sum1[q] : sum0[q]) += joint * excl;
    }
  }

  BernoulliMessage out(n);
  for (std::size_t q = 0; q < n; ++q) {
    double den = sum1[q] + sum0[q];
    out[q] = den > 0.0 ? sum1[q] / den : 0.5;
  }
  return out;
}

BernoulliMessage ssi_extrinsic(const BernoulliMessage& input_msg, const SupportPrior& prior,
                               std::size_t sweeps, double damping) {
  if (prior.kind == SupportPrior::Kind::IID) return ssi_iid(prior);
  return ssi_markov2d(input_msg, prior, sweeps, damping);
}

}  // namespace gridcs
