#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gridcs/prior.hpp"
#include "gridcs/rng.hpp"

using namespace gridcs;

TEST_CASE("default hyperparameters meet the stated ratio regime") {
  PriorHyperParams h = default_hyperparams(4);
  REQUIRE(h.a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(h.a[i] == 1.0);
    CHECK(h.b[i] == 1.0);
    CHECK(h.a[i] / h.b[i] == 1.0);
    CHECK(h.a_bar[i] == 1.0);
    CHECK(h.b_bar[i] == 1e-5);
    CHECK(h.a_bar[i] / h.b_bar[i] >= 1e3);
  }
  CHECK(h.c == 1e-6);
  CHECK(h.d == 1e-6);
  // prior mean of kappa is c/d = 1 with huge variance c/d^2
  CHECK(h.c / h.d == 1.0);
  validate_hyperparams(h, 4);
}

TEST_CASE("validate_hyperparams rejects broken parameter sets") {
  PriorHyperParams h = default_hyperparams(3);
  h.b[1] = 0.0;
  CHECK_THROWS(validate_hyperparams(h, 3));
  h = default_hyperparams(3);
  h.d = -1.0;
  CHECK_THROWS(validate_hyperparams(h, 3));
  h = default_hyperparams(3);
  CHECK_THROWS(validate_hyperparams(h, 5));
}

TEST_CASE("markov2d_from_sparsity reproduces the stated transitions") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 4, 4);
  REQUIRE(p.kind == SupportPrior::Kind::Markov2D);
  CHECK(p.markov.p10_row == 0.25);
  CHECK(p.markov.p10_col == 0.25);
  // p01 = p10 * lambda / (1 - lambda) = 1/36
  CHECK(p.markov.p01_row == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  CHECK(p.markov.p01_col == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  CHECK(p.markov.lambda == doctest::Approx(0.1).epsilon(1e-15));
  validate_support(p, 16);

  SupportPrior sym = markov2d_from_sparsity(0.5, 2, 3, 3);
  CHECK(sym.markov.p10_row == 0.5);
  CHECK(sym.markov.p01_row == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("markov transitions hold the steady state fixed") {
  for (auto [lam, run] : {std::pair{0.1, 4ul}, {0.3, 2ul}, {0.5, 3ul}}) {
    SupportPrior p = markov2d_from_sparsity(lam, run, 4, 4);
    const double p01 = p.markov.p01_row, p10 = p.markov.p10_row;
    // stationarity: p01 / (p01 + p10) = lambda
    CHECK(p01 / (p01 + p10) == doctest::Approx(lam).epsilon(1e-12));
    // one transition step applied to (1-lambda, lambda) returns it
    const double active_next = (1.0 - lam) * p01 + lam * (1.0 - p10);
    CHECK(active_next == doctest::Approx(lam).epsilon(1e-12));
  }
}

TEST_CASE("markov2d_from_sparsity rejects impossible combinations") {
  // p01 = (1/1) * 0.99/0.01 = 99: not a probability
  CHECK_THROWS(markov2d_from_sparsity(0.99, 1, 2, 2));
  CHECK_THROWS(markov2d_from_sparsity(0.0, 2, 2, 2));
  CHECK_THROWS(markov2d_from_sparsity(1.0, 2, 2, 2));
  CHECK_THROWS(markov2d_from_sparsity(0.5, 0, 2, 2));
}

TEST_CASE("prior_activity broadcasts the stationary rate") {
  SupportPrior iid = iid_support(3, 0.3);
  RVec act = prior_activity(iid);
  REQUIRE(act.size() == 3);
  for (double v : act) CHECK(v == 0.3);

  SupportPrior m = markov2d_from_sparsity(0.2, 2, 3, 2);
  RVec actm = prior_activity(m);
  REQUIRE(actm.size() == 6);
  for (double v : actm) CHECK(v == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("degenerate iid supports sample deterministically") {
  Rng rng(5);
  SupportPrior zero = iid_support(8, 0.0);
  SupportPrior one = iid_support(8, 1.0);
  for (int t = 0; t < 20; ++t) {
    auto s0 = sample_support(zero, rng);
    auto s1 = sample_support(one, rng);
    for (auto v : s0) CHECK(v == 0);
    for (auto v : s1) CHECK(v == 1);
  }
}

TEST_CASE("markov sampler matches the stationary activity at the origin") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 2, 2);
  Rng rng(11);
  const int draws = 100000;
  int active = 0;
  for (int t = 0; t < draws; ++t) active += sample_support(p, rng)[0];
  CHECK(double(active) / draws == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("markov sampler is chain-exact along first row and column") {
  // on a chain every site is marginally lambda; 3 sigma Monte-Carlo window
  SupportPrior chain = markov2d_from_sparsity(0.2, 3, 5, 1);
  Rng rng(13);
  const int draws = 60000;
  RVec freq(5, 0.0);
  for (int t = 0; t < draws; ++t) {
    auto s = sample_support(chain, rng);
    for (std::size_t i = 0; i < 5; ++i) freq[i] += s[i];
  }
  const double sigma = std::sqrt(0.2 * 0.8 / draws);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(std::abs(freq[i] / draws - 0.2) < 3.0 * sigma);

  // first row and first column of a 2D field follow the directional chains
  SupportPrior grid = markov2d_from_sparsity(0.1, 4, 3, 3);
  Rng rng2(17);
  double f01 = 0.0, f10 = 0.0;
  for (int t = 0; t < draws; ++t) {
    auto s = sample_support(grid, rng2);
    f01 += s[1];  // (i1=1, i2=0)
    f10 += s[3];  // (i1=0, i2=1)
  }
  const double sig = std::sqrt(0.1 * 0.9 / draws);
  CHECK(std::abs(f01 / draws - 0.1) < 3.0 * sig);
  CHECK(std::abs(f10 / draws - 0.1) < 3.0 * sig);
}

TEST_CASE("symmetric markov fields stay symmetric everywhere") {
  SupportPrior p = markov2d_from_sparsity(0.5, 2, 3, 3);
  Rng rng(19);
  const int draws = 60000;
  RVec freq(9, 0.0);
  for (int t = 0; t < draws; ++t) {
    auto s = sample_support(p, rng);
    for (std::size_t i = 0; i < 9; ++i) freq[i] += s[i];
  }
  const double sigma = std::sqrt(0.25 / draws);
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(std::abs(freq[i] / draws - 0.5) < 3.0 * sigma);
}

TEST_CASE("interior ancestral marginal deviates from lambda as constructed") {
  // the row-major ancestral law is not the stationary field at interior
  // sites; the exact 2x2 interior marginal is 307903/5241150 = 0.0587472...
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 2, 2);
  Rng rng(23);
  const int draws = 200000;
  double f = 0.0;
  for (int t = 0; t < draws; ++t) f += sample_support(p, rng)[3];
  const double want = 307903.0 / 5241150.0;
  const double sigma = std::sqrt(want * (1.0 - want) / draws);
  CHECK(std::abs(f / draws - want) < 3.0 * sigma);
}

TEST_CASE("sample_prior draws consistent three-layer samples") {
  PriorHyperParams h = default_hyperparams(64);
  SupportPrior inactive = iid_support(64, 0.0);
  Rng rng(29);
  double acc = 0.0;
  const int draws = 3000;
  for (int t = 0; t < draws; ++t) {
    PriorSample s = sample_prior(h, inactive, rng);
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(s.s[i] == 0);
      CHECK(s.rho[i] > 0.0);
      acc += std::norm(s.x[i]);
    }
  }
  // inactive coefficients have E|x|^2 = E[1/rho] under Gamma(1, 1e-5);
  // that mean does not exist for shape 1, so only check smallness in bulk
  CHECK(acc / (64.0 * draws) < 1e-2);

  SupportPrior active = iid_support(4, 1.0);
  PriorHyperParams h4 = default_hyperparams(4);
  double e2 = 0.0;
  const int draws2 = 200000;
  for (int t = 0; t < draws2; ++t) {
    PriorSample s = sample_prior(h4, active, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(s.s[i] == 1);
      e2 += std::norm(s.x[i]);
    }
  }
  // E|x|^2 = E[1/rho] diverges logarithmically for shape 1; sanity only
  CHECK(e2 / (4.0 * draws2) > 0.5);
}
