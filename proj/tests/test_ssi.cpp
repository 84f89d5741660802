#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gridcs/prior.hpp"
#include "gridcs/rng.hpp"
#include "gridcs/ssi.hpp"

using namespace gridcs;

namespace {

double max_abs_diff(const RVec& a, const RVec& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

RVec random_input(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  RVec in(n);
  for (auto& v : in) v = 0.01 + 0.98 * rng.uniform();
  return in;
}

}  // namespace

TEST_CASE("iid extrinsic is the prior activity regardless of the input") {
  SupportPrior p = iid_support(4, 0.3);
  RVec in = {0.999, 0.001, 0.5, 0.2};
  RVec out = ssi_iid(p);
  for (double v : out) CHECK(v == 0.3);

  SupportPrior pv = iid_support(RVec{0.1, 0.9, 0.5});
  RVec outv = ssi_iid(pv);
  CHECK(outv[0] == 0.1);
  CHECK(outv[1] == 0.9);
  CHECK(outv[2] == 0.5);
}

TEST_CASE("single-site field returns the stationary activity") {
  SupportPrior p = markov2d_support(1.0 / 36.0, 0.25, 1.0 / 36.0, 0.25, 1, 1);
  CHECK(p.markov.lambda == doctest::Approx(0.1).epsilon(1e-12));
  RVec out = ssi_markov2d({0.7}, p, 1, 0.5);
  CHECK(out[0] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("memoryless chain decouples the sites") {
  // p01 = p10 = 0.5 makes every transition independent Bernoulli(0.5)
  SupportPrior p = markov2d_support(0.5, 0.5, 0.5, 0.5, 3, 1);
  RVec out = ssi_markov2d({0.9, 0.1, 0.6}, p, 2, 0.5);
  for (double v : out) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("chain extrinsic matches enumeration on a pinned instance") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 4, 1);
  CHECK(p.markov.p10_row == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.markov.p01_row == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  RVec in = {0.9, 0.5, 0.5, 0.5};
  RVec brute = brute_force_marginals(in, p);
  RVec fast = ssi_markov2d(in, p, 1, 0.5);
  CHECK(max_abs_diff(fast, brute) < 1e-10);
}

TEST_CASE("one round is exact on chains of every length and orientation") {
  for (std::size_t k = 1; k <= 10; ++k) {
    SupportPrior row = markov2d_from_sparsity(0.1, 4, k, 1);
    SupportPrior col = markov2d_from_sparsity(0.2, 2, 1, k);
    for (std::uint64_t s = 0; s < 5; ++s) {
      RVec in = random_input(k, 977 * k + s);
      CHECK(max_abs_diff(ssi_markov2d(in, row, 1, 0.5), brute_force_marginals(in, row)) < 1e-10);
      CHECK(max_abs_diff(ssi_markov2d(in, col, 1, 0.5), brute_force_marginals(in, col)) < 1e-10);
      // extra sweeps leave the exact fixed point alone
      CHECK(max_abs_diff(ssi_markov2d(in, row, 4, 0.5), brute_force_marginals(in, row)) < 1e-10);
    }
  }
}

TEST_CASE("uninformative input returns the stationary activity on chains") {
  SupportPrior p = markov2d_from_sparsity(0.15, 3, 7, 1);
  RVec in(7, 0.5);
  RVec out = ssi_markov2d(in, p, 1, 0.5);
  for (double v : out) CHECK(v == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("2x2 enumeration reproduces the frozen goldens") {
  // frozen from the exact-rational enumeration of the ancestral joint
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 2, 2);
  RVec in = {0.9, 0.2, 0.5, 0.7};
  RVec out = brute_force_marginals(in, p);
  CHECK(out[0] == doctest::Approx(0.066512278944490466).epsilon(1e-13));
  CHECK(out[1] == doctest::Approx(0.54231635172435821).epsilon(1e-13));
  CHECK(out[2] == doctest::Approx(0.33863516492376039).epsilon(1e-13));
  CHECK(out[3] == doctest::Approx(0.10498336785464502).epsilon(1e-13));
}

TEST_CASE("3x3 enumeration reproduces the frozen goldens") {
  SupportPrior p = markov2d_from_sparsity(0.2, 3, 3, 3);
  RVec in = {0.9, 0.1, 0.5, 0.3, 0.8, 0.5, 0.5, 0.6, 0.2};
  RVec out = brute_force_marginals(in, p);
  const double want[9] = {0.089079404323320024, 0.59067689720313266, 0.15368798166488512,
                          0.50638875052238552, 0.065218300058501641, 0.081291249834896384,
                          0.26748844485467954, 0.10592963989244339, 0.08578609096633652};
  for (int i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("loopy sweeps settle and land near the enumeration") {
  // loopy BP on tiny strongly coupled loops carries a real bias, so the
  // accuracy check runs at weak coupling (second eigenvalue 1-p01-p10 = 0.1)
  SupportPrior p2 = markov2d_support(0.09, 0.81, 0.09, 0.81, 2, 2);
  RVec in2 = {0.9, 0.2, 0.5, 0.7};
  SupportPrior p3 = markov2d_support(0.09, 0.81, 0.09, 0.81, 3, 3);
  RVec in3 = {0.9, 0.1, 0.5, 0.3, 0.8, 0.5, 0.5, 0.6, 0.2};

  for (int c = 0; c < 2; ++c) {
    const SupportPrior& p = c == 0 ? p2 : p3;
    const RVec& in = c == 0 ? in2 : in3;
    MessageGrid g120, g121;
    RVec out120 = ssi_markov2d(in, p, 120, 0.5, &g120);
    RVec out121 = ssi_markov2d(in, p, 121, 0.5, &g121);
    CHECK(max_abs_diff(out120, out121) < 1e-8);
    CHECK(max_abs_diff(g120.gamma_l, g121.gamma_l) < 1e-8);
    CHECK(max_abs_diff(g120.gamma_r, g121.gamma_r) < 1e-8);
    CHECK(max_abs_diff(g120.gamma_t, g121.gamma_t) < 1e-8);
    CHECK(max_abs_diff(g120.gamma_b, g121.gamma_b) < 1e-8);
    // loopy approximation quality is reported loosely, not pinned
    RVec brute = brute_force_marginals(in, p);
    CHECK(max_abs_diff(out120, brute) < 0.05);
  }
}

TEST_CASE("asymmetric row and column couplings are honored") {
  // same stationary activity 0.15, weaker coupling along rows than columns
  const double lam = 0.15, cr = 0.95, cc = 0.80;
  SupportPrior p =
      markov2d_support(cr * lam, cr * (1 - lam), cc * lam, cc * (1 - lam), 3, 2);
  CHECK(p.markov.lambda == doctest::Approx(lam).epsilon(1e-12));
  RVec in = random_input(6, 1234);
  RVec out = ssi_markov2d(in, p, 120, 0.5);
  RVec brute = brute_force_marginals(in, p);
  CHECK(max_abs_diff(out, brute) < 0.05);

  // transposing the couplings changes the answer on an anisotropic field
  SupportPrior pt =
      markov2d_support(cc * lam, cc * (1 - lam), cr * lam, cr * (1 - lam), 3, 2);
  RVec outt = ssi_markov2d(in, pt, 120, 0.5);
  CHECK(max_abs_diff(out, outt) > 1e-4);
}

TEST_CASE("boundary messages keep the uninformative value") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 5, 1);
  RVec in = random_input(5, 55);
  MessageGrid g;
  ssi_markov2d(in, p, 2, 0.5, &g);
  REQUIRE(g.gamma_l.size() == 5);
  CHECK(g.gamma_l[0] == 0.5);
  CHECK(g.gamma_r[4] == 0.5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(g.gamma_t[i] == 0.5);
    CHECK(g.gamma_b[i] == 0.5);
  }
}

TEST_CASE("messages and outputs stay inside the unit interval under extreme input") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 4, 4);
  RVec in(16);
  for (std::size_t i = 0; i < 16; ++i) in[i] = (i % 2 == 0) ? 1e-9 : 1.0 - 1e-9;
  MessageGrid g;
  RVec out = ssi_markov2d(in, p, 30, 0.5, &g);
  for (double v : out) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (const RVec* m : {&g.gamma_l, &g.gamma_r, &g.gamma_t, &g.gamma_b})
    for (double v : *m) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("a confident neighbor pulls the extrinsic up under attractive coupling") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 3, 1);
  RVec hi = {0.9, 0.5, 0.5};
  RVec lo = {0.1, 0.5, 0.5};
  RVec bh = brute_force_marginals(hi, p);
  RVec bl = brute_force_marginals(lo, p);
  CHECK(bh[1] > bl[1]);
  CHECK(bh[2] > bl[2]);
  RVec fh = ssi_markov2d(hi, p, 1, 0.5);
  RVec fl = ssi_markov2d(lo, p, 1, 0.5);
  CHECK(fh[1] > fl[1]);
  CHECK(fh[2] > fl[2]);
}

TEST_CASE("enumeration refuses oversized fields") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 5, 5);
  RVec in(25, 0.5);
  CHECK_THROWS(brute_force_marginals(in, p));
}

TEST_CASE("input size mismatches are rejected") {
  SupportPrior p = markov2d_from_sparsity(0.1, 4, 3, 2);
  RVec in(5, 0.5);
  CHECK_THROWS(ssi_markov2d(in, p, 1, 0.5));
  CHECK_THROWS(brute_force_marginals(in, p));
}

TEST_CASE("dispatch selects the matching prior family") {
  RVec in = random_input(6, 77);
  SupportPrior iid = iid_support(6, 0.2);
  CHECK(ssi_extrinsic(in, iid, 3, 0.5) == ssi_iid(iid));
  SupportPrior mk = markov2d_from_sparsity(0.2, 2, 3, 2);
  CHECK(ssi_extrinsic(in, mk, 3, 0.5) == ssi_markov2d(in, mk, 3, 0.5));
}
