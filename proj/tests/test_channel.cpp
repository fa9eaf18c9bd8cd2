#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/rng.hpp"

using namespace deniakit;
using Catch::Matchers::WithinAbs;

namespace {

BroadcastChannel random_channel(CounterRng& rng, int nx, int ny, int nz) {
  std::vector<double> law(static_cast<std::size_t>(nx) * ny * nz);
  for (int x = 0; x < nx; ++x) {
    double s = 0.0;
    for (int i = 0; i < ny * nz; ++i) {
      law[static_cast<std::size_t>(x) * ny * nz + i] = rng.next_double() + 1e-3;
      s += law[static_cast<std::size_t>(x) * ny * nz + i];
    }
    for (int i = 0; i < ny * nz; ++i) law[static_cast<std::size_t>(x) * ny * nz + i] /= s;
  }
  return BroadcastChannel(nx, ny, nz, std::move(law));
}

}  // namespace

TEST_CASE("channel validation") {
  CHECK(channels::bec_eavesdropper(0.3).diagnose().ok);
  CHECK(channels::ternary_example().diagnose().ok);

  // scaling one row by 1.01 must be rejected with the right residual
  auto law = channels::ternary_example().raw_law();
  for (int i = 0; i < 9; ++i) law[i] *= 1.01;
  CHECK_THROWS_AS(BroadcastChannel(3, 3, 3, law), std::domain_error);
  try {
    BroadcastChannel bad(3, 3, 3, law);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("0.01") != std::string::npos);
  }

  CHECK_THROWS_AS(BroadcastChannel(2, 2, 2, std::vector<double>(7, 0.1)), std::invalid_argument);
}

TEST_CASE("marginals") {
  SECTION("erasure eavesdropper") {
    auto ch = channels::bec_eavesdropper(0.3);
    Dmc judy = ch.marginal(Receiver::Judy);
    CHECK_THAT(judy.at(0, 0), WithinAbs(0.7, 1e-15));
    CHECK_THAT(judy.at(0, 1), WithinAbs(0.3, 1e-15));
    CHECK_THAT(judy.at(0, 2), WithinAbs(0.0, 1e-15));
    CHECK_THAT(judy.at(1, 0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(judy.at(1, 1), WithinAbs(0.3, 1e-15));
    CHECK_THAT(judy.at(1, 2), WithinAbs(0.7, 1e-15));
    Dmc bob = ch.marginal(Receiver::Bob);
    CHECK_THAT(bob.at(0, 0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(bob.at(1, 1), WithinAbs(1.0, 1e-15));
  }
  SECTION("ternary example judy rows") {
    Dmc judy = channels::ternary_example().marginal(Receiver::Judy);
    const std::vector<double> expected = {0.3, 0.7, 0, 0.3, 0.7, 0, 0, 0.4, 0.6};
    for (int i = 0; i < 9; ++i) CHECK_THAT(judy.rows[i], WithinAbs(expected[i], 1e-15));
  }
  SECTION("rows sum to one for random channels") {
    CounterRng rng(21, "marginal-rows");
    for (int rep = 0; rep < 50; ++rep) {
      auto ch = random_channel(rng, 2 + rng.next_below(2), 2 + rng.next_below(2), 2 + rng.next_below(2));
      for (auto which : {Receiver::Bob, Receiver::Judy}) {
        Dmc m = ch.marginal(which);
        for (int i = 0; i < m.in_size; ++i) {
          double s = 0.0;
          for (int o = 0; o < m.out_size; ++o) s += m.at(i, o);
          REQUIRE_THAT(s, WithinAbs(1.0, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("physical degradedness") {
  SECTION("erasure eavesdropper is degraded with an erasure witness") {
    auto res = is_physically_degraded(channels::bec_eavesdropper(0.3));
    REQUIRE(res.degraded);
    REQUIRE(res.witness.has_value());
    const Dmc& w = *res.witness;
    CHECK_THAT(w.at(0, 0), WithinAbs(0.7, 1e-5));
    CHECK_THAT(w.at(0, 1), WithinAbs(0.3, 1e-5));
    CHECK_THAT(w.at(1, 1), WithinAbs(0.3, 1e-5));
    CHECK_THAT(w.at(1, 2), WithinAbs(0.7, 1e-5));
  }
  SECTION("identical outputs give an identity witness") {
    std::vector<double> law(2 * 2 * 2, 0.0);
    law[(0 * 2 + 0) * 2 + 0] = 0.8;
    law[(0 * 2 + 1) * 2 + 1] = 0.2;
    law[(1 * 2 + 1) * 2 + 1] = 0.9;
    law[(1 * 2 + 0) * 2 + 0] = 0.1;
    auto res = is_physically_degraded(BroadcastChannel(2, 2, 2, law));
    REQUIRE(res.degraded);
    CHECK_THAT(res.witness->at(0, 0), WithinAbs(1.0, 1e-5));
    CHECK_THAT(res.witness->at(1, 1), WithinAbs(1.0, 1e-5));
  }
  SECTION("swapped channel is not degraded") {
    // Bob gets the erasure, Judy is noiseless: no P(z|y) can reproduce identity.
    std::vector<double> law(2 * 3 * 2, 0.0);
    auto set = [&](int x, int y, int z, double v) { law[(static_cast<std::size_t>(x) * 3 + y) * 2 + z] = v; };
    const double p = 0.3;
    set(0, 0, 0, 1 - p);
    set(0, 1, 0, p);
    set(1, 2, 1, 1 - p);
    set(1, 1, 1, p);
    BroadcastChannel swapped(2, 3, 2, law);
    auto res = is_physically_degraded(swapped);
    CHECK_FALSE(res.degraded);
    CHECK(res.residual > 0.05);

    // brute-force oracle: grid over 3x2 stochastic maps at step 0.01
    const Dmc by = swapped.marginal(Receiver::Bob);
    const Dmc jz = swapped.marginal(Receiver::Judy);
    double best = 1.0;
    for (int a = 0; a <= 100; ++a)
      for (int b = 0; b <= 100; ++b)
        for (int c = 0; c <= 100; ++c) {
          const double w[3] = {a / 100.0, b / 100.0, c / 100.0};
          double resid = 0.0;
          for (int x = 0; x < 2; ++x)
            for (int z = 0; z < 2; ++z) {
              double acc = 0.0;
              for (int y = 0; y < 3; ++y) acc += by.at(x, y) * (z == 0 ? w[y] : 1.0 - w[y]);
              resid = std::max(resid, std::abs(acc - jz.at(x, z)));
            }
          best = std::min(best, resid);
        }
    CHECK(best >= 0.1);
    CHECK_THAT(res.residual, WithinAbs(best, 1e-2));
  }
  SECTION("witness composition reproduces the judy marginal") {
    CounterRng rng(77, "degr-random");
    for (int rep = 0; rep < 10; ++rep) {
      // build exactly degraded channels: random P(y|x) composed with random P(z|y)
      const int nx = 2, ny = 3, nz = 2;
      std::vector<double> law(nx * ny * nz, 0.0);
      std::vector<double> pyx(nx * ny), pzy(ny * nz);
      for (int x = 0; x < nx; ++x) {
        double s = 0;
        for (int y = 0; y < ny; ++y) s += (pyx[x * ny + y] = rng.next_double() + 0.05);
        for (int y = 0; y < ny; ++y) pyx[x * ny + y] /= s;
      }
      for (int y = 0; y < ny; ++y) {
        double s = 0;
        for (int z = 0; z < nz; ++z) s += (pzy[y * nz + z] = rng.next_double() + 0.05);
        for (int z = 0; z < nz; ++z) pzy[y * nz + z] /= s;
      }
      for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
          for (int z = 0; z < nz; ++z)
            law[(static_cast<std::size_t>(x) * ny + y) * nz + z] = pyx[x * ny + y] * pzy[y * nz + z];
      BroadcastChannel ch(nx, ny, nz, law);
      auto res = is_physically_degraded(ch, 1e-7);
      REQUIRE(res.degraded);
      const Dmc composed = ch.marginal(Receiver::Bob).compose(*res.witness);
      const Dmc judy = ch.marginal(Receiver::Judy);
      for (std::size_t i = 0; i < judy.rows.size(); ++i)
        REQUIRE_THAT(composed.rows[i], WithinAbs(judy.rows[i], 1e-6));
    }
  }
}

TEST_CASE("sequence likelihood") {
  Dmc bec(2, 3, {0.7, 0.3, 0.0, 0.0, 0.3, 0.7});
  CHECK(sequence_likelihood(bec, {}, {}) == 1.0);
  CHECK_THAT(sequence_likelihood(bec, {0, 1}, {1, 2}), WithinAbs(0.3 * 0.7, 1e-15));

  Dmc ident(2, 2, {1, 0, 0, 1});
  CHECK(sequence_likelihood(ident, {0, 1, 1}, {0, 1, 1}) == 1.0);
  CHECK_THROWS_AS(sequence_likelihood(bec, {0, 5}, {0, 0}), std::invalid_argument);

  SECTION("likelihoods over all outputs sum to one") {
    CounterRng rng(31, "seq-sum");
    Dmc d(2, 3, {0.2, 0.5, 0.3, 0.6, 0.1, 0.3});
    for (int n : {1, 4, 8}) {
      std::vector<int> x(n);
      for (auto& v : x) v = static_cast<int>(rng.next_below(2));
      std::vector<int> out(n, 0);
      double total = 0.0;
      while (true) {
        total += sequence_likelihood(d, x, out);
        int i = n - 1;
        while (i >= 0 && ++out[i] == 3) out[i--] = 0;
        if (i < 0) break;
      }
      REQUIRE_THAT(total, WithinAbs(1.0, 1e-9));
    }
  }
}

TEST_CASE("strong typicality") {
  Pmf half = Pmf::uniform(2);
  CHECK(is_strongly_typical({0, 1, 0, 1}, half, 0.1));
  CHECK_FALSE(is_strongly_typical({0, 0, 0, 0}, half, 0.1));
  Pmf skew({0.3, 0.7});
  CHECK(is_strongly_typical({0, 0, 0, 1, 1, 1, 1, 1, 1, 1}, skew, 1e-9));
  CHECK_THROWS_AS(is_strongly_typical({}, half, 0.1), std::invalid_argument);
}
