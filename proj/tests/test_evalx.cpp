#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/codec.hpp"
#include "deniakit/evalx.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/rng.hpp"
#include "deniakit/zeroinfo.hpp"

using namespace deniakit;
using Catch::Matchers::WithinAbs;

namespace {

// Bob behind an erasure channel, Judy sees a copy of Bob's output.
BroadcastChannel bec_bob(double p) {
  // x in {0,1}; y,z in {0, erasure, 1}
  std::vector<double> law(2 * 3 * 3, 0.0);
  auto set = [&](int x, int y, int z, double v) { law[(static_cast<std::size_t>(x) * 3 + y) * 3 + z] = v; };
  set(0, 0, 0, 1 - p);
  set(0, 1, 1, p);
  set(1, 2, 2, 1 - p);
  set(1, 1, 1, p);
  return BroadcastChannel(2, 3, 3, law, {"0", "1"}, {"0", "e", "1"}, {"0", "e", "1"});
}

// Small broadcast channel with every (y,z) pair reachable from every x.
BroadcastChannel full_support_channel() {
  std::vector<double> law = {
      0.30, 0.20, 0.25, 0.25,   // x = 0
      0.10, 0.40, 0.15, 0.35};  // x = 1
  return BroadcastChannel(2, 2, 2, law);
}

Codebook example2_superposition(std::uint64_t seed) {
  auto ch = channels::ternary_example();
  auto part = zero_info_partition(ch.marginal(Receiver::Judy));
  Pmf pu({2.0 / 3, 1.0 / 3});
  Dmc px_u(2, 3, {0.5, 0.5, 0.0, 0.0, 0.0, 1.0});
  return build_superposition_codebook(part, pu, px_u, 3, 1.0, 2.0 / 3, seed);
}

}  // namespace

TEST_CASE("exact joint construction") {
  SECTION("transmitter joint sums to one and satisfies the markov chain") {
    auto ch = channels::ternary_example();
    Codebook cb = example2_superposition(7);
    auto j = exact_joint(Setting::Transmitter, cb, ch);
    CHECK_THAT(j.total_mass(), WithinAbs(1.0, 1e-9));
    CHECK(markov_deviation(j) <= 1e-10);
  }
  SECTION("message setting with no confidential bits keeps the message") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 3);
    FakeConfig cfg;
    cfg.split = Split{0, 2, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    for (const auto& [k, p] : j.probs) REQUIRE(k.w == k.wt);
  }
  SECTION("receiver setting on the erasure channel is forced to the truth") {
    auto ch = channels::bec_eavesdropper(0.3);
    auto degr = is_physically_degraded(ch);
    REQUIRE(degr.degraded);
    FakeConfig cfg;
    cfg.y_partition = zero_info_partition(*degr.witness);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 5);
    auto j = exact_joint(Setting::Receiver, cb, ch, cfg);
    for (const auto& [k, p] : j.probs) REQUIRE(k.w == k.wt);
    CHECK_THAT(j.total_mass(), WithinAbs(1.0, 1e-9));
  }
  SECTION("marginal of (W,Z) matches a direct recomputation") {
    auto ch = channels::ternary_example();
    Codebook cb = example2_superposition(7);
    auto j = exact_joint(Setting::Transmitter, cb, ch);
    const Dmc judy = ch.marginal(Receiver::Judy);
    // direct: Q(x-value, z) from code and channel alone
    std::map<std::pair<std::uint32_t, std::uint64_t>, double> direct, from_joint;
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      auto x = cb.word(m);
      std::uint32_t wid = 0;
      for (; wid < j.values.size(); ++wid)
        if (j.values[wid] == x) break;
      REQUIRE(wid < j.values.size());
      std::vector<int> z(3, 0);
      for (int z0 = 0; z0 < 3; ++z0)
        for (int z1 = 0; z1 < 3; ++z1)
          for (int z2 = 0; z2 < 3; ++z2) {
            z = {z0, z1, z2};
            const double lik = sequence_likelihood(judy, x, z);
            if (lik > 0)
              direct[{wid, static_cast<std::uint64_t>((z0 * 3 + z1) * 3 + z2)}] += lik / 8.0;
          }
    }
    for (const auto& [k, p] : j.probs) from_joint[{static_cast<std::uint32_t>(k.w), k.z}] += p;
    for (const auto& [k, p] : direct) REQUIRE_THAT(from_joint[k], WithinAbs(p, 1e-10));
    REQUIRE(direct.size() == from_joint.size());
  }
}

TEST_CASE("error probability") {
  SECTION("noiseless bob with distinct words is error free") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = make_explicit_codebook(2, 2, {{0, 0}, {1, 1}});
    CHECK(error_probability(cb, ch) == 0.0);
  }
  SECTION("single message never errs") {
    auto ch = channels::bsc_bob(0.3);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 4, 0.0, 1);
    CHECK(error_probability(cb, ch) == 0.0);
  }
  SECTION("matches an independent full-joint oracle") {
    auto ch = bec_bob(0.4);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 4, 0.5, 7);
    const Dmc bob = ch.marginal(Receiver::Bob);
    // oracle: enumerate (m, y), decode by an exhaustive posterior table
    double err = 0.0;
    std::vector<int> y(4, 0);
    for (int rank = 0; rank < 81; ++rank) {
      int t = rank;
      for (int i = 3; i >= 0; --i) {
        y[static_cast<std::size_t>(i)] = t % 3;
        t /= 3;
      }
      std::uint64_t best = 0;
      double best_p = -1.0;
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
        const double post = sequence_likelihood(bob, cb.word(m), y);
        if (post > best_p) {
          best_p = post;
          best = m;
        }
      }
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
        if (m != best) err += sequence_likelihood(bob, cb.word(m), y) / static_cast<double>(cb.num_messages());
    }
    CHECK_THAT(error_probability(cb, ch), WithinAbs(err, 1e-10));
  }
}

TEST_CASE("plausibility divergence") {
  SECTION("clique faking on a superposition code is exactly plausible") {
    auto ch = channels::ternary_example();
    Codebook cb = example2_superposition(7);
    auto j = exact_joint(Setting::Transmitter, cb, ch);
    CHECK(plausibility_kl(j) <= 1e-12);
  }
  SECTION("receiver faking on a degraded channel is exactly plausible") {
    auto ch = channels::ternary_example();
    auto degr = is_physically_degraded(ch);
    REQUIRE(degr.degraded);
    FakeConfig cfg;
    cfg.y_partition = zero_info_partition(*degr.witness);
    Codebook cb = build_iid_codebook(Pmf::uniform(3), 3, 2.0 / 3, 11);
    auto j = exact_joint(Setting::Receiver, cb, ch, cfg);
    CHECK(plausibility_kl(j) <= 1e-12);
  }
  SECTION("uniform faking over the whole codebook is detectable") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = make_explicit_codebook(2, 2, {{0, 0}, {1, 1}});
    FakeConfig cfg;
    cfg.naive_uniform = true;
    auto j = exact_joint(Setting::Transmitter, cb, ch, cfg);
    const double kl = plausibility_kl(j);
    CHECK((is_infinite(kl) || kl > 0.1));
  }
}

TEST_CASE("deniability rate") {
  auto ch = channels::bec_eavesdropper(0.5);
  SECTION("identity faking has rate zero") {
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 3);
    FakeConfig cfg;
    cfg.split = Split{0, 2, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    CHECK_THAT(deniability_rate(j, cb, ch), WithinAbs(0.0, 1e-12));
  }
  SECTION("message faking with k confidential bits delivers k/n") {
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 4, 0.75, 3);
    FakeConfig cfg;
    cfg.split = Split{2, 1, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    CHECK_THAT(deniability_rate(j, cb, ch), WithinAbs(2.0 / 4, 1e-12));
  }
  SECTION("clique faking with distinct satellites delivers the satellite bits") {
    auto tch = channels::ternary_example();
    Codebook cb = make_explicit_codebook(3, 3, {{0, 0, 2}, {0, 1, 2}, {1, 0, 2}, {1, 1, 2},
                                                {2, 0, 0}, {2, 0, 1}, {2, 1, 0}, {2, 1, 1}});
    Layer layer;
    layer.cloud_words = {{0, 0, 1}, {1, 0, 0}};
    layer.cloud_of = {0, 0, 0, 0, 1, 1, 1, 1};
    cb.layer = layer;
    auto j = exact_joint(Setting::Transmitter, cb, tch);
    CHECK_THAT(deniability_rate(j, cb, tch), WithinAbs(2.0 / 3, 1e-12));
  }
}

TEST_CASE("confidential-part identity for message faking") {
  // KL(Q_{Mfake,Z} || Q_{M,Z}) computed by the evaluator must equal
  // KL(Q_S Q_{T,Z} || Q_{S,T,Z}) assembled independently from (S,T,Z).
  auto ch = full_support_channel();
  Codebook cb = build_iid_codebook(Pmf::uniform(2), 3, 2.0 / 3, 17);
  const Split split{1, 1, 0};
  FakeConfig cfg;
  cfg.split = split;
  auto j = exact_joint(Setting::Message, cb, ch, cfg);
  const double lhs = plausibility_kl(j);

  const Dmc judy = ch.marginal(Receiver::Judy);
  std::map<std::array<int, 3>, double> q_stz;  // (s, t, z-rank)
  std::vector<int> z(3, 0);
  for (std::uint64_t m = 0; m < 4; ++m) {
    const int s = static_cast<int>(m & 1), t = static_cast<int>(m >> 1);
    for (int rank = 0; rank < 8; ++rank) {
      int tt = rank;
      for (int i = 2; i >= 0; --i) {
        z[static_cast<std::size_t>(i)] = tt % 2;
        tt /= 2;
      }
      q_stz[{s, t, rank}] += 0.25 * sequence_likelihood(judy, cb.word(m), z);
    }
  }
  std::map<int, double> q_s;
  std::map<std::pair<int, int>, double> q_tz;
  for (const auto& [k, p] : q_stz) {
    q_s[k[0]] += p;
    q_tz[{k[1], k[2]}] += p;
  }
  double rhs = 0.0;
  for (const auto& [k, p] : q_stz) {
    const double prod = q_s[k[0]] * q_tz[{k[1], k[2]}];
    if (prod > 0) rhs += prod * std::log2(prod / p);
  }
  CHECK_THAT(lhs, WithinAbs(rhs, 1e-12));
}

TEST_CASE("equivocation report") {
  SECTION("exact clique faking pins the conditional entropy to nD") {
    auto ch = channels::ternary_example();
    Codebook cb = make_explicit_codebook(3, 3, {{0, 0, 2}, {0, 1, 2}, {1, 0, 2}, {1, 1, 2},
                                                {2, 0, 0}, {2, 0, 1}, {2, 1, 0}, {2, 1, 1}});
    Layer layer;
    layer.cloud_words = {{0, 0, 1}, {1, 0, 0}};
    layer.cloud_of = {0, 0, 0, 0, 1, 1, 1, 1};
    cb.layer = layer;
    auto j = exact_joint(Setting::Transmitter, cb, ch);
    auto rep = equivocation_report(j, cb, ch);
    REQUIRE(rep.kl_plausibility <= 1e-12);
    CHECK_THAT(rep.h_m_given_wfake_z, WithinAbs(3.0 * rep.deniability, 1e-9));
    CHECK(rep.all_hold());
  }
  SECTION("identity faking holds all bounds trivially") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 3);
    FakeConfig cfg;
    cfg.split = Split{0, 2, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    auto rep = equivocation_report(j, cb, ch);
    CHECK_THAT(rep.deniability, WithinAbs(0.0, 1e-12));
    CHECK_THAT(rep.h_m_given_wfake_z, WithinAbs(0.0, 1e-12));
    CHECK(rep.all_hold());
  }
  SECTION("split faking on the erasure channel keeps two-sided residuals nonnegative") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 9);
    FakeConfig cfg;
    cfg.split = Split{1, 1, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    auto rep = equivocation_report(j, cb, ch);
    if (!is_infinite(rep.kl_plausibility)) {
      CHECK(rep.all_hold());
    } else {
      // infinite divergence leaves the bounds vacuous
      bool saw_skip = false;
      for (const auto& c : rep.checks) saw_skip = saw_skip || c.skipped;
      CHECK(saw_skip);
    }
  }
}

TEST_CASE("divergence bound checks") {
  SECTION("exact clique faking zeroes the transmitter leakage") {
    auto ch = channels::ternary_example();
    Codebook cb = example2_superposition(7);
    auto j = exact_joint(Setting::Transmitter, cb, ch);
    auto checks = lemma_bound_check(j, cb, ch);
    REQUIRE(checks.size() == 4);
    for (const auto& c : checks) {
      CHECK_FALSE(c.skipped);
      CHECK_THAT(c.lhs, WithinAbs(0.0, 1e-9));
      CHECK(c.residual() >= -1e-9);
    }
  }
  SECTION("finite-divergence faking keeps residuals nonnegative") {
    auto ch = full_support_channel();
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 13);
    FakeConfig cfg;
    cfg.naive_uniform = true;
    auto j = exact_joint(Setting::Transmitter, cb, ch, cfg);
    REQUIRE(!is_infinite(plausibility_kl(j)));
    for (const auto& c : lemma_bound_check(j, cb, ch)) {
      CHECK_FALSE(c.skipped);
      CHECK(c.residual() >= -1e-9);
    }
  }
  SECTION("uniform message faking keeps the fake marginal uniform") {
    auto ch = full_support_channel();
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 2, 1.0, 15);
    FakeConfig cfg;
    cfg.split = Split{2, 0, 0};
    auto j = exact_joint(Setting::Message, cb, ch, cfg);
    auto checks = lemma_bound_check(j, cb, ch);
    REQUIRE(checks.size() == 2);
    CHECK_THAT(checks[1].lhs, WithinAbs(0.0, 1e-12));  // |H(M) - H(Mfake)| = 0
  }
  SECTION("infinite divergence is reported as skipped") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = make_explicit_codebook(2, 2, {{0, 0}, {1, 1}});
    FakeConfig cfg;
    cfg.naive_uniform = true;
    auto j = exact_joint(Setting::Transmitter, cb, ch, cfg);
    auto checks = lemma_bound_check(j, cb, ch);
    REQUIRE(checks.size() == 1);
    CHECK(checks[0].skipped);
  }
}

TEST_CASE("mixing toward independence") {
  SECTION("full remixing removes all dependence") {
    JointPmf corr({2, 2}, {0.5, 0.0, 0.0, 0.5});
    auto res = mix_for_reverse_kl(corr, 1.0);
    CHECK_THAT(res.report.kl_product_vs_joint, WithinAbs(0.0, 1e-10));
    CHECK_THAT(res.report.bound_rhs, WithinAbs(0.0, 1e-12));
    CHECK_THAT(res.report.mi_mixed, WithinAbs(0.0, 1e-10));
  }
  SECTION("perfectly correlated pair at alpha one half, all conclusions exact") {
    JointPmf corr({2, 2}, {0.5, 0.0, 0.0, 0.5});
    auto res = mix_for_reverse_kl(corr, 0.5);
    CHECK_THAT(res.report.p_equal, WithinAbs(0.75, 1e-12));
    CHECK(res.report.p_equal >= 0.5);
    CHECK(res.report.marginal_max_diff <= 1e-12);
    CHECK(res.report.mi_mixed <= res.report.beta + 1e-10);
    // by hand: joint P(i,j) = 0.375 on the diagonal, 0.125 off it
    const double expected_kl = 0.5 * std::log2(0.25 / 0.375) + 0.5 * std::log2(0.25 / 0.125);
    CHECK_THAT(res.report.kl_product_vs_joint, WithinAbs(expected_kl, 1e-12));
    CHECK(res.report.kl_product_vs_joint <= res.report.bound_rhs + 1e-10);
    CHECK_THAT(res.report.mi_mixed, WithinAbs(1.0 - (-0.75 * std::log2(0.75) - 0.25 * std::log2(0.25)), 1e-12));
  }
  SECTION("random joints satisfy all four conclusions") {
    CounterRng rng(31337, "mix-random");
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> p(16);
      double s = 0.0;
      for (auto& v : p) s += (v = 0.05 + rng.next_double());
      for (auto& v : p) v /= s;
      JointPmf joint({4, 4}, p);
      for (double alpha : {0.1, 0.5, 1.0}) {
        auto res = mix_for_reverse_kl(joint, alpha);
        REQUIRE(res.report.marginal_max_diff <= 1e-12);
        REQUIRE(res.report.p_equal >= 1.0 - alpha);
        REQUIRE(res.report.mi_mixed <= res.report.beta + 1e-10);
        REQUIRE(res.report.kl_product_vs_joint <= res.report.bound_rhs + 1e-10);
      }
    }
  }
  SECTION("alpha outside the unit interval is rejected") {
    JointPmf j({2, 2}, {0.25, 0.25, 0.25, 0.25});
    CHECK_THROWS_AS(mix_for_reverse_kl(j, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mix_for_reverse_kl(j, 1.5), std::invalid_argument);
  }
}

TEST_CASE("monte carlo reliability") {
  SECTION("noiseless injective code never errs") {
    auto ch = channels::bec_eavesdropper(0.5);
    Codebook cb = make_explicit_codebook(2, 2, {{0, 0}, {1, 1}});
    auto res = monte_carlo(cb, ch, 2000, 42);
    CHECK(res.errors == 0);
    CHECK(res.lo == 0.0);
  }
  SECTION("same seed reproduces the estimate exactly") {
    auto ch = channels::bsc_bob(0.2);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 16, 0.25, 5);
    auto a = monte_carlo(cb, ch, 3000, 99, 1);
    auto b = monte_carlo(cb, ch, 3000, 99, 2);
    CHECK(a.errors == b.errors);
    CHECK(a.estimate == b.estimate);
  }
  SECTION("far above capacity the error is large") {
    auto ch = channels::bsc_bob(0.3);  // capacity well below 0.25 bits/use
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 64, 0.25, 12);
    auto res = monte_carlo(cb, ch, 1000, 7);
    CHECK(res.estimate > 0.2);
  }
  SECTION("wilson interval covers the exact value in at least 93 of 100 runs") {
    auto ch = channels::bsc_bob(0.2);
    Codebook cb = build_iid_codebook(Pmf::uniform(2), 6, 0.5, 21);
    const double exact = error_probability(cb, ch);
    int covered = 0;
    for (int s = 0; s < 100; ++s) {
      auto res = monte_carlo(cb, ch, 2000, 1000 + static_cast<std::uint64_t>(s));
      if (exact >= res.lo && exact <= res.hi) ++covered;
    }
    CHECK(covered >= 93);
  }
}
