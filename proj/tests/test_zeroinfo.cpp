#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/rng.hpp"
#include "deniakit/zeroinfo.hpp"

using namespace deniakit;
using Catch::Matchers::WithinAbs;

TEST_CASE("partition of the two-indistinguishable-inputs channel") {
  Dmc d(3, 3, {0.3, 0.7, 0, 0.3, 0.7, 0, 0, 0.4, 0.6});
  auto part = zero_info_partition(d);
  REQUIRE(part.num_classes() == 2);
  CHECK(part.classes[0] == std::vector<int>{0, 1});
  CHECK(part.classes[1] == std::vector<int>{2});
  CHECK(part.class_of == std::vector<int>{0, 0, 1});
}

TEST_CASE("identity and constant channels") {
  Dmc ident(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(zero_info_partition(ident).num_classes() == 3);

  Dmc constant(4, 2, {0.4, 0.6, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6});
  auto part = zero_info_partition(constant);
  REQUIRE(part.num_classes() == 1);
  CHECK(part.classes[0].size() == 4);
}

TEST_CASE("partition is idempotent after collapsing") {
  Dmc d(3, 3, {0.3, 0.7, 0, 0.3, 0.7, 0, 0, 0.4, 0.6});
  auto part = zero_info_partition(d);
  Dmc collapsed = collapse_to_classes(d, part);
  auto again = zero_info_partition(collapsed);
  CHECK(again.num_classes() == collapsed.in_size);
}

TEST_CASE("joint law of (W, U0, Z)") {
  Dmc d(3, 3, {0.3, 0.7, 0, 0.3, 0.7, 0, 0, 0.4, 0.6});
  auto part = zero_info_partition(d);
  Pmf pw({0.2, 0.3, 0.5});
  JointPmf j = zero_info_joint(pw, d, part);

  SECTION("conditional P(z|u) matches the class row regardless of w") {
    // P(z | U0 = class of {w1,w2}) must equal (0.3, 0.7, 0)
    double pu = 0.0;
    std::vector<double> pz(3, 0.0);
    for (int w = 0; w < 3; ++w)
      for (int z = 0; z < 3; ++z) {
        pu += j.at(w, 0, z);
        pz[z] += j.at(w, 0, z);
      }
    CHECK_THAT(pz[0] / pu, WithinAbs(0.3, 1e-12));
    CHECK_THAT(pz[1] / pu, WithinAbs(0.7, 1e-12));
    CHECK_THAT(pz[2] / pu, WithinAbs(0.0, 1e-12));
  }

  SECTION("both markov chains hold as literal equalities") {
    // P(z|w,u) = P(z|u) and P(z|w,u) = P(z|w) wherever mass is positive
    for (int w = 0; w < 3; ++w) {
      const int u = part.class_of[w];
      double pwu = 0.0;
      for (int z = 0; z < 3; ++z) pwu += j.at(w, u, z);
      REQUIRE(pwu > 0.0);
      double pu = 0.0;
      std::vector<double> pzu(3, 0.0);
      for (int ww = 0; ww < 3; ++ww)
        for (int z = 0; z < 3; ++z)
          if (part.class_of[ww] == u) {
            pu += j.at(ww, u, z);
            pzu[z] += j.at(ww, u, z);
          }
      for (int z = 0; z < 3; ++z) {
        const double p_z_given_wu = j.at(w, u, z) / pwu;
        REQUIRE_THAT(p_z_given_wu, WithinAbs(pzu[z] / pu, 1e-10));
        REQUIRE_THAT(p_z_given_wu, WithinAbs(d.at(w, z), 1e-10));
      }
    }
  }
}

TEST_CASE("singleton and one-class partitions") {
  Dmc ident(2, 2, {1, 0, 0, 1});
  auto part = zero_info_partition(ident);
  Pmf pw({0.4, 0.6});
  JointPmf j = zero_info_joint(pw, ident, part);
  // U0 relabels W, so I(W;Z|U0) = 0
  CHECK_THAT(conditional_mutual_information(JointPmf({2, 3, 2}, [&] {
               // reorder axes to (W, Z, U0)
               std::vector<double> probs(2 * 3 * 2, 0.0);
               for (int w = 0; w < 2; ++w)
                 for (int u = 0; u < 2; ++u)
                   for (int z = 0; z < 2; ++z) probs[(w * 3 + z) * 2 + u] = j.at(w, u, z);
               return probs;
             }())),
             WithinAbs(0.0, 1e-12));

  Dmc constant(3, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  auto cpart = zero_info_partition(constant);
  JointPmf cj = zero_info_joint(Pmf::uniform(3), constant, cpart);
  // one class: the (W,Z) marginal factors through the constant row
  for (int w = 0; w < 3; ++w)
    for (int z = 0; z < 2; ++z) CHECK_THAT(cj.at(w, 0, z), WithinAbs((1.0 / 3) * 0.5, 1e-15));
}

TEST_CASE("coarsest-description inequality over refinements") {
  // For any refinement U of the zero-information partition and any V drawn
  // from W by a stochastic map, I(W;V|U) <= I(W;V|U0).
  CounterRng rng(2024, "lemma4");
  int checked = 0;
  for (int rep = 0; rep < 500; ++rep) {
    // channel with duplicated rows so U0 is nontrivial
    const int nw = 4, nz = 3;
    std::vector<double> rows(nw * nz);
    for (int w = 0; w < 2; ++w) {
      double s = 0.0;
      for (int z = 0; z < nz; ++z) s += (rows[w * nz + z] = rng.next_double() + 0.05);
      for (int z = 0; z < nz; ++z) rows[w * nz + z] /= s;
    }
    // rows 2,3 copy rows 0,1 -> classes {0,2}, {1,3}
    for (int z = 0; z < nz; ++z) {
      rows[2 * nz + z] = rows[0 * nz + z];
      rows[3 * nz + z] = rows[1 * nz + z];
    }
    Dmc d(nw, nz, rows);
    auto u0 = zero_info_partition(d);
    REQUIRE(u0.num_classes() == 2);

    // refinement: split class of w=0 into {0} and {2}
    std::vector<int> fine_of = {0, 1, 2, 1};
    const int nu = 3;

    Pmf pw = [&] {
      std::vector<double> p(nw);
      double s = 0.0;
      for (auto& v : p) s += (v = rng.next_double() + 0.02);
      for (auto& v : p) v /= s;
      return Pmf(p);
    }();
    const int nv = 3;
    std::vector<std::vector<double>> v_given_w(nw, std::vector<double>(nv));
    for (auto& row : v_given_w) {
      double s = 0.0;
      for (auto& v : row) s += (v = rng.next_double() + 0.02);
      for (auto& v : row) v /= s;
    }

    auto cmi_with = [&](const std::vector<int>& uof, int usize) {
      std::vector<double> probs(static_cast<std::size_t>(nw) * nv * usize, 0.0);
      for (int w = 0; w < nw; ++w)
        for (int v = 0; v < nv; ++v)
          probs[(static_cast<std::size_t>(w) * nv + v) * usize + uof[w]] = pw[w] * v_given_w[w][v];
      return conditional_mutual_information(JointPmf({nw, nv, usize}, probs));
    };
    const double fine = cmi_with(fine_of, nu);
    const double coarse = cmi_with(u0.class_of, u0.num_classes());
    REQUIRE(fine <= coarse + 1e-10);
    ++checked;
  }
  CHECK(checked == 500);
}

TEST_CASE("formatting uses symbol names") {
  auto ch = channels::ternary_example();
  auto part = zero_info_partition(ch.marginal(Receiver::Judy));
  CHECK(format_classes(part, ch.x_names()) == "{w1,w2} {w3}");
}
