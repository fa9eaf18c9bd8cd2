#pragma once

// Exact (enumeration-based) evaluation of a code plus faking procedure:
// the full joint law of (message, summoned value, fake value, eavesdropper
// block), from which reliability, plausibility KL, deniability rate, the
// equivocation identities and the divergence bound checks are all computed
// without sampling. A Monte Carlo estimator covers reliability beyond the
// enumeration budget.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/codec.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/rng.hpp"
#include "deniakit/zeroinfo.hpp"

namespace deniakit {

inline constexpr std::uint64_t kEnumerationBudget = 1ULL << 26;

struct JointKey {
  std::uint64_t m = 0, w = 0, wt = 0, z = 0;
  bool operator<(const JointKey& o) const {
    if (m != o.m) return m < o.m;
    if (w != o.w) return w < o.w;
    if (wt != o.wt) return wt < o.wt;
    return z < o.z;
  }
};

struct FakeConfig {
  std::optional<Split> split;                    // message setting; defaults to the codebook's
  bool naive_uniform = false;                    // transmitter: resample over the whole codebook
  std::optional<ZeroInfoPartition> y_partition;  // receiver: classes of Y under the witness P(z|y)
};

class ExactJoint {
 public:
  Setting setting = Setting::Message;
  int n = 0;
  std::uint64_t num_messages = 0;
  std::map<JointKey, double> probs;
  std::vector<std::vector<int>> values;  // block value table for w/wt (empty in the message setting)

  std::uint32_t value_id(const std::vector<int>& v) {
    auto it = value_ids_.find(v);
    if (it != value_ids_.end()) return it->second;
    const std::uint32_t id = static_cast<std::uint32_t>(values.size());
    values.push_back(v);
    value_ids_.emplace(v, id);
    return id;
  }

  void add(const JointKey& k, double p) {
    if (p > 0.0) probs[k] += p;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& [k, p] : probs) s += p;
    return s;
  }

 private:
  std::map<std::vector<int>, std::uint32_t> value_ids_;
};

namespace detail {

inline std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

inline void check_pack_width(int n, int alphabet, const char* what) {
  int bits = 0;
  while ((1 << bits) < alphabet) ++bits;
  if (static_cast<std::int64_t>(n) * std::max(bits, 1) > 63)
    throw std::domain_error(std::string(what) + ": block too long to index exactly");
}

// Enumerates out-blocks with positive likelihood given in-block x under d,
// calling f(out_block, likelihood).
template <typename F>
void for_each_output_block(const Dmc& d, const std::vector<int>& x, F&& f) {
  const int n = static_cast<int>(x.size());
  std::vector<int> out(static_cast<std::size_t>(std::max(n, 1)), 0);
  std::vector<int> idx(static_cast<std::size_t>(std::max(n, 1)), 0);
  // per-position supports
  std::vector<std::vector<int>> support(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < d.out_size; ++o)
      if (d.at(x[static_cast<std::size_t>(i)], o) > 0.0) support[static_cast<std::size_t>(i)].push_back(o);
    if (support[static_cast<std::size_t>(i)].empty()) return;
  }
  if (n == 0) {
    std::vector<int> empty;
    f(empty, 1.0);
    return;
  }
  while (true) {
    double lik = 1.0;
    for (int i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = support[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
      lik *= d.at(x[static_cast<std::size_t>(i)], out[static_cast<std::size_t>(i)]);
    }
    f(out, lik);
    int i = n - 1;
    while (i >= 0) {
      if (++idx[static_cast<std::size_t>(i)] < static_cast<int>(support[static_cast<std::size_t>(i)].size())) break;
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
}

inline std::uint64_t block_rank(const std::vector<int>& b, int alphabet) {
  std::uint64_t r = 0;
  for (int s : b) r = r * static_cast<std::uint64_t>(alphabet) + static_cast<std::uint64_t>(s);
  return r;
}

inline double entropy_of_map(const std::map<std::array<std::uint64_t, 3>, double>& m) {
  double h = 0.0;
  for (const auto& [k, p] : m) h -= deniakit::detail::plogp(p);
  return h;
}

}  // namespace detail

// Full joint law of (M, W, W-fake, Z-block) under uniform messages, the
// given code, the channel, and the faking procedure's exact conditional law.
inline ExactJoint exact_joint(Setting setting, const Codebook& cb, const BroadcastChannel& ch,
                              const FakeConfig& cfg = {}) {
  ExactJoint j;
  j.setting = setting;
  j.n = cb.n();
  j.num_messages = cb.num_messages();
  const Dmc judy = ch.marginal(Receiver::Judy);
  const Dmc bob = ch.marginal(Receiver::Bob);
  detail::check_pack_width(cb.n(), ch.z_size(), "exact_joint");
  const double pm = 1.0 / static_cast<double>(cb.num_messages());
  const double pr = 1.0 / static_cast<double>(cb.words_per_message());

  const std::uint64_t z_states = detail::ipow(static_cast<std::uint64_t>(ch.z_size()), cb.n());

  if (setting == Setting::Message) {
    Split split = cfg.split ? *cfg.split : cb.split ? *cb.split : Split{0, 0, 0};
    if ((1ULL << (split.s_bits + split.t_bits)) != cb.num_messages())
      throw std::invalid_argument("exact_joint: split inconsistent with message count");
    const std::uint64_t fake_states = 1ULL << split.s_bits;
    if (cb.total_words() * z_states * fake_states > kEnumerationBudget)
      throw std::domain_error("exact_joint: enumeration budget exceeded; use monte_carlo for reliability");
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      const std::uint64_t t = m >> split.s_bits;
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r) {
        const auto x = cb.word(m, r);
        detail::for_each_output_block(judy, x, [&](const std::vector<int>& z, double lik) {
          const std::uint64_t zr = detail::block_rank(z, ch.z_size());
          for (std::uint64_t s = 0; s < fake_states; ++s) {
            const std::uint64_t mf = (t << split.s_bits) | s;
            j.add({m, m, mf, zr}, pm * pr * lik / static_cast<double>(fake_states));
          }
        });
      }
    }
    return j;
  }

  if (setting == Setting::Transmitter) {
    // conditional law of the fake codeword per message
    std::vector<std::map<std::vector<int>, double>> law_of_m(cb.num_messages());
    if (cfg.naive_uniform) {
      std::map<std::vector<int>, double> uni;
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
        for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
          uni[cb.word(m, r)] += 1.0 / static_cast<double>(cb.total_words());
      for (auto& l : law_of_m) l = uni;
    } else {
      if (!cb.layer) throw std::invalid_argument("exact_joint: transmitter faking needs a layered codebook");
      const auto& layer = *cb.layer;
      std::vector<std::map<std::vector<int>, double>> cloud_law(layer.cloud_words.size());
      std::vector<double> cloud_count(layer.cloud_words.size(), 0.0);
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
        cloud_count[layer.cloud_of[m]] += static_cast<double>(cb.words_per_message());
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
        for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
          cloud_law[layer.cloud_of[m]][cb.word(m, r)] += 1.0 / cloud_count[layer.cloud_of[m]];
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m) law_of_m[m] = cloud_law[layer.cloud_of[m]];
    }
    std::uint64_t max_support = 0;
    for (const auto& l : law_of_m) max_support = std::max(max_support, static_cast<std::uint64_t>(l.size()));
    if (cb.total_words() * z_states * std::max<std::uint64_t>(max_support, 1) > kEnumerationBudget)
      throw std::domain_error("exact_joint: enumeration budget exceeded; use monte_carlo for reliability");

    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r) {
        const auto x = cb.word(m, r);
        const std::uint32_t wid = j.value_id(x);
        detail::for_each_output_block(judy, x, [&](const std::vector<int>& z, double lik) {
          const std::uint64_t zr = detail::block_rank(z, ch.z_size());
          for (const auto& [xf, pf] : law_of_m[m])
            j.add({m, wid, j.value_id(xf), zr}, pm * pr * lik * pf);
        });
      }
    }
    return j;
  }

  // Receiver setting
  if (!cfg.y_partition) throw std::invalid_argument("exact_joint: receiver faking needs the Y partition");
  detail::check_pack_width(cb.n(), ch.y_size(), "exact_joint");
  const std::uint64_t y_states = detail::ipow(static_cast<std::uint64_t>(ch.y_size()), cb.n());
  if (cb.total_words() * y_states * z_states > kEnumerationBudget)
    throw std::domain_error("exact_joint: enumeration budget exceeded; use monte_carlo for reliability");
  const auto& part = *cfg.y_partition;
  std::map<std::vector<int>, std::map<std::vector<int>, double>> law_cache;
  for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
    for (std::uint64_t r = 0; r < cb.words_per_message(); ++r) {
      const auto x = cb.word(m, r);
      detail::for_each_output_block(bob, x, [&](const std::vector<int>& y, double lik_y) {
        const auto v = class_sequence(part, y);
        auto it = law_cache.find(v);
        if (it == law_cache.end()) it = law_cache.emplace(v, receiver_fake_law(cb, ch, part, v)).first;
        const std::uint32_t wid = j.value_id(y);
        // z given (x, y) through the full broadcast law
        std::vector<int> z(static_cast<std::size_t>(std::max(cb.n(), 1)), 0);
        std::function<void(int, double)> rec = [&](int pos, double acc) {
          if (pos == cb.n()) {
            const std::uint64_t zr = detail::block_rank(
                std::vector<int>(z.begin(), z.begin() + cb.n()), ch.z_size());
            for (const auto& [yf, pf] : it->second)
              j.add({m, wid, j.value_id(yf), zr}, pm * pr * lik_y * acc * pf);
            return;
          }
          const int xi = x[static_cast<std::size_t>(pos)];
          const int yi = y[static_cast<std::size_t>(pos)];
          const double pyx = bob.at(xi, yi);
          for (int zi = 0; zi < ch.z_size(); ++zi) {
            const double pz = ch.law(xi, yi, zi);
            if (pz > 0.0) {
              z[static_cast<std::size_t>(pos)] = zi;
              rec(pos + 1, acc * pz / pyx);
            }
          }
        };
        rec(0, 1.0);
      });
    }
  }
  return j;
}

// Average block error probability of the code under ML decoding, by exact
// enumeration of Bob's output space.
inline double error_probability(const Codebook& cb, const BroadcastChannel& ch,
                                const DecoderConfig& cfg = {}) {
  detail::check_pack_width(cb.n(), ch.y_size(), "error_probability");
  const std::uint64_t y_states = detail::ipow(static_cast<std::uint64_t>(ch.y_size()), cb.n());
  if (y_states * cb.total_words() > kEnumerationBudget)
    throw std::domain_error("error_probability: enumeration budget exceeded; use monte_carlo");
  const Dmc bob = ch.marginal(Receiver::Bob);
  const double pm = 1.0 / static_cast<double>(cb.num_messages());
  const double pr = 1.0 / static_cast<double>(cb.words_per_message());
  double err = 0.0;
  std::vector<int> y(static_cast<std::size_t>(std::max(cb.n(), 1)), 0);
  for (std::uint64_t rank = 0; rank < y_states; ++rank) {
    std::uint64_t t = rank;
    for (int i = cb.n() - 1; i >= 0; --i) {
      y[static_cast<std::size_t>(i)] = static_cast<int>(t % ch.y_size());
      t /= ch.y_size();
    }
    const std::vector<int> yy(y.begin(), y.begin() + cb.n());
    const std::uint64_t mhat = decode(cb, ch, yy, cfg);
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      if (m == mhat) continue;
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
        err += pm * pr * sequence_likelihood(bob, cb.word(m, r), yy);
    }
  }
  return err;
}

// KL(Q_{Z,W-fake} || Q_{Z,W}) on the exact joint. Infinite when the fake
// puts mass where the truth cannot.
inline double plausibility_kl(const ExactJoint& j) {
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> zw, zwf;
  for (const auto& [k, p] : j.probs) {
    zw[{k.z, k.w}] += p;
    zwf[{k.z, k.wt}] += p;
  }
  double kl = 0.0;
  for (const auto& [k, p] : zwf) {
    if (p <= 0.0) continue;
    auto it = zw.find(k);
    if (it == zw.end() || it->second <= 0.0) return infinite_kl();
    kl += p * std::log2(p / it->second);
  }
  return kl < 0.0 && kl > -kInfoNoiseTol ? 0.0 : kl;
}

namespace detail {

// Maps a fake-value id to Msg of that value under the joint's setting.
inline std::vector<std::uint64_t> msg_of_values(const ExactJoint& j, const Codebook& cb,
                                                const BroadcastChannel& ch) {
  std::vector<std::uint64_t> msg(j.values.size(), 0);
  for (std::size_t i = 0; i < j.values.size(); ++i)
    msg[i] = msg_of(j.setting == Setting::Transmitter ? Setting::Transmitter : Setting::Receiver, cb,
                    ch, j.values[i]);
  return msg;
}

}  // namespace detail

// (1/n) H(Msg(W-fake) | W), the rate of deniability actually delivered.
inline double deniability_rate(const ExactJoint& j, const Codebook& cb, const BroadcastChannel& ch) {
  if (j.n == 0) return 0.0;
  std::vector<std::uint64_t> value_msg;
  if (j.setting != Setting::Message) value_msg = detail::msg_of_values(j, cb, ch);
  std::map<std::array<std::uint64_t, 3>, double> joint, wmarg;
  for (const auto& [k, p] : j.probs) {
    const std::uint64_t msg = j.setting == Setting::Message ? k.wt : value_msg[k.wt];
    joint[{k.w, msg, 0}] += p;
    wmarg[{k.w, 0, 0}] += p;
  }
  const double h = detail::entropy_of_map(joint) - detail::entropy_of_map(wmarg);
  return deniakit::detail::clamp_info(h, "deniability_rate") / j.n;
}

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool skipped = false;
  std::string note;
  double residual() const { return rhs - lhs; }
};

struct EvalReport {
  Setting setting = Setting::Message;
  int n = 0;
  std::uint64_t messages = 0;
  double kl_plausibility = 0.0;  // delta; may be infinite
  double deniability = 0.0;      // D, bits per channel use
  double h_m = 0.0;
  double h_m_given_z = 0.0;
  double h_m_given_wfake_z = 0.0;
  double h_mfake = 0.0;     // message setting only
  double abs_dh_m = 0.0;    // |H(M) - H(M-fake)|, message setting only
  double lambda = 0.0;      // log|M| - log min positive P(z|x)
  double kappa = 0.0;       // max log 1/P(z|x) over positive entries
  double mu = 0.0;          // 2*lambda (message) or 2*kappa (transmitter)
  std::vector<BoundCheck> checks;

  bool all_hold(double tol = 1e-9) const {
    for (const auto& c : checks)
      if (!c.skipped && c.residual() < -tol) return false;
    return true;
  }
};

namespace detail {

inline double min_positive_entry(const Dmc& d) {
  double v = 1.0;
  for (double e : d.rows)
    if (e > 0.0) v = std::min(v, e);
  return v;
}

inline double max_log_inv_entry(const Dmc& d) {
  double v = 0.0;
  for (double e : d.rows)
    if (e > 0.0) v = std::max(v, std::log2(1.0 / e));
  return v;
}

}  // namespace detail

// Divergence-bound checks tied to the setting: in the message setting the
// conditional leakage I(M;Z|M-fake) and the entropy gap |H(M)-H(M-fake)|
// are bounded by delta + n*lambda*sqrt(delta); in the transmitter setting
// four entropy symmetries are bounded by n*kappa*sqrt(delta).
inline std::vector<BoundCheck> lemma_bound_check(const ExactJoint& j, const Codebook& cb,
                                                 const BroadcastChannel& ch) {
  std::vector<BoundCheck> out;
  const double delta = plausibility_kl(j);
  const Dmc judy = ch.marginal(Receiver::Judy);
  if (is_infinite(delta)) {
    out.push_back({"divergence-bounds", 0.0, 0.0, true, "plausibility KL is infinite; bounds are vacuous"});
    return out;
  }
  const double sq = std::sqrt(delta);
  const double n = static_cast<double>(j.n);

  // aggregated entropies
  std::map<std::array<std::uint64_t, 3>, double> m_z, m_wt, wt_z, mm, wtm, zz;
  std::map<std::array<std::uint64_t, 3>, double> w_wt, ww, w_m, wt_only, w_wt_m, w_wt_msg, w_msg;
  std::vector<std::uint64_t> value_msg;
  if (j.setting != Setting::Message) value_msg = detail::msg_of_values(j, cb, ch);
  for (const auto& [k, p] : j.probs) {
    mm[{k.m, 0, 0}] += p;
    zz[{k.z, 0, 0}] += p;
    m_z[{k.m, k.z, 0}] += p;
    m_wt[{k.m, k.wt, 0}] += p;
    wtm[{k.wt, 0, 0}] += p;
    wt_z[{k.wt, k.z, 0}] += p;
    w_wt[{k.w, k.wt, 0}] += p;
    ww[{k.w, 0, 0}] += p;
    w_m[{k.w, k.m, 0}] += p;
    if (j.setting != Setting::Message) {
      const std::uint64_t msg = value_msg[k.wt];
      w_wt_m[{k.w, k.wt, k.m}] += p;
      w_wt_msg[{k.w, k.wt, msg}] += p;
      w_msg[{k.w, msg, 0}] += p;
    }
  }
  auto H = [&](const std::map<std::array<std::uint64_t, 3>, double>& m) { return detail::entropy_of_map(m); };

  if (j.setting == Setting::Message) {
    const double lambda =
        std::log2(static_cast<double>(j.num_messages)) - std::log2(detail::min_positive_entry(judy));
    const double rhs = delta + n * lambda * sq;
    std::map<std::array<std::uint64_t, 3>, double> m_wt_z;
    for (const auto& [k, p] : j.probs) m_wt_z[{k.m, k.wt, k.z}] += p;
    // I(M;Z|Mf) = H(M|Mf) - H(M|Mf,Z)
    const double i_mz_given =
        (H(m_wt) - H(wtm)) - (H(m_wt_z) - H(wt_z));
    out.push_back({"leakage-given-fake", deniakit::detail::clamp_info(i_mz_given, "lemma_bound_check"), rhs});
    out.push_back({"entropy-gap", std::abs(H(mm) - H(wtm)), rhs});
    return out;
  }

  if (j.setting == Setting::Transmitter) {
    const double kappa = detail::max_log_inv_entry(judy);
    const double rhs = n * kappa * sq;
    std::map<std::array<std::uint64_t, 3>, double> w_wt_z;
    for (const auto& [k, p] : j.probs) w_wt_z[{k.w, k.wt, k.z}] += p;
    const double i_xz_given = (H(w_wt) - H(wtm)) - (H(w_wt_z) - H(wt_z));
    out.push_back({"codeword-leakage-given-fake",
                   deniakit::detail::clamp_info(i_xz_given, "lemma_bound_check"), rhs});
    const double h_x_given_xf = H(w_wt) - H(wtm);
    const double h_xf_given_x = H(w_wt) - H(ww);
    out.push_back({"conditional-entropy-symmetry", std::abs(h_x_given_xf - h_xf_given_x), rhs});
    out.push_back({"marginal-entropy-gap", std::abs(H(ww) - H(wtm)), rhs});
    // |H(X|Xf,M) - H(Xf|X,Msg(Xf))|
    const double h_x_given_xf_m = H(w_wt_m) - (H(m_wt));
    std::map<std::array<std::uint64_t, 3>, double> w_msgonly;
    for (const auto& [k, p] : w_wt_msg) w_msgonly[{k[0], k[2], 0}] += p;
    const double h_xf_given_x_msg = H(w_wt_msg) - H(w_msgonly);
    out.push_back({"split-entropy-symmetry", std::abs(h_x_given_xf_m - h_xf_given_x_msg), rhs});
    return out;
  }

  out.push_back({"divergence-bounds", 0.0, 0.0, true, "no bound checks defined for the receiver setting"});
  return out;
}

// Exact equivocation terms and the equivocation-vs-deniability bound
// residuals with constants instantiated from the channel.
inline EvalReport equivocation_report(const ExactJoint& j, const Codebook& cb,
                                      const BroadcastChannel& ch) {
  EvalReport rep;
  rep.setting = j.setting;
  rep.n = j.n;
  rep.messages = j.num_messages;
  rep.kl_plausibility = plausibility_kl(j);
  rep.deniability = deniability_rate(j, cb, ch);
  const Dmc judy = ch.marginal(Receiver::Judy);
  rep.lambda = std::log2(static_cast<double>(j.num_messages)) -
               std::log2(detail::min_positive_entry(judy));
  rep.kappa = detail::max_log_inv_entry(judy);
  rep.mu = j.setting == Setting::Transmitter ? 2.0 * rep.kappa : 2.0 * rep.lambda;

  std::map<std::array<std::uint64_t, 3>, double> mm, zz, m_z, wtm, m_wt_z, wt_z;
  for (const auto& [k, p] : j.probs) {
    mm[{k.m, 0, 0}] += p;
    zz[{k.z, 0, 0}] += p;
    m_z[{k.m, k.z, 0}] += p;
    wtm[{k.wt, 0, 0}] += p;
    m_wt_z[{k.m, k.wt, k.z}] += p;
    wt_z[{k.wt, k.z, 0}] += p;
  }
  rep.h_m = detail::entropy_of_map(mm);
  rep.h_m_given_z = detail::entropy_of_map(m_z) - detail::entropy_of_map(zz);
  rep.h_m_given_wfake_z = detail::entropy_of_map(m_wt_z) - detail::entropy_of_map(wt_z);
  if (j.setting == Setting::Message) {
    rep.h_mfake = detail::entropy_of_map(wtm);
    rep.abs_dh_m = std::abs(rep.h_m - rep.h_mfake);
  }

  const double delta = rep.kl_plausibility;
  if (is_infinite(delta)) {
    rep.checks.push_back({"equivocation-bounds", 0.0, 0.0, true,
                          "plausibility KL is infinite; bounds are vacuous"});
  } else {
    const double sq = std::sqrt(delta);
    const double n = static_cast<double>(j.n);
    const double nd = n * rep.deniability;
    if (j.setting == Setting::Message) {
      // H(M|Z) >= nD - n*mu*sqrt(delta) - 2*delta
      rep.checks.push_back({"equivocation-floor", nd - n * rep.mu * sq - 2.0 * delta, rep.h_m_given_z});
      // nD - delta - n*mu*sqrt(delta) <= H(M|Mf,Z) <= nD + delta + n*mu*sqrt(delta)
      rep.checks.push_back({"fake-conditioned-floor", nd - delta - n * rep.mu * sq, rep.h_m_given_wfake_z});
      rep.checks.push_back({"fake-conditioned-ceiling", rep.h_m_given_wfake_z, nd + delta + n * rep.mu * sq});
    } else if (j.setting == Setting::Transmitter) {
      // nD - n*mu*sqrt(delta) <= H(M|Z,Xf) <= nD + n*mu*sqrt(delta)
      rep.checks.push_back({"fake-conditioned-floor", nd - n * rep.mu * sq, rep.h_m_given_wfake_z});
      rep.checks.push_back({"fake-conditioned-ceiling", rep.h_m_given_wfake_z, nd + n * rep.mu * sq});
    }
  }
  for (auto& c : lemma_bound_check(j, cb, ch)) rep.checks.push_back(std::move(c));
  return rep;
}

// Markov verification W-fake - W - Z: max over positive-mass cells of
// |P(z|w,wfake) - P(z|w)|.
inline double markov_deviation(const ExactJoint& j) {
  std::map<std::array<std::uint64_t, 3>, double> w_wt, w_only, w_z, w_wt_z;
  for (const auto& [k, p] : j.probs) {
    w_wt[{k.w, k.wt, 0}] += p;
    w_only[{k.w, 0, 0}] += p;
    w_z[{k.w, k.z, 0}] += p;
    w_wt_z[{k.w, k.wt, k.z}] += p;
  }
  double dev = 0.0;
  for (const auto& [k, p] : w_wt_z) {
    const double pww = w_wt[{k[0], k[1], 0}];
    const double pw = w_only[{k[0], 0, 0}];
    const double pwz = w_z[{k[0], k[2], 0}];
    if (pww > 0.0 && pw > 0.0)
      dev = std::max(dev, std::abs(p / pww - pwz / pw));
  }
  return dev;
}

struct MixReport {
  double alpha = 0.0;
  double beta = 0.0;  // I(I-tilde; J)
  double p_equal = 0.0;
  double marginal_max_diff = 0.0;
  double mi_mixed = 0.0;
  double kl_product_vs_joint = 0.0;
  double bound_rhs = 0.0;
};

struct MixResult {
  JointPmf mixed;  // over (I, I-tilde, J)
  MixReport report;
};

// Remixes the first coordinate of a 2-way joint: with probability 1-alpha
// the new variable copies the old one, otherwise it resamples from the old
// marginal. The mixing preserves the marginal, keeps the pair equal with
// probability at least 1-alpha, can only reduce dependence on J, and the
// reverse product-vs-joint divergence is at most sqrt(2*beta)*log2(1/alpha).
inline MixResult mix_for_reverse_kl(const JointPmf& joint, double alpha) {
  if (joint.axes() != 2) throw std::invalid_argument("mix_for_reverse_kl: need a 2-way joint");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("mix_for_reverse_kl: alpha outside (0,1]");
  // drop zero-mass symbols
  Pmf mi = joint.marginal(0);
  Pmf mj = joint.marginal(1);
  std::vector<int> keep_i, keep_j;
  for (int i = 0; i < mi.size(); ++i)
    if (mi[i] > 0.0) keep_i.push_back(i);
  for (int jx = 0; jx < mj.size(); ++jx)
    if (mj[jx] > 0.0) keep_j.push_back(jx);
  if (keep_i.empty() || keep_j.empty()) throw std::invalid_argument("mix_for_reverse_kl: empty support");
  const int ni = static_cast<int>(keep_i.size()), nj = static_cast<int>(keep_j.size());
  std::vector<double> base(static_cast<std::size_t>(ni) * nj);
  std::vector<double> pi(ni);
  for (int a = 0; a < ni; ++a) {
    pi[a] = mi[keep_i[a]];
    for (int b = 0; b < nj; ++b) base[static_cast<std::size_t>(a) * nj + b] = joint.at(keep_i[a], keep_j[b]);
  }

  std::vector<double> mixed(static_cast<std::size_t>(ni) * ni * nj, 0.0);
  for (int i = 0; i < ni; ++i)
    for (int t = 0; t < ni; ++t) {
      const double trans = (i == t ? 1.0 - alpha + alpha * pi[i] : alpha * pi[i]);
      for (int b = 0; b < nj; ++b)
        mixed[(static_cast<std::size_t>(i) * ni + t) * nj + b] += trans * base[static_cast<std::size_t>(t) * nj + b];
    }
  JointPmf mixed_joint({ni, ni, nj}, mixed);

  MixReport rep;
  rep.alpha = alpha;
  std::vector<double> base_copy = base;
  rep.beta = mutual_information(JointPmf({ni, nj}, base_copy));
  Pmf new_marginal = mixed_joint.marginal(0);
  for (int a = 0; a < ni; ++a)
    rep.marginal_max_diff = std::max(rep.marginal_max_diff, std::abs(new_marginal[a] - pi[a]));
  for (int i = 0; i < ni; ++i)
    for (int b = 0; b < nj; ++b) rep.p_equal += mixed_joint.at(i, i, b);
  JointPmf ij = mixed_joint.marginal_pair(0, 2);
  rep.mi_mixed = mutual_information(ij);
  // KL(P_I P_J || P_{I,J})
  Pmf pj = ij.marginal(1);
  double kl = 0.0;
  bool infinite = false;
  for (int a = 0; a < ni && !infinite; ++a)
    for (int b = 0; b < nj; ++b) {
      const double prod = new_marginal[a] * pj[b];
      if (prod <= 0.0) continue;
      if (ij.at(a, b) <= 0.0) {
        infinite = true;
        break;
      }
      kl += prod * std::log2(prod / ij.at(a, b));
    }
  rep.kl_product_vs_joint = infinite ? infinite_kl() : std::max(kl, 0.0);
  rep.bound_rhs = std::sqrt(2.0 * rep.beta) * std::log2(1.0 / alpha);
  return {std::move(mixed_joint), rep};
}

struct MonteCarloResult {
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double estimate = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
};

namespace detail {

// Exact ML decoding for binary-input binary-output marginals on packed
// words: per-codeword log-likelihood from the four (x,y) pair counts.
struct PackedMl {
  int n = 0;
  int words_per_block = 0;
  std::vector<std::uint64_t> packed;  // message-major
  double l00 = 0, l01 = 0, l10 = 0, l11 = 0;
  bool z00 = false, z01 = false, z10 = false, z11 = false;

  PackedMl(const Codebook& cb, const Dmc& bob) {
    n = cb.n();
    words_per_block = (n + 63) / 64;
    packed.assign(cb.num_messages() * words_per_block, 0);
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      const std::uint8_t* w = cb.word_ptr(m, 0);
      for (int i = 0; i < n; ++i)
        if (w[i]) packed[m * words_per_block + i / 64] |= 1ULL << (i % 64);
    }
    auto lg = [](double p, bool& zero) {
      if (p <= 0.0) {
        zero = true;
        return 0.0;
      }
      return std::log2(p);
    };
    l00 = lg(bob.at(0, 0), z00);
    l01 = lg(bob.at(0, 1), z01);
    l10 = lg(bob.at(1, 0), z10);
    l11 = lg(bob.at(1, 1), z11);
  }

  std::uint64_t decode(const std::uint64_t* y) const {
    std::uint64_t best = 0;
    double best_l = -std::numeric_limits<double>::infinity();
    const std::uint64_t msgs = packed.size() / words_per_block;
    for (std::uint64_t m = 0; m < msgs; ++m) {
      const std::uint64_t* x = packed.data() + m * words_per_block;
      int n11 = 0, n10 = 0, n01 = 0;
      for (int b = 0; b < words_per_block; ++b) {
        const std::uint64_t mask =
            (b + 1 == words_per_block && n % 64) ? ((1ULL << (n % 64)) - 1) : ~0ULL;
        const std::uint64_t xb = x[b] & mask, yb = y[b] & mask;
        n11 += __builtin_popcountll(xb & yb);
        n10 += __builtin_popcountll(xb & ~yb & mask);
        n01 += __builtin_popcountll(~xb & yb & mask);
      }
      const int n00 = n - n11 - n10 - n01;
      if ((n00 && z00) || (n01 && z01) || (n10 && z10) || (n11 && z11)) continue;
      const double l = n00 * l00 + n01 * l01 + n10 * l10 + n11 * l11;
      if (l > best_l) {
        best_l = l;
        best = m;
      }
    }
    return best;
  }
};

}  // namespace detail

// Monte Carlo reliability estimate with a Wilson 95% interval. Deterministic
// under a fixed seed regardless of threading.
inline MonteCarloResult monte_carlo(const Codebook& cb, const BroadcastChannel& ch,
                                    std::uint64_t trials, std::uint64_t seed, int threads = 0) {
  if (trials < 1) throw std::invalid_argument("monte_carlo: need at least one trial");
  const Dmc bob = ch.marginal(Receiver::Bob);
  const bool packed_path =
      ch.x_size() == 2 && ch.y_size() == 2 && cb.words_per_message() == 1 && cb.n() > 0;
  std::optional<detail::PackedMl> ml;
  if (packed_path) ml.emplace(cb, bob);

  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, 16));

  auto run_range = [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t& errors_out) {
    std::uint64_t errors = 0;
    std::vector<std::uint64_t> ybits((cb.n() + 63) / 64, 0);
    std::vector<int> y(static_cast<std::size_t>(std::max(cb.n(), 1)));
    for (std::uint64_t t = lo; t < hi; ++t) {
      CounterRng rng(seed, "mc-trial", {t});
      const std::uint64_t m = rng.next_below(cb.num_messages());
      const std::uint64_t r =
          cb.words_per_message() == 1 ? 0 : rng.next_below(cb.words_per_message());
      const std::uint8_t* x = cb.word_ptr(m, r);
      if (packed_path) {
        std::fill(ybits.begin(), ybits.end(), 0);
        for (int i = 0; i < cb.n(); ++i) {
          const double u = rng.next_double();
          const int yi = u < bob.at(x[i], 0) ? 0 : 1;
          if (yi) ybits[static_cast<std::size_t>(i) / 64] |= 1ULL << (i % 64);
        }
        if (ml->decode(ybits.data()) != m) ++errors;
      } else {
        for (int i = 0; i < cb.n(); ++i) {
          double u = rng.next_double();
          double acc = 0.0;
          int yi = ch.y_size() - 1;
          for (int cand = 0; cand < ch.y_size(); ++cand) {
            acc += bob.at(x[i], cand);
            if (u < acc) {
              yi = cand;
              break;
            }
          }
          y[static_cast<std::size_t>(i)] = yi;
        }
        if (decode(cb, ch, std::vector<int>(y.begin(), y.begin() + cb.n())) != m) ++errors;
      }
    }
    errors_out = errors;
  };

  std::vector<std::uint64_t> partial(static_cast<std::size_t>(threads), 0);
  if (threads == 1) {
    run_range(0, trials, partial[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::uint64_t lo = std::min<std::uint64_t>(trials, chunk * t);
      const std::uint64_t hi = std::min<std::uint64_t>(trials, chunk * (t + 1));
      pool.emplace_back(run_range, lo, hi, std::ref(partial[static_cast<std::size_t>(t)]));
    }
    for (auto& th : pool) th.join();
  }
  MonteCarloResult res;
  res.trials = trials;
  for (std::uint64_t e : partial) res.errors += e;
  const double nn = static_cast<double>(trials);
  const double phat = static_cast<double>(res.errors) / nn;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / nn;
  const double center = (phat + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn)) / denom;
  res.estimate = phat;
  res.lo = std::max(0.0, center - half);
  res.hi = std::min(1.0, center + half);
  return res;
}

}  // namespace deniakit
