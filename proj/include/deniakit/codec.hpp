#pragma once

// Block codes for the broadcast channel and the faking procedures attached
// to them: plain i.i.d. codebooks, superposition codebooks whose satellites
// share a cloud of identical eavesdropper statistics, and binning codebooks
// whose message splits into a leaked part (the cloud index) and a
// confidential part padded with encoder-private randomness.
//
// Codebooks are multisets: repeated codewords are legal and all maps weight
// them by multiplicity. Rates are realized as integer bit counts
// round(n*rate); the realized rate is exposed on the codebook.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/rng.hpp"
#include "deniakit/zeroinfo.hpp"

namespace deniakit {

struct Split {
  int s_bits = 0;  // confidential part, randomized by the message faker
  int t_bits = 0;  // leaked part, preserved by the message faker
  int r_bits = 0;  // encoder-private randomness per message
};

struct Layer {
  std::vector<std::vector<int>> cloud_words;  // cloud index -> length-n word over classes
  std::vector<int> cloud_of;                  // message -> cloud index
};

class Codebook {
 public:
  Codebook(int n, int x_size, std::uint64_t num_messages, std::uint64_t words_per_message,
           std::vector<std::uint8_t> flat_words, std::uint64_t seed)
      : n_(n), x_size_(x_size), num_messages_(num_messages), wpm_(words_per_message),
        flat_(std::move(flat_words)), seed_(seed) {
    if (n_ < 0 || x_size_ <= 0 || num_messages_ == 0 || wpm_ == 0)
      throw std::invalid_argument("Codebook: bad dimensions");
    if (flat_.size() != num_messages_ * wpm_ * static_cast<std::uint64_t>(n_))
      throw std::invalid_argument("Codebook: word storage does not match dimensions");
  }

  int n() const { return n_; }
  int x_size() const { return x_size_; }
  std::uint64_t num_messages() const { return num_messages_; }
  std::uint64_t words_per_message() const { return wpm_; }
  std::uint64_t total_words() const { return num_messages_ * wpm_; }
  std::uint64_t seed() const { return seed_; }
  double realized_rate() const {
    if (n_ == 0) return 0.0;
    return std::log2(static_cast<double>(num_messages_)) / n_;
  }

  const std::uint8_t* word_ptr(std::uint64_t m, std::uint64_t r = 0) const {
    return flat_.data() + (m * wpm_ + r) * static_cast<std::uint64_t>(n_);
  }

  std::vector<int> word(std::uint64_t m, std::uint64_t r = 0) const {
    const std::uint8_t* p = word_ptr(m, r);
    return std::vector<int>(p, p + n_);
  }

  bool word_equals(std::uint64_t m, std::uint64_t r, const std::vector<int>& x) const {
    const std::uint8_t* p = word_ptr(m, r);
    for (int i = 0; i < n_; ++i)
      if (p[i] != x[static_cast<std::size_t>(i)]) return false;
    return true;
  }

  std::optional<Layer> layer;
  std::optional<Split> split;
  std::optional<Pmf> x_marginal;  // generating single-letter input law, when known

 private:
  int n_;
  int x_size_;
  std::uint64_t num_messages_;
  std::uint64_t wpm_;
  std::vector<std::uint8_t> flat_;
  std::uint64_t seed_;
};

namespace detail {

inline int realized_bits(int n, double rate, const char* what) {
  if (rate < -1e-12) throw std::invalid_argument(std::string(what) + ": negative rate");
  const double raw = n * rate;
  const long long bits = std::llround(raw);
  if (bits < 0 || bits > 40) throw std::invalid_argument(std::string(what) + ": rate out of range");
  return static_cast<int>(bits);
}

inline void check_storage_budget(std::uint64_t messages, std::uint64_t wpm, int n, const char* what) {
  const std::uint64_t cells = messages * wpm * static_cast<std::uint64_t>(std::max(n, 1));
  if (cells > (1ULL << 28))
    throw std::domain_error(std::string(what) + ": codebook exceeds the enumeration budget");
}

}  // namespace detail

inline Codebook make_explicit_codebook(int n, int x_size, const std::vector<std::vector<int>>& words,
                                       std::uint64_t seed = 0) {
  if (words.empty()) throw std::invalid_argument("make_explicit_codebook: no words");
  std::vector<std::uint8_t> flat;
  flat.reserve(words.size() * static_cast<std::size_t>(n));
  for (const auto& w : words) {
    if (w.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("make_explicit_codebook: word length mismatch");
    for (int s : w) {
      if (s < 0 || s >= x_size) throw std::invalid_argument("make_explicit_codebook: symbol out of range");
      flat.push_back(static_cast<std::uint8_t>(s));
    }
  }
  return Codebook(n, x_size, words.size(), 1, std::move(flat), seed);
}

// 2^round(nR) codewords drawn i.i.d. from p_x.
inline Codebook build_iid_codebook(const Pmf& p_x, int n, double rate, std::uint64_t seed) {
  const int bits = detail::realized_bits(n, rate, "build_iid_codebook");
  const std::uint64_t messages = 1ULL << bits;
  detail::check_storage_budget(messages, 1, n, "build_iid_codebook");
  std::vector<std::uint8_t> flat(messages * static_cast<std::uint64_t>(n));
  for (std::uint64_t m = 0; m < messages; ++m) {
    CounterRng rng(seed, "iid-word", {m});
    for (int i = 0; i < n; ++i)
      flat[m * static_cast<std::uint64_t>(n) + i] =
          static_cast<std::uint8_t>(rng.sample(p_x.probs()));
  }
  Codebook cb(n, p_x.size(), messages, 1, std::move(flat), seed);
  cb.x_marginal = p_x;
  return cb;
}

// Superposition codebook: 2^(n(R-D)) cloud words over the zero-information
// classes, each with 2^(nD) satellites drawn from p_x_given_u inside the
// class. Every satellite's class sequence equals its cloud word, which is
// exactly what makes the satellites of one cloud mutually plausible.
inline Codebook build_superposition_codebook(const ZeroInfoPartition& part, const Pmf& p_u,
                                             const Dmc& p_x_given_u, int n, double rate,
                                             double deniability, std::uint64_t seed) {
  if (deniability < -1e-12 || rate < deniability - 1e-12)
    throw std::invalid_argument("build_superposition_codebook: need R >= D >= 0");
  if (p_u.size() != part.num_classes() || p_x_given_u.in_size != part.num_classes())
    throw std::invalid_argument("build_superposition_codebook: class count mismatch");
  if (p_x_given_u.out_size != part.symbols())
    throw std::invalid_argument("build_superposition_codebook: alphabet mismatch");
  for (int u = 0; u < p_x_given_u.in_size; ++u)
    for (int x = 0; x < p_x_given_u.out_size; ++x)
      if (p_x_given_u.at(u, x) > 0.0 && part.class_of[x] != u)
        throw std::domain_error(
            "build_superposition_codebook: conditional leaks mass outside its class");

  const int sat_bits = detail::realized_bits(n, deniability, "build_superposition_codebook");
  const int cloud_bits = detail::realized_bits(n, rate - deniability, "build_superposition_codebook");
  const std::uint64_t clouds = 1ULL << cloud_bits;
  const std::uint64_t sats = 1ULL << sat_bits;
  detail::check_storage_budget(clouds * sats, 1, n, "build_superposition_codebook");

  Layer layer;
  layer.cloud_words.resize(clouds);
  layer.cloud_of.resize(clouds * sats);
  std::vector<std::uint8_t> flat(clouds * sats * static_cast<std::uint64_t>(n));
  for (std::uint64_t j = 0; j < clouds; ++j) {
    CounterRng crng(seed, "sup-cloud", {j});
    auto& u_word = layer.cloud_words[j];
    u_word.resize(n);
    for (int i = 0; i < n; ++i) u_word[i] = crng.sample(p_u.probs());
    for (std::uint64_t k = 0; k < sats; ++k) {
      const std::uint64_t m = j * sats + k;
      layer.cloud_of[m] = static_cast<int>(j);
      CounterRng srng(seed, "sup-satellite", {j, k});
      for (int i = 0; i < n; ++i)
        flat[m * static_cast<std::uint64_t>(n) + i] =
            static_cast<std::uint8_t>(srng.sample(p_x_given_u.row(u_word[i]).probs()));
    }
  }
  Codebook cb(n, part.symbols(), clouds * sats, 1, std::move(flat), seed);
  cb.layer = std::move(layer);
  cb.split = Split{sat_bits, cloud_bits, 0};
  // composed single-letter input law
  std::vector<double> px(part.symbols(), 0.0);
  for (int u = 0; u < p_u.size(); ++u)
    for (int x = 0; x < part.symbols(); ++x) px[x] += p_u[u] * p_x_given_u.at(u, x);
  cb.x_marginal = Pmf(px);
  return cb;
}

struct BinningAux {
  Pmf p_v;
  Dmc p_u_given_v;  // |V| x |U|
  Dmc p_x_given_u;  // |U| x |X|
};

// Binning codebook: cloud index t from P_V carries the leaked message part;
// within a cloud, entries indexed by (s, r) are drawn through P_{U|V} then
// P_{X|U}. The encoder consumes r as private randomness at transmit time.
inline Codebook build_binning_codebook(const BroadcastChannel& ch, const BinningAux& aux, int n,
                                       double rate_s, double rate_t, double rate_r,
                                       std::uint64_t seed) {
  if (aux.p_v.size() != aux.p_u_given_v.in_size ||
      aux.p_u_given_v.out_size != aux.p_x_given_u.in_size ||
      aux.p_x_given_u.out_size != ch.x_size())
    throw std::invalid_argument("build_binning_codebook: auxiliary chain dimensions do not compose");
  const int s_bits = detail::realized_bits(n, rate_s, "build_binning_codebook");
  const int t_bits = detail::realized_bits(n, rate_t, "build_binning_codebook");
  const int r_bits = detail::realized_bits(n, rate_r, "build_binning_codebook");
  const std::uint64_t clouds = 1ULL << t_bits;
  const std::uint64_t messages = clouds << s_bits;
  const std::uint64_t wpm = 1ULL << r_bits;
  detail::check_storage_budget(messages, wpm, n, "build_binning_codebook");

  Layer layer;
  layer.cloud_words.resize(clouds);
  layer.cloud_of.resize(messages);
  std::vector<std::uint8_t> flat(messages * wpm * static_cast<std::uint64_t>(n));
  for (std::uint64_t t = 0; t < clouds; ++t) {
    CounterRng vrng(seed, "bin-cloud", {t});
    auto& v_word = layer.cloud_words[t];
    v_word.resize(n);
    for (int i = 0; i < n; ++i) v_word[i] = vrng.sample(aux.p_v.probs());
    for (std::uint64_t s = 0; s < (1ULL << s_bits); ++s) {
      const std::uint64_t m = (t << s_bits) | s;
      layer.cloud_of[m] = static_cast<int>(t);
      for (std::uint64_t r = 0; r < wpm; ++r) {
        CounterRng xrng(seed, "bin-word", {t, s, r});
        for (int i = 0; i < n; ++i) {
          const int u = xrng.sample(aux.p_u_given_v.row(v_word[i]).probs());
          flat[(m * wpm + r) * static_cast<std::uint64_t>(n) + i] =
              static_cast<std::uint8_t>(xrng.sample(aux.p_x_given_u.row(u).probs()));
        }
      }
    }
  }
  Codebook cb(n, ch.x_size(), messages, wpm, std::move(flat), seed);
  cb.layer = std::move(layer);
  cb.split = Split{s_bits, t_bits, r_bits};
  // composed single-letter input law
  std::vector<double> px(ch.x_size(), 0.0);
  for (int v = 0; v < aux.p_v.size(); ++v)
    for (int u = 0; u < aux.p_u_given_v.out_size; ++u)
      for (int x = 0; x < ch.x_size(); ++x)
        px[x] += aux.p_v[v] * aux.p_u_given_v.at(v, u) * aux.p_x_given_u.at(u, x);
  cb.x_marginal = Pmf(px);
  return cb;
}

// Alice's encoder: stored word lookup; private randomness picks the r index.
inline std::vector<int> encode(const Codebook& cb, std::uint64_t m, CounterRng& k_a) {
  if (m >= cb.num_messages()) throw std::invalid_argument("encode: message out of range");
  const std::uint64_t r = cb.words_per_message() == 1 ? 0 : k_a.next_below(cb.words_per_message());
  return cb.word(m, r);
}

enum class DecoderKind { MaxLikelihood, StrongTypicality };

struct DecoderConfig {
  DecoderKind kind = DecoderKind::MaxLikelihood;
  double eps = 0.1;  // typicality slack, only for StrongTypicality
};

// Bob's decoder. Maximum likelihood averages over the encoder's private
// randomness; ties break to the smallest message index. The strong
// typicality variant looks for a message with a jointly typical codeword
// and also falls back to the smallest candidate.
inline std::uint64_t decode(const Codebook& cb, const BroadcastChannel& ch,
                            const std::vector<int>& y_vec, const DecoderConfig& cfg = {}) {
  if (y_vec.size() != static_cast<std::size_t>(cb.n()))
    throw std::invalid_argument("decode: output length mismatch");
  const Dmc bob = ch.marginal(Receiver::Bob);
  if (cfg.kind == DecoderKind::StrongTypicality) {
    if (!cb.x_marginal) throw std::invalid_argument("decode: typicality decoding needs the generating law");
    std::vector<double> joint(static_cast<std::size_t>(ch.x_size()) * ch.y_size());
    for (int x = 0; x < ch.x_size(); ++x)
      for (int y = 0; y < ch.y_size(); ++y)
        joint[static_cast<std::size_t>(x) * ch.y_size() + y] = (*cb.x_marginal)[x] * bob.at(x, y);
    JointPmf jxy({ch.x_size(), ch.y_size()}, joint);
    std::uint64_t found = 0;
    bool any = false;
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
        if (is_jointly_typical(cb.word(m, r), y_vec, jxy, cfg.eps)) {
          if (!any) {
            found = m;
            any = true;
          }
          break;
        }
    return any ? found : 0;
  }
  std::uint64_t best = 0;
  double best_l = -1.0;
  for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
    double l = 0.0;
    for (std::uint64_t r = 0; r < cb.words_per_message(); ++r) {
      double prod = 1.0;
      const std::uint8_t* w = cb.word_ptr(m, r);
      for (int i = 0; i < cb.n(); ++i) prod *= bob.at(w[i], y_vec[static_cast<std::size_t>(i)]);
      l += prod;
    }
    if (l > best_l) {
      best_l = l;
      best = m;
    }
  }
  return best;
}

enum class Setting { Message, Transmitter, Receiver };

// Projection from a summoned value back to a message. Message: identity.
// Transmitter: mode of the code-induced posterior over messages given the
// codeword value, smallest index on ties (and when the value is not in the
// codebook at all). Receiver: the decoder.
inline std::uint64_t msg_of(Setting setting, const Codebook& cb, const BroadcastChannel& ch,
                            const std::vector<int>& w, std::uint64_t w_as_message = 0,
                            const DecoderConfig& cfg = {}) {
  switch (setting) {
    case Setting::Message:
      if (w_as_message >= cb.num_messages()) throw std::invalid_argument("msg_of: message out of range");
      return w_as_message;
    case Setting::Transmitter: {
      std::uint64_t best = 0, best_count = 0;
      for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
        std::uint64_t count = 0;
        for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
          if (cb.word_equals(m, r, w)) ++count;
        if (count > best_count) {
          best_count = count;
          best = m;
        }
      }
      return best;  // all-zero posterior also lands on the smallest message
    }
    case Setting::Receiver:
      return decode(cb, ch, w, cfg);
  }
  throw std::logic_error("msg_of: unreachable");
}

// Charlie's faking procedure: resample the confidential part, keep the
// leaked part. s_bits = 0 degenerates to the identity.
inline std::uint64_t fake_message(std::uint64_t m, const Split& split, CounterRng& k_c) {
  const std::uint64_t s_count = 1ULL << split.s_bits;
  const std::uint64_t t = m >> split.s_bits;
  if (t >= (1ULL << split.t_bits)) throw std::invalid_argument("fake_message: split inconsistent with message");
  const std::uint64_t s_fake = split.s_bits == 0 ? 0 : k_c.next_below(s_count);
  return (t << split.s_bits) | s_fake;
}

// Exact conditional law of the transmitter faking given the codeword value:
// pick a cloud with probability proportional to the value's multiplicity in
// it, then a uniform member of that cloud's multiset.
inline std::map<std::vector<int>, double> transmitter_fake_law(const Codebook& cb,
                                                               const std::vector<int>& x_vec) {
  if (!cb.layer) throw std::invalid_argument("transmitter_fake_law: codebook has no cloud layer");
  const auto& layer = *cb.layer;
  const std::uint64_t clouds = layer.cloud_words.size();
  const std::uint64_t sats = cb.total_words() / clouds;
  std::vector<double> cloud_mult(clouds, 0.0);
  double total = 0.0;
  for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
    for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
      if (cb.word_equals(m, r, x_vec)) {
        cloud_mult[layer.cloud_of[m]] += 1.0;
        total += 1.0;
      }
  if (total == 0.0) throw std::domain_error("transmitter_fake_law: value is not a codeword");
  std::map<std::vector<int>, double> law;
  for (std::uint64_t j = 0; j < clouds; ++j) {
    if (cloud_mult[j] == 0.0) continue;
    const double p_cloud = cloud_mult[j] / total;
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m) {
      if (layer.cloud_of[m] != static_cast<int>(j)) continue;
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
        law[cb.word(m, r)] += p_cloud / static_cast<double>(sats * cb.words_per_message());
    }
  }
  return law;
}

inline std::vector<int> fake_transmitter(const Codebook& cb, const std::vector<int>& x_vec,
                                         CounterRng& k_a) {
  auto law = transmitter_fake_law(cb, x_vec);
  std::vector<double> weights;
  weights.reserve(law.size());
  for (const auto& [w, p] : law) weights.push_back(p);
  int pick = k_a.sample(weights);
  auto it = law.begin();
  std::advance(it, pick);
  return it->first;
}

// Exact conditional law of the receiver faking given the class sequence v of
// the received block: the code-induced law of Y restricted to blocks whose
// class sequence is v.
inline std::map<std::vector<int>, double> receiver_fake_law(const Codebook& cb,
                                                            const BroadcastChannel& ch,
                                                            const ZeroInfoPartition& y_part,
                                                            const std::vector<int>& v_seq) {
  const Dmc bob = ch.marginal(Receiver::Bob);
  const int n = cb.n();
  if (v_seq.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("receiver_fake_law: class sequence length mismatch");
  std::uint64_t candidates = 1;
  for (int i = 0; i < n; ++i) {
    candidates *= y_part.classes.at(v_seq[static_cast<std::size_t>(i)]).size();
    if (candidates * cb.total_words() > (1ULL << 26))
      throw std::domain_error("receiver_fake_law: enumeration budget exceeded");
  }
  std::map<std::vector<int>, double> law;
  std::vector<std::size_t> odo(static_cast<std::size_t>(std::max(n, 1)), 0);
  double total = 0.0;
  while (true) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      y[static_cast<std::size_t>(i)] = y_part.classes[v_seq[static_cast<std::size_t>(i)]][odo[static_cast<std::size_t>(i)]];
    double weight = 0.0;
    for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
      for (std::uint64_t r = 0; r < cb.words_per_message(); ++r)
        weight += sequence_likelihood(bob, cb.word(m, r), y);
    if (weight > 0.0) {
      law[y] = weight;
      total += weight;
    }
    if (n == 0) break;
    int i = n - 1;
    while (i >= 0) {
      if (++odo[static_cast<std::size_t>(i)] < y_part.classes[v_seq[static_cast<std::size_t>(i)]].size()) break;
      odo[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  if (total <= 0.0) throw std::domain_error("receiver_fake_law: class sequence has zero probability");
  for (auto& [y, p] : law) p /= total;
  return law;
}

inline std::vector<int> fake_receiver(const Codebook& cb, const BroadcastChannel& ch,
                                      const ZeroInfoPartition& y_part, const std::vector<int>& y_vec,
                                      CounterRng& k_b) {
  auto law = receiver_fake_law(cb, ch, y_part, class_sequence(y_part, y_vec));
  std::vector<double> weights;
  weights.reserve(law.size());
  for (const auto& [y, p] : law) weights.push_back(p);
  int pick = k_b.sample(weights);
  auto it = law.begin();
  std::advance(it, pick);
  return it->first;
}

}  // namespace deniakit
