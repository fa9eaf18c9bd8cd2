#pragma once

// Discrete memoryless broadcast channel P(y,z|x) over finite alphabets,
// its per-receiver marginals, a numerical physical-degradedness test, and
// blocklength-n helpers (sequence likelihoods, strong typicality).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deniakit/opt.hpp"
#include "deniakit/prob.hpp"

namespace deniakit {

// Row-stochastic transition matrix P(out|in).
struct Dmc {
  int in_size = 0;
  int out_size = 0;
  std::vector<double> rows;  // in_size * out_size, row-major

  Dmc() = default;
  Dmc(int in, int out, std::vector<double> r) : in_size(in), out_size(out), rows(std::move(r)) {
    if (in_size <= 0 || out_size <= 0 ||
        rows.size() != static_cast<std::size_t>(in_size) * out_size)
      throw std::invalid_argument("Dmc: dimension mismatch");
    for (int i = 0; i < in_size; ++i) {
      double s = 0.0;
      for (int o = 0; o < out_size; ++o) {
        double& v = rows[static_cast<std::size_t>(i) * out_size + o];
        if (v < 0.0) {
          if (v < -kEntryClampTol) throw std::invalid_argument("Dmc: negative entry");
          v = 0.0;
        }
        s += v;
      }
      if (std::abs(s - 1.0) > kPmfSumTol)
        throw std::invalid_argument("Dmc: row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
  }

  double at(int in, int out) const { return rows[static_cast<std::size_t>(in) * out_size + out]; }

  Pmf row(int in) const {
    return Pmf(std::vector<double>(rows.begin() + static_cast<std::size_t>(in) * out_size,
                                   rows.begin() + static_cast<std::size_t>(in + 1) * out_size));
  }

  // Output law under input distribution p.
  Pmf push(const Pmf& p) const {
    if (p.size() != in_size) throw std::invalid_argument("Dmc::push: input size mismatch");
    std::vector<double> out(out_size, 0.0);
    for (int i = 0; i < in_size; ++i)
      for (int o = 0; o < out_size; ++o) out[o] += p[i] * at(i, o);
    return Pmf(std::move(out));
  }

  // Composition: this, then next (output of *this feeds next).
  Dmc compose(const Dmc& next) const {
    if (out_size != next.in_size) throw std::invalid_argument("Dmc::compose: size mismatch");
    std::vector<double> r(static_cast<std::size_t>(in_size) * next.out_size, 0.0);
    for (int i = 0; i < in_size; ++i)
      for (int m = 0; m < out_size; ++m)
        for (int o = 0; o < next.out_size; ++o)
          r[static_cast<std::size_t>(i) * next.out_size + o] += at(i, m) * next.at(m, o);
    return Dmc(in_size, next.out_size, std::move(r));
  }
};

enum class Receiver { Bob, Judy };

struct ChannelDiagnostic {
  bool ok = true;
  int bad_row = -1;
  double residual = 0.0;
  std::string message;
};

class BroadcastChannel {
 public:
  BroadcastChannel(int x_size, int y_size, int z_size, std::vector<double> law,
                   std::vector<std::string> x_names = {}, std::vector<std::string> y_names = {},
                   std::vector<std::string> z_names = {})
      : x_(x_size), y_(y_size), z_(z_size), law_(std::move(law)),
        x_names_(std::move(x_names)), y_names_(std::move(y_names)), z_names_(std::move(z_names)) {
    if (x_ <= 0 || y_ <= 0 || z_ <= 0)
      throw std::invalid_argument("BroadcastChannel: non-positive alphabet");
    if (law_.size() != static_cast<std::size_t>(x_) * y_ * z_)
      throw std::invalid_argument("BroadcastChannel: law size does not match alphabets");
    auto d = diagnose();
    if (!d.ok) throw std::domain_error(d.message);
    default_names(x_names_, "x", x_);
    default_names(y_names_, "y", y_);
    default_names(z_names_, "z", z_);
  }

  int x_size() const { return x_; }
  int y_size() const { return y_; }
  int z_size() const { return z_; }
  double law(int x, int y, int z) const {
    return law_[(static_cast<std::size_t>(x) * y_ + y) * z_ + z];
  }
  const std::vector<double>& raw_law() const { return law_; }
  const std::vector<std::string>& x_names() const { return x_names_; }
  const std::vector<std::string>& y_names() const { return y_names_; }
  const std::vector<std::string>& z_names() const { return z_names_; }

  ChannelDiagnostic diagnose() const {
    for (std::size_t i = 0; i < law_.size(); ++i)
      if (law_[i] < -kEntryClampTol)
        return {false, static_cast<int>(i / (static_cast<std::size_t>(y_) * z_)),
                law_[i], "channel law has a negative entry"};
    for (int x = 0; x < x_; ++x) {
      double s = 0.0;
      for (int y = 0; y < y_; ++y)
        for (int z = 0; z < z_; ++z) s += law(x, y, z);
      if (std::abs(s - 1.0) > kPmfSumTol)
        return {false, x, s - 1.0,
                "row x=" + std::to_string(x) + " sums to 1" +
                    (s > 1.0 ? "+" : "") + std::to_string(s - 1.0)};
    }
    return {};
  }

  Dmc marginal(Receiver which) const {
    if (which == Receiver::Bob) {
      std::vector<double> r(static_cast<std::size_t>(x_) * y_, 0.0);
      for (int x = 0; x < x_; ++x)
        for (int y = 0; y < y_; ++y)
          for (int z = 0; z < z_; ++z) r[static_cast<std::size_t>(x) * y_ + y] += law(x, y, z);
      return Dmc(x_, y_, std::move(r));
    }
    std::vector<double> r(static_cast<std::size_t>(x_) * z_, 0.0);
    for (int x = 0; x < x_; ++x)
      for (int y = 0; y < y_; ++y)
        for (int z = 0; z < z_; ++z) r[static_cast<std::size_t>(x) * z_ + z] += law(x, y, z);
    return Dmc(x_, z_, std::move(r));
  }

 private:
  static void default_names(std::vector<std::string>& names, const char* prefix, int n) {
    if (!names.empty()) {
      if (names.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("BroadcastChannel: symbol name count mismatch");
      return;
    }
    for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  }

  int x_, y_, z_;
  std::vector<double> law_;
  std::vector<std::string> x_names_, y_names_, z_names_;
};

struct DegradednessResult {
  bool degraded = false;
  double residual = 0.0;              // max-norm residual of the best factorization found
  std::optional<Dmc> witness;         // P(z|y) with marginal(Judy) ~= witness o marginal(Bob)
};

// Searches for a row-stochastic W with P(z|x) = sum_y P(y|x) W(z|y), by
// projected-gradient least squares on the product of row simplices with
// random restarts. The problem is convex, restarts only guard against
// slow starts.
inline DegradednessResult is_physically_degraded(const BroadcastChannel& ch, double tol = 1e-7,
                                                 int restarts = 8, int max_iters = 10000,
                                                 std::uint64_t seed = 1) {
  const Dmc by = ch.marginal(Receiver::Bob);
  const Dmc jz = ch.marginal(Receiver::Judy);
  const int ny = by.out_size, nz = jz.out_size, nx = by.in_size;

  SimplexBlocks blocks{std::vector<int>(ny, nz)};
  auto unpack = [&](const std::vector<double>& w) { return Dmc(ny, nz, w); };
  auto sq_loss = [&](const std::vector<double>& w) {
    double l = 0.0;
    for (int x = 0; x < nx; ++x)
      for (int z = 0; z < nz; ++z) {
        double acc = 0.0;
        for (int y = 0; y < ny; ++y) acc += by.at(x, y) * w[static_cast<std::size_t>(y) * nz + z];
        const double d = acc - jz.at(x, z);
        l += d * d;
      }
    return -l;  // ascent on the negative loss
  };
  auto grad = [&](const std::vector<double>& w, std::vector<double>& g) {
    std::fill(g.begin(), g.end(), 0.0);
    for (int x = 0; x < nx; ++x)
      for (int z = 0; z < nz; ++z) {
        double acc = 0.0;
        for (int y = 0; y < ny; ++y) acc += by.at(x, y) * w[static_cast<std::size_t>(y) * nz + z];
        const double d = acc - jz.at(x, z);
        for (int y = 0; y < ny; ++y) g[static_cast<std::size_t>(y) * nz + z] -= 2.0 * d * by.at(x, y);
      }
  };
  auto max_residual = [&](const Dmc& w) {
    double r = 0.0;
    const Dmc composed = by.compose(w);
    for (int x = 0; x < nx; ++x)
      for (int z = 0; z < nz; ++z) r = std::max(r, std::abs(composed.at(x, z) - jz.at(x, z)));
    return r;
  };

  DegradednessResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> x0;
    if (r == 0) {
      x0.assign(static_cast<std::size_t>(ny) * nz, 1.0 / nz);
    } else {
      CounterRng rng(seed, "degraded-restart", {static_cast<std::uint64_t>(r)});
      x0 = blocks.random_point(rng);
    }
    auto res = projected_gradient_ascent(blocks, std::move(x0), sq_loss, grad, max_iters, 1e-13);
    const Dmc w = unpack(res.x);
    const double resid = max_residual(w);
    if (resid < best.residual) {
      best.residual = resid;
      best.witness = w;
    }
    if (best.residual <= tol * 0.01) break;
  }
  best.degraded = best.residual <= tol;
  if (!best.degraded) best.witness.reset();
  return best;
}

// Product of per-symbol transition probabilities along a length-n block.
inline double sequence_likelihood(const Dmc& d, const std::vector<int>& in_vec,
                                  const std::vector<int>& out_vec) {
  if (in_vec.size() != out_vec.size())
    throw std::invalid_argument("sequence_likelihood: length mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < in_vec.size(); ++i) {
    if (in_vec[i] < 0 || in_vec[i] >= d.in_size || out_vec[i] < 0 || out_vec[i] >= d.out_size)
      throw std::invalid_argument("sequence_likelihood: symbol out of alphabet range");
    p *= d.at(in_vec[i], out_vec[i]);
  }
  return p;
}

// Strong typicality: max_x |freq(x)/n - p(x)| <= eps/|alphabet|.
inline bool is_strongly_typical(const std::vector<int>& seq, const Pmf& p, double eps) {
  if (seq.empty()) throw std::invalid_argument("is_strongly_typical: empty sequence");
  std::vector<double> freq(p.size(), 0.0);
  for (int s : seq) {
    if (s < 0 || s >= p.size()) throw std::invalid_argument("is_strongly_typical: symbol out of range");
    freq[s] += 1.0;
  }
  const double n = static_cast<double>(seq.size());
  for (int x = 0; x < p.size(); ++x)
    if (std::abs(freq[x] / n - p[x]) > eps / p.size()) return false;
  return true;
}

// Pairwise strong typicality against a 2-way joint, same deviation rule.
inline bool is_jointly_typical(const std::vector<int>& a, const std::vector<int>& b,
                               const JointPmf& joint, double eps) {
  if (a.empty() || a.size() != b.size())
    throw std::invalid_argument("is_jointly_typical: bad sequence lengths");
  const auto& sh = joint.shape();
  std::vector<double> freq(static_cast<std::size_t>(sh[0]) * sh[1], 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= sh[0] || b[i] < 0 || b[i] >= sh[1])
      throw std::invalid_argument("is_jointly_typical: symbol out of range");
    freq[static_cast<std::size_t>(a[i]) * sh[1] + b[i]] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  const double bound = eps / (static_cast<double>(sh[0]) * sh[1]);
  for (int i = 0; i < sh[0]; ++i)
    for (int j = 0; j < sh[1]; ++j)
      if (std::abs(freq[static_cast<std::size_t>(i) * sh[1] + j] / n - joint.at(i, j)) > bound)
        return false;
  return true;
}

// Common parametric channels used throughout the tests and the CLI.
namespace channels {

// Bob sees X perfectly, Judy sees X through a binary erasure channel.
// Alphabets: x,y in {0,1}; z in {0, erasure, 1}.
inline BroadcastChannel bec_eavesdropper(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bec_eavesdropper: p must be in (0,1)");
  std::vector<double> law(2 * 2 * 3, 0.0);
  auto set = [&](int x, int y, int z, double v) { law[(static_cast<std::size_t>(x) * 2 + y) * 3 + z] = v; };
  set(0, 0, 0, 1.0 - p);
  set(0, 0, 1, p);
  set(1, 1, 2, 1.0 - p);
  set(1, 1, 1, p);
  return BroadcastChannel(2, 2, 3, std::move(law), {"0", "1"}, {"0", "1"}, {"0", "e", "1"});
}

// Bob sees X through a binary symmetric channel with crossover q; Judy sees
// a copy of Bob's output.
inline BroadcastChannel bsc_bob(double q) {
  if (!(q >= 0.0 && q <= 0.5)) throw std::invalid_argument("bsc_bob: q must be in [0,0.5]");
  std::vector<double> law(2 * 2 * 2, 0.0);
  auto set = [&](int x, int y, int z, double v) { law[(static_cast<std::size_t>(x) * 2 + y) * 2 + z] = v; };
  set(0, 0, 0, 1.0 - q);
  set(0, 1, 1, q);
  set(1, 1, 1, 1.0 - q);
  set(1, 0, 0, q);
  return BroadcastChannel(2, 2, 2, std::move(law), {"0", "1"}, {"0", "1"}, {"0", "1"});
}

// Ternary noiseless channel to Bob whose eavesdropper cannot tell the first
// two inputs apart: P(z|x) rows (0.3,0.7,0), (0.3,0.7,0), (0,0.4,0.6).
inline BroadcastChannel ternary_example() {
  std::vector<double> law(3 * 3 * 3, 0.0);
  auto set = [&](int x, int y, int z, double v) { law[(static_cast<std::size_t>(x) * 3 + y) * 3 + z] = v; };
  set(0, 0, 0, 0.3);
  set(0, 0, 1, 0.7);
  set(1, 1, 0, 0.3);
  set(1, 1, 1, 0.7);
  set(2, 2, 1, 0.4);
  set(2, 2, 2, 0.6);
  return BroadcastChannel(3, 3, 3, std::move(law), {"w1", "w2", "w3"}, {"w1", "w2", "w3"},
                          {"z1", "z2", "z3"});
}

}  // namespace channels

}  // namespace deniakit
