#pragma once

// Rate-deniability frontier computation. For each target deniability D the
// optimizers maximize the communication rate subject to the deniability
// functional staying at or above D, over the auxiliary distributions that
// parameterize each setting:
//   transmitter: max I(X;Y) s.t. I(X;Y|U0) >= D, U0 the zero-information
//                classes of X against the eavesdropper marginal;
//   receiver:    same with the classes of Y against the degradedness
//                witness P(z|y);
//   message:     max I(Y;V)+I(U;Y|V)-I(U;Z|V) s.t. I(U;Y|V)-I(U;Z|V) >= D
//                over chains V-U-X, with a fast path pinning U=X on
//                physically degraded channels.
// The optimizers are multi-start projected-gradient ascent with an exterior
// penalty and a feasibility polish; message-region outputs are lower bounds
// (the search space is not convex), which the boundary records.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/opt.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/rng.hpp"
#include "deniakit/zeroinfo.hpp"

namespace deniakit {

struct OptimizerConfig {
  int restarts = 32;
  int max_iters = 5000;
  std::uint64_t seed = 1;
  int threads = 0;               // 0 = hardware concurrency
  double feasibility_tol = 1e-7; // slack accepted on the deniability constraint
};

enum class RegionKind { Transmitter, Receiver, Message, MessageClosedForm, Equivocation, ConfidentialPublic };

inline const char* region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::Transmitter: return "tx";
    case RegionKind::Receiver: return "rx";
    case RegionKind::Message: return "message";
    case RegionKind::MessageClosedForm: return "message-closed-form";
    case RegionKind::Equivocation: return "eq";
    case RegionKind::ConfidentialPublic: return "bcc";
  }
  return "?";
}

struct RegionPoint {
  double d_target = 0.0;    // grid value the optimizer was asked for
  double d_achieved = 0.0;  // deniability the reported witness actually delivers
  double rate = 0.0;
  bool feasible = false;
  std::vector<double> p_x;                       // transmitter / receiver witness
  std::vector<double> p_v;                       // message witness
  std::vector<std::vector<double>> p_x_given_v;  // message fast-path witness rows
  std::vector<std::vector<double>> p_u_given_v;  // general message witness rows
  std::vector<std::vector<double>> p_x_given_u;
};

struct RegionBoundary {
  RegionKind kind = RegionKind::Transmitter;
  std::string channel_digest;
  bool lower_bound_only = false;  // optimizer could not certify exactness
  std::vector<RegionPoint> points;
};

inline std::string channel_digest(const BroadcastChannel& ch) {
  std::uint64_t h = CounterRng::fnv1a("broadcast-channel");
  auto mix = [&h](std::uint64_t v) { h = CounterRng::mix64(h ^ (v + 0x9e3779b97f4a7c15ULL)); };
  mix(static_cast<std::uint64_t>(ch.x_size()));
  mix(static_cast<std::uint64_t>(ch.y_size()));
  mix(static_cast<std::uint64_t>(ch.z_size()));
  for (double v : ch.raw_law()) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

inline double row_entropy(const double* row, int n) {
  double h = 0.0;
  for (int i = 0; i < n; ++i) h -= plogp(row[i]);
  return h;
}

// Objective/constraint pair evaluated on a simplex-block parameter vector.
struct ConstrainedProblem {
  SimplexBlocks blocks;
  std::function<double(const std::vector<double>&)> rate;         // maximized
  std::function<double(const std::vector<double>&)> deniability;  // constrained >= D
  std::vector<std::vector<double>> warm_starts;
};

struct SolvePoint {
  std::vector<double> x;
  double rate = 0.0;
  double deniability = 0.0;
  bool feasible = false;
};

inline void fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<double>& x, std::vector<double>& g, double h = 1e-7) {
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double dn = f(probe);
    probe[i] = x[i];
    g[i] = (up - dn) / (2.0 * h);
  }
}

// Maximize rate subject to deniability >= d, one start point.
inline SolvePoint solve_from(const ConstrainedProblem& prob, std::vector<double> start, double d,
                             const OptimizerConfig& cfg) {
  double mu = 64.0;
  std::vector<double> x = std::move(start);
  prob.blocks.project(x);
  for (int round = 0; round < 7; ++round) {
    auto penalized = [&](const std::vector<double>& p) {
      const double gap = d - prob.deniability(p);
      const double viol = gap > 0.0 ? gap : 0.0;
      return prob.rate(p) - mu * viol * viol;
    };
    auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
      fd_gradient(penalized, p, g);
    };
    auto res = projected_gradient_ascent(prob.blocks, x, penalized, grad, cfg.max_iters);
    x = std::move(res.x);
    if (d <= 0.0 || prob.deniability(x) >= d - 1e-12) break;
    mu *= 16.0;
  }
  SolvePoint sp;
  sp.x = std::move(x);
  sp.rate = prob.rate(sp.x);
  sp.deniability = prob.deniability(sp.x);
  sp.feasible = sp.deniability >= d - cfg.feasibility_tol;
  return sp;
}

// Multi-start solve for one grid value; anchor is a maximum-deniability
// point used to polish near-feasible candidates back into the constraint set.
inline SolvePoint solve_grid_point(const ConstrainedProblem& prob, double d,
                                   const OptimizerConfig& cfg, std::uint64_t point_index,
                                   const std::vector<double>& anchor, double anchor_deniability) {
  SolvePoint best;
  best.rate = -std::numeric_limits<double>::infinity();
  auto consider = [&](SolvePoint sp) {
    if (!sp.feasible && d > 0.0 && sp.deniability < d && anchor_deniability >= d - 1e-12) {
      // bisect a blend toward the anchor until the constraint holds
      double lo = 0.0, hi = 1.0;
      std::vector<double> blend(sp.x.size());
      for (int it = 0; it < 60; ++it) {
        const double t = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < blend.size(); ++i)
          blend[i] = (1.0 - t) * sp.x[i] + t * anchor[i];
        prob.blocks.project(blend);
        if (prob.deniability(blend) >= d) hi = t; else lo = t;
      }
      for (std::size_t i = 0; i < blend.size(); ++i)
        blend[i] = (1.0 - hi) * sp.x[i] + hi * anchor[i];
      prob.blocks.project(blend);
      sp.x = blend;
      sp.rate = prob.rate(sp.x);
      sp.deniability = prob.deniability(sp.x);
      sp.feasible = sp.deniability >= d - cfg.feasibility_tol;
    }
    if (sp.feasible && sp.rate > best.rate) best = std::move(sp);
  };

  for (const auto& ws : prob.warm_starts) consider(solve_from(prob, ws, d, cfg));
  for (int r = 0; r < cfg.restarts; ++r) {
    CounterRng rng(cfg.seed, "region-restart", {point_index, static_cast<std::uint64_t>(r)});
    consider(solve_from(prob, prob.blocks.random_point(rng), d, cfg));
  }
  if (anchor_deniability >= d - cfg.feasibility_tol) consider(solve_from(prob, anchor, d, cfg));
  return best;
}

// Maximum of the deniability functional alone (the grid's upper end).
inline SolvePoint maximize_deniability(const ConstrainedProblem& prob, const OptimizerConfig& cfg) {
  SolvePoint best;
  best.deniability = -1.0;
  auto consider = [&](const std::vector<double>& start) {
    auto grad = [&](const std::vector<double>& p, std::vector<double>& g) {
      fd_gradient(prob.deniability, p, g);
    };
    auto res = projected_gradient_ascent(prob.blocks, start, prob.deniability, grad, cfg.max_iters);
    const double den = prob.deniability(res.x);
    if (den > best.deniability) {
      best.x = std::move(res.x);
      best.deniability = den;
    }
  };
  for (const auto& ws : prob.warm_starts) consider(ws);
  for (int r = 0; r < cfg.restarts; ++r) {
    CounterRng rng(cfg.seed, "region-denmax", {static_cast<std::uint64_t>(r)});
    consider(prob.blocks.random_point(rng));
  }
  best.rate = prob.rate(best.x);
  best.feasible = true;
  return best;
}

// I(X;Y) and I(X;Y | classes(X or Y)) evaluators shared by the transmitter
// and receiver regions. All buffers preallocated; hot path is allocation-free.
class InputLawEval {
 public:
  InputLawEval(const Dmc& bob, std::vector<int> class_of_x, std::vector<int> class_of_y)
      : bob_(bob), class_of_x_(std::move(class_of_x)), class_of_y_(std::move(class_of_y)) {
    nx_ = bob_.in_size;
    ny_ = bob_.out_size;
    nu_ = 0;
    for (int c : class_of_x_) nu_ = std::max(nu_, c + 1);
    nv_ = 0;
    for (int c : class_of_y_) nv_ = std::max(nv_, c + 1);
    hy_given_x_.resize(nx_);
    hv_given_x_.resize(nx_);
    for (int x = 0; x < nx_; ++x) {
      hy_given_x_[x] = row_entropy(bob_.rows.data() + static_cast<std::size_t>(x) * ny_, ny_);
      if (nv_ > 0) {
        std::vector<double> agg(nv_, 0.0);
        for (int y = 0; y < ny_; ++y) agg[class_of_y_[y]] += bob_.at(x, y);
        hv_given_x_[x] = row_entropy(agg.data(), nv_);
      }
    }
    py_.resize(ny_);
    su_.resize(static_cast<std::size_t>(std::max(nu_, 1)) * ny_);
    qu_.resize(std::max(nu_, 1));
    pv_.resize(std::max(nv_, 1));
  }

  double rate(const std::vector<double>& p) const {
    double hyx = 0.0;
    std::fill(py_.begin(), py_.end(), 0.0);
    for (int x = 0; x < nx_; ++x) {
      hyx += p[x] * hy_given_x_[x];
      for (int y = 0; y < ny_; ++y) py_[y] += p[x] * bob_.at(x, y);
    }
    return std::max(0.0, row_entropy(py_.data(), ny_) - hyx);
  }

  // I(X;Y|U0) with U0 the classes of X: H(Y|U0) - H(Y|X).
  double deniability_tx(const std::vector<double>& p) const {
    std::fill(su_.begin(), su_.end(), 0.0);
    std::fill(qu_.begin(), qu_.end(), 0.0);
    double hyx = 0.0;
    for (int x = 0; x < nx_; ++x) {
      const int u = class_of_x_[x];
      qu_[u] += p[x];
      hyx += p[x] * hy_given_x_[x];
      for (int y = 0; y < ny_; ++y) su_[static_cast<std::size_t>(u) * ny_ + y] += p[x] * bob_.at(x, y);
    }
    double hy_given_u = 0.0;
    for (int u = 0; u < nu_; ++u) {
      if (qu_[u] <= 0.0) continue;
      for (int y = 0; y < ny_; ++y) {
        const double s = su_[static_cast<std::size_t>(u) * ny_ + y];
        if (s > 0.0) hy_given_u -= s * std::log2(s / qu_[u]);
      }
    }
    return std::max(0.0, hy_given_u - hyx);
  }

  // I(X;Y|V) with V the classes of Y: H(Y) - H(V) - H(Y|X) + H(V|X).
  double deniability_rx(const std::vector<double>& p) const {
    std::fill(py_.begin(), py_.end(), 0.0);
    std::fill(pv_.begin(), pv_.end(), 0.0);
    double hyx = 0.0, hvx = 0.0;
    for (int x = 0; x < nx_; ++x) {
      hyx += p[x] * hy_given_x_[x];
      hvx += p[x] * hv_given_x_[x];
      for (int y = 0; y < ny_; ++y) py_[y] += p[x] * bob_.at(x, y);
    }
    for (int y = 0; y < ny_; ++y) pv_[class_of_y_[y]] += py_[y];
    const double v = row_entropy(py_.data(), ny_) - row_entropy(pv_.data(), nv_) - hyx + hvx;
    return std::max(0.0, v);
  }

 private:
  Dmc bob_;
  std::vector<int> class_of_x_, class_of_y_;
  int nx_, ny_, nu_, nv_;
  std::vector<double> hy_given_x_, hv_given_x_;
  mutable std::vector<double> py_, su_, qu_, pv_;
};

inline RegionBoundary run_region(RegionKind kind, const BroadcastChannel& ch,
                                 const ConstrainedProblem& prob, const std::vector<double>& d_grid,
                                 const OptimizerConfig& cfg,
                                 const std::function<void(RegionPoint&, const std::vector<double>&)>& fill_witness,
                                 bool lower_bound_only) {
  RegionBoundary rb;
  rb.kind = kind;
  rb.channel_digest = channel_digest(ch);
  rb.lower_bound_only = lower_bound_only;
  rb.points.resize(d_grid.size());
  const SolvePoint anchor = maximize_deniability(prob, cfg);
  parallel_for(static_cast<int>(d_grid.size()), cfg.threads, [&](int i) {
    const double d = d_grid[static_cast<std::size_t>(i)];
    RegionPoint& pt = rb.points[static_cast<std::size_t>(i)];
    pt.d_target = d;
    if (d > anchor.deniability + cfg.feasibility_tol) {
      pt.feasible = false;  // flagged: no distribution delivers this much deniability
      return;
    }
    SolvePoint sp = solve_grid_point(prob, d, cfg, static_cast<std::uint64_t>(i), anchor.x,
                                     anchor.deniability);
    if (!sp.feasible) {
      pt.feasible = false;
      return;
    }
    pt.feasible = true;
    pt.rate = sp.rate;
    pt.d_achieved = std::min(sp.rate, sp.deniability);
    fill_witness(pt, sp.x);
  });
  return rb;
}

}  // namespace detail

// Uniform deniability grid from 0 to the channel's maximum (inclusive).
inline std::vector<double> uniform_grid(double d_max, int points = 101) {
  if (points < 2 || d_max < 0.0) throw std::invalid_argument("uniform_grid: bad arguments");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = d_max * i / (points - 1);
  return g;
}

inline RegionBoundary transmitter_region(const BroadcastChannel& ch, const std::vector<double>& d_grid,
                                         const OptimizerConfig& cfg = {}) {
  const Dmc bob = ch.marginal(Receiver::Bob);
  const auto part = zero_info_partition(ch.marginal(Receiver::Judy));
  detail::InputLawEval eval(bob, part.class_of, {});
  detail::ConstrainedProblem prob;
  prob.blocks = SimplexBlocks{{ch.x_size()}};
  prob.rate = [&eval](const std::vector<double>& p) { return eval.rate(p); };
  prob.deniability = [&eval](const std::vector<double>& p) { return eval.deniability_tx(p); };
  prob.warm_starts = {std::vector<double>(ch.x_size(), 1.0 / ch.x_size())};
  return detail::run_region(RegionKind::Transmitter, ch, prob, d_grid, cfg,
                            [](RegionPoint& pt, const std::vector<double>& x) { pt.p_x = x; },
                            /*lower_bound_only=*/false);
}

inline double transmitter_max_deniability(const BroadcastChannel& ch, const OptimizerConfig& cfg = {}) {
  const Dmc bob = ch.marginal(Receiver::Bob);
  const auto part = zero_info_partition(ch.marginal(Receiver::Judy));
  detail::InputLawEval eval(bob, part.class_of, {});
  detail::ConstrainedProblem prob;
  prob.blocks = SimplexBlocks{{ch.x_size()}};
  prob.rate = [&eval](const std::vector<double>& p) { return eval.rate(p); };
  prob.deniability = [&eval](const std::vector<double>& p) { return eval.deniability_tx(p); };
  prob.warm_starts = {std::vector<double>(ch.x_size(), 1.0 / ch.x_size())};
  return detail::maximize_deniability(prob, cfg).deniability;
}

// Receiver achievability region; requires a physically degraded channel.
inline RegionBoundary receiver_region(const BroadcastChannel& ch, const std::vector<double>& d_grid,
                                      const OptimizerConfig& cfg = {}, double degrade_tol = 1e-7) {
  auto degr = is_physically_degraded(ch, degrade_tol);
  if (!degr.degraded)
    throw std::domain_error(
        "receiver_region: channel is not physically degraded (no P(z|y) factorization within "
        "tolerance), which this region requires");
  const auto y_part = zero_info_partition(*degr.witness);
  const Dmc bob = ch.marginal(Receiver::Bob);
  detail::InputLawEval eval(bob, {}, y_part.class_of);
  detail::ConstrainedProblem prob;
  prob.blocks = SimplexBlocks{{ch.x_size()}};
  prob.rate = [&eval](const std::vector<double>& p) { return eval.rate(p); };
  prob.deniability = [&eval](const std::vector<double>& p) { return eval.deniability_rx(p); };
  prob.warm_starts = {std::vector<double>(ch.x_size(), 1.0 / ch.x_size())};
  // achievability only: the paper gives no converse for this setting
  return detail::run_region(RegionKind::Receiver, ch, prob, d_grid, cfg,
                            [](RegionPoint& pt, const std::vector<double>& x) { pt.p_x = x; },
                            /*lower_bound_only=*/true);
}

inline double receiver_max_deniability(const BroadcastChannel& ch, const OptimizerConfig& cfg = {},
                                        double degrade_tol = 1e-7) {
  auto degr = is_physically_degraded(ch, degrade_tol);
  if (!degr.degraded)
    throw std::domain_error(
        "receiver_max_deniability: channel is not physically degraded, which this region requires");
  const auto y_part = zero_info_partition(*degr.witness);
  detail::InputLawEval eval(ch.marginal(Receiver::Bob), {}, y_part.class_of);
  detail::ConstrainedProblem prob;
  prob.blocks = SimplexBlocks{{ch.x_size()}};
  prob.rate = [&eval](const std::vector<double>& p) { return eval.rate(p); };
  prob.deniability = [&eval](const std::vector<double>& p) { return eval.deniability_rx(p); };
  prob.warm_starts = {std::vector<double>(ch.x_size(), 1.0 / ch.x_size())};
  return detail::maximize_deniability(prob, cfg).deniability;
}

struct MessageRegionCaps {
  int v_cap = 0;  // 0 = theorem default |X|+2
  int u_cap = 0;  // 0 = theorem default (|X|+1)(|X|+2)
};

namespace detail {

// Fast-path evaluator for degraded channels with U pinned to X: parameters
// are P_V (nv) followed by the rows of P_{X|V}.
class MessageFastEval {
 public:
  MessageFastEval(const Dmc& bob, const Dmc& judy, int nv)
      : bob_(bob), judy_(judy), nv_(nv), nx_(bob.in_size), ny_(bob.out_size), nz_(judy.out_size) {
    hy_x_.resize(nx_);
    hz_x_.resize(nx_);
    for (int x = 0; x < nx_; ++x) {
      hy_x_[x] = row_entropy(bob_.rows.data() + static_cast<std::size_t>(x) * ny_, ny_);
      hz_x_[x] = row_entropy(judy_.rows.data() + static_cast<std::size_t>(x) * nz_, nz_);
    }
    a_.resize(ny_);
    b_.resize(nz_);
    py_.resize(ny_);
  }

  SimplexBlocks blocks() const {
    std::vector<int> b{nv_};
    for (int v = 0; v < nv_; ++v) b.push_back(nx_);
    return SimplexBlocks{b};
  }

  // F = I(Y;V) + I(X;Y|V) - I(X;Z|V);  G = I(X;Y|V) - I(X;Z|V)
  void eval(const std::vector<double>& p, double& f, double& g) const {
    const double* q = p.data();
    std::fill(py_.begin(), py_.end(), 0.0);
    double hy_given_v = 0.0, hz_given_v = 0.0, hy_given_xv = 0.0, hz_given_xv = 0.0;
    for (int v = 0; v < nv_; ++v) {
      const double* row = p.data() + nv_ + static_cast<std::size_t>(v) * nx_;
      std::fill(a_.begin(), a_.end(), 0.0);
      std::fill(b_.begin(), b_.end(), 0.0);
      for (int x = 0; x < nx_; ++x) {
        if (row[x] <= 0.0) continue;
        hy_given_xv += q[v] * row[x] * hy_x_[x];
        hz_given_xv += q[v] * row[x] * hz_x_[x];
        for (int y = 0; y < ny_; ++y) a_[y] += row[x] * bob_.at(x, y);
        for (int z = 0; z < nz_; ++z) b_[z] += row[x] * judy_.at(x, z);
      }
      hy_given_v += q[v] * row_entropy(a_.data(), ny_);
      hz_given_v += q[v] * row_entropy(b_.data(), nz_);
      for (int y = 0; y < ny_; ++y) py_[y] += q[v] * a_[y];
    }
    const double hy = row_entropy(py_.data(), ny_);
    g = std::max(0.0, (hy_given_v - hy_given_xv) - (hz_given_v - hz_given_xv));
    f = std::max(0.0, (hy - hy_given_v) + g);
  }

  int nv() const { return nv_; }
  int nx() const { return nx_; }

 private:
  Dmc bob_, judy_;
  int nv_, nx_, ny_, nz_;
  std::vector<double> hy_x_, hz_x_;
  mutable std::vector<double> a_, b_, py_;
};

// General evaluator over chains V-U-X: parameters P_V, rows of P_{U|V},
// rows of P_{X|U}.
class MessageGeneralEval {
 public:
  MessageGeneralEval(const Dmc& bob, const Dmc& judy, int nv, int nu)
      : bob_(bob), judy_(judy), nv_(nv), nu_(nu), nx_(bob.in_size), ny_(bob.out_size),
        nz_(judy.out_size) {
    wy_.resize(static_cast<std::size_t>(nu_) * ny_);
    wz_.resize(static_cast<std::size_t>(nu_) * nz_);
    hy_u_.resize(nu_);
    hz_u_.resize(nu_);
    a_.resize(ny_);
    b_.resize(nz_);
    py_.resize(ny_);
  }

  SimplexBlocks blocks() const {
    std::vector<int> b{nv_};
    for (int v = 0; v < nv_; ++v) b.push_back(nu_);
    for (int u = 0; u < nu_; ++u) b.push_back(nx_);
    return SimplexBlocks{b};
  }

  void eval(const std::vector<double>& p, double& f, double& g) const {
    const double* q = p.data();
    const double* bu = p.data() + nv_;                                // nv rows of size nu
    const double* cx = p.data() + nv_ + static_cast<std::size_t>(nv_) * nu_;  // nu rows of size nx
    for (int u = 0; u < nu_; ++u) {
      const double* row = cx + static_cast<std::size_t>(u) * nx_;
      for (int y = 0; y < ny_; ++y) {
        double s = 0.0;
        for (int x = 0; x < nx_; ++x) s += row[x] * bob_.at(x, y);
        wy_[static_cast<std::size_t>(u) * ny_ + y] = s;
      }
      for (int z = 0; z < nz_; ++z) {
        double s = 0.0;
        for (int x = 0; x < nx_; ++x) s += row[x] * judy_.at(x, z);
        wz_[static_cast<std::size_t>(u) * nz_ + z] = s;
      }
      hy_u_[u] = row_entropy(wy_.data() + static_cast<std::size_t>(u) * ny_, ny_);
      hz_u_[u] = row_entropy(wz_.data() + static_cast<std::size_t>(u) * nz_, nz_);
    }
    std::fill(py_.begin(), py_.end(), 0.0);
    double hy_given_v = 0.0, hz_given_v = 0.0, hy_given_uv = 0.0, hz_given_uv = 0.0;
    for (int v = 0; v < nv_; ++v) {
      const double* brow = bu + static_cast<std::size_t>(v) * nu_;
      std::fill(a_.begin(), a_.end(), 0.0);
      std::fill(b_.begin(), b_.end(), 0.0);
      for (int u = 0; u < nu_; ++u) {
        if (brow[u] <= 0.0) continue;
        hy_given_uv += q[v] * brow[u] * hy_u_[u];
        hz_given_uv += q[v] * brow[u] * hz_u_[u];
        for (int y = 0; y < ny_; ++y) a_[y] += brow[u] * wy_[static_cast<std::size_t>(u) * ny_ + y];
        for (int z = 0; z < nz_; ++z) b_[z] += brow[u] * wz_[static_cast<std::size_t>(u) * nz_ + z];
      }
      hy_given_v += q[v] * row_entropy(a_.data(), ny_);
      hz_given_v += q[v] * row_entropy(b_.data(), nz_);
      for (int y = 0; y < ny_; ++y) py_[y] += q[v] * a_[y];
    }
    const double hy = row_entropy(py_.data(), ny_);
    g = std::max(0.0, (hy_given_v - hy_given_uv) - (hz_given_v - hz_given_uv));
    f = std::max(0.0, (hy - hy_given_v) + g);
  }

 private:
  Dmc bob_, judy_;
  int nv_, nu_, nx_, ny_, nz_;
  mutable std::vector<double> wy_, wz_, hy_u_, hz_u_, a_, b_, py_;
};

}  // namespace detail

inline RegionBoundary message_region(const BroadcastChannel& ch, const std::vector<double>& d_grid,
                                     MessageRegionCaps caps = {}, OptimizerConfig cfg = {},
                                     double degrade_tol = 1e-7) {
  if (cfg.restarts == 32) cfg.restarts = 64;  // message search space is rougher by default
  const Dmc bob = ch.marginal(Receiver::Bob);
  const Dmc judy = ch.marginal(Receiver::Judy);
  const int nx = ch.x_size();
  const int v_cap_default = nx + 2;
  const int u_cap_default = (nx + 1) * (nx + 2);
  const int nv = caps.v_cap > 0 ? std::min(caps.v_cap, v_cap_default) : v_cap_default;
  const int nu = caps.u_cap > 0 ? std::min(caps.u_cap, u_cap_default) : u_cap_default;

  const bool degraded = is_physically_degraded(ch, degrade_tol).degraded;
  if (degraded) {
    // U = X is optimal on degraded channels; search over P_V and P_{X|V}.
    detail::MessageFastEval eval(bob, judy, nv);
    detail::ConstrainedProblem prob;
    prob.blocks = eval.blocks();
    prob.rate = [&eval](const std::vector<double>& p) {
      double f, g;
      eval.eval(p, f, g);
      return f;
    };
    prob.deniability = [&eval](const std::vector<double>& p) {
      double f, g;
      eval.eval(p, f, g);
      return g;
    };
    // warm start family: V indexes X through rows blended between identity
    // (no deniability, full rate) and uniform (maximal within-V entropy)
    auto blend_start = [&](double t) {
      std::vector<double> p(prob.blocks.dim(), 0.0);
      for (int v = 0; v < nv; ++v) p[static_cast<std::size_t>(v)] = v < nx ? 1.0 / nx : 0.0;
      for (int v = 0; v < nv; ++v)
        for (int x = 0; x < nx; ++x)
          p[static_cast<std::size_t>(nv + v * nx + x)] =
              (v < nx ? (1.0 - t) * (x == v ? 1.0 : 0.0) + t / nx : 1.0 / nx);
      return p;
    };
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) prob.warm_starts.push_back(blend_start(t));
    return detail::run_region(
        RegionKind::Message, ch, prob, d_grid, cfg,
        [&](RegionPoint& pt, const std::vector<double>& x) {
          pt.p_v.assign(x.begin(), x.begin() + nv);
          pt.p_x_given_v.resize(static_cast<std::size_t>(nv));
          for (int v = 0; v < nv; ++v)
            pt.p_x_given_v[static_cast<std::size_t>(v)].assign(
                x.begin() + nv + static_cast<std::size_t>(v) * nx,
                x.begin() + nv + static_cast<std::size_t>(v + 1) * nx);
        },
        /*lower_bound_only=*/true);
  }

  detail::MessageGeneralEval eval(bob, judy, nv, nu);
  detail::ConstrainedProblem prob;
  prob.blocks = eval.blocks();
  prob.rate = [&eval](const std::vector<double>& p) {
    double f, g;
    eval.eval(p, f, g);
    return f;
  };
  prob.deniability = [&eval](const std::vector<double>& p) {
    double f, g;
    eval.eval(p, f, g);
    return g;
  };
  return detail::run_region(
      RegionKind::Message, ch, prob, d_grid, cfg,
      [&](RegionPoint& pt, const std::vector<double>& x) {
        pt.p_v.assign(x.begin(), x.begin() + nv);
        pt.p_u_given_v.resize(static_cast<std::size_t>(nv));
        for (int v = 0; v < nv; ++v)
          pt.p_u_given_v[static_cast<std::size_t>(v)].assign(
              x.begin() + nv + static_cast<std::size_t>(v) * nu,
              x.begin() + nv + static_cast<std::size_t>(v + 1) * nu);
        pt.p_x_given_u.resize(static_cast<std::size_t>(nu));
        const std::size_t off = static_cast<std::size_t>(nv) + static_cast<std::size_t>(nv) * nu;
        for (int u = 0; u < nu; ++u)
          pt.p_x_given_u[static_cast<std::size_t>(u)].assign(
              x.begin() + off + static_cast<std::size_t>(u) * nx,
              x.begin() + off + static_cast<std::size_t>(u + 1) * nx);
      },
      /*lower_bound_only=*/true);
}

inline double message_max_deniability(const BroadcastChannel& ch, MessageRegionCaps caps = {},
                                      OptimizerConfig cfg = {}, double degrade_tol = 1e-7) {
  const Dmc bob = ch.marginal(Receiver::Bob);
  const Dmc judy = ch.marginal(Receiver::Judy);
  const int nx = ch.x_size();
  const int nv = caps.v_cap > 0 ? std::min(caps.v_cap, nx + 2) : nx + 2;
  if (is_physically_degraded(ch, degrade_tol).degraded) {
    detail::MessageFastEval eval(bob, judy, nv);
    detail::ConstrainedProblem prob;
    prob.blocks = eval.blocks();
    prob.rate = [&eval](const std::vector<double>& p) {
      double f, g;
      eval.eval(p, f, g);
      return f;
    };
    prob.deniability = [&eval](const std::vector<double>& p) {
      double f, g;
      eval.eval(p, f, g);
      return g;
    };
    return detail::maximize_deniability(prob, cfg).deniability;
  }
  const int nu = caps.u_cap > 0 ? std::min(caps.u_cap, (nx + 1) * (nx + 2)) : (nx + 1) * (nx + 2);
  detail::MessageGeneralEval eval(bob, judy, nv, nu);
  detail::ConstrainedProblem prob;
  prob.blocks = eval.blocks();
  prob.rate = [&eval](const std::vector<double>& p) {
    double f, g;
    eval.eval(p, f, g);
    return f;
  };
  prob.deniability = [&eval](const std::vector<double>& p) {
    double f, g;
    eval.eval(p, f, g);
    return g;
  };
  return detail::maximize_deniability(prob, cfg).deniability;
}

enum class BecRegionKind { MessageRegion, Equivocation, ConfidentialPublic };

// Closed-form maximum deniability (or equivocation / confidential rate) at
// message rate r for the noiseless-Bob / erasure-eavesdropper channel.
// The confidential-and-public form is evaluated on its validity domain:
// for erasure probability above one half the public part is the binding
// constraint shape and the curve becomes min(p, r) up to rate p; at exactly
// one half it is the two-sided limit, evaluated at p +- 1e-6 and averaged.
inline double bec_closed_form(BecRegionKind kind, double p, double r) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bec_closed_form: p must be in (0,1)");
  if (r < 0.0 || r > 1.0) throw std::invalid_argument("bec_closed_form: rate out of [0,1]");
  switch (kind) {
    case BecRegionKind::MessageRegion:
      return std::min(p * (1.0 - r) / (1.0 - p), r);
    case BecRegionKind::Equivocation:
      return std::min(p, r);
    case BecRegionKind::ConfidentialPublic: {
      if (std::abs(p - 0.5) < 1e-9) {
        return 0.5 * (bec_closed_form(kind, 0.5 - 1e-6, r) + bec_closed_form(kind, 0.5 + 1e-6, r));
      }
      if (p < 0.5) {
        if (r > 1.0 - p) return 0.0;  // no code of this total rate exists in the region
        return std::max(0.0, std::min(p * (1.0 - p - r) / (1.0 - 2.0 * p), r));
      }
      return r <= p ? std::min(p, r) : 0.0;
    }
  }
  throw std::logic_error("bec_closed_form: unreachable");
}

// Closed-form frontier as max rate per deniability grid value, matching the
// optimizer orientation so regions can be compared grid point by grid point.
inline RegionBoundary bec_closed_form_region(BecRegionKind kind, double p,
                                             const std::vector<double>& d_grid) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bec_closed_form_region: p must be in (0,1)");
  RegionBoundary rb;
  rb.kind = kind == BecRegionKind::MessageRegion ? RegionKind::MessageClosedForm
            : kind == BecRegionKind::Equivocation ? RegionKind::Equivocation
                                                  : RegionKind::ConfidentialPublic;
  rb.channel_digest = channel_digest(channels::bec_eavesdropper(p));
  rb.points.resize(d_grid.size());
  for (std::size_t i = 0; i < d_grid.size(); ++i) {
    RegionPoint& pt = rb.points[i];
    const double d = d_grid[i];
    pt.d_target = d;
    if (d > p + 1e-12) {
      pt.feasible = false;
      continue;
    }
    pt.feasible = true;
    pt.d_achieved = d;
    switch (kind) {
      case BecRegionKind::MessageRegion:
        pt.rate = 1.0 - d * (1.0 - p) / p;
        break;
      case BecRegionKind::Equivocation:
        pt.rate = 1.0;
        break;
      case BecRegionKind::ConfidentialPublic:
        if (std::abs(p - 0.5) < 1e-9) {
          const double lo = 1.0 - (0.5 - 1e-6) - d * (1.0 - 2.0 * (0.5 - 1e-6)) / (0.5 - 1e-6);
          pt.rate = 0.5 * (lo + (0.5 + 1e-6));
        } else if (p < 0.5) {
          pt.rate = 1.0 - p - d * (1.0 - 2.0 * p) / p;
        } else {
          pt.rate = p;
        }
        break;
    }
  }
  return rb;
}

// True when region a sits inside region b along a shared deniability grid.
inline bool region_inclusion_check(const RegionBoundary& a, const RegionBoundary& b,
                                   double tol = 1e-6) {
  if (a.channel_digest != b.channel_digest)
    throw std::invalid_argument("region_inclusion_check: regions computed on different channels");
  if (a.points.size() != b.points.size())
    throw std::invalid_argument("region_inclusion_check: grid mismatch");
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (std::abs(a.points[i].d_target - b.points[i].d_target) > 1e-12)
      throw std::invalid_argument("region_inclusion_check: grid mismatch");
    if (!a.points[i].feasible) continue;
    if (!b.points[i].feasible) return false;
    if (a.points[i].rate > b.points[i].rate + tol) return false;
  }
  return true;
}

// Smallest b-minus-a rate gap over the shared grid (negative = violation).
inline double region_inclusion_margin(const RegionBoundary& a, const RegionBoundary& b) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.points.size() && i < b.points.size(); ++i) {
    if (!a.points[i].feasible || !b.points[i].feasible) continue;
    margin = std::min(margin, b.points[i].rate - a.points[i].rate);
  }
  return margin;
}

}  // namespace deniakit
