#pragma once

// Exact information measures on finite alphabets. All logarithms are base 2
// and 0*log(1/0) is taken as 0. Divergences with a support violation return
// the +infinity sentinel so callers can branch on finiteness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace deniakit {

inline constexpr double kPmfSumTol = 1e-12;     // absolute tolerance on total mass
inline constexpr double kEntryClampTol = 1e-15; // entries this far outside [0,1] are clamped
inline constexpr double kInfoNoiseTol = 1e-12;  // rounding noise allowed on information values

inline double infinite_kl() { return std::numeric_limits<double>::infinity(); }
inline bool is_infinite(double v) { return std::isinf(v); }

namespace detail {

inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) h -= plogp(v);
  return h < 0.0 ? 0.0 : h;
}

inline void validate_mass(std::vector<double>& p, const char* what) {
  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) {
      if (v < -kEntryClampTol)
        throw std::invalid_argument(std::string(what) + ": negative entry " + std::to_string(v));
      v = 0.0;
    } else if (v > 1.0 && v < 1.0 + kEntryClampTol) {
      v = 1.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kPmfSumTol)
    throw std::invalid_argument(std::string(what) + ": mass sums to " + std::to_string(sum));
}

// Negative information values within rounding noise collapse to zero;
// anything worse indicates an internal inconsistency.
inline double clamp_info(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v >= -kInfoNoiseTol) return 0.0;
  throw std::logic_error(std::string(what) + ": negative information value " + std::to_string(v));
}

}  // namespace detail

class Pmf {
 public:
  explicit Pmf(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("Pmf: empty support");
    detail::validate_mass(p_, "Pmf");
  }

  static Pmf uniform(int n) {
    if (n <= 0) throw std::invalid_argument("Pmf::uniform: need positive support");
    return Pmf(std::vector<double>(n, 1.0 / n));
  }

  static Pmf point_mass(int n, int at) {
    if (at < 0 || at >= n) throw std::invalid_argument("Pmf::point_mass: index out of range");
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return Pmf(std::move(p));
  }

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& probs() const { return p_; }

 private:
  std::vector<double> p_;
};

// Joint distribution over 2 or 3 finite variables, stored row-major.
class JointPmf {
 public:
  JointPmf(std::vector<int> shape, std::vector<double> probs)
      : shape_(std::move(shape)), p_(std::move(probs)) {
    if (shape_.size() != 2 && shape_.size() != 3)
      throw std::invalid_argument("JointPmf: shape must have 2 or 3 axes");
    std::size_t total = 1;
    for (int s : shape_) {
      if (s <= 0) throw std::invalid_argument("JointPmf: non-positive axis length");
      total *= static_cast<std::size_t>(s);
    }
    if (p_.size() != total) throw std::invalid_argument("JointPmf: size does not match shape");
    detail::validate_mass(p_, "JointPmf");
  }

  int axes() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& probs() const { return p_; }

  double at(int i, int j) const { return p_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  double at(int i, int j, int k) const {
    return p_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  Pmf marginal(int axis) const {
    if (axis < 0 || axis >= axes()) throw std::invalid_argument("JointPmf::marginal: bad axis");
    std::vector<double> m(static_cast<std::size_t>(shape_[axis]), 0.0);
    for_each([&](const int* ix, double v) { m[ix[axis]] += v; });
    return Pmf(std::move(m));
  }

  JointPmf marginal_pair(int a, int b) const {
    if (axes() != 3 || a == b) throw std::invalid_argument("JointPmf::marginal_pair: need distinct axes of a 3-way joint");
    std::vector<double> m(static_cast<std::size_t>(shape_[a]) * shape_[b], 0.0);
    for_each([&](const int* ix, double v) { m[static_cast<std::size_t>(ix[a]) * shape_[b] + ix[b]] += v; });
    return JointPmf({shape_[a], shape_[b]}, std::move(m));
  }

  template <typename F>
  void for_each(F&& f) const {
    int ix[3] = {0, 0, 0};
    if (axes() == 2) {
      std::size_t flat = 0;
      for (ix[0] = 0; ix[0] < shape_[0]; ++ix[0])
        for (ix[1] = 0; ix[1] < shape_[1]; ++ix[1]) f(ix, p_[flat++]);
    } else {
      std::size_t flat = 0;
      for (ix[0] = 0; ix[0] < shape_[0]; ++ix[0])
        for (ix[1] = 0; ix[1] < shape_[1]; ++ix[1])
          for (ix[2] = 0; ix[2] < shape_[2]; ++ix[2]) f(ix, p_[flat++]);
    }
  }

 private:
  std::vector<int> shape_;
  std::vector<double> p_;
};

inline double entropy(const Pmf& p) { return detail::entropy_of(p.probs()); }

inline double entropy(const JointPmf& j) { return detail::entropy_of(j.probs()); }

namespace detail {

inline double kl_flat(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) return infinite_kl();
      kl += p[i] * std::log2(p[i] / q[i]);
    }
  }
  return clamp_info(kl, "kl_divergence");
}

}  // namespace detail

inline double kl_divergence(const Pmf& p, const Pmf& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: shape mismatch");
  return detail::kl_flat(p.probs(), q.probs());
}

inline double kl_divergence(const JointPmf& p, const JointPmf& q) {
  if (p.shape() != q.shape()) throw std::invalid_argument("kl_divergence: shape mismatch");
  return detail::kl_flat(p.probs(), q.probs());
}

// I(A;B) for a 2-way joint, clamped to [0, min(H(A), H(B))].
inline double mutual_information(const JointPmf& j) {
  if (j.axes() != 2) throw std::invalid_argument("mutual_information: need a 2-way joint");
  const double ha = entropy(j.marginal(0));
  const double hb = entropy(j.marginal(1));
  double mi = detail::clamp_info(ha + hb - entropy(j), "mutual_information");
  const double cap = std::min(ha, hb);
  if (mi > cap) {
    if (mi > cap + kInfoNoiseTol)
      throw std::logic_error("mutual_information: exceeds entropy cap");
    mi = cap;
  }
  return mi;
}

// I(A;B|C) for a 3-way joint over (A,B,C).
inline double conditional_mutual_information(const JointPmf& j) {
  if (j.axes() != 3) throw std::invalid_argument("conditional_mutual_information: need a 3-way joint");
  const auto& sh = j.shape();
  double cmi = 0.0;
  for (int c = 0; c < sh[2]; ++c) {
    double pc = 0.0;
    std::vector<double> pa(sh[0], 0.0), pb(sh[1], 0.0), pab;
    pab.reserve(static_cast<std::size_t>(sh[0]) * sh[1]);
    for (int a = 0; a < sh[0]; ++a)
      for (int b = 0; b < sh[1]; ++b) {
        const double v = j.at(a, b, c);
        pc += v;
        pa[a] += v;
        pb[b] += v;
        pab.push_back(v);
      }
    if (pc <= 0.0) continue;
    // H terms of the unnormalized slice; the normalization shifts cancel.
    double h = 0.0;
    for (double v : pa) h -= detail::plogp(v / pc);
    for (double v : pb) h -= detail::plogp(v / pc);
    for (double v : pab) h += detail::plogp(v / pc);
    cmi += pc * h;
  }
  return detail::clamp_info(cmi, "conditional_mutual_information");
}

// l1 distance between equally shaped mass vectors.
inline double total_variation_l1(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation_l1: shape mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d;
}

}  // namespace deniakit
