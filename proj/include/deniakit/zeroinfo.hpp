#pragma once

// Zero-information partition of an input alphabet: two symbols fall in the
// same class exactly when their eavesdropper rows agree (within row_tol in
// max-norm). The class variable carries no information usable by an
// observer of the channel output, which is what the faking procedures
// randomize over.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "deniakit/channel.hpp"
#include "deniakit/prob.hpp"

namespace deniakit {

struct ZeroInfoPartition {
  std::vector<std::vector<int>> classes;  // ordered by lowest member
  std::vector<int> class_of;              // symbol -> class index

  int num_classes() const { return static_cast<int>(classes.size()); }
  int symbols() const { return static_cast<int>(class_of.size()); }
};

// Groups symbols by row equality against the class representative (the
// first symbol added, i.e. the lowest index in the class).
inline ZeroInfoPartition zero_info_partition(const Dmc& d, double row_tol = 1e-9) {
  ZeroInfoPartition part;
  part.class_of.assign(d.in_size, -1);
  for (int w = 0; w < d.in_size; ++w) {
    int found = -1;
    for (int c = 0; c < part.num_classes() && found < 0; ++c) {
      const int rep = part.classes[c].front();
      double diff = 0.0;
      for (int z = 0; z < d.out_size; ++z) diff = std::max(diff, std::abs(d.at(w, z) - d.at(rep, z)));
      if (diff <= row_tol) found = c;
    }
    if (found < 0) {
      found = part.num_classes();
      part.classes.push_back({});
    }
    part.classes[found].push_back(w);
    part.class_of[w] = found;
  }
  return part;
}

// Channel from class index to output, using each class representative row.
inline Dmc collapse_to_classes(const Dmc& d, const ZeroInfoPartition& part) {
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(part.num_classes()) * d.out_size);
  for (const auto& cls : part.classes)
    for (int z = 0; z < d.out_size; ++z) rows.push_back(d.at(cls.front(), z));
  return Dmc(part.num_classes(), d.out_size, std::move(rows));
}

// Joint law of (W, U0, Z) with U0 the class of W: P(w,u,z) = p(w) 1{u=class(w)} d(z|w).
// Both chains U0-W-Z and W-U0-Z hold on the result.
inline JointPmf zero_info_joint(const Pmf& p_w, const Dmc& d, const ZeroInfoPartition& part) {
  if (p_w.size() != d.in_size || part.symbols() != d.in_size)
    throw std::invalid_argument("zero_info_joint: partition/channel mismatch");
  const int nw = d.in_size, nu = part.num_classes(), nz = d.out_size;
  std::vector<double> probs(static_cast<std::size_t>(nw) * nu * nz, 0.0);
  for (int w = 0; w < nw; ++w) {
    const int u = part.class_of[w];
    for (int z = 0; z < nz; ++z)
      probs[(static_cast<std::size_t>(w) * nu + u) * nz + z] = p_w[w] * d.at(w, z);
  }
  return JointPmf({nw, nu, nz}, std::move(probs));
}

// Per-symbol class sequence of a block.
inline std::vector<int> class_sequence(const ZeroInfoPartition& part, const std::vector<int>& seq) {
  std::vector<int> v;
  v.reserve(seq.size());
  for (int s : seq) {
    if (s < 0 || s >= part.symbols()) throw std::invalid_argument("class_sequence: symbol out of range");
    v.push_back(part.class_of[s]);
  }
  return v;
}

inline std::string format_classes(const ZeroInfoPartition& part, const std::vector<std::string>& names) {
  std::string out;
  for (int c = 0; c < part.num_classes(); ++c) {
    if (c) out += ' ';
    out += '{';
    for (std::size_t i = 0; i < part.classes[c].size(); ++i) {
      if (i) out += ',';
      out += names.at(part.classes[c][i]);
    }
    out += '}';
  }
  return out;
}

}  // namespace deniakit
