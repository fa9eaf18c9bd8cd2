#pragma once

// File formats: channel JSON files, codebook dumps, evaluation reports,
// region CSV output with witness sidecars. All floating output uses 9
// significant digits with '.' as the decimal separator; files are written
// atomically (temp file + rename).

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "deniakit/channel.hpp"
#include "deniakit/codec.hpp"
#include "deniakit/evalx.hpp"
#include "deniakit/regions.hpp"

namespace deniakit {

using nlohmann::json;

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

inline void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json channel_to_json(const BroadcastChannel& ch) {
  json j;
  j["x"] = ch.x_names();
  j["y"] = ch.y_names();
  j["z"] = ch.z_names();
  json p = json::array();
  for (int x = 0; x < ch.x_size(); ++x) {
    json px = json::array();
    for (int y = 0; y < ch.y_size(); ++y) {
      json py = json::array();
      for (int z = 0; z < ch.z_size(); ++z) py.push_back(ch.law(x, y, z));
      px.push_back(py);
    }
    p.push_back(px);
  }
  j["p"] = p;
  return j;
}

inline BroadcastChannel channel_from_json(const json& j) {
  const auto xn = j.at("x").get<std::vector<std::string>>();
  const auto yn = j.at("y").get<std::vector<std::string>>();
  const auto zn = j.at("z").get<std::vector<std::string>>();
  const auto& p = j.at("p");
  if (!p.is_array() || p.size() != xn.size())
    throw std::invalid_argument("channel file: 'p' must have one block per x symbol");
  std::vector<double> law;
  law.reserve(xn.size() * yn.size() * zn.size());
  for (const auto& px : p) {
    if (!px.is_array() || px.size() != yn.size())
      throw std::invalid_argument("channel file: each x block needs one row per y symbol");
    for (const auto& py : px) {
      if (!py.is_array() || py.size() != zn.size())
        throw std::invalid_argument("channel file: each y row needs one entry per z symbol");
      for (const auto& v : py) law.push_back(v.get<double>());
    }
  }
  return BroadcastChannel(static_cast<int>(xn.size()), static_cast<int>(yn.size()),
                          static_cast<int>(zn.size()), std::move(law), xn, yn, zn);
}

inline BroadcastChannel load_channel(const std::string& path) {
  return channel_from_json(json::parse(read_file(path)));
}

inline json codebook_to_json(const Codebook& cb, const std::vector<std::string>& x_names) {
  json j;
  j["n"] = cb.n();
  j["messages"] = cb.num_messages();
  j["words_per_message"] = cb.words_per_message();
  j["seed"] = cb.seed();
  json words = json::array();
  for (std::uint64_t m = 0; m < cb.num_messages(); ++m)
    for (std::uint64_t r = 0; r < cb.words_per_message(); ++r) {
      json w = json::array();
      for (int s : cb.word(m, r)) w.push_back(x_names.at(static_cast<std::size_t>(s)));
      words.push_back(w);
    }
  j["words"] = words;
  if (cb.split) j["split"] = {{"s_bits", cb.split->s_bits}, {"t_bits", cb.split->t_bits}, {"r_bits", cb.split->r_bits}};
  if (cb.layer) {
    json clouds = json::array();
    for (const auto& cw : cb.layer->cloud_words) clouds.push_back(cw);
    j["layer"] = {{"cloud_words", clouds}, {"cloud_of", cb.layer->cloud_of}};
  }
  return j;
}

inline const char* setting_name(Setting s) {
  switch (s) {
    case Setting::Message: return "message";
    case Setting::Transmitter: return "transmitter";
    case Setting::Receiver: return "receiver";
  }
  return "?";
}

inline json report_to_json(const EvalReport& rep) {
  json j;
  j["setting"] = setting_name(rep.setting);
  j["n"] = rep.n;
  j["messages"] = rep.messages;
  j["kl_plausibility"] = is_infinite(rep.kl_plausibility) ? json("inf") : json(rep.kl_plausibility);
  j["deniability_rate"] = rep.deniability;
  j["H_M"] = rep.h_m;
  j["H_M_given_Z"] = rep.h_m_given_z;
  j["H_M_given_fake_Z"] = rep.h_m_given_wfake_z;
  if (rep.setting == Setting::Message) {
    j["H_M_fake"] = rep.h_mfake;
    j["entropy_gap"] = rep.abs_dh_m;
  }
  j["constants"] = {{"lambda", rep.lambda}, {"kappa", rep.kappa}, {"mu", rep.mu}};
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json cj;
    cj["name"] = c.name;
    cj["lhs"] = c.lhs;
    cj["rhs"] = c.rhs;
    cj["residual"] = c.residual();
    cj["skipped"] = c.skipped;
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(cj);
  }
  j["bound_checks"] = checks;
  j["enumeration_budget"] = kEnumerationBudget;
  return j;
}

inline std::string region_to_csv(const RegionBoundary& rb) {
  std::string out = "D,R,kind,channel_digest\n";
  for (const auto& pt : rb.points) {
    if (!pt.feasible) continue;
    out += format_g9(pt.d_target);
    out += ',';
    out += format_g9(pt.rate);
    out += ',';
    out += region_kind_name(rb.kind);
    out += ',';
    out += rb.channel_digest;
    out += '\n';
  }
  return out;
}

inline json region_witnesses_json(const RegionBoundary& rb) {
  json j;
  j["kind"] = region_kind_name(rb.kind);
  j["channel_digest"] = rb.channel_digest;
  j["lower_bound_only"] = rb.lower_bound_only;
  json rows = json::object();
  int row = 0;
  for (const auto& pt : rb.points) {
    if (!pt.feasible) {
      json r;
      r["d_target"] = pt.d_target;
      r["feasible"] = false;
      rows[std::to_string(row++)] = r;
      continue;
    }
    json r;
    r["d_target"] = pt.d_target;
    r["d_achieved"] = pt.d_achieved;
    r["rate"] = pt.rate;
    r["feasible"] = true;
    if (!pt.p_x.empty()) r["p_x"] = pt.p_x;
    if (!pt.p_v.empty()) r["p_v"] = pt.p_v;
    if (!pt.p_x_given_v.empty()) r["p_x_given_v"] = pt.p_x_given_v;
    if (!pt.p_u_given_v.empty()) r["p_u_given_v"] = pt.p_u_given_v;
    if (!pt.p_x_given_u.empty()) r["p_x_given_u"] = pt.p_x_given_u;
    rows[std::to_string(row++)] = r;
  }
  j["rows"] = rows;
  return j;
}

}  // namespace deniakit
