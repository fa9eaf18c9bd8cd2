// deniakit: plausibly deniable communication toolkit for discrete memoryless
// broadcast channels. Subcommands validate channels, print zero-information
// partitions, compute rate-deniability frontiers, and build/evaluate codes
// with their faking procedures by exact enumeration.
//
// Exit codes: 0 success, 1 domain failure, 2 usage or parse failure.
// Every run that writes files also writes <out>.manifest.json with the
// resolved configuration; `deniakit rerun <manifest>` reproduces the run
// byte for byte.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deniakit/channel.hpp"
#include "deniakit/codec.hpp"
#include "deniakit/evalx.hpp"
#include "deniakit/io.hpp"
#include "deniakit/prob.hpp"
#include "deniakit/regions.hpp"
#include "deniakit/zeroinfo.hpp"

namespace dk = deniakit;
using dk::json;

namespace {

int run_argv(std::vector<std::string> args);  // forward, used by rerun

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DENIAKIT_SEED")) return std::strtoull(env, nullptr, 10);
  return 1;
}

struct ChannelSource {
  std::string file;
  double bec_p = -1.0;
  double bsc_q = -1.0;
  bool example2 = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("channel", file, "channel JSON file");
    cmd->add_option("--bec", bec_p, "noiseless Bob, erasure eavesdropper with this erasure probability");
    cmd->add_option("--bsc", bsc_q, "binary symmetric Bob with this crossover, Judy copies Bob");
    cmd->add_flag("--example2", example2, "built-in ternary channel with two indistinguishable inputs");
  }

  dk::BroadcastChannel load() const {
    int sources = (!file.empty()) + (bec_p >= 0.0) + (bsc_q >= 0.0) + example2;
    if (sources != 1)
      throw CLI::ValidationError("channel", "give exactly one of: a channel file, --bec, --bsc, --example2");
    if (!file.empty()) return dk::load_channel(file);
    if (bec_p >= 0.0) return dk::channels::bec_eavesdropper(bec_p);
    if (bsc_q >= 0.0) return dk::channels::bsc_bob(bsc_q);
    return dk::channels::ternary_example();
  }

  json describe() const {
    json j;
    if (!file.empty()) j["file"] = file;
    if (bec_p >= 0.0) j["bec"] = bec_p;
    if (bsc_q >= 0.0) j["bsc"] = bsc_q;
    if (example2) j["example2"] = true;
    return j;
  }
};

void write_manifest(const std::string& primary_out, const std::vector<std::string>& argv,
                    const json& config, const std::vector<std::string>& outputs) {
  json m;
  m["argv"] = argv;
  m["config"] = config;
  m["outputs"] = outputs;
  dk::atomic_write_file(primary_out + ".manifest.json", m.dump(2) + "\n");
}

void print_dmc(const dk::Dmc& d, const std::vector<std::string>& in_names,
               const std::vector<std::string>& out_names) {
  for (int i = 0; i < d.in_size; ++i) {
    std::cout << "  " << in_names.at(static_cast<std::size_t>(i)) << ":";
    for (int o = 0; o < d.out_size; ++o)
      std::cout << " " << out_names.at(static_cast<std::size_t>(o)) << "=" << dk::format_g9(d.at(i, o));
    std::cout << "\n";
  }
}

int cmd_channel(const std::string& action, const ChannelSource& src, double tol,
                const std::string& out, const std::vector<std::string>& argv) {
  if (action == "validate") {
    auto ch = src.load();  // constructor runs the invariants
    std::cout << "ok: " << ch.x_size() << "x" << ch.y_size() << "x" << ch.z_size()
              << " channel, digest " << dk::channel_digest(ch) << "\n";
    return 0;
  }
  auto ch = src.load();
  if (action == "marginals") {
    std::cout << "P(y|x):\n";
    print_dmc(ch.marginal(dk::Receiver::Bob), ch.x_names(), ch.y_names());
    std::cout << "P(z|x):\n";
    print_dmc(ch.marginal(dk::Receiver::Judy), ch.x_names(), ch.z_names());
    return 0;
  }
  if (action == "degraded") {
    auto res = dk::is_physically_degraded(ch, tol);
    std::cout << "degraded: " << (res.degraded ? "yes" : "no")
              << " (max residual " << dk::format_g9(res.residual) << ", tol " << dk::format_g9(tol)
              << ")\n";
    if (res.degraded) {
      std::cout << "witness P(z|y):\n";
      print_dmc(*res.witness, ch.y_names(), ch.z_names());
      if (!out.empty()) {
        json w;
        w["residual"] = res.residual;
        w["rows"] = res.witness->rows;
        w["y"] = ch.y_names();
        w["z"] = ch.z_names();
        dk::atomic_write_file(out, w.dump(2) + "\n");
        json cfg;
        cfg["channel"] = src.describe();
        cfg["tol"] = tol;
        write_manifest(out, argv, cfg, {out});
      }
    }
    return 0;
  }
  if (action == "dump") {
    if (out.empty()) throw CLI::ValidationError("--out", "dump needs an output path");
    dk::atomic_write_file(out, dk::channel_to_json(ch).dump(2) + "\n");
    json cfg;
    cfg["channel"] = src.describe();
    write_manifest(out, argv, cfg, {out});
    std::cout << "wrote " << out << "\n";
    return 0;
  }
  throw CLI::ValidationError("action", "unknown channel action: " + action);
}

int cmd_zeroinfo(const ChannelSource& src, const std::string& side, double row_tol, double tol) {
  auto ch = src.load();
  if (side == "tx") {
    auto part = dk::zero_info_partition(ch.marginal(dk::Receiver::Judy), row_tol);
    std::cout << dk::format_classes(part, ch.x_names()) << "\n";
    return 0;
  }
  auto degr = dk::is_physically_degraded(ch, tol);
  if (!degr.degraded)
    throw std::domain_error(
        "receiver-side classes need a physically degraded channel (no P(z|y) factorization "
        "within tolerance " + dk::format_g9(tol) + "; best residual " + dk::format_g9(degr.residual) + ")");
  auto part = dk::zero_info_partition(*degr.witness, row_tol);
  std::cout << dk::format_classes(part, ch.y_names()) << "\n";
  return 0;
}

int cmd_region(const std::string& kind, const ChannelSource& src, int grid_n, bool closed_form,
               int cap_v, int cap_u, std::uint64_t seed, int threads, double tol,
               const std::string& out, const std::vector<std::string>& argv) {
  dk::OptimizerConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  dk::RegionBoundary rb;
  const bool bec_kind = kind == "eq" || kind == "bcc" || (kind == "message" && closed_form);
  if (bec_kind) {
    if (src.bec_p < 0.0)
      throw std::domain_error("closed-form regions are defined for --bec channels only");
    const double p = src.bec_p;
    auto grid = dk::uniform_grid(p, grid_n);
    const auto k = kind == "eq"    ? dk::BecRegionKind::Equivocation
                   : kind == "bcc" ? dk::BecRegionKind::ConfidentialPublic
                                   : dk::BecRegionKind::MessageRegion;
    rb = dk::bec_closed_form_region(k, p, grid);
    if (std::abs(p - 0.5) < 1e-9 && k == dk::BecRegionKind::ConfidentialPublic)
      std::cout << "note: confidential-public curve at p=1/2 uses the two-sided limit form\n";
  } else {
    auto ch = src.load();
    double d_max = 0.0;
    if (kind == "tx") d_max = dk::transmitter_max_deniability(ch, cfg);
    else if (kind == "rx") d_max = dk::receiver_max_deniability(ch, cfg, tol);
    else if (kind == "message") d_max = dk::message_max_deniability(ch, {cap_v, cap_u}, cfg, tol);
    else throw CLI::ValidationError("kind", "unknown region kind: " + kind);
    auto grid = dk::uniform_grid(std::max(d_max, 0.0), grid_n);
    if (kind == "tx") rb = dk::transmitter_region(ch, grid, cfg);
    else if (kind == "rx") rb = dk::receiver_region(ch, grid, cfg, tol);
    else rb = dk::message_region(ch, grid, {cap_v, cap_u}, cfg, tol);
  }
  const std::string csv = dk::region_to_csv(rb);
  if (out.empty()) {
    std::cout << csv;
    return 0;
  }
  dk::atomic_write_file(out, csv);
  const std::string wpath = out + ".witnesses.json";
  dk::atomic_write_file(wpath, dk::region_witnesses_json(rb).dump(2) + "\n");
  json config;
  config["kind"] = kind;
  config["channel"] = src.describe();
  config["grid"] = grid_n;
  config["closed_form"] = closed_form;
  config["caps"] = {{"v", cap_v}, {"u", cap_u}};
  config["seed"] = seed;
  config["threads"] = threads;
  config["tol"] = tol;
  write_manifest(out, argv, config, {out, wpath});
  std::cout << "wrote " << out << " (" << rb.points.size() << " grid points)"
            << (rb.lower_bound_only ? " [optimizer lower bound]" : "") << "\n";
  return 0;
}

int cmd_simulate(const std::string& setting_name, const ChannelSource& src, int n, double rate,
                 double den, double rs, double rt, double rr, std::uint64_t seed, std::uint64_t trials,
                 double tol, const std::string& out, const std::vector<std::string>& argv) {
  auto ch = src.load();
  dk::Setting setting;
  if (setting_name == "message") setting = dk::Setting::Message;
  else if (setting_name == "tx") setting = dk::Setting::Transmitter;
  else if (setting_name == "rx") setting = dk::Setting::Receiver;
  else throw CLI::ValidationError("--setting", "unknown setting: " + setting_name);

  json report;
  report["setting"] = setting_name;
  report["n"] = n;
  report["seed"] = seed;

  dk::FakeConfig fake;
  std::optional<dk::Codebook> cb;
  if (setting == dk::Setting::Transmitter) {
    auto part = dk::zero_info_partition(ch.marginal(dk::Receiver::Judy));
    // class masses and in-class conditionals induced by the uniform input
    std::vector<double> pu(static_cast<std::size_t>(part.num_classes()), 0.0);
    for (int c = 0; c < part.num_classes(); ++c)
      pu[static_cast<std::size_t>(c)] =
          static_cast<double>(part.classes[static_cast<std::size_t>(c)].size()) / ch.x_size();
    std::vector<double> rows(static_cast<std::size_t>(part.num_classes()) * ch.x_size(), 0.0);
    for (int c = 0; c < part.num_classes(); ++c)
      for (int x : part.classes[static_cast<std::size_t>(c)])
        rows[static_cast<std::size_t>(c) * ch.x_size() + x] =
            1.0 / part.classes[static_cast<std::size_t>(c)].size();
    cb = dk::build_superposition_codebook(part, dk::Pmf(pu),
                                          dk::Dmc(part.num_classes(), ch.x_size(), rows), n, rate,
                                          den, seed);
  } else if (setting == dk::Setting::Receiver) {
    auto degr = dk::is_physically_degraded(ch, tol);
    if (!degr.degraded)
      throw std::domain_error("receiver simulation needs a physically degraded channel");
    fake.y_partition = dk::zero_info_partition(*degr.witness);
    cb = dk::build_iid_codebook(dk::Pmf::uniform(ch.x_size()), n, rate, seed);
  } else {
    dk::BinningAux aux{dk::Pmf::uniform(1),
                       dk::Dmc(1, ch.x_size(), std::vector<double>(
                                                   static_cast<std::size_t>(ch.x_size()),
                                                   1.0 / ch.x_size())),
                       [&] {
                         std::vector<double> ident(static_cast<std::size_t>(ch.x_size()) * ch.x_size(), 0.0);
                         for (int i = 0; i < ch.x_size(); ++i)
                           ident[static_cast<std::size_t>(i) * ch.x_size() + i] = 1.0;
                         return dk::Dmc(ch.x_size(), ch.x_size(), ident);
                       }()};
    cb = dk::build_binning_codebook(ch, aux, n, rs, rt, rr, seed);
    fake.split = cb->split;
  }
  report["messages"] = cb->num_messages();
  report["words_per_message"] = cb->words_per_message();
  report["realized_rate"] = cb->realized_rate();
  report["codebook"] = dk::codebook_to_json(*cb, ch.x_names());

  bool exact_done = false;
  try {
    auto j = dk::exact_joint(setting, *cb, ch, fake);
    auto rep = dk::equivocation_report(j, *cb, ch);
    report["evaluation"] = dk::report_to_json(rep);
    report["markov_deviation"] = dk::markov_deviation(j);
    report["error_probability"] = dk::error_probability(*cb, ch);
    exact_done = true;
  } catch (const std::domain_error& e) {
    report["exact_evaluation_skipped"] = e.what();
  }
  if (!exact_done) {
    if (trials == 0)
      throw std::domain_error(
          "configuration exceeds the exact enumeration budget; pass --trials to estimate the "
          "error probability by simulation (plausibility has no sampled estimator here)");
    auto mc = dk::monte_carlo(*cb, ch, trials, seed);
    report["monte_carlo"] = {{"trials", mc.trials},
                             {"errors", mc.errors},
                             {"estimate", mc.estimate},
                             {"wilson95", {mc.lo, mc.hi}}};
  }

  const std::string text = report.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  dk::atomic_write_file(out, text);
  json config;
  config["setting"] = setting_name;
  config["channel"] = src.describe();
  config["n"] = n;
  config["rate"] = rate;
  config["den"] = den;
  config["rs"] = rs;
  config["rt"] = rt;
  config["rr"] = rr;
  config["seed"] = seed;
  config["trials"] = trials;
  config["tol"] = tol;
  write_manifest(out, argv, config, {out});
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out_dir) {
  json m = json::parse(dk::read_file(manifest_path));
  std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
  if (!out_dir.empty()) {
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
      if (argv[i] == "--out") {
        const std::string base = argv[i + 1].substr(argv[i + 1].find_last_of('/') + 1);
        argv[i + 1] = out_dir + "/" + base;
      }
  }
  return run_argv(argv);
}

int run_argv(std::vector<std::string> args) {
  CLI::App app{"plausibly deniable communication over broadcast channels"};
  app.require_subcommand(1);

  // channel
  auto* channel = app.add_subcommand("channel", "validate a channel, print marginals, test degradedness");
  std::string ch_action;
  channel->add_option("action", ch_action, "validate | marginals | degraded | dump")->required();
  ChannelSource ch_src;
  ch_src.attach(channel);
  double ch_tol = 1e-7;
  channel->add_option("--tol", ch_tol, "degradedness residual tolerance");
  std::string ch_out;
  channel->add_option("--out", ch_out, "output file for witness or channel dump");

  // zeroinfo
  auto* zeroinfo = app.add_subcommand("zeroinfo", "print the zero-information classes");
  ChannelSource zi_src;
  zi_src.attach(zeroinfo);
  std::string zi_side = "tx";
  zeroinfo->add_option("--side", zi_side, "tx (classes of X) or rx (classes of Y under the witness)");
  double zi_row_tol = 1e-9;
  zeroinfo->add_option("--row-tol", zi_row_tol, "max-norm tolerance for row equality");
  double zi_tol = 1e-7;
  zeroinfo->add_option("--tol", zi_tol, "degradedness residual tolerance (rx side)");

  // region
  auto* region = app.add_subcommand("region", "compute a rate-deniability frontier as CSV");
  std::string rg_kind;
  region->add_option("kind", rg_kind, "message | tx | rx | eq | bcc")->required();
  ChannelSource rg_src;
  rg_src.attach(region);
  int rg_grid = 101;
  region->add_option("--grid", rg_grid, "number of deniability grid points");
  bool rg_closed = false;
  region->add_flag("--closed-form", rg_closed, "use the erasure-family closed form (message kind)");
  int rg_cap_v = 0, rg_cap_u = 0;
  region->add_option("--cap-v", rg_cap_v, "cap on |V| (message kind)");
  region->add_option("--cap-u", rg_cap_u, "cap on |U| (message kind)");
  std::uint64_t rg_seed = default_seed();
  region->add_option("--seed", rg_seed, "optimizer restart seed");
  int rg_threads = 0;
  region->add_option("--threads", rg_threads, "worker thread cap (0 = hardware)");
  double rg_tol = 1e-7;
  region->add_option("--tol", rg_tol, "degradedness residual tolerance");
  std::string rg_out;
  region->add_option("--out", rg_out, "CSV output path (witnesses go to <out>.witnesses.json)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "build a code and evaluate it exactly");
  std::string sm_setting;
  simulate->add_option("--setting", sm_setting, "message | tx | rx")->required();
  ChannelSource sm_src;
  sm_src.attach(simulate);
  int sm_n = 2;
  simulate->add_option("--n", sm_n, "blocklength")->required();
  double sm_rate = 0.5, sm_den = 0.0, sm_rs = 0.0, sm_rt = 0.0, sm_rr = 0.0;
  simulate->add_option("--rate", sm_rate, "message rate R (tx, rx settings)");
  simulate->add_option("--den", sm_den, "deniability rate D (tx setting)");
  simulate->add_option("--rs", sm_rs, "confidential rate (message setting)");
  simulate->add_option("--rt", sm_rt, "leaked rate (message setting)");
  simulate->add_option("--rr", sm_rr, "encoder randomness rate (message setting)");
  std::uint64_t sm_seed = default_seed();
  simulate->add_option("--seed", sm_seed, "construction and simulation seed");
  std::uint64_t sm_trials = 0;
  simulate->add_option("--trials", sm_trials, "Monte Carlo trials when enumeration is out of budget");
  double sm_tol = 1e-7;
  simulate->add_option("--tol", sm_tol, "degradedness residual tolerance");
  std::string sm_out;
  simulate->add_option("--out", sm_out, "JSON report path");

  // rerun
  auto* rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
  std::string rr_manifest;
  rerun->add_option("manifest", rr_manifest, "manifest JSON written by a previous run")->required();
  std::string rr_out_dir;
  rerun->add_option("--out-dir", rr_out_dir, "redirect outputs into this directory");

  // CLI11 parses argv-style reversed vectors
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);

  if (channel->parsed()) return cmd_channel(ch_action, ch_src, ch_tol, ch_out, args);
  if (zeroinfo->parsed()) return cmd_zeroinfo(zi_src, zi_side, zi_row_tol, zi_tol);
  if (region->parsed())
    return cmd_region(rg_kind, rg_src, rg_grid, rg_closed, rg_cap_v, rg_cap_u, rg_seed, rg_threads,
                      rg_tol, rg_out, args);
  if (simulate->parsed())
    return cmd_simulate(sm_setting, sm_src, sm_n, sm_rate, sm_den, sm_rs, sm_rt, sm_rr, sm_seed,
                        sm_trials, sm_tol, sm_out, args);
  if (rerun->parsed()) return cmd_rerun(rr_manifest, rr_out_dir);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_argv(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "file format error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
