// swipt: command-line front end.
//
//   swipt fit-eh   --synthetic --points 2000 --seed 7 -o eh.json
//   swipt design   --m 32 --n 1 --pa 5 --rho 1 --eh eh.json -o design.json
//   swipt train    --topology p2p --m 16 --snr 50 --pa 5 --lambda 0 -o sys.json
//   swipt sweep    --designer algorithmic --m 16 --pa 5 --rho-grid 0:1:11 -o sweep.csv
//   swipt simulate --design design.json --snr 50 --trials 100000
//
// Options may also come from a TOML/INI file (--config) with one section per
// subcommand; flags given on the command line win.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "swipt/swipt.hpp"

namespace {

using namespace swipt;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hash of every option value of a subcommand except output destinations, so
// identical experiments hash identically wherever they write.
std::string config_hash(const CLI::App& sub) {
  static const std::set<std::string> kSkip{"--output", "--trace", "--extract", "--dataset-out", "--config",
                                           "--help"};
  std::string canon = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || kSkip.count(name)) continue;
    canon += "\n" + name + "=";
    const auto& res = opt->results();
    if (res.empty()) {
      canon += opt->get_default_str();
    } else {
      for (std::size_t i = 0; i < res.size(); ++i) canon += (i ? "," : "") + res[i];
    }
  }
  return hex64(fnv1a64(canon));
}

RunMeta make_meta(const CLI::App& sub, std::uint64_t seed) {
  RunMeta m;
  m.config_hash = config_hash(sub);
  m.seed = seed;
  return m;
}

void print_meta(const RunMeta& m) { std::cout << csv_header_line(m); }

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_double(item));
    } catch (const FormatError&) {
      throw UsageError("invalid number '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

// "a:b:count" -> count evenly spaced values from a to b; or a comma list.
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') == std::string::npos) return parse_list(s);
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw UsageError("grid must be start:stop:count");
  double a = 0.0, b = 0.0, c = 0.0;
  try {
    a = parse_double(parts[0]);
    b = parse_double(parts[1]);
    c = parse_double(parts[2]);
  } catch (const FormatError&) {
    throw UsageError("invalid grid '" + s + "'");
  }
  const auto count = static_cast<long long>(c);
  if (count < 0 || static_cast<double>(count) != c) throw UsageError("grid count must be a nonnegative integer");
  std::vector<double> out;
  for (long long i = 0; i < count; ++i)
    out.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("file not found: '" + path + "'");
}

Harvester harvester_arg(const std::string& ref) {
  if (ref != "canonical" && ref != "linear") require_file(ref);
  return load_harvester(ref);
}

// ---------------------------------------------------------------------------
struct FitArgs {
  std::string data;
  bool synthetic = false;
  std::size_t points = 2000;
  double p_max = 2000.0;
  double noise = 0.0;
  std::size_t epochs = 20000;
  double lr = 0.01;
  double init_scale = 1.0;
  std::uint64_t seed = 1;
  std::string output = "eh.json";
  std::string dataset_out;
};

int run_fit(const CLI::App& sub, const FitArgs& a) {
  PowerDataset data;
  if (a.synthetic) {
    data = synth_dataset(a.points, a.p_max, a.noise, a.seed);
  } else {
    if (a.data.empty()) throw UsageError("fit-eh needs --data or --synthetic");
    require_file(a.data);
    data = dataset_from_csv(read_text(a.data));
  }
  const RunMeta meta = make_meta(sub, a.seed);
  if (!a.dataset_out.empty()) write_text(a.dataset_out, dataset_csv(data, meta));
  FitHyper hyper;
  hyper.learning_rate = a.lr;
  hyper.epochs = a.epochs;
  hyper.seed = a.seed;
  hyper.init_scale = a.init_scale;
  const EhModel model = fit_eh(data, hyper);
  write_json(a.output, to_json(model, meta));
  print_meta(meta);
  std::cout << "points: " << data.pairs.size() << "\n"
            << "rmse_uw: " << fmt_double(model.rmse) << "\n"
            << "rmse_rel_ls: " << fmt_double(model.rmse / kCanonicalLs) << "\n"
            << "output: " << a.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
struct DesignArgs {
  std::size_t m = 16;
  std::size_t n = 1;
  double pa = 5.0;
  double rho = 0.0;
  std::string eh = "canonical";
  double pon = 0.0;  // 0: derive from the harvester
  bool onoff_block = false;
  std::uint64_t seed = 1;
  std::size_t max_rounds = 200;
  std::size_t candidate_cap = 1'000'000;
  std::string output = "design.json";
};

int run_design(const CLI::App& sub, const DesignArgs& a) {
  const RunMeta meta = make_meta(sub, a.seed);
  const Harvester h = harvester_arg(a.eh);
  const double p_star = a.pon > 0.0 ? a.pon : optimal_pon(a.pa, h);
  print_meta(meta);
  std::cout << "p_on_star: " << fmt_double(p_star) << "\n";
  if (a.onoff_block) {
    const auto code = onoff_block_code(a.n, a.pa, p_star, a.m);
    const auto cb = code.to_codebook();
    write_json(a.output, to_json(cb, meta));
    std::cout << "n_on: " << code.n_on << "\n"
              << "r_on: " << fmt_double(code.r_on) << "\n";
  } else if (a.n == 1) {
    const auto base = layout_info(a.m, a.pa);
    const auto c = swipt_transform(base, a.rho, p_star);
    write_json(a.output, to_json(c, meta));
    std::cout << "C: " << c.meta.c << "\n"
              << "t: " << fmt_double(c.meta.t) << "\n"
              << "M_on: " << c.meta.m_on << "\n";
  } else {
    GreedyConfig g;
    g.seed = a.seed;
    g.max_rounds = a.max_rounds;
    g.candidate_cap = a.candidate_cap;
    const auto info = build_info_codebook(a.m, a.n, a.pa, g);
    const auto cb = swipt_codebook(info, a.rho, p_star);
    write_json(a.output, to_json(cb, meta));
    std::cout << "dmin_sq: " << (std::isfinite(cb.achieved_dmin_sq) ? fmt_double(cb.achieved_dmin_sq) : "inf") << "\n"
              << "M_on_c: " << cb.m_on << "\n"
              << "greedy_rounds: " << info.rounds << "\n";
    if (info.warning) std::cerr << "warning: greedy threshold search hit max_rounds\n";
  }
  std::cout << "output: " << a.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
struct TrainArgs {
  std::string topology = "p2p";
  std::string m = "16";
  std::string snr = "50";
  double gain = 0.5;
  double pa = 5.0;
  std::size_t n = 1;
  double lambda = 0.0;
  double lr = 1e-3;
  double lr_final_ratio = 1.0;
  std::size_t batch = 256;
  std::size_t iterations = 2000;
  std::uint64_t seed = 1;
  double pd_floor = 1e-3;
  std::string power_term = "batch_mean";
  std::string hidden = "64,64";
  std::string eh = "canonical";
  std::size_t eval_trials = 100000;
  std::string output = "system.json";
  std::string trace = "trace.csv";
  std::string extract;
};

Topology build_topology(const TrainArgs& a) {
  const auto ms = parse_list(a.m);
  auto snrs = parse_list(a.snr);
  std::vector<std::size_t> m;
  for (double v : ms) {
    if (v < 2 || v != static_cast<double>(static_cast<std::size_t>(v))) throw UsageError("--m entries must be integers >= 2");
    m.push_back(static_cast<std::size_t>(v));
  }
  const TopologyKind kind = topology_from_string(a.topology);
  Topology t;
  switch (kind) {
    case TopologyKind::kP2P:
      if (m.size() != 1 || snrs.size() != 1) throw UsageError("p2p needs one --m and one --snr");
      t = Topology::p2p(m[0], snrs[0], a.pa);
      break;
    case TopologyKind::kBC:
      if (m.size() != 2) throw UsageError("bc needs --m M1,M2");
      if (snrs.size() == 1 && a.snr == "50") snrs = {100.0, 50.0};
      if (snrs.size() != 2) throw UsageError("bc needs --snr SNR1,SNR2");
      t = Topology::bc(m[0], m[1], snrs[0], snrs[1], a.pa);
      break;
    case TopologyKind::kMAC:
      if (m.size() != 2 || snrs.size() != 1) throw UsageError("mac needs --m M1,M2 and one --snr");
      t = Topology::mac(m[0], m[1], snrs[0], a.pa);
      break;
    case TopologyKind::kIC:
      if (m.size() != 2) throw UsageError("ic needs --m M1,M2");
      if (snrs.size() == 1) snrs.push_back(snrs[0]);
      t = Topology::ic(m[0], m[1], snrs[0], snrs[1], a.gain, a.pa);
      break;
  }
  t.validate();
  return t;
}

int run_train(const CLI::App& sub, const TrainArgs& a) {
  const Topology topo = build_topology(a);
  TrainConfig cfg;
  cfg.lambda = a.lambda;
  cfg.n = a.n;
  cfg.learning_rate = a.lr;
  cfg.lr_final_ratio = a.lr_final_ratio;
  cfg.batch_size = a.batch;
  cfg.iterations = a.iterations;
  cfg.seed = a.seed;
  cfg.pd_floor = a.pd_floor;
  if (a.power_term != "batch_mean" && a.power_term != "per_sample")
    throw UsageError("--power-term must be batch_mean or per_sample");
  cfg.power_term = a.power_term == "batch_mean" ? PowerTerm::kBatchMean : PowerTerm::kPerSample;
  cfg.hidden.clear();
  for (double h : parse_list(a.hidden)) {
    if (h < 1 || h != static_cast<double>(static_cast<std::size_t>(h))) throw UsageError("--hidden entries must be positive integers");
    cfg.hidden.push_back(static_cast<std::size_t>(h));
  }
  const Harvester h = harvester_arg(a.eh);
  AeSystem sys = make_system(topo, cfg, h);
  const RunMeta meta = make_meta(sub, a.seed);

  LossTrace trace;
  try {
    train(sys, trace);
  } catch (...) {
    if (!a.trace.empty()) write_text(a.trace, trace_csv(trace, meta));
    throw;
  }
  if (!a.trace.empty()) write_text(a.trace, trace_csv(trace, meta));
  write_json(a.output, to_json(sys, a.eh, meta));

  print_meta(meta);
  std::cout << "topology: " << to_string(topo.kind) << "\n"
            << "final_loss: " << fmt_double(trace.empty() ? 0.0 : trace.back().loss) << "\n";
  if (a.eval_trials > 0) {
    const auto ev = evaluate_system(sys, a.eval_trials, a.seed);
    for (std::size_t u = 0; u < ev.ser.size(); ++u) std::cout << "ser_user" << u + 1 << ": " << fmt_double(ev.ser[u]) << "\n";
    for (std::size_t r = 0; r < ev.pd_uw.size(); ++r)
      std::cout << "pd_uw_rx" << r + 1 << ": " << fmt_double(ev.pd_uw[r]) << "\n";
  }
  if (!a.extract.empty()) {
    const auto designs = extract_design(sys);
    for (std::size_t t = 0; t < designs.size(); ++t) {
      const std::string path = designs.size() == 1 ? a.extract : with_suffix(a.extract, "_tx" + std::to_string(t + 1));
      if (designs[t].n == 1)
        write_json(path, to_json(to_constellation(designs[t]), meta));
      else
        write_json(path, to_json(designs[t], meta));
      std::cout << "design_tx" << t + 1 << ": " << path << " (" << designs[t].m << " codewords)\n";
    }
  }
  std::cout << "output: " << a.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
struct SweepArgs {
  std::string designer = "algorithmic";
  std::size_t m = 16;
  std::size_t n = 1;
  double pa = 5.0;
  std::string rho_grid = "0:1:11";
  std::vector<std::string> systems;
  double snr = 50.0;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::string eh = "canonical";
  std::size_t candidate_cap = 1'000'000;
  std::string output = "sweep.csv";
};

int run_sweep(const CLI::App& sub, const SweepArgs& a) {
  const Harvester h = harvester_arg(a.eh);
  const RunMeta meta = make_meta(sub, a.seed);
  std::vector<TradeoffPoint> rows;
  double snr = a.snr;
  if (a.designer == "algorithmic") {
    const auto grid = parse_grid(a.rho_grid);
    if (grid.empty()) throw UsageError("empty control grid");
    const double p_star = optimal_pon(a.pa, h);
    const auto spec = ChannelSpec::from_snr(a.snr, a.pa, a.seed);
    if (a.n == 1) {
      const auto base = layout_info(a.m, a.pa);
      rows = rp_sweep([&](double rho) { return swipt_transform(base, rho, p_star); }, grid, spec, h, a.trials);
    } else {
      GreedyConfig g;
      g.seed = a.seed;
      g.candidate_cap = a.candidate_cap;
      const auto info = build_info_codebook(a.m, a.n, a.pa, g);
      rows = rp_sweep([&](double rho) { return swipt_codebook(info, rho, p_star); }, grid, spec, h, a.trials);
    }
  } else if (a.designer == "learned") {
    if (a.systems.empty()) throw UsageError("empty control grid: pass --system files");
    for (const auto& path : a.systems) {
      require_file(path);
      const AeSystem sys = system_from_json(read_json(path), h);
      if (sys.topo.kind != TopologyKind::kP2P) throw UsageError("learned sweeps need point-to-point systems");
      snr = sys.topo.snr[0];
      const auto cb = extract_design(sys)[0];
      const auto spec = ChannelSpec::from_snr(snr, sys.topo.pa, a.seed);
      const auto ser = ser_mc(cb, spec, a.trials, LearnedDecoder(sys, 0));
      const auto pd = delivered_power_mc(cb, spec, h, a.trials);
      rows.push_back({sys.cfg.lambda, ser.ser, pd.mean_uw, ser.ci_halfwidth, a.trials});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.control < y.control; });
  } else {
    throw UsageError("--designer must be algorithmic or learned");
  }
  write_text(a.output, sweep_csv(rows, snr, a.seed, meta));
  print_meta(meta);
  std::cout << "rows: " << rows.size() << "\n"
            << "output: " << a.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
struct SimArgs {
  std::string design;
  std::size_t qam = 0;
  double pa = 5.0;
  std::string system;
  double snr = 50.0;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::string eh = "canonical";
  bool onoff_decoder = false;
  std::string output;
};

int run_simulate(const CLI::App& sub, const SimArgs& a) {
  Codebook cb;
  if (a.qam != 0) {
    cb = as_codebook(qam_reference(a.qam, a.pa));
  } else if (!a.design.empty()) {
    require_file(a.design);
    cb = load_design(a.design);
  } else if (!a.system.empty()) {
    require_file(a.system);
  } else {
    throw UsageError("simulate needs --design, --qam or --system");
  }
  const Harvester h = harvester_arg(a.eh);
  const RunMeta meta = make_meta(sub, a.seed);

  SerResult ser;
  if (!a.system.empty()) {
    const AeSystem sys = system_from_json(read_json(a.system), h);
    if (sys.topo.kind != TopologyKind::kP2P) throw UsageError("simulate --system needs a point-to-point system");
    if (a.design.empty()) cb = extract_design(sys)[0];
    ser = ser_mc(cb, ChannelSpec::from_snr(a.snr, cb.pa, a.seed), a.trials, LearnedDecoder(sys, 0));
  } else if (a.onoff_decoder) {
    if (!cb.rho || *cb.rho != 1.0) throw UsageError("--onoff-decoder needs an On-Off block design");
    OnOffBlockCode code;
    code.n = cb.n;
    code.m = cb.m;
    code.pa = cb.pa;
    for (std::size_t s = 0; s < cb.m; ++s) {
      std::vector<std::size_t> set;
      for (std::size_t i = 0; i < cb.n; ++i)
        if (std::abs(cb.symbol(s, i)) > 0.0) set.push_back(i);
      code.support_sets.push_back(std::move(set));
    }
    code.n_on = code.support_sets.empty() ? 0 : code.support_sets[0].size();
    ser = ser_mc(cb, ChannelSpec::from_snr(a.snr, cb.pa, a.seed), a.trials,
                 [&code](std::span<const cplx> y) { return decode_onoff_block(y, code); });
  } else {
    ser = ser_mc(cb, ChannelSpec::from_snr(a.snr, cb.pa, a.seed), a.trials);
  }
  const auto pd = delivered_power_mc(cb, ChannelSpec::from_snr(a.snr, cb.pa, a.seed), h, a.trials);

  std::string csv = csv_header_line(meta) + "ser,ci,pd_uw,pd_ci,snr_db,trials,seed\n";
  csv += fmt_double(ser.ser) + "," + fmt_double(ser.ci_halfwidth) + "," + fmt_double(pd.mean_uw) + "," +
         fmt_double(pd.ci_halfwidth) + "," + fmt_double(10.0 * std::log10(a.snr)) + "," + std::to_string(a.trials) +
         "," + std::to_string(a.seed) + "\n";
  if (!a.output.empty()) write_text(a.output, csv);
  std::cout << csv;
  if (ser.degenerate) std::cerr << "warning: all codewords identical; SER is the (M-1)/M expectation\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal design for simultaneous wireless information and power transfer"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "TOML/INI file with one section per subcommand");
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-eh", "Fit the tanh harvester model to power-transfer data");
  fit_cmd->add_option("--data", fit.data, "CSV with p_in_uw,p_out_uw");
  fit_cmd->add_flag("--synthetic", fit.synthetic, "Generate data from the canonical curve");
  fit_cmd->add_option("--points", fit.points, "Synthetic sample count")->capture_default_str();
  fit_cmd->add_option("--p-max", fit.p_max, "Largest synthetic input power, µW")->capture_default_str();
  fit_cmd->add_option("--noise", fit.noise, "Relative std of multiplicative noise")->capture_default_str();
  fit_cmd->add_option("--epochs", fit.epochs)->capture_default_str();
  fit_cmd->add_option("--lr", fit.lr)->capture_default_str();
  fit_cmd->add_option("--init-scale", fit.init_scale)->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("-o,--output", fit.output)->capture_default_str();
  fit_cmd->add_option("--dataset-out", fit.dataset_out, "Also write the dataset as CSV");

  DesignArgs des;
  auto* des_cmd = app.add_subcommand("design", "Build an algorithmic constellation or codebook");
  des_cmd->add_option("--m", des.m, "Message count")->capture_default_str();
  des_cmd->add_option("--n", des.n, "Block length")->capture_default_str();
  des_cmd->add_option("--pa", des.pa, "Average power, µW")->capture_default_str();
  des_cmd->add_option("--rho", des.rho, "Power-demand control in [0, 1]")->capture_default_str();
  des_cmd->add_option("--eh", des.eh, "Harvester: canonical, linear or model file")->capture_default_str();
  des_cmd->add_option("--pon", des.pon, "Override the On probability")->capture_default_str();
  des_cmd->add_flag("--onoff-block", des.onoff_block, "On-Off position code instead of a greedy codebook");
  des_cmd->add_option("--seed", des.seed)->capture_default_str();
  des_cmd->add_option("--max-rounds", des.max_rounds)->capture_default_str();
  des_cmd->add_option("--candidate-cap", des.candidate_cap)->capture_default_str();
  des_cmd->add_option("-o,--output", des.output)->capture_default_str();

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train an end-to-end learned system");
  tr_cmd->add_option("--topology", tr.topology, "p2p, bc, mac or ic")->capture_default_str();
  tr_cmd->add_option("--m", tr.m, "Message counts, comma separated")->capture_default_str();
  tr_cmd->add_option("--snr", tr.snr, "Linear SNR per receiver, comma separated")->capture_default_str();
  tr_cmd->add_option("--gain", tr.gain, "Cross-link gain (ic)")->capture_default_str();
  tr_cmd->add_option("--pa", tr.pa)->capture_default_str();
  tr_cmd->add_option("--n", tr.n)->capture_default_str();
  tr_cmd->add_option("--lambda", tr.lambda)->capture_default_str();
  tr_cmd->add_option("--lr", tr.lr)->capture_default_str();
  tr_cmd->add_option("--lr-final-ratio", tr.lr_final_ratio)->capture_default_str();
  tr_cmd->add_option("--batch", tr.batch)->capture_default_str();
  tr_cmd->add_option("--iterations", tr.iterations)->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed)->capture_default_str();
  tr_cmd->add_option("--pd-floor", tr.pd_floor)->capture_default_str();
  tr_cmd->add_option("--power-term", tr.power_term, "batch_mean or per_sample")->capture_default_str();
  tr_cmd->add_option("--hidden", tr.hidden, "Hidden widths, comma separated")->capture_default_str();
  tr_cmd->add_option("--eh", tr.eh)->capture_default_str();
  tr_cmd->add_option("--eval-trials", tr.eval_trials)->capture_default_str();
  tr_cmd->add_option("-o,--output", tr.output)->capture_default_str();
  tr_cmd->add_option("--trace", tr.trace)->capture_default_str();
  tr_cmd->add_option("--extract", tr.extract, "Also write the learned design(s)");

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Rate-power tradeoff sweep");
  sw_cmd->add_option("--designer", sw.designer, "algorithmic or learned")->capture_default_str();
  sw_cmd->add_option("--m", sw.m)->capture_default_str();
  sw_cmd->add_option("--n", sw.n)->capture_default_str();
  sw_cmd->add_option("--pa", sw.pa)->capture_default_str();
  sw_cmd->add_option("--rho-grid", sw.rho_grid, "start:stop:count or comma list")->capture_default_str();
  sw_cmd->add_option("--system", sw.systems, "Trained system file (learned designer), repeatable");
  sw_cmd->add_option("--snr", sw.snr)->capture_default_str();
  sw_cmd->add_option("--trials", sw.trials)->capture_default_str();
  sw_cmd->add_option("--seed", sw.seed)->capture_default_str();
  sw_cmd->add_option("--eh", sw.eh)->capture_default_str();
  sw_cmd->add_option("--candidate-cap", sw.candidate_cap)->capture_default_str();
  sw_cmd->add_option("-o,--output", sw.output)->capture_default_str();

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo SER and delivered power of one design");
  sim_cmd->add_option("--design", sim.design, "Constellation or codebook file");
  sim_cmd->add_option("--qam", sim.qam, "Square QAM reference of this order instead");
  sim_cmd->add_option("--pa", sim.pa, "Average power for --qam")->capture_default_str();
  sim_cmd->add_option("--system", sim.system, "Decode with this trained system's decoder");
  sim_cmd->add_option("--snr", sim.snr)->capture_default_str();
  sim_cmd->add_option("--trials", sim.trials)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--eh", sim.eh)->capture_default_str();
  sim_cmd->add_flag("--onoff-decoder", sim.onoff_decoder, "Largest-energy support decoder for On-Off block codes");
  sim_cmd->add_option("-o,--output", sim.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit_cmd) return run_fit(*fit_cmd, fit);
    if (*des_cmd) return run_design(*des_cmd, des);
    if (*tr_cmd) return run_train(*tr_cmd, tr);
    if (*sw_cmd) return run_sweep(*sw_cmd, sw);
    if (*sim_cmd) return run_simulate(*sim_cmd, sim);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConstructionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FitError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TrainingError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NormalizationError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
