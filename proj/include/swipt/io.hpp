#pragma once

// File formats: JSON for models and designs, CSV for datasets, loss traces
// and sweeps. Every artifact carries a metadata block (tool version, config
// hash, seed); CSV files put it on a leading '#' line that readers skip.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swipt/channel.hpp"
#include "swipt/codebook.hpp"
#include "swipt/constellation.hpp"
#include "swipt/eh_model.hpp"
#include "swipt/errors.hpp"
#include "swipt/trainer.hpp"

namespace swipt {

using json = nlohmann::json;

inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return out;
}

struct RunMeta {
  std::string tool = "swipt";
  std::string version{kToolVersion};
  std::string config_hash = "0000000000000000";
  std::uint64_t seed = 0;
};

inline json to_json(const RunMeta& m) {
  return {{"tool", m.tool}, {"version", m.version}, {"config_hash", m.config_hash}, {"seed", m.seed}};
}

inline std::string csv_header_line(const RunMeta& m) {
  return "# tool=" + m.tool + " version=" + m.version + " config_hash=" + m.config_hash +
         " seed=" + std::to_string(m.seed) + "\n";
}

// Shortest round-trip decimal form.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("write failed for '" + path + "'");
}

inline json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Splits CSV text into rows of fields, dropping '#' lines and blank lines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

namespace detail {

inline json points_json(const std::vector<cplx>& pts) {
  json a = json::array();
  for (auto z : pts) a.push_back({z.real(), z.imag()});
  return a;
}

inline std::vector<cplx> points_from_json(const json& a) {
  if (!a.is_array()) throw FormatError("points must be an array");
  std::vector<cplx> out;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) throw FormatError("each point must be [re, im]");
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

inline json rho_json(const std::optional<double>& rho) {
  return rho ? json(*rho) : json("learned");
}

inline std::optional<double> rho_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "learned") throw FormatError("rho must be a number or \"learned\"");
    return std::nullopt;
  }
  return j.get<double>();
}

template <class T>
void get_array(const json& j, const char* key, T& dst) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != dst.size())
    throw FormatError(std::string("field '") + key + "' must have " + std::to_string(dst.size()) + " entries");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = a[i].get<double>();
}

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Harvester model.
// ---------------------------------------------------------------------------
inline json to_json(const EhModel& m, const RunMeta& meta) {
  json j;
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  j["w3"] = m.w3;
  j["b3"] = m.b3;
  j["input_scale"] = m.input_scale;
  j["power_scale"] = m.power_scale;
  j["rmse"] = std::isfinite(m.rmse) ? json(m.rmse) : json(nullptr);
  j["meta"] = to_json(meta);
  return j;
}

inline EhModel eh_model_from_json(const json& j) {
  return detail::guarded([&] {
    EhModel m;
    detail::get_array(j, "w1", m.w1);
    detail::get_array(j, "b1", m.b1);
    detail::get_array(j, "w2", m.w2);
    detail::get_array(j, "b2", m.b2);
    detail::get_array(j, "w3", m.w3);
    m.b3 = j.at("b3").get<double>();
    m.input_scale = j.at("input_scale").get<double>();
    m.power_scale = j.at("power_scale").get<double>();
    if (j.contains("rmse") && !j["rmse"].is_null()) m.rmse = j["rmse"].get<double>();
    for (double v : m.flat())
      if (!std::isfinite(v)) throw FormatError("harvester parameters must be finite");
    if (!(m.input_scale > 0.0) || !(m.power_scale > 0.0))
      throw FormatError("harvester scales must be > 0");
    return m;
  });
}

// "canonical", "linear" or a model file.
inline Harvester load_harvester(const std::string& ref) {
  if (ref == "canonical") return canonical_model();
  if (ref == "linear") return LinearHarvester{};
  return eh_model_from_json(read_json(ref));
}

// ---------------------------------------------------------------------------
// Designs.
// ---------------------------------------------------------------------------
inline json to_json(const Constellation& c, const RunMeta& meta) {
  json j;
  j["m"] = c.m;
  j["p_a_uw"] = c.pa;
  j["rho"] = detail::rho_json(c.rho);
  j["points"] = detail::points_json(c.points);
  j["meta"] = to_json(meta);
  j["meta"]["c"] = c.meta.c;
  j["meta"]["t"] = c.meta.t;
  j["meta"]["m_on"] = c.meta.m_on;
  j["meta"]["on_indices"] = c.meta.on_indices;
  return j;
}

inline Constellation constellation_from_json(const json& j) {
  return detail::guarded([&] {
    Constellation c;
    c.m = j.at("m").get<std::size_t>();
    c.pa = j.at("p_a_uw").get<double>();
    c.rho = detail::rho_from_json(j.at("rho"));
    c.points = detail::points_from_json(j.at("points"));
    if (c.points.size() != c.m) throw FormatError("constellation: point count differs from m");
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      c.meta.c = m.value("c", std::size_t{0});
      c.meta.t = m.value("t", 0.0);
      c.meta.m_on = m.value("m_on", std::size_t{0});
      if (m.contains("on_indices")) c.meta.on_indices = m["on_indices"].get<std::vector<std::size_t>>();
    }
    return c;
  });
}

inline json to_json(const Codebook& cb, const RunMeta& meta) {
  json j;
  j["m"] = cb.m;
  j["n"] = cb.n;
  j["p_a_uw"] = cb.pa;
  j["rho"] = detail::rho_json(cb.rho);
  j["dmin_sq"] = std::isfinite(cb.achieved_dmin_sq) ? json(cb.achieved_dmin_sq) : json(nullptr);
  j["base_points"] = detail::points_json(cb.base_points);
  json words = json::array();
  for (std::size_t s = 0; s < cb.m; ++s) {
    std::vector<std::size_t> idx(cb.indices.begin() + static_cast<std::ptrdiff_t>(s * cb.n),
                                 cb.indices.begin() + static_cast<std::ptrdiff_t>((s + 1) * cb.n));
    words.push_back({{"indices", idx}, {"symbols", detail::points_json(cb.codeword(s))}});
  }
  j["codewords"] = std::move(words);
  j["meta"] = to_json(meta);
  j["meta"]["dmin_threshold"] = cb.dmin_threshold;
  j["meta"]["rounds"] = cb.rounds;
  j["meta"]["warning"] = cb.warning;
  j["meta"]["m_on"] = cb.m_on;
  j["meta"]["on_indices"] = cb.on_indices;
  return j;
}

inline Codebook codebook_from_json(const json& j) {
  return detail::guarded([&] {
    Codebook cb;
    cb.m = j.at("m").get<std::size_t>();
    cb.n = j.at("n").get<std::size_t>();
    cb.pa = j.at("p_a_uw").get<double>();
    cb.rho = detail::rho_from_json(j.at("rho"));
    cb.base_points = detail::points_from_json(j.at("base_points"));
    const auto& words = j.at("codewords");
    if (!words.is_array() || words.size() != cb.m) throw FormatError("codebook: codeword count differs from m");
    for (const auto& w : words) {
      const auto idx = w.at("indices").get<std::vector<std::size_t>>();
      if (idx.size() != cb.n) throw FormatError("codebook: codeword length differs from n");
      for (auto i : idx)
        if (i >= cb.base_points.size()) throw FormatError("codebook: index out of range");
      cb.indices.insert(cb.indices.end(), idx.begin(), idx.end());
    }
    cb.achieved_dmin_sq = j.at("dmin_sq").is_null() ? std::numeric_limits<double>::infinity()
                                                    : j["dmin_sq"].get<double>();
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      cb.dmin_threshold = m.value("dmin_threshold", 0.0);
      cb.rounds = m.value("rounds", std::size_t{0});
      cb.warning = m.value("warning", false);
      cb.m_on = m.value("m_on", std::size_t{0});
      if (m.contains("on_indices")) cb.on_indices = m["on_indices"].get<std::vector<std::size_t>>();
    }
    return cb;
  });
}

// Either format; constellations load as n = 1 codebooks.
inline Codebook load_design(const std::string& path) {
  const json j = read_json(path);
  if (j.contains("codewords")) return codebook_from_json(j);
  return as_codebook(constellation_from_json(j));
}

// ---------------------------------------------------------------------------
// Trained systems.
// ---------------------------------------------------------------------------
inline json to_json(const MlpParams& p) {
  json layers = json::array();
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& s = p.layers[l];
    const char* act = s.act == Activation::kTanh ? "tanh" : s.act == Activation::kIdentity ? "identity" : "softmax";
    const auto w = p.w(l);
    const auto b = p.b(l);
    json wj = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      wj.push_back(std::move(row));
    }
    std::vector<double> bv(b.data(), b.data() + b.size());
    layers.push_back({{"in", s.in}, {"out", s.out}, {"activation", act}, {"weights", std::move(wj)}, {"bias", bv}});
  }
  return {{"layers", std::move(layers)}, {"heads", p.heads}};
}

inline MlpParams mlp_from_json(const json& j) {
  std::vector<LayerShape> shapes;
  for (const auto& l : j.at("layers")) {
    const auto act = l.at("activation").get<std::string>();
    Activation a = act == "tanh" ? Activation::kTanh : act == "identity" ? Activation::kIdentity : Activation::kSoftmax;
    if (act != "tanh" && act != "identity" && act != "softmax") throw FormatError("unknown activation '" + act + "'");
    shapes.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(), a});
  }
  MlpParams p(shapes, j.value("heads", std::vector<std::size_t>{}));
  std::size_t li = 0;
  for (const auto& l : j.at("layers")) {
    auto w = p.w_of(p.theta, li);
    auto b = p.b_of(p.theta, li);
    const auto& wj = l.at("weights");
    if (wj.size() != static_cast<std::size_t>(w.rows())) throw FormatError("weight rows mismatch");
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      if (wj[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(w.cols()))
        throw FormatError("weight columns mismatch");
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = wj[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
    const auto bv = l.at("bias").get<std::vector<double>>();
    if (bv.size() != static_cast<std::size_t>(b.size())) throw FormatError("bias length mismatch");
    for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = bv[static_cast<std::size_t>(k)];
    ++li;
  }
  if (!p.finite()) throw FormatError("network parameters must be finite");
  return p;
}

inline json to_json(const Topology& t) {
  return {{"kind", to_string(t.kind)}, {"m", t.m}, {"snr", t.snr}, {"gains", t.gains}, {"p_a_uw", t.pa}};
}

inline Topology topology_from_json(const json& j) {
  Topology t;
  t.kind = topology_from_string(j.at("kind").get<std::string>());
  t.m = j.at("m").get<std::vector<std::size_t>>();
  t.snr = j.at("snr").get<std::vector<double>>();
  t.gains = j.at("gains").get<std::vector<std::vector<double>>>();
  t.pa = j.at("p_a_uw").get<double>();
  t.validate();
  return t;
}

inline json to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"n", c.n},
          {"learning_rate", c.learning_rate},
          {"lr_final_ratio", c.lr_final_ratio},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"pd_floor", c.pd_floor},
          {"power_term", c.power_term == PowerTerm::kBatchMean ? "batch_mean" : "per_sample"},
          {"hidden", c.hidden}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.n = j.at("n").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_final_ratio = j.value("lr_final_ratio", 1.0);
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.pd_floor = j.at("pd_floor").get<double>();
  const auto pt = j.value("power_term", std::string("batch_mean"));
  if (pt != "batch_mean" && pt != "per_sample") throw FormatError("unknown power_term '" + pt + "'");
  c.power_term = pt == "batch_mean" ? PowerTerm::kBatchMean : PowerTerm::kPerSample;
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.validate();
  return c;
}

// The harvester is not embedded; `harvester_ref` records where it came from.
inline json to_json(const AeSystem& sys, const std::string& harvester_ref, const RunMeta& meta) {
  json enc = json::array(), dec = json::array();
  for (const auto& e : sys.encoders) enc.push_back(to_json(e));
  for (const auto& d : sys.decoders) dec.push_back(to_json(d));
  return {{"topology", to_json(sys.topo)},
          {"train_config", to_json(sys.cfg)},
          {"harvester", harvester_ref},
          {"encoders", std::move(enc)},
          {"decoders", std::move(dec)},
          {"final_loss", sys.final_loss ? json(*sys.final_loss) : json(nullptr)},
          {"meta", to_json(meta)}};
}

inline AeSystem system_from_json(const json& j, const Harvester& h) {
  return detail::guarded([&] {
    AeSystem sys = make_system(topology_from_json(j.at("topology")), train_config_from_json(j.at("train_config")), h);
    const auto& enc = j.at("encoders");
    const auto& dec = j.at("decoders");
    if (enc.size() != sys.encoders.size() || dec.size() != sys.decoders.size())
      throw FormatError("trained system: network count does not match topology");
    for (std::size_t k = 0; k < enc.size(); ++k) {
      auto p = mlp_from_json(enc[k]);
      if (p.size() != sys.encoders[k].size()) throw FormatError("trained system: encoder shape mismatch");
      sys.encoders[k] = std::move(p);
    }
    for (std::size_t k = 0; k < dec.size(); ++k) {
      auto p = mlp_from_json(dec[k]);
      if (p.size() != sys.decoders[k].size()) throw FormatError("trained system: decoder shape mismatch");
      sys.decoders[k] = std::move(p);
    }
    if (j.contains("final_loss") && !j["final_loss"].is_null()) sys.final_loss = j["final_loss"].get<double>();
    return sys;
  });
}

// ---------------------------------------------------------------------------
// CSV artifacts.
// ---------------------------------------------------------------------------
inline std::string dataset_csv(const PowerDataset& d, const RunMeta& meta) {
  std::string out = csv_header_line(meta) + "p_in_uw,p_out_uw\n";
  for (const auto& s : d.pairs) out += fmt_double(s.p_in) + "," + fmt_double(s.p_out) + "\n";
  return out;
}

inline PowerDataset dataset_from_csv(const std::string& text) {
  auto rows = parse_csv(text);
  PowerDataset d;
  d.source = DataSource::kFile;
  std::size_t start = 0;
  if (!rows.empty() && rows[0].size() >= 1 && rows[0][0].find("p_in") != std::string::npos) start = 1;
  for (std::size_t r = start; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw FormatError("dataset row " + std::to_string(r + 1) + ": expected 2 fields");
    d.pairs.push_back({parse_double(rows[r][0]), parse_double(rows[r][1])});
  }
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw FormatError(e.what());
  }
  return d;
}

inline std::string trace_csv(const LossTrace& trace, const RunMeta& meta) {
  std::string out = csv_header_line(meta) + "iteration,loss,xent_term,power_term\n";
  for (const auto& r : trace)
    out += std::to_string(r.iteration) + "," + fmt_double(r.loss) + "," + fmt_double(r.xent) + "," +
           fmt_double(r.power) + "\n";
  return out;
}

inline std::string sweep_csv(const std::vector<TradeoffPoint>& rows, double snr, std::uint64_t seed,
                             const RunMeta& meta) {
  std::string out = csv_header_line(meta) + "control,ser,ci,pd_uw,snr_db,trials,seed\n";
  const std::string snr_db = fmt_double(10.0 * std::log10(snr));
  for (const auto& r : rows)
    out += fmt_double(r.control) + "," + fmt_double(r.ser) + "," + fmt_double(r.ci_halfwidth) + "," +
           fmt_double(r.pd_uw) + "," + snr_db + "," + std::to_string(r.trials) + "," + std::to_string(seed) + "\n";
  return out;
}

}  // namespace swipt
