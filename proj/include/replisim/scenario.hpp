#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "replisim/platform.hpp"
#include "replisim/rng.hpp"
#include "replisim/workload.hpp"

namespace replisim {

struct FeatureRange {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const FeatureRange&) const = default;
};

/// Min-max bounds used to scale raw platform values into [0, 1] for the
/// Q-network input.
struct NormalizationBounds {
  FeatureRange frequency_hz, cores, cycle_cost, storage_cost, carbon_intensity;
  FeatureRange inter_bw, inter_cost, intra_bw, intra_cost;
  FeatureRange latency_s, datum_size_bytes, rto_s;
  FeatureRange replica_count{0.0, 8.0};
  bool operator==(const NormalizationBounds&) const = default;

  /// Bounds [0, max observed] for every feature; a feature whose values are
  /// all zero gets [0, 1].
  static NormalizationBounds derive(const PlatformState& s) {
    NormalizationBounds b;
    auto upper = [](auto&& values) {
      double m = 0.0;
      for (double v : values) m = std::max(m, v);
      return FeatureRange{0.0, m > 0 ? m : 1.0};
    };
    std::vector<double> f, c, cc, sc, ci, lat, sz, rto;
    for (const auto& dc : s.datacenters) {
      f.push_back(dc.host.frequency_hz);
      c.push_back(dc.host.cores);
      cc.push_back(dc.host.cycle_cost);
      sc.push_back(dc.host.storage_cost);
      ci.push_back(dc.carbon_intensity);
    }
    for (const auto& cl : s.clients) {
      lat.insert(lat.end(), cl.latencies.begin(), cl.latencies.end());
      sz.push_back(cl.datum_size);
      rto.push_back(cl.sla.rt_objective);
    }
    b.frequency_hz = upper(f);
    b.cores = upper(c);
    b.cycle_cost = upper(cc);
    b.storage_cost = upper(sc);
    b.carbon_intensity = upper(ci);
    b.inter_bw = upper(s.network.inter_bw);
    b.inter_cost = upper(s.network.inter_cost);
    b.intra_bw = upper(s.network.intra_bw);
    b.intra_cost = upper(s.network.intra_cost);
    b.latency_s = upper(lat);
    b.datum_size_bytes = upper(sz);
    b.rto_s = upper(rto);
    return b;
  }
};

/// A validated scenario: the platform after load (no data placed yet), the
/// query cost distribution, and the normalization bounds.
struct Scenario {
  PlatformState platform;
  ExecCyclesDistribution exec;
  NormalizationBounds bounds;
};

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError("missing key '" + path + "." + key + "'");
  return *it;
}

inline double num(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) throw ScenarioError("'" + path + "." + key + "' must be a number");
  return v.get<double>();
}

inline int integer(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number_integer()) throw ScenarioError("'" + path + "." + key + "' must be an integer");
  return v.get<int>();
}

inline std::vector<double> vec(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_array()) throw ScenarioError("'" + path + "." + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ScenarioError("'" + path + "." + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Accepts either nested rows or a flat row-major array.
inline std::vector<double> matrix(const json& j, const char* key, const std::string& path,
                                  std::size_t n) {
  const auto& v = field(j, key, path);
  if (!v.is_array()) throw ScenarioError("'" + path + "." + key + "' must be an array");
  std::vector<double> out;
  for (const auto& row : v) {
    if (row.is_array()) {
      if (row.size() != n)
        throw ScenarioError("'" + path + "." + key + "' rows must have " + std::to_string(n) +
                            " entries");
      for (const auto& e : row) out.push_back(e.get<double>());
    } else if (row.is_number()) {
      out.push_back(row.get<double>());
    } else {
      throw ScenarioError("'" + path + "." + key + "' must hold numbers");
    }
  }
  if (out.size() != n * n)
    throw ScenarioError("'" + path + "." + key + "' must be " + std::to_string(n) + "x" +
                        std::to_string(n));
  return out;
}

inline FeatureRange range(const json& j, const char* key, FeatureRange fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array() || it->size() != 2)
    throw ScenarioError(std::string("normalization.") + key + " must be [lo, hi]");
  FeatureRange r{(*it)[0].get<double>(), (*it)[1].get<double>()};
  if (!(r.hi > r.lo)) throw ScenarioError(std::string("normalization.") + key + " needs lo < hi");
  return r;
}

inline json rows(const std::vector<double>& flat, std::size_t n) {
  json out = json::array();
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i * n),
                                      flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
  return out;
}

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& doc) {
  using namespace detail;
  Scenario sc;
  auto& p = sc.platform;

  const auto& dcs = field(doc, "datacenters", "scenario");
  if (!dcs.is_array() || dcs.empty()) throw ScenarioError("'datacenters' must be a non-empty array");
  for (std::size_t i = 0; i < dcs.size(); ++i) {
    const std::string path = "datacenters[" + std::to_string(i) + "]";
    const auto& d = dcs[i];
    DatacenterSpec dc;
    dc.carbon_intensity = num(d, "carbon_intensity", path);
    dc.host_count = integer(d, "host_count", path);
    const auto& h = field(d, "host", path);
    const std::string hp = path + ".host";
    dc.host.cores = integer(h, "cores", hp);
    dc.host.frequency_hz = num(h, "frequency_hz", hp);
    dc.host.cycle_cost = num(h, "cycle_cost", hp);
    dc.host.storage_bytes = num(h, "storage_bytes", hp);
    dc.host.storage_cost = num(h, "storage_cost", hp);
    dc.host.power_idle_w = num(h, "power_idle_w", hp);
    dc.host.power_max_w = num(h, "power_max_w", hp);
    if (auto it = d.find("vms"); it != d.end()) {
      if (!it->is_array()) throw ScenarioError("'" + path + ".vms' must be an array of arrays");
      for (const auto& host_vms : *it) dc.preset_vms.push_back(host_vms.get<std::vector<int>>());
    }
    p.datacenters.push_back(std::move(dc));
  }
  const std::size_t n = p.datacenters.size();

  const auto& net = field(doc, "network", "scenario");
  p.network.n = n;
  p.network.inter_bw = matrix(net, "inter_bw", "network", n);
  p.network.inter_cost = matrix(net, "inter_cost", "network", n);
  p.network.intra_bw = vec(net, "intra_bw", "network");
  p.network.intra_cost = vec(net, "intra_cost", "network");

  const auto& clients = field(doc, "clients", "scenario");
  if (!clients.is_array()) throw ScenarioError("'clients' must be an array");
  for (std::size_t l = 0; l < clients.size(); ++l) {
    const std::string path = "clients[" + std::to_string(l) + "]";
    const auto& c = clients[l];
    ClientSpec cl;
    cl.latencies = vec(c, "latencies_s", path);
    cl.sla.rate_per_query = num(c, "rate_per_query", path);
    cl.sla.availability_objective = integer(c, "avo", path);
    cl.sla.rt_objective = num(c, "rto_s", path);
    cl.sla.rt_penalty = num(c, "rt_penalty", path);
    cl.datum_size = num(c, "datum_size_bytes", path);
    cl.query_rate = num(c, "query_rate_hz", path);
    p.clients.push_back(std::move(cl));
  }

  if (auto it = doc.find("replica_vm_cores"); it != doc.end()) p.replica_vm_cores = it->get<int>();

  validate_platform(p);
  build_runtime(p);

  if (auto it = doc.find("workload"); it != doc.end()) {
    const auto& ec = field(*it, "exec_cycles", "workload");
    const auto kind = field(ec, "distribution", "workload.exec_cycles").get<std::string>();
    const std::string ep = "workload.exec_cycles";
    if (kind == "fixed")
      sc.exec = ExecCyclesDistribution::fixed(num(ec, "cycles", ep));
    else if (kind == "uniform")
      sc.exec = ExecCyclesDistribution::uniform(num(ec, "lo", ep), num(ec, "hi", ep));
    else if (kind == "lognormal")
      sc.exec = ExecCyclesDistribution::lognormal(num(ec, "mu", ep), num(ec, "sigma", ep));
    else
      throw ScenarioError("unknown exec_cycles distribution '" + kind + "'");
  }
  sc.exec.validate();

  sc.bounds = NormalizationBounds::derive(p);
  if (auto it = doc.find("normalization"); it != doc.end()) {
    auto& b = sc.bounds;
    const auto& j = *it;
    b.frequency_hz = range(j, "frequency_hz", b.frequency_hz);
    b.cores = range(j, "cores", b.cores);
    b.cycle_cost = range(j, "cycle_cost", b.cycle_cost);
    b.storage_cost = range(j, "storage_cost", b.storage_cost);
    b.carbon_intensity = range(j, "carbon_intensity", b.carbon_intensity);
    b.inter_bw = range(j, "inter_bw", b.inter_bw);
    b.inter_cost = range(j, "inter_cost", b.inter_cost);
    b.intra_bw = range(j, "intra_bw", b.intra_bw);
    b.intra_cost = range(j, "intra_cost", b.intra_cost);
    b.latency_s = range(j, "latency_s", b.latency_s);
    b.datum_size_bytes = range(j, "datum_size_bytes", b.datum_size_bytes);
    b.rto_s = range(j, "rto_s", b.rto_s);
    b.replica_count = range(j, "replica_count", b.replica_count);
  }
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("scenario parse error at " + detail::line_context(text, e.byte) + ": " +
                        e.what());
  }
  try {
    return scenario_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario type error: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

/// Canonical JSON form of a scenario. Normalization bounds are always
/// written out, so loading the output reproduces the same scenario.
inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using nlohmann::json;
  const auto& p = sc.platform;
  json doc;
  doc["datacenters"] = json::array();
  for (const auto& dc : p.datacenters) {
    json d;
    d["carbon_intensity"] = dc.carbon_intensity;
    d["host_count"] = dc.host_count;
    d["host"] = {{"cores", dc.host.cores},
                 {"frequency_hz", dc.host.frequency_hz},
                 {"cycle_cost", dc.host.cycle_cost},
                 {"storage_bytes", dc.host.storage_bytes},
                 {"storage_cost", dc.host.storage_cost},
                 {"power_idle_w", dc.host.power_idle_w},
                 {"power_max_w", dc.host.power_max_w}};
    d["vms"] = dc.preset_vms;
    doc["datacenters"].push_back(d);
  }
  const std::size_t n = p.dc_count();
  doc["network"] = {{"inter_bw", detail::rows(p.network.inter_bw, n)},
                    {"inter_cost", detail::rows(p.network.inter_cost, n)},
                    {"intra_bw", p.network.intra_bw},
                    {"intra_cost", p.network.intra_cost}};
  doc["clients"] = json::array();
  for (const auto& c : p.clients) {
    doc["clients"].push_back({{"latencies_s", c.latencies},
                              {"rate_per_query", c.sla.rate_per_query},
                              {"avo", c.sla.availability_objective},
                              {"rto_s", c.sla.rt_objective},
                              {"rt_penalty", c.sla.rt_penalty},
                              {"datum_size_bytes", c.datum_size},
                              {"query_rate_hz", c.query_rate}});
  }
  doc["replica_vm_cores"] = p.replica_vm_cores;
  json ec;
  switch (sc.exec.kind) {
    case ExecCyclesDistribution::Kind::Fixed:
      ec = {{"distribution", "fixed"}, {"cycles", sc.exec.a}};
      break;
    case ExecCyclesDistribution::Kind::Uniform:
      ec = {{"distribution", "uniform"}, {"lo", sc.exec.a}, {"hi", sc.exec.b}};
      break;
    case ExecCyclesDistribution::Kind::LogNormal:
      ec = {{"distribution", "lognormal"}, {"mu", sc.exec.a}, {"sigma", sc.exec.b}};
      break;
  }
  doc["workload"] = {{"exec_cycles", ec}};
  const auto& b = sc.bounds;
  auto r = [](const FeatureRange& f) { return json::array({f.lo, f.hi}); };
  doc["normalization"] = {{"frequency_hz", r(b.frequency_hz)},
                          {"cores", r(b.cores)},
                          {"cycle_cost", r(b.cycle_cost)},
                          {"storage_cost", r(b.storage_cost)},
                          {"carbon_intensity", r(b.carbon_intensity)},
                          {"inter_bw", r(b.inter_bw)},
                          {"inter_cost", r(b.inter_cost)},
                          {"intra_bw", r(b.intra_bw)},
                          {"intra_cost", r(b.intra_cost)},
                          {"latency_s", r(b.latency_s)},
                          {"datum_size_bytes", r(b.datum_size_bytes)},
                          {"rto_s", r(b.rto_s)},
                          {"replica_count", r(b.replica_count)}};
  return doc;
}

inline std::string serialize_scenario(const Scenario& sc) { return scenario_to_json(sc).dump(2); }

/// Content hash of the canonical form, as 16 hex digits.
inline std::string scenario_hash(const Scenario& sc) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(scenario_to_json(sc).dump());
  return os.str();
}

}  // namespace replisim
