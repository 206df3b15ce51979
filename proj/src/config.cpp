#include "remest/config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace remest {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& v, const std::string& key, int line) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': not a number: '" + v + "'");
  }
  if (pos != v.size()) {
    fail(line, "key '" + key + "': trailing characters after number: '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& v, const std::string& key, int line) {
  double d = parse_number(v, key, line);
  auto ll = static_cast<long long>(d);
  if (static_cast<double>(ll) != d) {
    fail(line, "key '" + key + "': expected an integer, got '" + v + "'");
  }
  return ll;
}

std::vector<std::string> split_top_level(const std::string& v, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : v) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

// "[1, 2, 3]" -> vector
Vector parse_vector(const std::string& v, const std::string& key, int line) {
  std::string s = trim(v);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    fail(line, "key '" + key + "': expected [v1, v2, ...]");
  }
  auto parts = split_top_level(s.substr(1, s.size() - 2), ',');
  Vector out(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = parse_number(parts[i], key, line);
  }
  return out;
}

// "[[1, 2], [3, 4]]" -> matrix
Matrix parse_matrix(const std::string& v, const std::string& key, int line) {
  std::string s = trim(v);
  if (s.size() < 4 || s.front() != '[' || s.back() != ']') {
    fail(line, "key '" + key + "': expected [[row], [row], ...]");
  }
  auto rows = split_top_level(s.substr(1, s.size() - 2), ',');
  std::vector<Vector> parsed;
  for (const auto& r : rows) {
    parsed.push_back(parse_vector(r, key, line));
  }
  if (parsed.empty()) {
    fail(line, "key '" + key + "': empty matrix");
  }
  Matrix out(static_cast<Eigen::Index>(parsed.size()), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != out.cols()) {
      fail(line, "key '" + key + "': ragged rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = parsed[i].transpose();
  }
  return out;
}

const char* kRequiredKeys =
    "plant (or a, w, x0), m_sensors, n_t, n_r, topology, channel_dist, snr_db, p, "
    "schemes, horizon, n_runs, seed";

struct RawEntry {
  std::string value;
  int line = 0;
};

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }

  std::map<std::string, RawEntry> entries;
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      fail(line_no, "empty key");
    }
    if (entries.count(key)) {
      fail(line_no, "duplicate key '" + key + "' (first on line " +
                        std::to_string(entries[key].line) + ")");
    }
    entries[key] = {value, line_no};
  }
  if (entries.empty()) {
    throw ConfigError("empty config: required keys are " + std::string(kRequiredKeys));
  }

  static const std::set<std::string> known = {
      "plant", "a", "w", "x0", "m_sensors", "n_t", "n_r", "topology", "topology_gain",
      "channel_dist", "rayleigh_scale", "channel_mean", "channel_var", "snr_db", "p",
      "schemes", "horizon", "n_runs", "seed", "pilot_power", "calib_slots",
      "cssca_iters", "cssca_eps0", "cssca_eps1", "cssca_step", "cssca_step_exponent",
      "cssca_armijo_shrink", "cssca_armijo_slope", "cssca_batch", "cssca_margin",
      "k_init", "gain_file", "m_values", "s_values", "fig4_slots", "fig4_reps"};
  for (const auto& [key, entry] : entries) {
    if (!known.count(key) && key.rfind("c_", 0) != 0) {
      fail(entry.line, "unknown key '" + key + "'");
    }
  }

  auto has = [&](const std::string& key) { return entries.count(key) != 0; };
  auto need = [&](const std::string& key) -> RawEntry& {
    auto it = entries.find(key);
    if (it == entries.end()) {
      throw ConfigError("missing required key '" + key + "'; required keys are " +
                        std::string(kRequiredKeys));
    }
    return it->second;
  };

  RunConfig cfg;

  // plant
  if (has("plant")) {
    auto& e = entries["plant"];
    if (e.value != "eq22") {
      fail(e.line, "key 'plant': unknown preset '" + e.value + "' (only eq22)");
    }
    if (has("a") || has("w") || has("x0")) {
      fail(e.line, "plant preset conflicts with explicit a/w/x0");
    }
    cfg.a.resize(3, 3);
    cfg.a << 1.01, 0.05, 0.01, 0.02, 0.98, 0.01, 0.003, 0.002, 0.98;
    cfg.w = Matrix::Identity(3, 3);
    cfg.x0 = Vector::Zero(3);
  } else {
    auto& ea = need("a");
    cfg.a = parse_matrix(ea.value, "a", ea.line);
    if (cfg.a.rows() != cfg.a.cols()) {
      fail(ea.line, "key 'a': dynamics matrix must be square");
    }
    auto& ew = need("w");
    cfg.w = parse_matrix(ew.value, "w", ew.line);
    if (cfg.w.rows() != cfg.a.rows() || cfg.w.cols() != cfg.a.cols()) {
      fail(ew.line, "key 'w': must match the dimension of a");
    }
    if (has("x0")) {
      auto& ex = entries["x0"];
      cfg.x0 = parse_vector(ex.value, "x0", ex.line);
      if (cfg.x0.size() != cfg.a.rows()) {
        fail(ex.line, "key 'x0': must match the dimension of a");
      }
    } else {
      cfg.x0 = Vector::Zero(cfg.a.rows());
    }
  }
  const Eigen::Index s_dim = cfg.a.rows();

  {
    auto& e = need("m_sensors");
    long long m = parse_int(e.value, "m_sensors", e.line);
    if (m < 1) fail(e.line, "key 'm_sensors': must be >= 1");
    cfg.m_sensors = static_cast<int>(m);
  }
  {
    auto& e = need("n_t");
    long long v = parse_int(e.value, "n_t", e.line);
    if (v < 1) fail(e.line, "key 'n_t': must be >= 1");
    cfg.n_t = v;
  }
  {
    auto& e = need("n_r");
    long long v = parse_int(e.value, "n_r", e.line);
    if (v < 1) fail(e.line, "key 'n_r': must be >= 1");
    cfg.n_r = v;
  }

  {
    auto& e = need("topology");
    if (e.value == "sequential") {
      cfg.topo_kind = TopologyKind::kSequential;
    } else if (e.value == "gaussian") {
      cfg.topo_kind = TopologyKind::kGaussian;
    } else if (e.value == "explicit") {
      cfg.topo_kind = TopologyKind::kExplicit;
      for (int m = 1; m <= cfg.m_sensors; ++m) {
        std::string key = "c_" + std::to_string(m);
        auto it = entries.find(key);
        if (it == entries.end()) {
          fail(e.line, "explicit topology: missing key '" + key + "'");
        }
        Matrix c = parse_matrix(it->second.value, key, it->second.line);
        if (c.rows() != cfg.n_t || c.cols() != s_dim) {
          fail(it->second.line, "key '" + key + "': expected " + std::to_string(cfg.n_t) + "x" +
                                    std::to_string(s_dim));
        }
        cfg.c_mats.push_back(std::move(c));
      }
    } else {
      fail(e.line, "key 'topology': expected sequential | gaussian | explicit");
    }
  }
  if (cfg.topo_kind != TopologyKind::kExplicit) {
    for (const auto& [key, entry] : entries) {
      if (key.rfind("c_", 0) == 0) {
        fail(entry.line, "key '" + key + "' only valid with topology = explicit");
      }
    }
  }
  if (has("topology_gain")) {
    auto& e = entries["topology_gain"];
    cfg.topology_gain = parse_number(e.value, "topology_gain", e.line);
  }

  {
    auto& e = need("channel_dist");
    if (e.value == "rayleigh") {
      cfg.channel_dist = ElementDist::kRayleigh;
      auto& er = need("rayleigh_scale");
      cfg.rayleigh_scale = parse_number(er.value, "rayleigh_scale", er.line);
      if (cfg.rayleigh_scale < 0.0) fail(er.line, "key 'rayleigh_scale': must be >= 0");
    } else if (e.value == "gaussian") {
      cfg.channel_dist = ElementDist::kGaussian;
      auto& em = need("channel_mean");
      cfg.channel_mean = parse_number(em.value, "channel_mean", em.line);
      auto& ev = need("channel_var");
      cfg.channel_var = parse_number(ev.value, "channel_var", ev.line);
      if (!(cfg.channel_var > 0.0)) fail(ev.line, "key 'channel_var': must be > 0");
    } else {
      fail(e.line, "key 'channel_dist': expected rayleigh | gaussian");
    }
  }
  {
    auto& e = need("snr_db");
    cfg.snr_db = parse_number(e.value, "snr_db", e.line);
  }
  {
    auto& e = need("p");
    cfg.p = parse_number(e.value, "p", e.line);
    if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) {
      fail(e.line, "key 'p': activation probability must lie in [0,1]");
    }
  }
  {
    auto& e = need("schemes");
    for (const auto& name : split_top_level(e.value, ',')) {
      auto scheme = scheme_from_name(name);
      if (!scheme) {
        fail(e.line, "key 'schemes': unknown scheme '" + name + "'");
      }
      cfg.schemes.push_back(*scheme);
    }
    if (cfg.schemes.empty()) {
      fail(e.line, "key 'schemes': need at least one scheme");
    }
  }
  {
    auto& e = need("horizon");
    long long v = parse_int(e.value, "horizon", e.line);
    if (v < 1) fail(e.line, "key 'horizon': must be >= 1");
    cfg.horizon = static_cast<int>(v);
  }
  {
    auto& e = need("n_runs");
    long long v = parse_int(e.value, "n_runs", e.line);
    if (v < 1) fail(e.line, "key 'n_runs': must be >= 1");
    cfg.n_runs = static_cast<int>(v);
  }
  {
    auto& e = need("seed");
    long long v = parse_int(e.value, "seed", e.line);
    if (v < 0) fail(e.line, "key 'seed': must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  }

  if (has("pilot_power")) {
    auto& e = entries["pilot_power"];
    cfg.pilot_power = parse_number(e.value, "pilot_power", e.line);
    if (!(cfg.pilot_power > 0.0)) fail(e.line, "key 'pilot_power': must be > 0");
  }
  if (has("calib_slots")) {
    auto& e = entries["calib_slots"];
    long long v = parse_int(e.value, "calib_slots", e.line);
    if (v < 1) fail(e.line, "key 'calib_slots': must be >= 1");
    cfg.calib_slots = static_cast<int>(v);
  }

  cfg.cssca.k_init = Matrix();  // sized when a bundle is prepared
  if (has("cssca_iters")) {
    auto& e = entries["cssca_iters"];
    long long v = parse_int(e.value, "cssca_iters", e.line);
    if (v < 0) fail(e.line, "key 'cssca_iters': must be >= 0");
    cfg.cssca.total_iters = static_cast<int>(v);
  }
  if (has("cssca_eps0") != has("cssca_eps1")) {
    auto& e = entries[has("cssca_eps0") ? "cssca_eps0" : "cssca_eps1"];
    fail(e.line, "cssca_eps0 and cssca_eps1 must be given together");
  }
  if (has("cssca_eps0")) {
    auto& e0 = entries["cssca_eps0"];
    cfg.cssca.eps0 = parse_number(e0.value, "cssca_eps0", e0.line);
    if (!(cfg.cssca.eps0 < 0.0)) fail(e0.line, "key 'cssca_eps0': must be < 0");
    auto& e1 = entries["cssca_eps1"];
    cfg.cssca.eps1 = parse_number(e1.value, "cssca_eps1", e1.line);
    if (!(cfg.cssca.eps1 < 0.0)) fail(e1.line, "key 'cssca_eps1': must be < 0");
    cfg.cssca.auto_curvature = false;
  }
  if (has("cssca_step")) {
    auto& e = entries["cssca_step"];
    if (e.value == "diminishing") {
      cfg.cssca.step_rule = StepRule::kDiminishing;
    } else if (e.value == "armijo") {
      cfg.cssca.step_rule = StepRule::kArmijo;
    } else {
      fail(e.line, "key 'cssca_step': expected diminishing | armijo");
    }
  }
  if (has("cssca_step_exponent")) {
    auto& e = entries["cssca_step_exponent"];
    cfg.cssca.diminishing_exponent = parse_number(e.value, "cssca_step_exponent", e.line);
    if (!(cfg.cssca.diminishing_exponent > 0.0)) {
      fail(e.line, "key 'cssca_step_exponent': must be > 0");
    }
  }
  if (has("cssca_armijo_shrink")) {
    auto& e = entries["cssca_armijo_shrink"];
    cfg.cssca.armijo_shrink = parse_number(e.value, "cssca_armijo_shrink", e.line);
    if (!(cfg.cssca.armijo_shrink > 0.0 && cfg.cssca.armijo_shrink < 1.0)) {
      fail(e.line, "key 'cssca_armijo_shrink': must lie in (0,1)");
    }
  }
  if (has("cssca_armijo_slope")) {
    auto& e = entries["cssca_armijo_slope"];
    cfg.cssca.armijo_slope = parse_number(e.value, "cssca_armijo_slope", e.line);
    if (!(cfg.cssca.armijo_slope > 0.0)) fail(e.line, "key 'cssca_armijo_slope': must be > 0");
  }
  if (has("cssca_batch")) {
    auto& e = entries["cssca_batch"];
    long long v = parse_int(e.value, "cssca_batch", e.line);
    if (v < 1) fail(e.line, "key 'cssca_batch': must be >= 1");
    cfg.cssca.batch_size = static_cast<int>(v);
  }
  if (has("cssca_margin")) {
    auto& e = entries["cssca_margin"];
    cfg.cssca.feasibility_margin = parse_number(e.value, "cssca_margin", e.line);
    if (cfg.cssca.feasibility_margin < 0.0) fail(e.line, "key 'cssca_margin': must be >= 0");
  }
  if (has("k_init")) {
    auto& e = entries["k_init"];
    cfg.cssca.k_init = parse_matrix(e.value, "k_init", e.line);
    if (cfg.cssca.k_init.rows() != s_dim || cfg.cssca.k_init.cols() != cfg.n_r) {
      fail(e.line, "key 'k_init': expected " + std::to_string(s_dim) + "x" +
                       std::to_string(cfg.n_r));
    }
  }
  if (has("gain_file")) {
    cfg.gain_file = entries["gain_file"].value;
  }

  auto parse_int_list = [&](const std::string& key, std::vector<int>& out) {
    if (!has(key)) return;
    auto& e = entries[key];
    for (const auto& part : split_top_level(e.value, ',')) {
      long long v = parse_int(part, key, e.line);
      if (v < 1) fail(e.line, "key '" + key + "': entries must be >= 1");
      out.push_back(static_cast<int>(v));
    }
  };
  parse_int_list("m_values", cfg.m_values);
  parse_int_list("s_values", cfg.s_values);
  if (has("fig4_slots")) {
    auto& e = entries["fig4_slots"];
    long long v = parse_int(e.value, "fig4_slots", e.line);
    if (v < 1) fail(e.line, "key 'fig4_slots': must be >= 1");
    cfg.fig4_slots = static_cast<int>(v);
  }
  if (has("fig4_reps")) {
    auto& e = entries["fig4_reps"];
    long long v = parse_int(e.value, "fig4_reps", e.line);
    if (v < 1) fail(e.line, "key 'fig4_reps': must be >= 1");
    cfg.fig4_reps = static_cast<int>(v);
  }

  return cfg;
}

ExperimentSetup RunConfig::to_setup(int n_threads) const {
  ChannelModel channel;
  channel.n_r = n_r;
  channel.n_t = n_t;
  channel.dist = channel_dist;
  channel.rayleigh_scale = rayleigh_scale;
  channel.gauss_mean = channel_mean;
  channel.gauss_var = channel_var;
  channel.snr_db = snr_db;
  channel.tx_scale = 1.0;  // calibrated in prepare_bundle

  ExperimentSetup setup{PlantModel(a, w, x0),
                        channel,
                        ActivationModel(p),
                        topo_kind,
                        topology_gain,
                        c_mats,
                        n_t,
                        m_sensors,
                        horizon,
                        n_runs,
                        schemes,
                        pilot_power,
                        calib_slots,
                        cssca,
                        seed,
                        n_threads};
  return setup;
}

}  // namespace remest
