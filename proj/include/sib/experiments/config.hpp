#pragma once

// Run configuration: an INI file (sections and key = value lines) parsed with
// Boost.PropertyTree. Numeric values are expressions ("pi", "2^20", "1e-3").
// Unknown sections or keys are rejected. The schema is in docs/config.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sib/dynamics.hpp"
#include "sib/experiments/expr.hpp"

namespace sib::experiments {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One coefficient entry of a mode list: c(k,l) = re + i im.
struct ModeCoeff {
  int k = 1, l = 1;
  double re = 0.0, im = 0.0;
};

struct DataSpec {
  enum class Kind { preset, modes, expression } kind = Kind::preset;
  std::string preset = "standard";  // standard | zero | large | linear
  std::vector<ModeCoeff> u_modes, v_modes, vt_modes;
  std::string u_re = "0", u_im = "0", v = "0", vt = "0";
};

struct RunConfig {
  double lx = std::numbers::pi, ly = std::numbers::pi;
  int nx = 64, ny = 64;

  DataSpec data;
  bool regularize_data = true;

  SystemParams params;
  double horizon = 1.0;
  int monitor_stride = 10;
  int checkpoint_stride = 0;  // in samples; 0 = none
  std::uint64_t seed = 0;

  std::optional<double> c0, c1, c2;
  std::optional<std::string> c0_file;

  std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125};
  std::vector<long long> n_list{8, 16, 32, 64};
  std::vector<double> dt_list{1e-2, 5e-3, 2.5e-3};

  int check_random_fields = 100;
  bool check_inject_fault = false;  // test hook for the check suite

  double c0_lx = 2 * std::numbers::pi, c0_ly = 2 * std::numbers::pi;
  int c0_nx = 256, c0_ny = 256;
  int c0_max_iter = 5000;
  double c0_tol = 1e-10;

  std::string source;  // verbatim text of the file, echoed into manifests

  GridPtr grid() const { return make_grid(lx, ly, nx, ny); }

  void validate() const {
    auto fail = [](const std::string &m) { throw ConfigError(m); };
    if (!(lx > 0) || !(ly > 0)) fail("grid: Lx and Ly must be positive");
    if (nx < 1 || ny < 1) fail("grid: Nx and Ny must be >= 1");
    try {
      params.validate();
    } catch (const std::invalid_argument &e) {
      fail(std::string("system: ") + e.what());
    }
    if (!(horizon > 0) || !std::isfinite(horizon)) fail("run: T must be positive");
    if (monitor_stride < 1) fail("run: monitor_stride must be >= 1");
    if (checkpoint_stride < 0) fail("run: checkpoint_stride must be >= 0");
    if (c0 && !(*c0 > 0)) fail("constants: C0 must be positive");
    static const std::set<std::string> presets{"standard", "zero", "large", "linear"};
    if (data.kind == DataSpec::Kind::preset && !presets.count(data.preset))
      fail("data: unknown preset '" + data.preset + "'");
    for (const auto *list : {&data.u_modes, &data.v_modes, &data.vt_modes})
      for (const auto &m : *list)
        if (m.k < 1 || m.k > nx || m.l < 1 || m.l > ny)
          fail("data: mode (" + std::to_string(m.k) + "," + std::to_string(m.l) + ") outside the grid");
    for (double e : eps_list)
      if (!(e >= 0 && e <= 1)) fail("sweep: eps values must lie in [0, 1]");
    for (long long n : n_list)
      if (n < 1) fail("sweep: n values must be >= 1");
    for (double d : dt_list)
      if (!(d > 0)) fail("order: dt values must be positive");
    if (check_random_fields < 1) fail("check: random_fields must be >= 1");
    if (!(c0_lx > 0) || !(c0_ly > 0) || c0_nx < 1 || c0_ny < 1) fail("c0: bad estimator grid");
    if (c0_max_iter < 1 || !(c0_tol >= 0)) fail("c0: bad iteration controls");
  }
};

namespace detail {

inline double number(const std::string &key, const std::string &text) {
  try {
    return expr::evaluate(text);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline long long integer(const std::string &key, const std::string &text) {
  const double v = number(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(key + ": expected an integer, got " + text);
  return static_cast<long long>(v);
}

inline bool boolean(const std::string &key, std::string text) {
  for (auto &c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError(key + ": expected a boolean, got " + text);
}

inline std::vector<std::string> split(const std::string &text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t"), e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

template <class T, class F>
std::vector<T> list(const std::string &key, const std::string &text, F conv) {
  std::vector<T> out;
  for (const auto &item : split(text, ',')) out.push_back(static_cast<T>(conv(key, item)));
  return out;
}

// "k l re [im]; k l re [im]; ..."
inline std::vector<ModeCoeff> modes(const std::string &key, const std::string &text) {
  std::vector<ModeCoeff> out;
  for (const auto &entry : split(text, ';')) {
    std::istringstream in(entry);
    std::vector<std::string> tok;
    for (std::string t; in >> t;) tok.push_back(t);
    if (tok.size() != 3 && tok.size() != 4) throw ConfigError(key + ": mode entries are 'k l re [im]', got '" + entry + "'");
    ModeCoeff m;
    m.k = static_cast<int>(integer(key, tok[0]));
    m.l = static_cast<int>(integer(key, tok[1]));
    m.re = number(key, tok[2]);
    if (tok.size() == 4) m.im = number(key, tok[3]);
    out.push_back(m);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const std::string &text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  RunConfig c;
  c.source = text;
  bool have_modes = false, have_expr = false, have_preset = false;

  using Setter = std::function<void(const std::string &, const std::string &)>;
  using detail::boolean, detail::integer, detail::number;
  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"grid",
       {{"Lx", [&](auto &k, auto &v) { c.lx = number(k, v); }},
        {"Ly", [&](auto &k, auto &v) { c.ly = number(k, v); }},
        {"Nx", [&](auto &k, auto &v) { c.nx = static_cast<int>(integer(k, v)); }},
        {"Ny", [&](auto &k, auto &v) { c.ny = static_cast<int>(integer(k, v)); }}}},
      {"data",
       {{"preset", [&](auto &, auto &v) { c.data.preset = v, have_preset = true; }},
        {"u_modes", [&](auto &k, auto &v) { c.data.u_modes = detail::modes(k, v), have_modes = true; }},
        {"v_modes", [&](auto &k, auto &v) { c.data.v_modes = detail::modes(k, v), have_modes = true; }},
        {"vt_modes", [&](auto &k, auto &v) { c.data.vt_modes = detail::modes(k, v), have_modes = true; }},
        {"u_re", [&](auto &, auto &v) { c.data.u_re = v, have_expr = true; }},
        {"u_im", [&](auto &, auto &v) { c.data.u_im = v, have_expr = true; }},
        {"v", [&](auto &, auto &v) { c.data.v = v, have_expr = true; }},
        {"vt", [&](auto &, auto &v) { c.data.vt = v, have_expr = true; }},
        {"regularize", [&](auto &k, auto &v) { c.regularize_data = boolean(k, v); }}}},
      {"system",
       {{"eps", [&](auto &k, auto &v) { c.params.eps = number(k, v); }},
        {"yosida_n", [&](auto &k, auto &v) { c.params.yosida_n = integer(k, v); }},
        {"dt", [&](auto &k, auto &v) { c.params.dt = number(k, v); }},
        {"dealias", [&](auto &k, auto &v) { c.params.dealias = boolean(k, v); }},
        {"coupling", [&](auto &k, auto &v) { c.params.coupling = boolean(k, v); }}}},
      {"run",
       {{"T", [&](auto &k, auto &v) { c.horizon = number(k, v); }},
        {"monitor_stride", [&](auto &k, auto &v) { c.monitor_stride = static_cast<int>(integer(k, v)); }},
        {"checkpoint_stride", [&](auto &k, auto &v) { c.checkpoint_stride = static_cast<int>(integer(k, v)); }},
        {"seed", [&](auto &k, auto &v) { c.seed = static_cast<std::uint64_t>(integer(k, v)); }}}},
      {"constants",
       {{"C0", [&](auto &k, auto &v) { c.c0 = number(k, v); }},
        {"C0_file", [&](auto &, auto &v) { c.c0_file = v; }},
        {"C1", [&](auto &k, auto &v) { c.c1 = number(k, v); }},
        {"C2", [&](auto &k, auto &v) { c.c2 = number(k, v); }}}},
      {"sweep",
       {{"eps_list", [&](auto &k, auto &v) { c.eps_list = detail::list<double>(k, v, number); }},
        {"n_list", [&](auto &k, auto &v) { c.n_list = detail::list<long long>(k, v, integer); }}}},
      {"order", {{"dt_list", [&](auto &k, auto &v) { c.dt_list = detail::list<double>(k, v, number); }}}},
      {"check",
       {{"random_fields", [&](auto &k, auto &v) { c.check_random_fields = static_cast<int>(integer(k, v)); }},
        {"inject_fault", [&](auto &k, auto &v) { c.check_inject_fault = boolean(k, v); }}}},
      {"c0",
       {{"Lx", [&](auto &k, auto &v) { c.c0_lx = number(k, v); }},
        {"Ly", [&](auto &k, auto &v) { c.c0_ly = number(k, v); }},
        {"Nx", [&](auto &k, auto &v) { c.c0_nx = static_cast<int>(integer(k, v)); }},
        {"Ny", [&](auto &k, auto &v) { c.c0_ny = static_cast<int>(integer(k, v)); }},
        {"max_iter", [&](auto &k, auto &v) { c.c0_max_iter = static_cast<int>(integer(k, v)); }},
        {"tol", [&](auto &k, auto &v) { c.c0_tol = number(k, v); }}}},
  };

  for (const auto &[section, body] : tree) {
    auto sec = schema.find(section);
    if (sec == schema.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto &[key, value] : body) {
      auto set = sec->second.find(key);
      if (set == sec->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      set->second(section + "." + key, value.data());
    }
  }

  if (have_modes + have_expr + have_preset > 1)
    throw ConfigError("data: use exactly one of preset, *_modes or expression keys");
  if (have_modes) c.data.kind = DataSpec::Kind::modes;
  if (have_expr) {
    c.data.kind = DataSpec::Kind::expression;
    for (const auto *e : {&c.data.u_re, &c.data.u_im, &c.data.v, &c.data.vt}) {
      try {
        expr::Expression parsed(*e);
      } catch (const std::invalid_argument &err) {
        throw ConfigError(std::string("data: ") + err.what());
      }
    }
  }
  if (c.data.kind == DataSpec::Kind::preset && c.data.preset == "linear") c.params.coupling = false;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace sib::experiments
