#ifndef STARSPEC_CONFIG_HPP
#define STARSPEC_CONFIG_HPP

#include <sstream>

#include <json.hpp>

#include "starspec/graph.hpp"

namespace starspec {

struct ParseError : Error {
  using Error::Error;
};

struct Config {
  StarGraph graph;
  MatchingCondition matching;
  SolverSettings solver;

  bool operator==(const Config&) const = default;
};

namespace detail {

/// Angles accepted as decimals or as the tokens "0", "pi/2", "pi*k/m".
inline double parse_angle(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw ParseError(where + ": alpha must be a number or token");
  std::string s = j.get<std::string>();
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s == "0") return 0.0;
  if (s == "pi") return pi;  // rejected later by the [0,pi) range check
  auto parse_ll = [&](const std::string& t) {
    std::size_t used = 0;
    const long long v = std::stoll(t, &used);
    if (used != t.size()) throw ParseError(where + ": bad angle token '" + s + "'");
    return v;
  };
  if (s.rfind("pi/", 0) == 0) return pi / double(parse_ll(s.substr(3)));
  if (s.rfind("pi*", 0) == 0) {
    const auto rest = s.substr(3);
    const auto slash = rest.find('/');
    if (slash == std::string::npos) return pi * double(parse_ll(rest));
    return pi * double(parse_ll(rest.substr(0, slash))) /
           double(parse_ll(rest.substr(slash + 1)));
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (...) {
  }
  throw ParseError(where + ": bad angle token '" + s + "'");
}

inline Tau parse_tau(const nlohmann::json& j) {
  if (j.is_number()) return Tau::finite(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "-inf" || s == "infinity" || s == "-infinity")
      return Tau::inf();
    throw ParseError("matching: bad tau token '" + s + "'");
  }
  throw ParseError("matching: tau must be a number or 'inf'");
}

inline Eigen::MatrixXcd parse_cmatrix(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty())
    throw ParseError("matching: " + name + " must be a nonempty matrix");
  const std::size_t n = j.size();
  Eigen::MatrixXcd m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n)
      throw ParseError("matching: " + name + " must be square");
    for (std::size_t c = 0; c < n; ++c) {
      const auto& e = j[r][c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ParseError("matching: " + name + " entries must be [re, im] pairs");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

}  // namespace detail

inline Config load_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  Config cfg;

  if (!j.contains("edges") || !j["edges"].is_array() || j["edges"].empty())
    throw ParseError("config: top-level 'edges' list required");
  int idx = 0;
  for (const auto& je : j["edges"]) {
    ++idx;
    const std::string where = "edges[" + std::to_string(idx) + "]";
    EdgeSpec e;
    if (!je.contains("length") || !je["length"].is_number())
      throw ParseError(where + ": numeric 'length' required");
    e.length = je["length"].get<double>();
    if (je.contains("alpha")) e.alpha = detail::parse_angle(je["alpha"], where);
    if (je.contains("potential")) {
      for (const auto& js : je["potential"]) {
        PotentialSample s;
        s.x = js.at("x").get<double>();
        s.p = js.value("p", 0.0);
        s.q = js.value("q", 0.0);
        e.potential.push_back(s);
      }
    }
    try {
      e.validate();
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
    cfg.graph.edges.push_back(std::move(e));
  }

  if (j.contains("matching")) {
    const auto& jm = j["matching"];
    const std::string type = jm.value("type", "robin");
    if (type == "robin") {
      cfg.matching = MatchingCondition::robin(detail::parse_tau(jm.value("tau", nlohmann::json(0.0))));
    } else if (type == "general") {
      if (!jm.contains("A") || !jm.contains("B"))
        throw ParseError("matching: general type requires matrices A and B");
      const auto A = detail::parse_cmatrix(jm["A"], "A");
      const auto B = detail::parse_cmatrix(jm["B"], "B");
      if (A.rows() != static_cast<Eigen::Index>(cfg.graph.size()))
        throw ValidationError("matching: matrix size must equal the edge count");
      cfg.matching = MatchingCondition::general(A, B);
    } else {
      throw ParseError("matching: unknown type '" + type + "'");
    }
  } else {
    cfg.matching = MatchingCondition::robin(Tau::inf());
  }

  if (j.contains("solver")) {
    const auto& js = j["solver"];
    cfg.solver.ode_tol = js.value("ode_tol", cfg.solver.ode_tol);
    cfg.solver.root_tol = js.value("root_tol", cfg.solver.root_tol);
    cfg.solver.grid_points = js.value("grid_points", cfg.solver.grid_points);
    if (js.contains("window")) {
      const auto& w = js["window"];
      if (!w.is_array() || w.size() != 2)
        throw ParseError("solver: window must be [lo, hi]");
      cfg.solver.window = {w[0].get<double>(), w[1].get<double>()};
    }
  }
  cfg.solver.validate();
  cfg.graph.validate();
  return cfg;
}

/// Canonical emission: sorted keys, full-precision numbers, alpha as decimal.
/// load_config(emit_config(c)) reproduces c exactly.
inline std::string emit_config(const Config& cfg) {
  nlohmann::json j;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : cfg.graph.edges) {
    nlohmann::json je;
    je["length"] = e.length;
    je["alpha"] = e.alpha;
    je["potential"] = nlohmann::json::array();
    for (const auto& s : e.potential)
      je["potential"].push_back({{"x", s.x}, {"p", s.p}, {"q", s.q}});
    j["edges"].push_back(je);
  }
  if (cfg.matching.is_robin()) {
    j["matching"]["type"] = "robin";
    if (cfg.matching.tau.infinite)
      j["matching"]["tau"] = "inf";
    else
      j["matching"]["tau"] = cfg.matching.tau.value;
  } else {
    j["matching"]["type"] = "general";
    auto dump = [](const Eigen::MatrixXcd& m) {
      nlohmann::json out = nlohmann::json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          row.push_back({m(r, c).real(), m(r, c).imag()});
        out.push_back(row);
      }
      return out;
    };
    j["matching"]["A"] = dump(cfg.matching.A);
    j["matching"]["B"] = dump(cfg.matching.B);
  }
  j["solver"]["ode_tol"] = cfg.solver.ode_tol;
  j["solver"]["root_tol"] = cfg.solver.root_tol;
  j["solver"]["grid_points"] = cfg.solver.grid_points;
  j["solver"]["window"] = {cfg.solver.window[0], cfg.solver.window[1]};
  return j.dump(2) + "\n";
}

}  // namespace starspec

#endif  // STARSPEC_CONFIG_HPP
