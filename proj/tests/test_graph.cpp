#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace starspec;
using Catch::Approx;

TEST_CASE("sample_potential: free edge returns zero") {
  const auto e = testutil::free_edge();
  for (double x : {0.0, 0.3, 1.0}) {
    const auto [p, q] = sample_potential(e, x);
    CHECK(p == 0.0);
    CHECK(q == 0.0);
  }
}

TEST_CASE("sample_potential: constant and linear interpolation") {
  EdgeSpec e;
  e.length = 1.0;
  e.potential = {{0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}};
  auto [p, q] = sample_potential(e, 0.5);
  CHECK(p == Approx(1.0));
  CHECK(q == Approx(0.0));

  // linear ramp checked against the by-hand value at x = 0.25
  e.potential = {{0.0, 0.0, 0.0}, {1.0, 2.0, 4.0}};
  std::tie(p, q) = sample_potential(e, 0.25);
  CHECK(p == Approx(0.5));
  CHECK(q == Approx(1.0));
}

TEST_CASE("sample_potential: reproduces samples exactly and is continuous") {
  std::mt19937 rng(7);
  const auto e = testutil::random_edge(rng);
  for (const auto& s : e.potential) {
    const auto [p, q] = sample_potential(e, s.x);
    CHECK(p == Approx(s.p).margin(0));
    CHECK(q == Approx(s.q).margin(0));
  }
  for (double x = 0.0; x < e.length - 1e-4; x += e.length / 97) {
    const auto [p1, q1] = sample_potential(e, x);
    const auto [p2, q2] = sample_potential(e, x + 1e-9);
    CHECK(std::abs(p2 - p1) < 1e-6);
    CHECK(std::abs(q2 - q1) < 1e-6);
  }
  CHECK_THROWS_AS(sample_potential(e, -0.01), ValidationError);
  CHECK_THROWS_AS(sample_potential(e, e.length + 0.01), ValidationError);
}

TEST_CASE("load_config: defaults, tokens, and errors") {
  const std::string text = R"({
    "edges": [ {"length": 1.0, "alpha": "pi/2", "potential": []} ],
    "matching": {"type": "robin", "tau": "inf"}
  })";
  const Config cfg = load_config(text);
  REQUIRE(cfg.graph.size() == 1);
  CHECK(cfg.graph.edges[0].is_free());
  CHECK(cfg.graph.edges[0].alpha == Approx(pi / 2));
  CHECK(cfg.matching.is_robin());
  CHECK(cfg.matching.tau.infinite);
  CHECK(cfg.solver.ode_tol == Approx(1e-10));
  CHECK(cfg.solver.root_tol == Approx(1e-8));

  CHECK_THROWS_AS(load_config("{"), ParseError);
  CHECK_THROWS_AS(load_config(R"({"edges": []})"), ParseError);
  CHECK_THROWS_AS(load_config(R"({"edges": [{"length": -1}]})"), ValidationError);
  CHECK_THROWS_AS(load_config(R"({"edges": [{"length": 1, "alpha": 3.5}]})"), ValidationError);
  CHECK_THROWS_AS(load_config(R"({"edges": [{"length": 1, "alpha": "pi*x/2"}]})"), ParseError);
}

TEST_CASE("load_config: -inf and +inf normalize to the same condition") {
  auto cfg1 = load_config(R"({"edges":[{"length":1}], "matching":{"type":"robin","tau":"-inf"}})");
  auto cfg2 = load_config(R"({"edges":[{"length":1}], "matching":{"type":"robin","tau":"inf"}})");
  CHECK(cfg1.matching == cfg2.matching);
}

TEST_CASE("config round-trip: emit then reload gives identical objects") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Config cfg;
    cfg.graph = testutil::random_graph(rng);
    if (trial % 2 == 0) {
      cfg.matching = MatchingCondition::robin(trial == 0 ? Tau::inf() : Tau::finite(1.5));
    } else {
      const int n = static_cast<int>(cfg.graph.size());
      Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
      Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n, n);
      cfg.matching = MatchingCondition::general(A, B);
    }
    cfg.solver.window = {-12.5, 8.25};
    const std::string text = emit_config(cfg);
    const Config back = load_config(text);
    CHECK(back == cfg);
    // canonical form is a fixed point
    CHECK(emit_config(back) == text);
  }
}

TEST_CASE("angle tokens pi*k/m") {
  auto cfg = load_config(R"({"edges":[{"length":2,"alpha":"pi*3/4"}]})");
  CHECK(cfg.graph.edges[0].alpha == Approx(3 * pi / 4));
  cfg = load_config(R"({"edges":[{"length":2,"alpha":0.125}]})");
  CHECK(cfg.graph.edges[0].alpha == Approx(0.125));
  cfg = load_config(R"({"edges":[{"length":2,"alpha":"0"}]})");
  CHECK(cfg.graph.edges[0].alpha == 0.0);
}

TEST_CASE("grid function inner product and validation") {
  StarGraph g;
  g.edges = {testutil::free_edge(1.0)};
  auto f = GridFunction::zeros(g, 101);
  for (Eigen::Index i = 0; i < 101; ++i)
    f.edges[0].values(0, i) = std::sin(pi * f.edges[0].x(i));
  // int_0^1 sin^2(pi x) dx = 1/2
  CHECK(grid_norm_sq(f) == Approx(0.5).epsilon(1e-8));
}
