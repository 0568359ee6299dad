#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "owo/benchmark.hpp"
#include "owo/rng.hpp"

using namespace owo;

namespace {

// dense Gaussian elimination with partial pivoting; test-only oracle
Vec solve_linear(std::vector<Vec> A, Vec b) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (int j = c; j < n; ++j) A[r][j] -= f * A[c][j];
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= A[r][j] * x[j];
    x[r] = s / A[r][r];
  }
  return x;
}

// raw K-user task set with labels from theta0 plus noise, identical users
KernelTaskSet planted_tasks(Substream& rs, const Vec& theta0, int m, int users,
                            double noise) {
  const int d = static_cast<int>(theta0.size());
  std::vector<std::vector<Vec>> tau(m, std::vector<Vec>(users, Vec(1)));
  auto y = tau;
  for (int i = 0; i < m; ++i) {
    const double x = rs.uniform01();
    const double label =
        dot(theta0, poly_features(x, d)) + noise * (2.0 * rs.uniform01() - 1.0);
    for (int k = 0; k < users; ++k) {
      tau[i][k][0] = x;
      y[i][k][0] = label;
    }
  }
  return KernelTaskSet(std::move(tau), std::move(y),
                       std::vector<bool>(m, false), d);
}

}  // namespace

TEST_CASE("u_t_value at the benchmark") {
  const FairnessSpec spec{1.0, 1.0, 3.3, 2};
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  const auto sched = make_schedule(spec, dom, 1.0, 2.0, 4);
  const Vec p{0.1, 0.2, 0.3, 0.4};
  CHECK(u_t_value(p, p, sched) ==
        doctest::Approx(0.25 * 4.0 * 4.0 / 2.0).epsilon(1e-14));
}

TEST_CASE("K = 1 benchmark matches projected least squares") {
  const FairnessSpec spec{1.0, 0.5, 50.0, 1};
  const double cap = 26.0;
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  Substream rs(mix(31, 1));
  for (int trial = 0; trial < 5; ++trial) {
    Vec theta0(4);
    for (auto& v : theta0) v = 0.5 * (2.0 * rs.uniform01() - 1.0);
    const auto tasks = planted_tasks(rs, theta0, 24, 1, 0.01);

    // normal equations on the round-mean quadratic stats
    std::vector<Vec> S(4, Vec(4, 0.0));
    Vec r(4, 0.0);
    for (int i = 0; i < tasks.slots(); ++i) {
      const Vec mu = poly_features(tasks.input(i, 0, 0), 4);
      const double yv = tasks.label(i, 0, 0);
      for (int a = 0; a < 4; ++a) {
        r[a] += yv * mu[a] / tasks.slots();
        for (int c = 0; c < 4; ++c)
          S[a][c] += mu[a] * mu[c] / tasks.slots();
      }
    }
    const Vec ls = dom.project(solve_linear(S, r));

    // the moment matrix is badly conditioned, so a theta-space comparison
    // needs a much tighter mapping norm than the default
    SolverConfig tight;
    tight.tolerance = 1e-12;
    const auto res = solve_round_benchmark(tasks, spec, cap, dom, tight);
    CHECK(std::sqrt(squared_distance(res.theta_star, ls)) <= 1e-6);
    CHECK(res.mapping_norm <= 1e-12);
  }
}

TEST_CASE("identical users reduce to the single-user optimum") {
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  Substream rs(mix(31, 2));
  Vec theta0{0.3, -0.2, 0.4, 0.1};
  const auto two = planted_tasks(rs, theta0, 16, 2, 0.05);
  Substream rs2(mix(31, 2));
  const auto one = planted_tasks(rs2, theta0, 16, 1, 0.05);

  const FairnessSpec spec2{2.0, 0.5, 50.0, 2};
  const FairnessSpec spec1{2.0, 0.5, 50.0, 1};
  const double cap = 26.0;
  SolverConfig tight;
  tight.tolerance = 1e-12;
  const auto a = solve_round_benchmark(two, spec2, cap, dom, tight);
  const auto b = solve_round_benchmark(one, spec1, cap, dom, tight);
  CHECK(std::sqrt(squared_distance(a.theta_star, b.theta_star)) <= 1e-5);
}

TEST_CASE("d = 2 solver objective matches the grid oracle") {
  EnvConfig cfg;
  cfg.feature_dim = 2;
  cfg.m = 8;
  cfg.seed = 77;
  const auto dom = BoxDomain::cube(-1.0, 1.0, 2);
  const auto bounds = loss_bounds(cfg);
  for (double alpha : {1.0, 2.0}) {
    const FairnessSpec spec{alpha, 1.0, 1.0 + bounds.loss_sup, 2};
    const double cap = spec.u_max;
    for (int t = 1; t <= 3; ++t) {
      const auto tasks = KernelTaskSet::sample(t, cfg);
      const auto res = solve_round_benchmark(tasks, spec, cap, dom);
      const auto grid = grid_oracle(
          [&](const Vec& p) {
            return eval_round_fairness(tasks, spec, cap, p, false).value;
          },
          dom, 200);
      CHECK(std::fabs(res.objective - grid.value) <= 1e-3);
      CHECK(res.objective >= grid.value - 1e-6);
    }
  }
}

TEST_CASE("optimality certificate under random perturbations") {
  EnvConfig cfg;
  cfg.m = 16;
  cfg.seed = 5;
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  const auto bounds = loss_bounds(cfg);
  const FairnessSpec spec{1.0, 1.0, 1.0 + bounds.loss_sup, 2};
  const auto tasks = KernelTaskSet::sample(1, cfg);
  const auto res = solve_round_benchmark(tasks, spec, spec.u_max, dom);

  Substream rs(mix(31, 3));
  for (int i = 0; i < 200; ++i) {
    Vec p(4);
    for (auto& v : p) v = 2.0 * rs.uniform01() - 1.0;
    const double v = eval_round_fairness(tasks, spec, spec.u_max, p, false).value;
    CHECK(v <= res.objective + 1e-6);
  }
}

TEST_CASE("objective trace is monotone") {
  EnvConfig cfg;
  cfg.m = 12;
  cfg.seed = 9;
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  const auto bounds = loss_bounds(cfg);
  const FairnessSpec spec{2.0, 1.0, 1.0 + bounds.loss_sup, 2};
  const auto tasks = KernelTaskSet::sample(2, cfg);
  const auto res = solve_round_benchmark(tasks, spec, spec.u_max, dom);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    CHECK(res.objective_trace[i] >= res.objective_trace[i - 1] - 1e-12);
}

TEST_CASE("iteration limit raises SolverError carrying the best iterate") {
  EnvConfig cfg;
  cfg.m = 12;
  cfg.seed = 3;
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  const auto bounds = loss_bounds(cfg);
  const FairnessSpec spec{1.0, 1.0, 1.0 + bounds.loss_sup, 2};
  const auto tasks = KernelTaskSet::sample(1, cfg);
  SolverConfig tight;
  tight.max_iterations = 1;
  try {
    solve_round_benchmark(tasks, spec, spec.u_max, dom, tight);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.best().theta_star.size() == 4);
    CHECK(e.best().mapping_norm > 1e-8);
  }
}

TEST_CASE("best_initialization") {
  const FairnessSpec spec{1.0, 1.0, 3.3, 2};
  const auto dom = BoxDomain::cube(-1.0, 1.0, 4);
  const auto sched = make_schedule(spec, dom, 1.0, 2.0, 4);

  const Vec p{0.2, -0.3, 0.1, 0.0};
  const auto same = best_initialization({p, p, p}, sched, dom);
  CHECK(squared_distance(same.x_star, p) <= 1e-28);

  const auto sym = best_initialization({{-1, 0, 0, 0}, {1, 0, 0, 0}}, sched, dom);
  for (double v : sym.x_star) CHECK(std::fabs(v) <= 1e-15);

  Substream rs(mix(31, 4));
  std::vector<Vec> bench;
  for (int t = 0; t < 12; ++t) {
    Vec b(4);
    for (auto& v : b) v = 2.0 * rs.uniform01() - 1.0;
    bench.push_back(b);
  }
  const auto opt = best_initialization(bench, sched, dom);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(4);
    for (auto& v : x) v = 2.0 * rs.uniform01() - 1.0;
    double total = 0.0;
    for (const auto& b : bench) total += u_t_value(x, b, sched);
    CHECK(opt.total_u <= total + 1e-10);
  }

  CHECK_THROWS_AS(best_initialization({}, sched, dom), std::invalid_argument);
}

TEST_CASE("grid_oracle") {
  const auto dom = BoxDomain::cube(-1.0, 1.0, 2);

  const auto flat = grid_oracle([](const Vec&) { return 2.5; }, dom, 10);
  CHECK(flat.value == 2.5);

  const auto quad = grid_oracle(
      [](const Vec& p) {
        const double a = p[0] - 0.3, b = p[1] + 0.2;
        return -(a * a) - (b * b);
      },
      dom, 201);
  const double cell = 2.0 / 200.0;
  CHECK(std::fabs(quad.argmax[0] - 0.3) <= cell);
  CHECK(std::fabs(quad.argmax[1] + 0.2) <= cell);

  const auto edge = grid_oracle([](const Vec& p) { return p[0]; }, dom, 51);
  CHECK(edge.argmax[0] == 1.0);

  const auto dom1 = BoxDomain::cube(0.0, 1.0, 1);
  const auto line = grid_oracle([](const Vec& p) { return -p[0]; }, dom1, 11);
  CHECK(line.argmax[0] == 0.0);

  CHECK_THROWS_AS(grid_oracle([](const Vec&) { return 0.0; },
                              BoxDomain::cube(-1.0, 1.0, 3), 10),
                  std::invalid_argument);
}
