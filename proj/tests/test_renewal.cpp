#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "renewalq/errors.hpp"
#include "renewalq/renewal.hpp"

using namespace renewalq;

namespace {

double trapezoid(const WaitingTime& wt, double t, int points) {
  const double h = t / (points - 1);
  double s = 0.5 * (wt.pdf(0.0) + wt.pdf(t));
  for (int i = 1; i < points - 1; ++i) s += wt.pdf(i * h);
  return s * h;
}

// P(X > n) for X ~ Poisson(mu), by summing the pmf tail directly.
double poisson_tail(double mu, int n) {
  double term = std::exp(-mu);
  double head = 0.0;
  for (int j = 0; j <= n; ++j) {
    head += term;
    term *= mu / (j + 1);
  }
  return 1.0 - head;
}

// Renewal function m = F + F * m on a uniform grid (trapezoid Volterra solve).
double renewal_function(const WaitingTime& wt, double t, int points) {
  const double h = t / (points - 1);
  std::vector<double> m(points, 0.0);
  std::vector<double> f(points);
  for (int i = 0; i < points; ++i) f[i] = wt.pdf(i * h);
  for (int i = 1; i < points; ++i) {
    const double cdf = 1.0 - wt.survival(i * h);
    double conv = 0.5 * f[i] * m[0];
    for (int j = 1; j < i; ++j) conv += f[i - j] * m[j];
    m[i] = (cdf + h * conv) / (1.0 - 0.5 * h * f[0]);
  }
  return m.back();
}

std::vector<double> count_histogram(const WaitingTime& wt, double t, Direction dir, int n,
                                    std::uint64_t seed, int max_count) {
  std::vector<double> hist(max_count + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    CounterStream s(seed, static_cast<std::uint64_t>(i));
    const auto jumps = sample_renewal(wt, t, s, dir).jumps();
    hist[std::min<std::size_t>(jumps, max_count)] += 1.0 / n;
  }
  return hist;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / a.size() -
                                      static_cast<double>(j) / b.size()));
  }
  return worst;
}

}  // namespace

TEST_CASE("survival examples") {
  CHECK(std::abs(survival(WaitingTime::exponential(1.0), 1.0) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(survival(WaitingTime::erlang(2, 1.0), 1.0) - 2.0 * std::exp(-1.0)) < 1e-15);
  for (const auto& wt : {WaitingTime::exponential(2.0), WaitingTime::erlang(3, 0.5),
                         WaitingTime::tabulated(0.5, {0.0, 1.0, 1.0, 0.0})}) {
    CHECK(wt.survival(0.0) == 1.0);
    CHECK_THROWS_AS(wt.survival(-0.1), InputError);
  }
}

TEST_CASE("survival plus integrated density is one") {
  for (const auto& wt : {WaitingTime::exponential(1.0), WaitingTime::exponential(2.0),
                         WaitingTime::erlang(2, 1.0), WaitingTime::erlang(3, 2.0)}) {
    for (const double t : {0.1, 0.5, 1.0, 2.0, 4.0}) {
      CHECK(std::abs(wt.survival(t) + trapezoid(wt, t, 40001) - 1.0) < 1e-8);
    }
  }
  const WaitingTime tab = WaitingTime::tabulated(0.25, {0.0, 1.0, 2.0, 1.0, 0.0});
  CHECK(std::abs(tab.survival(0.5) - (1.0 - 0.25 * 0.5 * (0.0 + 2.0 * 1.0 + 2.0))) < 1e-14);
  CHECK(std::abs(tab.survival(1.0)) < 1e-14);
}

TEST_CASE("survival is non-increasing") {
  for (const auto& wt : {WaitingTime::exponential(1.0), WaitingTime::erlang(4, 3.0),
                         WaitingTime::tabulated(0.1, {2.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0, 0.0})}) {
    double prev = 1.0;
    for (int i = 0; i <= 400; ++i) {
      const double g = wt.survival(i * 0.01);
      CHECK(g <= prev + 1e-15);
      CHECK(g >= 0.0);
      prev = g;
    }
  }
}

TEST_CASE("tabulated validation") {
  CHECK_THROWS_AS(WaitingTime::tabulated(0.1, {10.0, 0.0}), InputError);
  std::vector<double> short_mass(11, 0.9);  // trapezoid integral 0.9
  CHECK_THROWS_AS(WaitingTime::tabulated(0.1, short_mass), InputError);
  CHECK_THROWS_AS(WaitingTime::tabulated(0.5, {1.0, -0.2, 1.2, 0.0}), InputError);
  CHECK_THROWS_AS(WaitingTime::tabulated(0.0, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(WaitingTime::exponential(0.0), InputError);
  CHECK_THROWS_AS(WaitingTime::erlang(0, 1.0), InputError);
  CHECK(std::abs(tabulated_normalization_defect(0.1, short_mass) - 0.1) < 1e-12);
}

TEST_CASE("laplace_pdf") {
  CHECK(std::abs(laplace_pdf(WaitingTime::exponential(1.0), 1.0) - 0.5) < 1e-15);
  CHECK(std::abs(laplace_pdf(WaitingTime::erlang(2, 1.0), 1.0) - 0.25) < 1e-15);
  const WaitingTime tab = WaitingTime::tabulated(0.25, {0.0, 1.0, 2.0, 1.0, 0.0});
  for (const auto& wt : {WaitingTime::exponential(3.0), WaitingTime::erlang(3, 1.5), tab}) {
    CHECK(std::abs(laplace_pdf(wt, 0.0) - 1.0) < 1e-12);
    double prev = 1.0;
    for (double u = 0.1; u < 10.0; u += 0.1) {
      const Complex v = laplace_pdf(wt, u);
      CHECK(std::abs(v.imag()) < 1e-15);
      CHECK(v.real() > 0.0);
      CHECK(v.real() < prev);
      prev = v.real();
    }
  }
  CHECK_THROWS_AS(laplace_pdf(WaitingTime::exponential(1.0), Complex(-1.5, 0.0)), InputError);
  CHECK_THROWS_AS(laplace_pdf(WaitingTime::erlang(2, 1.0), Complex(-2.0, 1.0)), InputError);
}

TEST_CASE("tabulated transform approaches the closed form") {
  const double step = 1e-3;
  std::vector<double> values;
  for (int i = 0; i * step <= 40.0; ++i) values.push_back(std::exp(-i * step));
  const WaitingTime tab = WaitingTime::tabulated(step, values);
  for (const Complex u : {Complex(0.5, 0.0), Complex(1.0, 2.0), Complex(2.0, -1.0)}) {
    CHECK(std::abs(tab.laplace_pdf(u) - 1.0 / (u + 1.0)) < 1e-6);
  }
}

TEST_CASE("waiting-time CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "renewalq_test_renewal";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.csv";
  {
    std::ofstream out(good);
    out << "t,f\n0,0\n0.25,1\n0.5,2\n0.75,1\n1.0,0\n";
  }
  const WaitingTime wt = load_waiting_time_csv(good.string());
  CHECK(std::abs(wt.pdf(0.5) - 2.0) < 1e-15);
  CHECK(std::abs(wt.survival(1.0)) < 1e-14);

  const auto bad = dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "0,1\n0.3,1\n0.5,1\n";
  }
  CHECK_THROWS_AS(load_waiting_time_csv(bad.string()), InputError);
  CHECK_THROWS_AS(load_waiting_time_csv((dir / "missing.csv").string()), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pn_density") {
  const WaitingTime ex = WaitingTime::exponential(1.0);
  CHECK(std::abs(pn_density(ex, Trajectory(2.0, {0.5, 1.2})) - std::exp(-2.0)) < 1e-15);
  const WaitingTime er = WaitingTime::erlang(2, 1.0);
  CHECK(std::abs(pn_density(er, Trajectory(1.7)) - er.survival(1.7)) < 1e-15);
  // g on the first interval, f on the later ones.
  const double expected = er.survival(0.3) * er.pdf(0.5) * er.pdf(0.9);
  CHECK(std::abs(pn_density(er, Trajectory(1.7, {0.3, 0.8})) - expected) < 1e-15);
  CHECK_THROWS_AS(pn_density(er, Trajectory(1.7, {0.8, 0.3})), InputError);
}

TEST_CASE("p_n masses sum to one minus the count tail") {
  const auto m = pn_masses(WaitingTime::exponential(1.0), 2.0, 6, 801);
  double total = 0.0;
  for (const double x : m) total += x;
  CHECK(std::abs(total - (1.0 - poisson_tail(2.0, 6))) < 1e-4);

  const WaitingTime er = WaitingTime::erlang(2, 1.0);
  const auto me = pn_masses(er, 3.0, 5, 1201);
  for (int n = 0; n <= 5; ++n) {
    const double above = n == 0 ? 1.0 : er.count_tail(3.0, n - 1);
    CHECK(std::abs(me[n] - (above - er.count_tail(3.0, n))) < 1e-5);
  }
}

TEST_CASE("count_tail closed forms agree with quadrature") {
  for (const auto& wt : {WaitingTime::exponential(1.3), WaitingTime::erlang(2, 1.0),
                         WaitingTime::erlang(3, 2.0)}) {
    for (const int n : {0, 1, 3}) {
      CHECK(std::abs(wt.count_tail(2.0, n) - count_tail_quadrature(wt, 2.0, n, 2001)) < 1e-5);
    }
  }
  CHECK(std::abs(WaitingTime::exponential(1.0).count_tail(2.0, 6) - poisson_tail(2.0, 6)) < 1e-14);
  const WaitingTime tab = WaitingTime::tabulated(0.1, {0.0, 2.0, 4.0, 2.0, 2.0, 0.0});
  CHECK(std::abs(tab.count_tail(0.45, 0) - (1.0 - tab.survival(0.45))) < 1e-6);
}

TEST_CASE("sample_renewal basics") {
  CounterStream s(1, 0);
  CHECK(sample_renewal(WaitingTime::erlang(2, 1.0), 0.0, s, Direction::forward).jumps() == 0);
  CHECK(sample_renewal(WaitingTime::erlang(2, 1.0), 0.0, s, Direction::reverse).jumps() == 0);
  for (int i = 0; i < 200; ++i) {
    const Trajectory tr = sample_renewal(WaitingTime::exponential(3.0), 2.0, s, Direction::reverse);
    for (const double t : tr.jump_times()) {
      CHECK(t > 0.0);
      CHECK(t < 2.0);
    }
  }
  // A tabulation with mass beyond reach never renews after its support.
  const WaitingTime late = WaitingTime::tabulated(1.0, {0.0, 0.0, 0.0, 1.0, 0.0});
  CHECK(sample_renewal(late, 2.5, s, Direction::forward).jumps() == 0);
}

TEST_CASE("exponential waits: forward and reverse counts coincide") {
  const WaitingTime ex = WaitingTime::exponential(1.0);
  const int n = 100000;
  const auto fwd = count_histogram(ex, 2.0, Direction::forward, n, 21, 12);
  const auto rev = count_histogram(ex, 2.0, Direction::reverse, n, 22, 12);
  for (int k = 0; k <= 12; ++k) {
    const double p = 0.5 * (fwd[k] + rev[k]);
    CHECK(std::abs(fwd[k] - rev[k]) <= 3.0 * std::sqrt(2.0 * p * (1 - p) / n) + 1e-12);
  }
}

TEST_CASE("Erlang renewal function by quadrature") {
  const WaitingTime er = WaitingTime::erlang(2, 1.0);
  const double oracle = renewal_function(er, 5.0, 5001);
  // Closed form for Erlang(2, 1): t/2 - 1/4 + e^{-2t}/4.
  CHECK(std::abs(oracle - (2.5 - 0.25 + 0.25 * std::exp(-10.0))) < 1e-5);
  const int n = 100000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    CounterStream s(23, static_cast<std::uint64_t>(i));
    mean += static_cast<double>(sample_renewal(er, 5.0, s, Direction::forward).jumps()) / n;
  }
  CHECK(std::abs(mean - oracle) < 0.02 * oracle);
}

TEST_CASE("Erlang counts coincide across directions but jump times do not") {
  const WaitingTime er = WaitingTime::erlang(2, 1.0);
  const int n = 100000;
  std::vector<double> first_fwd;
  std::vector<double> first_rev;
  std::vector<double> fwd(6, 0.0);
  std::vector<double> rev(6, 0.0);
  for (int i = 0; i < n; ++i) {
    CounterStream a(24, static_cast<std::uint64_t>(i));
    CounterStream b(25, static_cast<std::uint64_t>(i));
    const Trajectory tf = sample_renewal(er, 1.0, a, Direction::forward);
    const Trajectory tr = sample_renewal(er, 1.0, b, Direction::reverse);
    fwd[std::min<std::size_t>(tf.jumps(), 5)] += 1.0 / n;
    rev[std::min<std::size_t>(tr.jumps(), 5)] += 1.0 / n;
    if (tf.jumps() > 0) first_fwd.push_back(tf.jump_times().front());
    if (tr.jumps() > 0) first_rev.push_back(tr.jump_times().front());
  }
  // g * f^{*n} = f^{*n} * g, so the count law is direction independent.
  for (int k = 0; k <= 5; ++k) {
    const double p = 0.5 * (fwd[k] + rev[k]);
    CHECK(std::abs(fwd[k] - rev[k]) <= 4.0 * std::sqrt(2.0 * p * (1 - p) / n) + 1e-12);
  }
  CHECK(ks_distance(first_fwd, first_rev) > 0.01);
}

TEST_CASE("reverse sampling realizes the p_1 density") {
  const WaitingTime er = WaitingTime::erlang(2, 1.0);
  const double t = 1.0;
  const int n = 200000;
  int hits_rev = 0;
  int hits_fwd = 0;
  for (int i = 0; i < n; ++i) {
    CounterStream a(26, static_cast<std::uint64_t>(i));
    CounterStream b(27, static_cast<std::uint64_t>(i));
    const Trajectory tr = sample_renewal(er, t, a, Direction::reverse);
    const Trajectory tf = sample_renewal(er, t, b, Direction::forward);
    hits_rev += tr.jumps() == 1 && tr.jump_times()[0] <= 0.5;
    hits_fwd += tf.jumps() == 1 && tf.jump_times()[0] <= 0.5;
  }
  // int_0^{1/2} p_1 with p_1 = g(t_1) f(t - t_1), and its mirror image.
  double p_rev = 0.0;
  double p_fwd = 0.0;
  const int m = 20000;
  const double h = 0.5 / m;
  for (int k = 0; k <= m; ++k) {
    const double w = (k == 0 || k == m) ? 0.5 * h : h;
    const double s = k * h;
    p_rev += w * pn_density(er, Trajectory(t, {s}));
    p_fwd += w * er.pdf(s) * er.survival(t - s);
  }
  CHECK(std::abs(static_cast<double>(hits_rev) / n - p_rev) < 4.0 * std::sqrt(p_rev / n));
  CHECK(std::abs(static_cast<double>(hits_fwd) / n - p_fwd) < 4.0 * std::sqrt(p_fwd / n));
  CHECK(std::abs(p_rev - p_fwd) > 0.02);
}

TEST_CASE("tabulated sampling follows the tabulated law") {
  const WaitingTime tab = WaitingTime::tabulated(0.25, {0.0, 1.0, 2.0, 1.0, 0.0});
  const int n = 100000;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    CounterStream s(28, static_cast<std::uint64_t>(i));
    below += tab.sample(s) <= 0.4;
  }
  const double p = 1.0 - tab.survival(0.4);
  CHECK(std::abs(static_cast<double>(below) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}
