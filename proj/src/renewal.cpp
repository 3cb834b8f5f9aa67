#include "renewalq/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "renewalq/errors.hpp"

namespace renewalq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InputError("waiting time: rate must be positive");
}

void require_time(double t) {
  if (!(t >= 0.0)) throw InputError("waiting time: negative time");
}

// P(X >= m) for X ~ Poisson(mu).
double poisson_upper_tail(double mu, long m) {
  if (m <= 0) return 1.0;
  if (mu <= 0.0) return 0.0;
  if (static_cast<double>(m) <= mu) {
    double term = std::exp(-mu);
    double head = 0.0;
    for (long j = 0; j < m; ++j) {
      head += term;
      term *= mu / static_cast<double>(j + 1);
    }
    return std::max(0.0, 1.0 - head);
  }
  double term = std::exp(static_cast<double>(m) * std::log(mu) - mu -
                         std::lgamma(static_cast<double>(m) + 1.0));
  double sum = 0.0;
  for (long j = m; term > 0.0; ++j) {
    sum += term;
    term *= mu / static_cast<double>(j + 1);
    if (term < 1e-18 * sum) break;
  }
  return std::min(1.0, sum);
}

double tabulated_pdf(const TabulatedWait& tab, double t) {
  const double x = t / tab.step;
  const auto last = tab.values.size() - 1;
  if (x >= static_cast<double>(last)) {
    return x == static_cast<double>(last) ? tab.values.back() : 0.0;
  }
  const auto i = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(i);
  return (1.0 - frac) * tab.values[i] + frac * tab.values[i + 1];
}

double tabulated_survival(const TabulatedWait& tab, double t) {
  const double x = t / tab.step;
  const auto last = tab.values.size() - 1;
  double g;
  if (x >= static_cast<double>(last)) {
    g = tab.survival_nodes.back();
  } else {
    const auto i = static_cast<std::size_t>(x);
    const double dt = t - static_cast<double>(i) * tab.step;
    g = tab.survival_nodes[i] - 0.5 * dt * (tab.values[i] + tabulated_pdf(tab, t));
  }
  return std::clamp(g, 0.0, 1.0);
}

// Trapezoid weight of node j on [0, i*h].
inline double trapezoid_weight(int j, int i, double h) {
  if (i == 0) return 0.0;
  return (j == 0 || j == i) ? 0.5 * h : h;
}

}  // namespace

WaitingTime WaitingTime::exponential(double rate) {
  require_rate(rate);
  return WaitingTime(ExponentialWait{rate});
}

WaitingTime WaitingTime::erlang(int shape, double rate) {
  require_rate(rate);
  if (shape < 1) throw InputError("erlang: shape must be a positive integer");
  return WaitingTime(ErlangWait{shape, rate});
}

double tabulated_normalization_defect(double step, std::span<const double> values) {
  if (values.size() < 2) return INFINITY;
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    integral += 0.5 * step * (values[i] + values[i + 1]);
  }
  return std::abs(integral - 1.0);
}

WaitingTime WaitingTime::tabulated(double step, std::vector<double> values) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("tabulated wait: step must be positive");
  if (values.size() < 2) throw InputError("tabulated wait: need at least two nodes");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("tabulated wait: density values must be finite and non-negative");
    }
  }
  const double defect = tabulated_normalization_defect(step, values);
  if (defect > kTabulatedNormalizationTolerance) {
    std::ostringstream msg;
    msg << "tabulated wait: density integrates to " << 1.0 + defect
        << " (or " << 1.0 - defect << "), not 1 within 1e-6";
    throw InputError(msg.str());
  }
  std::vector<double> g(values.size());
  g[0] = 1.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    g[i] = g[i - 1] - 0.5 * step * (values[i - 1] + values[i]);
  }
  return WaitingTime(TabulatedWait{step, std::move(values), std::move(g)});
}

double WaitingTime::pdf(double t) const {
  require_time(t);
  return std::visit(
      overloaded{
          [t](const ExponentialWait& e) { return e.rate * std::exp(-e.rate * t); },
          [t](const ErlangWait& e) {
            if (t == 0.0) return e.shape == 1 ? e.rate : 0.0;
            const double k = e.shape;
            return std::exp(k * std::log(e.rate) + (k - 1.0) * std::log(t) - e.rate * t -
                            std::lgamma(k));
          },
          [t](const TabulatedWait& tab) { return tabulated_pdf(tab, t); },
      },
      kind_);
}

double WaitingTime::survival(double t) const {
  require_time(t);
  return std::visit(
      overloaded{
          [t](const ExponentialWait& e) { return std::exp(-e.rate * t); },
          [t](const ErlangWait& e) {
            const double x = e.rate * t;
            double term = std::exp(-x);
            double sum = 0.0;
            for (int j = 0; j < e.shape; ++j) {
              sum += term;
              term *= x / (j + 1);
            }
            return std::min(1.0, sum);
          },
          [t](const TabulatedWait& tab) { return tabulated_survival(tab, t); },
      },
      kind_);
}

Complex WaitingTime::laplace_pdf(Complex u) const {
  return std::visit(
      overloaded{
          [u](const ExponentialWait& e) {
            if (!(u.real() > -e.rate)) throw InputError("laplace_pdf: transform diverges");
            return e.rate / (u + e.rate);
          },
          [u](const ErlangWait& e) {
            if (!(u.real() > -e.rate)) throw InputError("laplace_pdf: transform diverges");
            return std::pow(e.rate / (u + e.rate), e.shape);
          },
          [u](const TabulatedWait& tab) {
            if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) {
              throw InputError("laplace_pdf: non-finite argument");
            }
            Complex sum = 0.0;
            const auto n = tab.values.size();
            for (std::size_t i = 0; i < n; ++i) {
              const double w = (i == 0 || i + 1 == n) ? 0.5 * tab.step : tab.step;
              sum += w * tab.values[i] * std::exp(-u * (static_cast<double>(i) * tab.step));
            }
            return sum;
          },
      },
      kind_);
}

double WaitingTime::sample(RandomStream& stream) const {
  return std::visit(
      overloaded{
          [&](const ExponentialWait& e) { return -std::log(stream.uniform()) / e.rate; },
          [&](const ErlangWait& e) {
            double s = 0.0;
            for (int j = 0; j < e.shape; ++j) s -= std::log(stream.uniform());
            return s / e.rate;
          },
          [&](const TabulatedWait& tab) {
            const double u = stream.uniform();
            const double end = tab.t_end();
            if (tabulated_survival(tab, end) >= u) return std::numeric_limits<double>::infinity();
            double lo = 0.0;
            double hi = end;
            for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, end); ++it) {
              const double mid = 0.5 * (lo + hi);
              if (tabulated_survival(tab, mid) > u) {
                lo = mid;
              } else {
                hi = mid;
              }
            }
            return 0.5 * (lo + hi);
          },
      },
      kind_);
}

double WaitingTime::count_tail(double t, int n) const {
  require_time(t);
  if (n < 0) return 1.0;
  return std::visit(
      overloaded{
          [&](const ExponentialWait& e) { return poisson_upper_tail(e.rate * t, n + 1L); },
          [&](const ErlangWait& e) {
            // A sum of n + 1 Erlang(k) waits is Erlang((n + 1) k).
            return poisson_upper_tail(e.rate * t, (n + 1L) * e.shape);
          },
          [&](const TabulatedWait& tab) {
            const int points = std::max(2, static_cast<int>(std::ceil(t / tab.step)) + 1);
            return count_tail_quadrature(*this, t, n, points);
          },
      },
      kind_);
}

std::string WaitingTime::describe() const {
  std::ostringstream out;
  std::visit(overloaded{
                 [&](const ExponentialWait& e) { out << "exponential(rate=" << e.rate << ")"; },
                 [&](const ErlangWait& e) {
                   out << "erlang(shape=" << e.shape << ", rate=" << e.rate << ")";
                 },
                 [&](const TabulatedWait& tab) {
                   out << "tabulated(step=" << tab.step << ", nodes=" << tab.values.size() << ")";
                 },
             },
             kind_);
  return out.str();
}

WaitingTimeTable read_waiting_time_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open waiting-time CSV '" + path + "'");
  std::vector<double> times;
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double t = 0.0;
    double f = 0.0;
    if (!(fields >> t >> f)) {
      if (times.empty() && line_no == 1) continue;  // header
      throw InputError(path + ":" + std::to_string(line_no) + ": expected two numeric columns");
    }
    times.push_back(t);
    values.push_back(f);
  }
  if (times.size() < 2) throw InputError(path + ": need at least two rows");
  if (times.front() != 0.0) throw InputError(path + ": first time must be 0");
  const double step = times[1] - times[0];
  if (!(step > 0.0)) throw InputError(path + ": times must be strictly increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double expected = static_cast<double>(i) * step;
    if (std::abs(times[i] - expected) > 1e-9 * std::max(1.0, expected)) {
      throw InputError(path + ": times must be uniformly spaced (row " + std::to_string(i + 1) + ")");
    }
  }
  return {step, std::move(values)};
}

WaitingTime load_waiting_time_csv(const std::string& path) {
  WaitingTimeTable table = read_waiting_time_csv(path);
  return WaitingTime::tabulated(table.step, std::move(table.values));
}

double survival(const WaitingTime& wt, double t) { return wt.survival(t); }

Complex laplace_pdf(const WaitingTime& wt, Complex u) { return wt.laplace_pdf(u); }

Trajectory sample_renewal(const WaitingTime& wt, double t, RandomStream& stream,
                          Direction direction) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("sample_renewal: invalid horizon");
  std::vector<double> times;
  if (t == 0.0) return Trajectory(0.0);
  if (direction == Direction::forward) {
    double s = wt.sample(stream);
    while (s < t) {
      times.push_back(s);
      s += wt.sample(stream);
    }
  } else {
    double s = t - wt.sample(stream);
    while (s > 0.0) {
      times.push_back(s);
      s -= wt.sample(stream);
    }
    std::reverse(times.begin(), times.end());
  }
  return Trajectory(t, std::move(times));
}

double pn_density(const WaitingTime& wt, const Trajectory& traj) {
  const auto& ts = traj.jump_times();
  if (ts.empty()) return wt.survival(traj.horizon());
  double prod = wt.survival(ts.front());
  for (std::size_t k = 1; k < ts.size(); ++k) prod *= wt.pdf(ts[k] - ts[k - 1]);
  return prod * wt.pdf(traj.horizon() - ts.back());
}

std::vector<double> pn_masses(const WaitingTime& wt, double t, int n_max, int grid_points) {
  require_time(t);
  if (grid_points < 2) throw InputError("pn_masses: grid_points must be at least 2");
  if (n_max < 0) throw InputError("pn_masses: n_max must be non-negative");
  const int last = grid_points - 1;
  const double h = t / last;
  std::vector<double> f(static_cast<std::size_t>(grid_points));
  std::vector<double> a(static_cast<std::size_t>(grid_points));
  for (int i = 0; i <= last; ++i) {
    f[i] = wt.pdf(i * h);
    a[i] = wt.survival(i * h);
  }
  std::vector<double> masses{a.back()};
  std::vector<double> next(a.size());
  for (int n = 1; n <= n_max; ++n) {
    for (int i = 0; i <= last; ++i) {
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) acc += trapezoid_weight(j, i, h) * f[i - j] * a[j];
      next[i] = acc;
    }
    a.swap(next);
    masses.push_back(a.back());
  }
  return masses;
}

double count_tail_quadrature(const WaitingTime& wt, double t, int n, int grid_points) {
  require_time(t);
  if (grid_points < 2) throw InputError("count_tail_quadrature: grid_points must be at least 2");
  if (n < 0) return 1.0;
  const int last = grid_points - 1;
  const double h = t / last;
  std::vector<double> f(static_cast<std::size_t>(grid_points));
  std::vector<double> b(static_cast<std::size_t>(grid_points));
  for (int i = 0; i <= last; ++i) {
    f[i] = wt.pdf(i * h);
    b[i] = 1.0 - wt.survival(i * h);
  }
  std::vector<double> next(b.size());
  for (int m = 1; m <= n; ++m) {
    for (int i = 0; i <= last; ++i) {
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) acc += trapezoid_weight(j, i, h) * f[i - j] * b[j];
      next[i] = acc;
    }
    b.swap(next);
  }
  return std::clamp(b.back(), 0.0, 1.0);
}

}  // namespace renewalq
