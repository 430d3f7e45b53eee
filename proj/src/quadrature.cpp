#include "insider/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

#include "insider/errors.hpp"

namespace insider {

namespace {

// 15-point Kronrod nodes on [0, 1] side, embedded 7-point Gauss.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelEstimate {
  double value;
  double error;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double k15 = kWgk[7] * fc;
  double g7 = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[i];
    const double fsum = f(center - dx) + f(center + dx);
    k15 += kWgk[i] * fsum;
    if (i % 2 == 1) g7 += kWg[i / 2] * fsum;
  }
  k15 *= half;
  g7 *= half;
  return {k15, std::abs(k15 - g7)};
}

struct Interval {
  double a, b, value, error;
  bool operator<(const Interval& other) const { return error < other.error; }
};

QuadratureResult adapt(const std::function<double(double)>& f, double a, double b,
                       const QuadratureOptions& opt) {
  std::priority_queue<Interval> heap;
  double total = 0.0;
  double total_err = 0.0;
  const int panels = std::max(1, opt.initial_panels);
  for (int i = 0; i < panels; ++i) {
    const double pa = a + (b - a) * i / panels;
    const double pb = a + (b - a) * (i + 1) / panels;
    const PanelEstimate est = gk15(f, pa, pb);
    heap.push({pa, pb, est.value, est.error});
    total += est.value;
    total_err += est.error;
  }
  int used = panels;
  while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (used >= opt.max_intervals) {
      throw NonConvergence("quadrature: interval budget exhausted before tolerance");
    }
    const Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      // interval no longer splittable in double precision; accept it
      total_err -= worst.error;
      heap.push({worst.a, worst.b, worst.value, 0.0});
      continue;
    }
    const PanelEstimate left = gk15(f, worst.a, mid);
    const PanelEstimate right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push({worst.a, mid, left.value, left.error});
    heap.push({mid, worst.b, right.value, right.error});
    ++used;
  }
  return {total, total_err};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opt) {
  const bool inf_a = std::isinf(a);
  const bool inf_b = std::isinf(b);
  if (!inf_a && !inf_b) {
    if (!(a < b)) throw DomainError("quadrature: require a < b");
    return adapt(f, a, b, opt);
  }
  constexpr double half_pi = 1.57079632679489661923;
  if (inf_a && inf_b) {
    auto g = [&f](double u) {
      const double c = std::cos(u);
      const double x = std::tan(u);
      return f(x) / (c * c);
    };
    return adapt(g, -half_pi, half_pi, opt);
  }
  if (!inf_a) {
    auto g = [&f, a](double u) {
      const double c = std::cos(u);
      return f(a + std::tan(u)) / (c * c);
    };
    return adapt(g, 0.0, half_pi, opt);
  }
  auto g = [&f, b](double u) {
    const double c = std::cos(u);
    return f(b - std::tan(u)) / (c * c);
  };
  return adapt(g, 0.0, half_pi, opt);
}

double integrate_value(const std::function<double(double)>& f, double a, double b,
                       const QuadratureOptions& opt) {
  return integrate(f, a, b, opt).value;
}

double integrate_sqrt_endpoints(const std::function<double(double)>& f, double a, double b,
                                int panels) {
  if (!(a < b)) throw DomainError("quadrature: require a < b");
  if (panels < 1) throw DomainError("quadrature: panels must be positive");
  constexpr double pi = 3.14159265358979323846;
  const double len = b - a;
  // t = a + len * sin^2(pi u / 2); dt = len * (pi/2) sin(pi u) du
  auto g = [&](double u) {
    const double s = std::sin(0.5 * pi * u);
    const double t = a + len * s * s;
    return f(t) * len * 0.5 * pi * std::sin(pi * u);
  };
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double ua = static_cast<double>(i) / panels;
    const double ub = static_cast<double>(i + 1) / panels;
    sum += gk15(g, ua, ub).value;
  }
  return sum;
}

std::vector<double> sqrt_endpoint_refinements(const std::function<double(double)>& f, double a,
                                              double b, int panels, int levels) {
  std::vector<double> values;
  values.reserve(levels);
  int p = panels;
  for (int level = 0; level < levels; ++level) {
    values.push_back(integrate_sqrt_endpoints(f, a, b, p));
    p *= 2;
  }
  return values;
}

namespace {

// Orthonormal probabilists' Hermite recurrence: p_{j+1} = (x p_j - sqrt(j) p_{j-1}) / sqrt(j+1).
double hermite_eval(int n, double x, double* prev_out = nullptr) {
  double pm = 0.0;
  double p = 1.0;
  for (int j = 0; j < n; ++j) {
    const double next = (x * p - std::sqrt(static_cast<double>(j)) * pm) /
                        std::sqrt(static_cast<double>(j + 1));
    pm = p;
    p = next;
  }
  if (prev_out) *prev_out = pm;
  return p;
}

HermiteRule compute_gauss_hermite(int n) {
  // Roots found by interlacing bisection, order by order, then Newton polish.
  std::vector<double> roots = {0.0};  // roots of p_1
  for (int m = 2; m <= n; ++m) {
    const double bound = 2.0 * std::sqrt(static_cast<double>(m)) + 2.0;
    std::vector<double> next;
    next.reserve(m);
    std::vector<double> edges;
    edges.reserve(m + 1);
    edges.push_back(-bound);
    edges.insert(edges.end(), roots.begin(), roots.end());
    edges.push_back(bound);
    for (int i = 0; i < m; ++i) {
      double lo = edges[i];
      double hi = edges[i + 1];
      double flo = hermite_eval(m, lo);
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = hermite_eval(m, mid);
        if ((flo < 0.0) == (fmid < 0.0)) {
          lo = mid;
          flo = fmid;
        } else {
          hi = mid;
        }
      }
      double x = 0.5 * (lo + hi);
      for (int it = 0; it < 3; ++it) {  // Newton: p_m' = sqrt(m) p_{m-1}
        double pm1 = 0.0;
        const double pm = hermite_eval(m, x, &pm1);
        const double deriv = std::sqrt(static_cast<double>(m)) * pm1;
        if (deriv != 0.0) x -= pm / deriv;
      }
      next.push_back(x);
    }
    roots = std::move(next);
  }
  HermiteRule rule;
  rule.nodes = roots;
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Christoffel weights: 1 / sum_{j<n} p_j(x_i)^2; they sum to mu_0 = 1.
    double pm = 0.0;
    double p = 1.0;
    double sum = 1.0;
    for (int j = 0; j < n - 1; ++j) {
      const double nextp = (rule.nodes[i] * p - std::sqrt(static_cast<double>(j)) * pm) /
                           std::sqrt(static_cast<double>(j + 1));
      pm = p;
      p = nextp;
      sum += p * p;
    }
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

}  // namespace

const HermiteRule& gauss_hermite(int n) {
  if (n < 1) throw DomainError("gauss_hermite: need at least one node");
  static std::mutex mutex;
  static std::map<int, HermiteRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_hermite(n)).first;
  return it->second;
}

}  // namespace insider
