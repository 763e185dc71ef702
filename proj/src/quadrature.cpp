#include "fjohn/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>

namespace fjohn::quad {

namespace {

// error target for an integral of magnitude `mag`; never below roundoff
double target(const AdaptiveOptions& o, double mag) {
  return std::max({o.abs_tol, 1e-13 * mag, std::min(o.abs_cap, o.rel_tol * mag)});
}

Rule build_gauss_legendre(int n) {
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  std::reverse(r.nodes.begin(), r.nodes.end());
  std::reverse(r.weights.begin(), r.weights.end());
  return r;
}

// Kronrod 15-point extension of Gauss 7 (QUADPACK qk15 constants).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& fn, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = fn(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double f1 = fn(c - dx);
    const double f2 = fn(c + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

double gauss(const std::function<double(double)>& fn, double a, double b, int nodes) {
  const Rule& r = gauss_legendre(nodes);
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * fn(c + h * r.nodes[i]);
  return acc * h;
}

AdaptiveResult adaptive(const std::function<double(double)>& fn, double a, double b,
                        const AdaptiveOptions& opts, std::span<const double> breakpoints) {
  AdaptiveResult out;
  if (!(b > a)) return out;

  std::vector<double> cuts;
  const int panels = std::max(1, opts.initial_panels);
  for (int i = 0; i <= panels; ++i) cuts.push_back(a + (b - a) * i / panels);
  for (double bp : breakpoints)
    if (bp > a && bp < b) cuts.push_back(bp);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Panel> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    Panel p = gk15(fn, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    total += p.value;
    err += p.error;
    heap.push(p);
  }

  while (err > target(opts, std::abs(total))) {
    if (static_cast<int>(heap.size()) >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      out.converged = false;
      break;
    }
    heap.pop();
    const Panel left = gk15(fn, worst.a, mid);
    const Panel right = gk15(fn, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the panels to shed the running-sum rounding.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  return out;
}

namespace {

AdaptiveResult box_level(const std::function<double(std::span<const double>)>& fn,
                         std::span<const double> lo, std::span<const double> hi,
                         std::vector<double>& x, std::size_t dim, const AdaptiveOptions& opts) {
  if (dim + 1 == lo.size()) {
    return adaptive(
        [&](double t) {
          x[dim] = t;
          return fn(x);
        },
        lo[dim], hi[dim], opts);
  }
  AdaptiveOptions inner = opts;
  inner.abs_tol = opts.abs_tol / std::max(1.0, hi[dim] - lo[dim]) * 0.1;
  bool all_converged = true;
  int evals = 0;
  auto res = adaptive(
      [&](double t) {
        x[dim] = t;
        auto r = box_level(fn, lo, hi, x, dim + 1, inner);
        all_converged = all_converged && r.converged;
        evals += r.evaluations;
        return r.value;
      },
      lo[dim], hi[dim], opts);
  res.converged = res.converged && all_converged;
  res.evaluations = evals;
  return res;
}

}  // namespace

AdaptiveResult adaptive_box(const std::function<double(std::span<const double>)>& fn,
                            std::span<const double> lo, std::span<const double> hi,
                            const AdaptiveOptions& opts) {
  std::vector<double> x(lo.size(), 0.0);
  if (lo.empty()) return {fn(x), 0.0, 1, true};
  return box_level(fn, lo, hi, x, 0, opts);
}

double piecewise_gauss(const std::function<double(double)>& fn, double a, double b,
                       std::vector<double> cuts, int nodes) {
  if (!(b > a)) return 0.0;
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  double prev = a;
  for (double c : cuts) {
    if (c <= prev) continue;
    if (c > b) break;
    acc += gauss(fn, prev, c, nodes);
    prev = c;
  }
  return acc;
}

namespace {

struct VecPanel {
  double a, b, error;
  std::vector<double> value;
  bool operator<(const VecPanel& o) const { return error < o.error; }
};

VecPanel gk15_vec(const VecIntegrand& fn, std::size_t dim, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::vector<double> f1(dim), f2(dim), resk(dim), resg(dim);
  fn(c, f1);
  for (std::size_t k = 0; k < dim; ++k) {
    resk[k] = f1[k] * kWgk[7];
    resg[k] = f1[k] * kWg[3];
  }
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    fn(c - dx, f1);
    fn(c + dx, f2);
    for (std::size_t k = 0; k < dim; ++k) {
      resk[k] += kWgk[j] * (f1[k] + f2[k]);
      if (j % 2 == 1) resg[k] += kWg[j / 2] * (f1[k] + f2[k]);
    }
  }
  VecPanel p{a, b, 0.0, std::vector<double>(dim)};
  for (std::size_t k = 0; k < dim; ++k) {
    p.value[k] = resk[k] * h;
    p.error += std::abs((resk[k] - resg[k]) * h);
  }
  return p;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

AdaptiveVecResult adaptive_vec(const VecIntegrand& fn, std::size_t dim, double a, double b,
                               const AdaptiveOptions& opts, std::span<const double> breakpoints) {
  AdaptiveVecResult out;
  out.value.assign(dim, 0.0);
  if (!(b > a)) return out;

  std::vector<double> cuts;
  const int panels = std::max(1, opts.initial_panels);
  for (int i = 0; i <= panels; ++i) cuts.push_back(a + (b - a) * i / panels);
  for (double bp : breakpoints)
    if (bp > a && bp < b) cuts.push_back(bp);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<VecPanel> heap;
  std::vector<double> total(dim, 0.0);
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    VecPanel p = gk15_vec(fn, dim, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    for (std::size_t k = 0; k < dim; ++k) total[k] += p.value[k];
    err += p.error;
    heap.push(std::move(p));
  }

  while (err > target(opts, max_abs(total))) {
    if (!std::isfinite(err)) {
      out.converged = false;
      break;
    }
    if (static_cast<int>(heap.size()) >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    const VecPanel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      out.converged = false;
      break;
    }
    heap.pop();
    VecPanel left = gk15_vec(fn, dim, worst.a, mid);
    VecPanel right = gk15_vec(fn, dim, mid, worst.b);
    out.evaluations += 30;
    for (std::size_t k = 0; k < dim; ++k) total[k] += left.value[k] + right.value[k] - worst.value[k];
    err += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }

  // Panels are summed in sorted order so the result is independent of the
  // heap layout.
  std::vector<VecPanel> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const VecPanel& x, const VecPanel& y) { return x.a < y.a; });
  err = 0.0;
  for (const auto& p : all) {
    for (std::size_t k = 0; k < dim; ++k) out.value[k] += p.value[k];
    err += p.error;
  }
  out.error = err;
  return out;
}

namespace {

AdaptiveVecResult box_level_vec(const VecBoxIntegrand& fn, std::size_t dim, std::span<const double> lo,
                                std::span<const double> hi, std::vector<double>& x, std::size_t axis,
                                const AdaptiveOptions& opts) {
  if (axis + 1 == lo.size()) {
    return adaptive_vec(
        [&](double t, std::span<double> out) {
          x[axis] = t;
          fn(x, out);
        },
        dim, lo[axis], hi[axis], opts);
  }
  AdaptiveOptions inner = opts;
  inner.abs_tol = opts.abs_tol / std::max(1.0, hi[axis] - lo[axis]) * 0.1;
  bool all_converged = true;
  int evals = 0;
  auto res = adaptive_vec(
      [&](double t, std::span<double> out) {
        x[axis] = t;
        auto r = box_level_vec(fn, dim, lo, hi, x, axis + 1, inner);
        all_converged = all_converged && r.converged;
        evals += r.evaluations;
        std::copy(r.value.begin(), r.value.end(), out.begin());
      },
      dim, lo[axis], hi[axis], opts);
  res.converged = res.converged && all_converged;
  res.evaluations = evals;
  return res;
}

}  // namespace

AdaptiveVecResult adaptive_box_vec(const VecBoxIntegrand& fn, std::size_t dim, std::span<const double> lo,
                                   std::span<const double> hi, const AdaptiveOptions& opts) {
  std::vector<double> x(lo.size(), 0.0);
  if (lo.empty()) {
    AdaptiveVecResult r;
    r.value.assign(dim, 0.0);
    fn(x, r.value);
    r.evaluations = 1;
    return r;
  }
  return box_level_vec(fn, dim, lo, hi, x, 0, opts);
}

}  // namespace fjohn::quad
