#include "imcert/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "imcert/errors.hpp"

namespace imcert {

IntervalVector::IntervalVector(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw DimensionMismatch("IntervalVector: lower and upper differ in length");
  }
  require_finite(lower_, "IntervalVector lower");
  require_finite(upper_, "IntervalVector upper");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (lower_[i] > upper_[i]) {
      throw ValueError("IntervalVector: lower > upper at index " + std::to_string(i));
    }
  }
}

IntervalVector IntervalVector::ball(std::span<const double> center, double radius) {
  if (!std::isfinite(radius) || radius < 0.0) throw ValueError("epsilon must be finite and >= 0");
  Vector lo(center.begin(), center.end());
  Vector hi = lo;
  for (auto& v : lo) v -= radius;
  for (auto& v : hi) v += radius;
  return {std::move(lo), std::move(hi)};
}

Vector IntervalVector::center() const {
  Vector c(size());
  for (std::size_t i = 0; i < size(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
  return c;
}

double IntervalVector::radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < size(); ++i) r = std::max(r, 0.5 * (upper_[i] - lower_[i]));
  return r;
}

bool IntervalVector::contains(std::span<const double> v, double slack) const {
  if (v.size() != size()) throw DimensionMismatch("IntervalVector::contains");
  for (std::size_t i = 0; i < size(); ++i) {
    if (v[i] < lower_[i] - slack || v[i] > upper_[i] + slack) return false;
  }
  return true;
}

bool IntervalVector::subset_of(const IntervalVector& other, double slack) const {
  if (other.size() != size()) throw DimensionMismatch("IntervalVector::subset_of");
  for (std::size_t i = 0; i < size(); ++i) {
    if (lower_[i] < other.lower_[i] - slack || upper_[i] > other.upper_[i] + slack) return false;
  }
  return true;
}

Vector decomposition_function(const ImplicitNetwork& net, std::span<const double> x,
                              std::span<const double> x_hat, std::span<const double> u,
                              std::span<const double> u_hat) {
  if (x.size() != net.n() || x_hat.size() != net.n() || u.size() != net.r() ||
      u_hat.size() != net.r()) {
    throw DimensionMismatch("decomposition_function: argument dimensions do not match network");
  }
  Vector z = net.b();
  matvec_add(metzler_part(net.A()), x, z);
  matvec_add(non_metzler_part(net.A()), x_hat, z);
  matvec_add(positive_part(net.B()), u, z);
  matvec_add(negative_part(net.B()), u_hat, z);
  return net.activation().apply(z);
}

KamkeReport verify_kamke(const ImplicitNetwork& net, std::size_t samples, std::uint64_t seed) {
  return verify_kamke(
      net,
      [&net](auto x, auto xh, auto u, auto uh) { return decomposition_function(net, x, xh, u, uh); },
      samples, seed);
}

KamkeReport verify_kamke(const ImplicitNetwork& net, const DecompositionFn& decomp,
                         std::size_t samples, std::uint64_t seed) {
  const std::size_t n = net.n();
  const std::size_t r = net.r();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> bump(0.0, 1.0);
  auto random_vec = [&](std::size_t d) {
    Vector v(d);
    for (auto& e : v) e = coord(rng);
    return v;
  };
  auto fail = [](const std::string& what, std::size_t s, std::size_t i) {
    std::ostringstream os;
    os << what << " (sample " << s << ", component " << i << ")";
    return KamkeReport{false, os.str()};
  };
  constexpr double slack = 1e-12;

  for (std::size_t s = 0; s < samples; ++s) {
    const Vector x = random_vec(n), xh = random_vec(n), u = random_vec(r), uh = random_vec(r);

    const Vector diag = decomp(x, x, u, u);
    const Vector exact = net.map(x, u);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::fabs(diag[i] - exact[i]) > slack * (1.0 + std::fabs(exact[i]))) {
        return fail("d(x, x, u, u) != N(x, u)", s, i);
      }
    }

    const Vector base = decomp(x, xh, u, uh);
    // Condition (ii): y >= x with y_i = x_i, y_hat <= x_hat.
    for (std::size_t i = 0; i < n; ++i) {
      Vector y = x, yh = xh;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) y[j] += bump(rng);
        yh[j] -= bump(rng);
      }
      const Vector moved = decomp(y, yh, u, uh);
      if (moved[i] < base[i] - slack * (1.0 + std::fabs(base[i]))) {
        return fail("not monotone in the state arguments", s, i);
      }
    }
    // Condition (iii): v >= u, v_hat <= u_hat.
    Vector v = u, vh = uh;
    for (std::size_t j = 0; j < r; ++j) {
      v[j] += bump(rng);
      vh[j] -= bump(rng);
    }
    const Vector moved = decomp(x, xh, v, vh);
    for (std::size_t i = 0; i < n; ++i) {
      if (moved[i] < base[i] - slack * (1.0 + std::fabs(base[i]))) {
        return fail("not monotone in the input arguments", s, i);
      }
    }
  }
  return {};
}

IntervalVector output_box(const ImplicitNetwork& net, std::span<const double> x_lower,
                          std::span<const double> x_upper) {
  const Matrix cp = positive_part(net.C());
  const Matrix cn = negative_part(net.C());
  Vector lo = net.c();
  Vector hi = net.c();
  matvec_add(cp, x_lower, lo);
  matvec_add(cn, x_upper, lo);
  matvec_add(cn, x_lower, hi);
  matvec_add(cp, x_upper, hi);
  // Rounding can leave lo a few ulps above hi when the box is degenerate.
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (lo[i] > hi[i]) lo[i] = hi[i] = 0.5 * (lo[i] + hi[i]);
  }
  return {std::move(lo), std::move(hi)};
}

namespace detail {

EmbeddedFixedPoint solve_stacked(const ImplicitNetwork& net, const Matrix& same,
                                 const Matrix& cross, const IntervalVector& input_box,
                                 double alpha, const SolverOptions& opts,
                                 bool detect_divergence, const IterateObserver& observer) {
  const std::size_t n = net.n();
  if (input_box.size() != net.r()) {
    throw DimensionMismatch("input box has dimension " + std::to_string(input_box.size()) +
                            ", network expects " + std::to_string(net.r()));
  }
  // Input contributions are constant across iterations.
  const Matrix bp = positive_part(net.B());
  const Matrix bn = negative_part(net.B());
  Vector in_lo = net.b();
  Vector in_hi = net.b();
  matvec_add(bp, input_box.lower(), in_lo);
  matvec_add(bn, input_box.upper(), in_lo);
  matvec_add(bp, input_box.upper(), in_hi);
  matvec_add(bn, input_box.lower(), in_hi);
  // Far beyond any meaningful fixed point for these inputs.
  const double blowup = 1e12 * (1.0 + std::max(linf_norm(in_lo), linf_norm(in_hi)));

  Vector lo(n, 0.0), hi(n, 0.0), z_lo(n), z_hi(n);
  const auto& phi = net.activation();
  const auto& eta = net.eta();

  EmbeddedFixedPoint out;
  out.diag.alpha = alpha;
  bool diverged = false;
  for (std::size_t k = 1; k <= opts.max_iter; ++k) {
    z_lo = in_lo;
    z_hi = in_hi;
    matvec_add(same, lo, z_lo);
    matvec_add(cross, hi, z_lo);
    matvec_add(same, hi, z_hi);
    matvec_add(cross, lo, z_hi);
    double step = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double nlo = (1.0 - alpha) * lo[i] + alpha * phi(z_lo[i]);
      const double nhi = (1.0 - alpha) * hi[i] + alpha * phi(z_hi[i]);
      step = std::max({step, std::fabs(nlo - lo[i]) / eta[i], std::fabs(nhi - hi[i]) / eta[i]});
      size = std::max({size, std::fabs(nlo), std::fabs(nhi)});
      lo[i] = nlo;
      hi[i] = nhi;
    }
    if (opts.record_steps) out.diag.step_norms.push_back(step);
    out.diag.iterations = k;
    out.diag.final_residual = step;
    if (observer) observer(k, lo, hi);
    if (detect_divergence && (!std::isfinite(step) || !(size < blowup))) {
      diverged = true;
      break;
    }
    if (step <= opts.tol) {
      out.diag.converged = true;
      break;
    }
  }
  if (!out.diag.converged) {
    throw MaxIterExceeded(out.diag.iterations, out.diag.final_residual, diverged);
  }
  out.y_box = output_box(net, lo, hi);
  out.x_lower = std::move(lo);
  out.x_upper = std::move(hi);
  return out;
}

}  // namespace detail

EmbeddedFixedPoint embedded_solve(const ImplicitNetwork& net, const IntervalVector& input_box,
                                  const SolverOptions& opts, const IterateObserver& observer) {
  const auto rep = check_well_posedness(net);
  if (!rep.well_posed) throw NotWellPosed(rep.measure);
  const double alpha = resolve_alpha(rep, opts.alpha);
  return detail::solve_stacked(net, metzler_part(net.A()), non_metzler_part(net.A()), input_box,
                               alpha, opts, false, observer);
}

EmbeddedFixedPoint reach_box(const ImplicitNetwork& net, std::span<const double> u,
                             double epsilon, const SolverOptions& opts) {
  return embedded_solve(net, IntervalVector::ball(u, epsilon), opts);
}

}  // namespace imcert
