#include "imcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "imcert/errors.hpp"

namespace imcert {

namespace {

void check_label(std::size_t label, std::size_t q) {
  if (q < 2) throw InvalidLabel("classification needs at least two classes");
  if (label >= q) {
    throw InvalidLabel("label " + std::to_string(label) + " out of range for q = " +
                       std::to_string(q));
  }
}

void check_input(const ImplicitNetwork& net, const LabeledInput& input) {
  if (input.u.size() != net.r()) {
    throw DimensionMismatch("input has dimension " + std::to_string(input.u.size()) +
                            ", network expects " + std::to_string(net.r()));
  }
  check_label(input.label, net.q());
}

CertificationResult make_result(CertMethod m, double eps, double delta) {
  CertificationResult res;
  res.method = m;
  res.epsilon = eps;
  res.delta = delta;
  res.certified = delta > 0.0;
  return res;
}

CertificationResult nonconvergent_result(CertMethod m, double eps, const MaxIterExceeded& e) {
  CertificationResult res;
  res.method = m;
  res.epsilon = eps;
  res.delta = std::numeric_limits<double>::quiet_NaN();
  res.certified = false;
  res.nonconvergent = true;
  res.flags = e.diverged() ? "diverged" : "nonconvergent";
  SolveDiagnostics d;
  d.iterations = e.iterations();
  d.final_residual = e.residual();
  d.converged = false;
  res.diagnostics = d;
  return res;
}

double min_of(std::span<const double> v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace

std::string to_string(CertMethod m) {
  switch (m) {
    case CertMethod::lip: return "lip";
    case CertMethod::ibp: return "ibp";
    case CertMethod::mm: return "mm";
    case CertMethod::mm_c: return "mm_c";
  }
  return "mm";
}

CertMethod parse_method(const std::string& name) {
  if (name == "lip") return CertMethod::lip;
  if (name == "ibp") return CertMethod::ibp;
  if (name == "mm") return CertMethod::mm;
  if (name == "mm_c" || name == "mm-c") return CertMethod::mm_c;
  throw ValueError("unknown method '" + name + "' (expected lip, ibp, mm, mm_c)");
}

const std::vector<CertMethod>& all_methods() {
  static const std::vector<CertMethod> all{CertMethod::lip, CertMethod::ibp, CertMethod::mm,
                                           CertMethod::mm_c};
  return all;
}

RelativeClassifierMatrix::RelativeClassifierMatrix(std::size_t label, std::size_t q)
    : label_(label), m_((check_label(label, q), q - 1), q) {
  std::size_t row = 0;
  for (std::size_t j = 0; j < q; ++j) {
    if (j == label) continue;
    m_(row, label) = 1.0;
    m_(row, j) = -1.0;
    ++row;
  }
}

RelativeClassifierMatrix build_T(std::size_t label, std::size_t q) { return {label, q}; }

double classification_margin(std::span<const double> y, std::size_t label) {
  check_label(label, y.size());
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j != label) other = std::max(other, y[j]);
  }
  return y[label] - other;
}

double box_margin(const IntervalVector& y_box, std::size_t label) {
  check_label(label, y_box.size());
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < y_box.size(); ++j) {
    if (j != label) other = std::max(other, y_box.upper()[j]);
  }
  return y_box.lower()[label] - other;
}

Vector z_lower(const ImplicitNetwork& net, const RelativeClassifierMatrix& T,
               const EmbeddedFixedPoint& efp) {
  if (T.q() != net.q()) throw DimensionMismatch("z_lower: T does not match the network output");
  if (efp.x_lower.size() != net.n() || efp.x_upper.size() != net.n()) {
    throw DimensionMismatch("z_lower: fixed point does not match the network");
  }
  const Matrix tc = matmul(T.matrix(), net.C());
  Vector z = matvec(T.matrix(), net.c());
  matvec_add(positive_part(tc), efp.x_lower, z);
  matvec_add(negative_part(tc), efp.x_upper, z);
  return z;
}

double lipschitz_bound(const ImplicitNetwork& net) {
  const auto rep = check_well_posedness(net);
  if (!rep.well_posed) throw NotWellPosed(rep.measure);
  const auto& eta = net.eta();
  // [eta]^-1 B and C [eta]
  Matrix b_scaled = net.B();
  for (std::size_t i = 0; i < b_scaled.rows(); ++i)
    for (std::size_t j = 0; j < b_scaled.cols(); ++j) b_scaled(i, j) /= eta[i];
  Matrix c_scaled = net.C();
  for (std::size_t i = 0; i < c_scaled.rows(); ++i)
    for (std::size_t j = 0; j < c_scaled.cols(); ++j) c_scaled(i, j) *= eta[j];
  return linf_operator_norm(b_scaled) * linf_operator_norm(c_scaled) /
         (1.0 - std::max(rep.measure, 0.0));
}

EmbeddedFixedPoint ibp_solve(const ImplicitNetwork& net, const IntervalVector& input_box,
                             const SolverOptions& opts) {
  const auto rep = check_well_posedness(net);
  const double alpha = resolve_alpha(rep, opts.alpha);
  return detail::solve_stacked(net, positive_part(net.A()), negative_part(net.A()), input_box,
                               alpha, opts, true, {});
}

CertificationResult delta_lip(const ImplicitNetwork& net, const LabeledInput& input,
                              double epsilon, const SolverOptions& opts) {
  check_input(net, input);
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw ValueError("epsilon must be >= 0");
  const double lip = lipschitz_bound(net);
  const auto sol = forward_solve(net, input.u, opts);
  const double margin = classification_margin(sol.y, input.label);
  return make_result(CertMethod::lip, epsilon, margin - 2.0 * lip * epsilon);
}

CertificationResult delta_ibp(const ImplicitNetwork& net, const LabeledInput& input,
                              double epsilon, const SolverOptions& opts) {
  check_input(net, input);
  try {
    const auto efp = ibp_solve(net, IntervalVector::ball(input.u, epsilon), opts);
    auto res = make_result(CertMethod::ibp, epsilon, box_margin(efp.y_box, input.label));
    res.diagnostics = efp.diag;
    return res;
  } catch (const MaxIterExceeded& e) {
    return nonconvergent_result(CertMethod::ibp, epsilon, e);
  }
}

CertificationResult delta_mm(const ImplicitNetwork& net, const LabeledInput& input,
                             double epsilon, const SolverOptions& opts) {
  check_input(net, input);
  const auto efp = reach_box(net, input.u, epsilon, opts);
  auto res = make_result(CertMethod::mm, epsilon, box_margin(efp.y_box, input.label));
  res.diagnostics = efp.diag;
  return res;
}

CertificationResult delta_mm_c(const ImplicitNetwork& net, const LabeledInput& input,
                               double epsilon, const SolverOptions& opts) {
  check_input(net, input);
  const auto efp = reach_box(net, input.u, epsilon, opts);
  auto res = make_result(CertMethod::mm_c, epsilon,
                         min_of(z_lower(net, build_T(input.label, net.q()), efp)));
  res.diagnostics = efp.diag;
  return res;
}

CertificationResult certify(const ImplicitNetwork& net, const LabeledInput& input,
                            CertMethod method, double epsilon, const SolverOptions& opts) {
  switch (method) {
    case CertMethod::lip: return delta_lip(net, input, epsilon, opts);
    case CertMethod::ibp: return delta_ibp(net, input, epsilon, opts);
    case CertMethod::mm: return delta_mm(net, input, epsilon, opts);
    case CertMethod::mm_c: return delta_mm_c(net, input, epsilon, opts);
  }
  throw ValueError("unknown method");
}

std::vector<CertificationResult> certify_many(const ImplicitNetwork& net,
                                              const LabeledInput& input,
                                              std::span<const CertMethod> methods,
                                              double epsilon, const SolverOptions& opts) {
  check_input(net, input);
  std::optional<EmbeddedFixedPoint> mm_box;
  std::optional<MaxIterExceeded> mm_failure;
  auto embedded = [&]() -> const EmbeddedFixedPoint* {
    if (!mm_box && !mm_failure) {
      try {
        mm_box = reach_box(net, input.u, epsilon, opts);
      } catch (const MaxIterExceeded& e) {
        mm_failure = e;
      }
    }
    return mm_box ? &*mm_box : nullptr;
  };

  std::vector<CertificationResult> out;
  out.reserve(methods.size());
  for (CertMethod m : methods) {
    if (m == CertMethod::lip) {
      try {
        out.push_back(delta_lip(net, input, epsilon, opts));
      } catch (const MaxIterExceeded& e) {
        auto res = nonconvergent_result(m, epsilon, e);
        res.diagnostics.reset();
        out.push_back(res);
      }
    } else if (m == CertMethod::ibp) {
      out.push_back(delta_ibp(net, input, epsilon, opts));
    } else {
      const EmbeddedFixedPoint* efp = embedded();
      if (!efp) {
        out.push_back(nonconvergent_result(m, epsilon, *mm_failure));
        continue;
      }
      const double delta =
          m == CertMethod::mm ? box_margin(efp->y_box, input.label)
                              : min_of(z_lower(net, build_T(input.label, net.q()), *efp));
      auto res = make_result(m, epsilon, delta);
      res.diagnostics = efp->diag;
      out.push_back(std::move(res));
    }
  }
  return out;
}

double certified_radius(const ImplicitNetwork& net, const LabeledInput& input, CertMethod method,
                        const RadiusOptions& ropts, const SolverOptions& opts) {
  if (!(ropts.eps_max >= 0.0) || !(ropts.tol_eps > 0.0)) {
    throw ValueError("certified_radius: need eps_max >= 0 and tol_eps > 0");
  }
  auto certified_at = [&](double eps) {
    try {
      return certify(net, input, method, eps, opts).certified;
    } catch (const MaxIterExceeded&) {
      return false;
    }
  };
  if (!certified_at(0.0)) return 0.0;
  if (certified_at(ropts.eps_max)) return ropts.eps_max;
  double lo = 0.0;
  double hi = ropts.eps_max;
  while (hi - lo > ropts.tol_eps) {
    const double mid = 0.5 * (lo + hi);
    (certified_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

CertTable certify_table(const ImplicitNetwork& net, std::span<const LabeledInput> dataset,
                        std::span<const CertMethod> methods, std::span<const double> eps_grid,
                        const SolverOptions& opts, unsigned workers) {
  const std::size_t count = dataset.size();
  CertTable table(methods.size(),
                  std::vector<std::vector<CertificationResult>>(
                      eps_grid.size(), std::vector<CertificationResult>(count)));

  auto work = [&](std::size_t i) {
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
      std::vector<CertificationResult> row;
      try {
        row = certify_many(net, dataset[i], methods, eps_grid[e], opts);
      } catch (const NotWellPosed&) {
        throw;
      } catch (const Error& err) {
        row.clear();
        for (CertMethod m : methods) {
          CertificationResult res;
          res.method = m;
          res.epsilon = eps_grid[e];
          res.delta = std::numeric_limits<double>::quiet_NaN();
          res.flags = "error";
          row.push_back(res);
        }
      }
      for (std::size_t m = 0; m < methods.size(); ++m) table[m][e][i] = std::move(row[m]);
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return table;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += workers) work(i);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return table;
}

std::vector<CurvePoint> certified_fraction_curve(const ImplicitNetwork& net,
                                                 std::span<const LabeledInput> dataset,
                                                 std::span<const CertMethod> methods,
                                                 std::span<const double> eps_grid,
                                                 const SolverOptions& opts, unsigned workers) {
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end())) {
    throw ValueError("epsilon grid must be sorted ascending");
  }
  std::vector<CurvePoint> curve;
  if (dataset.empty()) return curve;
  const auto table = certify_table(net, dataset, methods, eps_grid, opts, workers);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
      std::size_t hits = 0;
      for (const auto& res : table[m][e]) hits += res.certified ? 1 : 0;
      curve.push_back({methods[m], eps_grid[e],
                       static_cast<double>(hits) / static_cast<double>(dataset.size())});
    }
  }
  return curve;
}

double empirical_margin_oracle(const ImplicitNetwork& net, const LabeledInput& input,
                               double epsilon, std::size_t samples, std::uint64_t seed,
                               const SolverOptions& opts) {
  check_input(net, input);
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw ValueError("epsilon must be >= 0");
  const std::size_t r = net.r();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  double worst = std::numeric_limits<double>::infinity();
  auto probe = [&](const Vector& v) {
    const auto sol = forward_solve(net, v, opts);
    worst = std::min(worst, classification_margin(sol.y, input.label));
  };

  std::size_t used = 0;
  if (samples > 0) {
    probe(input.u);
    ++used;
  }
  // Up to half the budget goes to corners: all of them when they fit, random ones otherwise.
  const std::size_t corner_budget = (samples - used) / 2;
  const bool enumerate = r < 20 && (std::size_t{1} << r) <= corner_budget;
  const std::size_t corners = enumerate ? (std::size_t{1} << r) : corner_budget;
  Vector v(r);
  for (std::size_t k = 0; k < corners && used < samples; ++k, ++used) {
    for (std::size_t j = 0; j < r; ++j) {
      const bool up = enumerate ? ((k >> j) & 1u) != 0 : coin(rng);
      v[j] = input.u[j] + (up ? epsilon : -epsilon);
    }
    probe(v);
  }
  for (; used < samples; ++used) {
    for (std::size_t j = 0; j < r; ++j) v[j] = input.u[j] + epsilon * unit(rng);
    probe(v);
  }
  return worst;
}

}  // namespace imcert
