// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "imcert/certify.hpp"
#include "imcert/cli.hpp"
#include "imcert/embedding.hpp"
#include "imcert/io.hpp"
#include "support.hpp"

using namespace imcert;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string vec(const Vector& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt(i ? ", %.4f" : "%.4f", v[i]);
  return s + ")";
}

bool near(const Vector& got, const Vector& want, double tol) {
  for (std::size_t i = 0; i < want.size(); ++i)
    if (!(std::fabs(got[i] - want[i]) <= tol)) return false;
  return true;
}

const IntervalVector kExampleBox({0.0, 1.0}, {1.0 / 3.0, 2.0});

void criterion_1() {
  const auto net = imcert::testing::example_5_1();
  const auto t0 = Clock::now();
  const double lip = lipschitz_bound(net);
  const double dt = seconds_since(t0);
  report(1, "Lipschitz golden", std::fabs(lip - 3.0) <= 1e-9 && dt < 1e-3,
         fmt("Lip = %.12g, %.1f us", lip, dt * 1e6));
}

void criterion_2() {
  const auto net = imcert::testing::example_5_1();
  const auto t0 = Clock::now();
  const auto efp = embedded_solve(net, kExampleBox);
  const double dt = seconds_since(t0);
  const bool ok = near(efp.y_box.lower(), {0.3939, 0.6364}, 5e-4) &&
                  near(efp.y_box.upper(), {1.6061, 2.0303}, 5e-4) && dt < 1e-2;
  report(2, "MM box golden", ok,
         fmt("lower %s upper %s, %zu iterations, %.1f us", vec(efp.y_box.lower()).c_str(),
             vec(efp.y_box.upper()).c_str(), efp.diag.iterations, dt * 1e6));
}

void criterion_3() {
  const auto net = imcert::testing::example_5_1();
  const auto t0 = Clock::now();
  try {
    const auto efp = ibp_solve(net, kExampleBox);
    const double dt = seconds_since(t0);
    const bool ok = near(efp.y_box.lower(), {0.0342, 0.0}, 5e-4) &&
                    near(efp.y_box.upper(), {1.7265, 2.1026}, 5e-4) && dt < 1e-2;
    report(3, "IBP box golden", ok,
           fmt("lower %s upper %s (expected (0.0342, 0.0000) / (1.7265, 2.1026)), %.1f us",
               vec(efp.y_box.lower()).c_str(), vec(efp.y_box.upper()).c_str(), dt * 1e6));
  } catch (const std::exception& e) {
    report(3, "IBP box golden", false, e.what());
  }
}

void criterion_4() {
  const auto net = imcert::testing::example_5_1();
  const auto mm = embedded_solve(net, kExampleBox).y_box;
  const auto ibp = ibp_solve(net, kExampleBox).y_box;
  const auto y = forward_solve(net, kExampleBox.center()).y;
  const double half = 3.0 * kExampleBox.radius();
  const IntervalVector lip({y[0] - half, y[1] - half}, {y[0] + half, y[1] + half});
  const bool mm_ibp = mm.subset_of(ibp, 1e-9);
  const bool ibp_lip = ibp.subset_of(lip, 1e-9);
  const bool mm_lip = mm.subset_of(lip, 1e-9);
  report(4, "box containment", mm_ibp && ibp_lip,
         fmt("MM in IBP: %s, IBP in Lip: %s, MM in Lip: %s; Lip box %s / %s",
             mm_ibp ? "yes" : "no", ibp_lip ? "yes" : "no", mm_lip ? "yes" : "no",
             vec(lip.lower()).c_str(), vec(lip.upper()).c_str()));
}

void criterion_5() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = dim(rng);
    const Matrix a = imcert::testing::random_matrix(rng, n, n, 2.0);
    if (!embedded_measure_identity_check(a, imcert::testing::random_eta(rng, n), 1e-12)) ++bad;
  }
  report(5, "embedded measure identity", bad == 0, fmt("%d of 1000 pairs violate", bad));
}

// Criteria 6-9 share one suite of synthetic nets.
struct SuiteStats {
  long outside_box = 0, margin_violations = 0, ratio_violations = 0, order_violations = 0,
       interior_violations = 0, dominance_violations = 0, ibp_dominance_violations = 0;
  long samples = 0, cases = 0, ibp_converged = 0, ratios = 0;
  bool converse_found = false;
  std::string converse;
};

SuiteStats run_suite() {
  SuiteStats s;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> nd(1, 10), rd(1, 5), qd(2, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0), epsd(0.01, 0.3);
  SolverOptions rec;
  rec.record_steps = true;
  const double extra_eps[] = {0.01, 0.03, 0.1};

  for (int k = 0; k < 100; ++k) {
    const std::size_t n = nd(rng), r = rd(rng), q = qd(rng);
    const auto net = io::synth_model(n, r, q, 1000 + k);
    const double factor = check_well_posedness(net).contraction_factor;
    Vector u(r);
    for (auto& x : u) x = unit(rng);
    const double eps = epsd(rng);
    const auto box = IntervalVector::ball(u, eps);
    const auto clean = forward_solve(net, u).y;
    const LabeledInput in{u, static_cast<std::size_t>(std::max_element(clean.begin(), clean.end()) -
                                                      clean.begin())};

    bool ordered = true;
    const auto efp = embedded_solve(net, box, rec, [&](std::size_t, auto lo, auto hi) {
      for (std::size_t i = 0; i < lo.size(); ++i) ordered = ordered && lo[i] <= hi[i];
    });
    if (!ordered) ++s.order_violations;
    const double escale =
        imcert::testing::state_scale(efp.x_lower, efp.x_upper, net.eta());
    for (std::size_t i = 1; i < efp.diag.step_norms.size(); ++i, ++s.ratios) {
      if (!imcert::testing::step_ratio_ok(efp.diag.step_norms[i - 1], efp.diag.step_norms[i],
                                          factor, escale))
        ++s.ratio_violations;
    }

    const auto results = certify_many(net, in, all_methods(), eps);
    for (int i = 0; i < 1000; ++i, ++s.samples) {
      Vector v(r);
      for (std::size_t j = 0; j < r; ++j) v[j] = box.lower()[j] + unit(rng) * 2 * eps;
      const auto sol = forward_solve(net, v, rec);
      if (!efp.y_box.contains(sol.y, 1e-8)) ++s.outside_box;
      for (std::size_t j = 0; j < n; ++j) {
        if (sol.x[j] < efp.x_lower[j] - 1e-8 || sol.x[j] > efp.x_upper[j] + 1e-8)
          ++s.interior_violations;
      }
      const double margin = classification_margin(sol.y, in.label);
      for (const auto& res : results) {
        if (!res.nonconvergent && margin < res.delta - 1e-8) ++s.margin_violations;
      }
      const double xscale = imcert::testing::state_scale(sol.x, sol.x, net.eta());
      for (std::size_t t = 1; t < sol.diag.step_norms.size(); ++t, ++s.ratios) {
        if (!imcert::testing::step_ratio_ok(sol.diag.step_norms[t - 1], sol.diag.step_norms[t],
                                            factor, xscale))
          ++s.ratio_violations;
      }
    }

    std::vector<double> grid{eps};
    grid.insert(grid.end(), std::begin(extra_eps), std::end(extra_eps));
    for (double e : grid) {
      const auto rs = e == eps ? results : certify_many(net, in, all_methods(), e);
      const double ibp = rs[1].delta, mm = rs[2].delta, mmc = rs[3].delta;
      ++s.cases;
      if (!(mmc >= mm - 1e-12)) ++s.dominance_violations;
      if (!rs[1].nonconvergent) {
        ++s.ibp_converged;
        if (!(mm >= ibp - 1e-12)) ++s.ibp_dominance_violations;
      }
      if (!s.converse_found && mm <= 0 && mmc > 0) {
        s.converse_found = true;
        s.converse = fmt("net %d (n=%zu, r=%zu, q=%zu), eps %.3g: delta_mm %.4g, delta_mm_c %.4g",
                         k, n, r, q, e, mm, mmc);
      }
    }
  }
  return s;
}

void criteria_6_to_9() {
  const auto s = run_suite();
  report(6, "Monte Carlo soundness", s.outside_box == 0 && s.margin_violations == 0,
         fmt("%ld samples: %ld outside the MM box, %ld margins below a certificate",
             s.samples, s.outside_box, s.margin_violations));
  report(7, "contraction rate", s.ratio_violations == 0,
         fmt("%ld step ratios checked, %ld above the factor", s.ratios, s.ratio_violations));
  report(8, "fixed-point ordering", s.order_violations == 0 && s.interior_violations == 0,
         fmt("%ld nets with lower > upper, %ld interior states outside the bracket",
             s.order_violations, s.interior_violations));
  report(9, "dominance of the relative classifier",
         s.dominance_violations == 0 && s.converse_found,
         fmt("%ld cases, %ld with mm_c < mm; IBP converged in %ld (%ld with ibp > mm); "
             "converse: %s",
             s.cases, s.dominance_violations, s.ibp_converged, s.ibp_dominance_violations,
             s.converse_found ? s.converse.c_str() : "not found"));
}

void criterion_10() {
  using imcert::testing::Box;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> wd(1, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = wd(rng), h1 = wd(rng), h2 = wd(rng), q = 2 + wd(rng) % 3;
    const Matrix W1 = imcert::testing::random_matrix(rng, h1, r);
    const Matrix W2 = imcert::testing::random_matrix(rng, h2, h1);
    const Matrix W3 = imcert::testing::random_matrix(rng, q, h2);
    const Vector b1 = imcert::testing::random_vector(rng, h1, -0.5, 0.5);
    const Vector b2 = imcert::testing::random_vector(rng, h2, -0.5, 0.5);
    const Vector b3 = imcert::testing::random_vector(rng, q, -0.5, 0.5);

    // State (h2, h1): h2 = relu(W2 h1 + b2) sits above h1 = relu(W1 u + b1).
    const std::size_t n = h1 + h2;
    Matrix A(n, n), B(n, r), C(q, n);
    Vector b(n);
    for (std::size_t i = 0; i < h2; ++i) {
      for (std::size_t j = 0; j < h1; ++j) A(i, h2 + j) = W2(i, j);
      b[i] = b2[i];
    }
    for (std::size_t i = 0; i < h1; ++i) {
      for (std::size_t j = 0; j < r; ++j) B(h2 + i, j) = W1(i, j);
      b[h2 + i] = b1[i];
    }
    for (std::size_t i = 0; i < q; ++i)
      for (std::size_t j = 0; j < h2; ++j) C(i, j) = W3(i, j);
    // Weight the upper block so the strictly triangular A has measure < 1.
    const double s = 2.0 * (1.0 + linf_operator_norm(W2));
    std::vector<double> w(n, 1.0);
    for (std::size_t i = 0; i < h2; ++i) w[i] = s;
    const ImplicitNetwork net(A, B, C, b, b3, Activation::relu(), WeightVector(w));

    const Vector u = imcert::testing::random_vector(rng, r, -1, 1);
    const double eps = 0.3 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto box = IntervalVector::ball(u, eps);
    const auto got = embedded_solve(net, box).y_box;

    Box in{box.lower(), box.upper()};
    const Box l1 = imcert::testing::relu_interval(imcert::testing::affine_interval(W1, b1, in));
    const Box l2 = imcert::testing::relu_interval(imcert::testing::affine_interval(W2, b2, l1));
    const Box out = imcert::testing::affine_interval(W3, b3, l2);
    for (std::size_t i = 0; i < q; ++i) {
      worst = std::max({worst, std::fabs(got.lower()[i] - out.lo[i]),
                        std::fabs(got.upper()[i] - out.hi[i])});
    }
  }
  report(10, "feedforward equivalence", worst <= 1e-9,
         fmt("100 nets, max deviation from layerwise propagation %.3g", worst));
}

void criterion_11() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  double worst = -INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = dim(rng);
    const auto eta = imcert::testing::random_eta(rng, n);
    const Matrix T = imcert::testing::random_matrix(rng, n, n, 3.0);
    worst = std::max(worst, weighted_linf_measure(build_wellposed_weights(T, eta), eta));
  }
  report(11, "parametrization guarantee", worst <= 1e-12,
         fmt("max measure over 1000 samples %.3g", worst));
}

struct CurveRun {
  int code = -1;
  double seconds = 0;
  std::string csv;
};

CurveRun run_curve(const fs::path& dir) {
  std::ostringstream out, err;
  const auto model = (dir / "model.json").string();
  const auto data = (dir / "data.jsonl").string();
  const auto csv = (dir / "curve.csv").string();
  CurveRun r;
  if (cli::run({"synth", "--n", "100", "--r", "20", "--q", "10", "--seed", "1", "--out", model},
               out, err) != 0 ||
      cli::run({"synth-data", model, "--count", "200", "--seed", "2", "--out", data}, out,
               err) != 0) {
    return r;
  }
  const auto t0 = Clock::now();
  r.code = cli::run({"curve", model, data, "--eps-grid",
                     "0,0.0025,0.005,0.0075,0.01,0.0125,0.015,0.02,0.025,0.03", "--seed", "1",
                     "--out", csv},
                    out, err);
  r.seconds = seconds_since(t0);
  if (r.code == 0) r.csv = io::read_file(csv);
  return r;
}

void criteria_12_13() {
  const fs::path dir = fs::temp_directory_path() / "imcert_acceptance";
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  const auto first = run_curve(dir / "a");
  const auto second = run_curve(dir / "b");

  // fraction[method][eps]
  std::vector<std::vector<double>> frac(4);
  std::istringstream lines(first.csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const auto m = parse_method(line.substr(0, c1));
    frac[static_cast<int>(m)].push_back(std::stod(line.substr(c2 + 1)));
  }
  bool monotone = true, ordered = true;
  for (const auto& f : frac) {
    if (f.size() != 10) monotone = false;
    for (std::size_t e = 1; e < f.size(); ++e) monotone = monotone && f[e] <= f[e - 1];
  }
  const auto& ibp = frac[1];
  const auto& mm = frac[2];
  const auto& mmc = frac[3];
  for (std::size_t e = 0; e < std::min({ibp.size(), mm.size(), mmc.size()}); ++e) {
    ordered = ordered && mmc[e] >= mm[e] && mm[e] >= ibp[e];
  }
  const bool ok12 = first.code == 0 && first.seconds < 60.0 && monotone && ordered;
  std::string mm_curve, mmc_curve;
  for (double v : mm) mm_curve += fmt(" %.3f", v);
  for (double v : mmc) mmc_curve += fmt(" %.3f", v);
  report(12, "synthetic certification curve", ok12,
         fmt("exit %d, %.1f s, nonincreasing %s, mm_c >= mm >= ibp %s; mm:%s; mm_c:%s",
             first.code, first.seconds, monotone ? "yes" : "no", ordered ? "yes" : "no",
             mm_curve.c_str(), mmc_curve.c_str()));
  report(13, "deterministic CSV", first.code == 0 && !first.csv.empty() && first.csv == second.csv,
         fmt("%zu bytes, second run %s", first.csv.size(),
             first.csv == second.csv ? "identical" : "differs"));
  fs::remove_all(dir);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criteria_6_to_9();
  criterion_10();
  criterion_11();
  criteria_12_13();
  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
