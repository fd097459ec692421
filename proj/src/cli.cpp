#include "imcert/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imcert/certify.hpp"
#include "imcert/embedding.hpp"
#include "imcert/errors.hpp"
#include "imcert/io.hpp"
#include "imcert/network.hpp"

namespace imcert::cli {

namespace {

using nlohmann::json;

struct Common {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::optional<double> alpha;
  bool json_out = false;
  std::string out_path;

  SolverOptions solver() const {
    SolverOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.alpha = alpha;
    return o;
  }
};

void add_solver_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--tol", c.tol, "Stopping tolerance on the weighted step norm")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", c.max_iter, "Iteration limit");
  cmd->add_option("--alpha", c.alpha, "Averaging step in (0, alpha*]; defaults to alpha*");
}

std::vector<CertMethod> parse_methods(const std::string& text) {
  std::vector<CertMethod> wanted;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) wanted.push_back(parse_method(tok));
  }
  if (wanted.empty()) throw ValueError("no methods given");
  // Rows are always emitted in canonical method order.
  std::vector<CertMethod> out;
  for (CertMethod m : all_methods()) {
    if (std::find(wanted.begin(), wanted.end(), m) != wanted.end()) out.push_back(m);
  }
  return out;
}

std::string join(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += io::format_real(v[i]);
  }
  return s;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    io::write_atomic(path, content);
  }
}

std::vector<double> eps_grid_from(const std::string& grid, std::optional<double> single) {
  std::vector<double> eps;
  if (!grid.empty()) {
    eps = io::parse_real_list(grid);
  } else if (single) {
    eps = {*single};
  } else {
    eps = {0.0};
  }
  for (double e : eps) {
    if (e < 0.0) throw ValueError("epsilon values must be >= 0");
  }
  if (!std::is_sorted(eps.begin(), eps.end())) throw ValueError("--eps-grid must be ascending");
  return eps;
}

int cmd_check(const std::string& model_path, const Common& c, std::ostream& out) {
  const auto net = io::load_model(model_path);
  const auto rep = check_well_posedness(net);
  if (c.json_out) {
    json j{{"measure", rep.measure},
           {"alpha_star", rep.alpha_star},
           {"contraction_factor", rep.contraction_factor},
           {"well_posed", rep.well_posed},
           {"n", net.n()},
           {"r", net.r()},
           {"q", net.q()}};
    out << j.dump() << "\n";
  } else {
    out << "n: " << net.n() << "  r: " << net.r() << "  q: " << net.q()
        << "  activation: " << net.activation().name() << "\n"
        << "measure: " << io::format_real(rep.measure) << "\n"
        << "alpha_star: " << io::format_real(rep.alpha_star) << "\n"
        << "contraction_factor: " << io::format_real(rep.contraction_factor) << "\n"
        << "well_posed: " << (rep.well_posed ? "true" : "false") << "\n";
  }
  return rep.well_posed ? kOk : kNotWellPosed;
}

struct ReachArgs {
  std::string input, lower, upper, method = "mm";
  std::optional<double> eps;
};

int cmd_reach(const std::string& model_path, const ReachArgs& a, const Common& c,
              std::ostream& out) {
  const auto net = io::load_model(model_path);
  IntervalVector box;
  if (!a.input.empty()) {
    if (!a.lower.empty() || !a.upper.empty()) {
      throw ValueError("give either --input (with --eps) or --lower/--upper, not both");
    }
    box = IntervalVector::ball(io::parse_real_list(a.input), a.eps.value_or(0.0));
  } else if (!a.lower.empty() && !a.upper.empty()) {
    box = IntervalVector(io::parse_real_list(a.lower), io::parse_real_list(a.upper));
  } else {
    throw ValueError("reach needs --input or both --lower and --upper");
  }
  if (box.size() != net.r()) {
    throw ShapeError("input box has dimension " + std::to_string(box.size()) +
                     ", model expects r = " + std::to_string(net.r()));
  }
  if (a.method != "mm" && a.method != "ibp") throw ValueError("--method must be mm or ibp");
  const auto efp = a.method == "ibp" ? ibp_solve(net, box, c.solver())
                                     : embedded_solve(net, box, c.solver());
  if (c.json_out) {
    json j{{"method", a.method},
           {"lower", efp.y_box.lower()},
           {"upper", efp.y_box.upper()},
           {"x_lower", efp.x_lower},
           {"x_upper", efp.x_upper},
           {"iterations", efp.diag.iterations},
           {"residual", efp.diag.final_residual}};
    out << j.dump() << "\n";
  } else {
    out << "lower: " << join(efp.y_box.lower()) << "\n"
        << "upper: " << join(efp.y_box.upper()) << "\n"
        << "iterations: " << efp.diag.iterations << "\n";
  }
  return kOk;
}

struct CertArgs {
  std::string dataset;
  std::string methods = "lip,ibp,mm,mm_c";
  std::string eps_grid;
  std::optional<double> eps;
  double eps_max = 1.0;
  double tol_eps = 1e-4;
  std::uint64_t seed = 0;
};

struct Loaded {
  ImplicitNetwork net;
  std::vector<LabeledInput> data;
};

Loaded load_for_cert(const std::string& model_path, const std::string& dataset_path) {
  auto net = io::load_model(model_path);
  const auto rep = check_well_posedness(net);
  if (!rep.well_posed) throw NotWellPosed(rep.measure);
  auto data = io::load_dataset(dataset_path, net.r(), net.q());
  return {std::move(net), std::move(data)};
}

int cmd_certify(const std::string& model_path, const CertArgs& a, const Common& c,
                std::ostream& out) {
  const auto [net, data] = load_for_cert(model_path, a.dataset);
  const auto methods = parse_methods(a.methods);
  const auto eps = eps_grid_from(a.eps_grid, a.eps);
  const auto table = certify_table(net, data, methods, eps, c.solver(), default_workers());
  emit(io::certify_csv(table, methods, eps), c.out_path, out);
  return kOk;
}

int cmd_curve(const std::string& model_path, const CertArgs& a, const Common& c,
              std::ostream& out) {
  const auto [net, data] = load_for_cert(model_path, a.dataset);
  const auto methods = parse_methods(a.methods);
  const auto eps = eps_grid_from(a.eps_grid, a.eps);
  const auto curve =
      certified_fraction_curve(net, data, methods, eps, c.solver(), default_workers());
  emit(io::curve_csv(curve), c.out_path, out);
  return kOk;
}

int cmd_radius(const std::string& model_path, const CertArgs& a, const Common& c,
               std::ostream& out) {
  const auto [net, data] = load_for_cert(model_path, a.dataset);
  const auto methods = parse_methods(a.methods);
  RadiusOptions ro;
  ro.eps_max = a.eps_max;
  ro.tol_eps = a.tol_eps;
  std::vector<io::RadiusRow> rows;
  for (CertMethod m : methods) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      rows.push_back({m, i, certified_radius(net, data[i], m, ro, c.solver())});
    }
  }
  emit(io::radius_csv(rows), c.out_path, out);
  return kOk;
}

struct SynthArgs {
  std::size_t n = 0, r = 0, q = 0;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  if (a.n < 1 || a.r < 1 || a.q < 1) throw ValueError("synth: n, r, q must be >= 1");
  const auto net = io::synth_model(a.n, a.r, a.q, a.seed);
  const std::string text = io::model_to_json(net).dump(2) + "\n";
  emit(text, c.out_path, out);
  return kOk;
}

struct SynthDataArgs {
  std::string model;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::string labels = "predicted";
};

int cmd_synth_data(const SynthDataArgs& a, const Common& c, std::ostream& out) {
  const auto net = io::load_model(a.model);
  io::LabelMode mode;
  if (a.labels == "predicted") {
    mode = io::LabelMode::predicted;
  } else if (a.labels == "random") {
    mode = io::LabelMode::random;
  } else {
    throw ValueError("--labels must be 'predicted' or 'random'");
  }
  const auto data = io::synth_dataset(net, a.count, a.seed, mode);
  emit(io::dataset_to_jsonl(data), c.out_path, out);
  return kOk;
}

}  // namespace

unsigned default_workers() {
  if (const char* env = std::getenv("IMCERT_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Well-posedness checks, reachable boxes and robustness certificates for implicit "
               "neural networks"};
  app.name("imcert");
  app.require_subcommand(1);

  Common common;
  std::string model_path;

  auto* check = app.add_subcommand("check", "Report the weighted matrix measure and verdict");
  check->add_option("model", model_path, "Model JSON")->required();
  check->add_flag("--json", common.json_out, "Machine-readable report");

  ReachArgs reach_args;
  auto* reach = app.add_subcommand("reach", "Output box for an input box");
  reach->add_option("model", model_path, "Model JSON")->required();
  reach->add_option("--input", reach_args.input, "Nominal input, comma separated");
  reach->add_option("--eps", reach_args.eps, "Radius of the l-inf ball around --input");
  reach->add_option("--lower", reach_args.lower, "Lower input corner, comma separated");
  reach->add_option("--upper", reach_args.upper, "Upper input corner, comma separated");
  reach->add_option("--method", reach_args.method, "mm (default) or ibp");
  reach->add_flag("--json", common.json_out, "Machine-readable report");
  add_solver_flags(reach, common);

  CertArgs cert_args;
  auto add_cert_flags = [&](CLI::App* cmd, bool grid) {
    cmd->add_option("model", model_path, "Model JSON")->required();
    cmd->add_option("dataset", cert_args.dataset, "Dataset JSON-lines")->required();
    cmd->add_option("--methods", cert_args.methods, "Comma separated subset of lip,ibp,mm,mm_c");
    if (grid) {
      cmd->add_option("--eps-grid", cert_args.eps_grid, "Ascending epsilons, comma separated");
      cmd->add_option("--eps", cert_args.eps, "Single epsilon");
    } else {
      cmd->add_option("--eps-max", cert_args.eps_max, "Upper end of the radius search");
      cmd->add_option("--tol-eps", cert_args.tol_eps, "Bisection width")
          ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--out", common.out_path, "Write CSV here instead of stdout");
    cmd->add_option("--seed", cert_args.seed, "Accepted for uniform invocations; runs are deterministic");
    add_solver_flags(cmd, common);
  };
  auto* certify_cmd = app.add_subcommand("certify", "Per-input certificates as CSV");
  add_cert_flags(certify_cmd, true);
  auto* curve = app.add_subcommand("curve", "Certified fraction per method and epsilon as CSV");
  add_cert_flags(curve, true);
  auto* radius = app.add_subcommand("radius", "Certified radius per input as CSV");
  add_cert_flags(radius, false);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a random well-posed model");
  synth->add_option("--n", synth_args.n, "Hidden dimension")->required();
  synth->add_option("--r", synth_args.r, "Input dimension")->required();
  synth->add_option("--q", synth_args.q, "Output dimension")->required();
  synth->add_option("--seed", synth_args.seed, "Random seed");
  synth->add_option("--out", common.out_path, "Output path (stdout when omitted)");

  SynthDataArgs data_args;
  auto* synth_data = app.add_subcommand("synth-data", "Write random labeled inputs for a model");
  synth_data->add_option("model", data_args.model, "Model JSON")->required();
  synth_data->add_option("--count", data_args.count, "Number of records");
  synth_data->add_option("--seed", data_args.seed, "Random seed");
  synth_data->add_option("--labels", data_args.labels, "predicted (default) or random");
  synth_data->add_option("--out", common.out_path, "Output path (stdout when omitted)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kIoError;
  }

  try {
    if (check->parsed()) return cmd_check(model_path, common, out);
    if (reach->parsed()) return cmd_reach(model_path, reach_args, common, out);
    if (certify_cmd->parsed()) return cmd_certify(model_path, cert_args, common, out);
    if (curve->parsed()) return cmd_curve(model_path, cert_args, common, out);
    if (radius->parsed()) return cmd_radius(model_path, cert_args, common, out);
    if (synth->parsed()) return cmd_synth(synth_args, common, out);
    if (synth_data->parsed()) return cmd_synth_data(data_args, common, out);
  } catch (const NotWellPosed& e) {
    err << "error: " << e.what() << "\n";
    return kNotWellPosed;
  } catch (const MaxIterExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kNonConvergent;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kIoError;
}

}  // namespace imcert::cli
