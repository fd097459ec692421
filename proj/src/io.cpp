#include "imcert/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "imcert/errors.hpp"

namespace imcert::io {

using nlohmann::json;

namespace {

std::size_t get_count(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ParseError(std::string("field '") + key + "' must be a nonnegative integer");
  }
  const auto x = v.get<std::int64_t>();
  if (x < 0) throw ValueError(std::string("field '") + key + "' must be nonnegative");
  return static_cast<std::size_t>(x);
}

std::vector<double> get_reals(const json& j, const char* key, std::size_t expected,
                              const char* shape) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ParseError(std::string("field '") + key + "' must be an array");
  if (arr.size() != expected) {
    throw ShapeError(std::string("field '") + key + "': expected " + std::to_string(expected) +
                     " values (" + shape + "), got " + std::to_string(arr.size()));
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ParseError(std::string("field '") + key + "' index " + std::to_string(i) +
                       ": not a number");
    }
    const double v = arr[i].get<double>();
    if (!std::isfinite(v)) {
      throw ValueError(std::string("field '") + key + "' index " + std::to_string(i) +
                       ": non-finite value");
    }
    out.push_back(v);
  }
  return out;
}

double get_param(const json& act, const char* key) {
  if (!act.contains(key) || !act.at(key).is_number()) {
    throw ParseError(std::string("activation: missing numeric parameter '") + key + "'");
  }
  return act.at(key).get<double>();
}

Activation parse_activation(const json& j) {
  if (!j.contains("activation")) return Activation::relu();
  const auto& act = j.at("activation");
  std::string kind;
  if (act.is_string()) {
    kind = act.get<std::string>();
  } else if (act.is_object() && act.contains("kind") && act.at("kind").is_string()) {
    kind = act.at("kind").get<std::string>();
  } else {
    throw ParseError("field 'activation' must be a string or an object with 'kind'");
  }
  switch (Activation::parse_kind(kind)) {
    case Activation::Kind::relu: return Activation::relu();
    case Activation::Kind::identity: return Activation::identity();
    case Activation::Kind::tanh: return Activation::tanh();
    case Activation::Kind::leaky_relu: return Activation::leaky_relu(get_param(act, "slope"));
    case Activation::Kind::saturation:
      return Activation::saturation(get_param(act, "lo"), get_param(act, "hi"));
  }
  return Activation::relu();
}

json activation_to_json(const Activation& a) {
  json j{{"kind", a.name()}};
  if (a.kind() == Activation::Kind::leaky_relu) j["slope"] = a.slope();
  if (a.kind() == Activation::Kind::saturation) {
    j["lo"] = a.lo();
    j["hi"] = a.hi();
  }
  return j;
}

}  // namespace

ImplicitNetwork model_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("model must be a JSON object");
  if (j.contains("schema_version")) {
    const auto v = get_count(j, "schema_version");
    if (v != static_cast<std::size_t>(kSchemaVersion)) {
      throw ParseError("unsupported schema_version " + std::to_string(v));
    }
  }
  const std::size_t n = get_count(j, "n");
  const std::size_t r = get_count(j, "r");
  const std::size_t q = get_count(j, "q");
  Matrix A(n, n, get_reals(j, "A", n * n, "n*n"));
  Matrix B(n, r, get_reals(j, "B", n * r, "n*r"));
  Matrix C(q, n, get_reals(j, "C", q * n, "q*n"));
  Vector b = get_reals(j, "b", n, "n");
  Vector c = get_reals(j, "c", q, "q");
  std::optional<WeightVector> eta;
  if (j.contains("eta") && !j.at("eta").is_null()) {
    auto w = get_reals(j, "eta", n, "n");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0)) {
        throw ValueError("field 'eta' index " + std::to_string(i) + ": must be > 0");
      }
    }
    eta = WeightVector(std::move(w));
  }
  return {std::move(A), std::move(B), std::move(C), std::move(b), std::move(c),
          parse_activation(j), std::move(eta)};
}

json model_to_json(const ImplicitNetwork& net) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["n"] = net.n();
  j["r"] = net.r();
  j["q"] = net.q();
  j["A"] = net.A().entries();
  j["B"] = net.B().entries();
  j["C"] = net.C().entries();
  j["b"] = net.b();
  j["c"] = net.c();
  j["activation"] = activation_to_json(net.activation());
  if (net.has_eta()) j["eta"] = net.eta().entries();
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ImplicitNetwork load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const ImplicitNetwork& net, const std::filesystem::path& path) {
  write_atomic(path, model_to_json(net).dump(2) + "\n");
}

std::vector<LabeledInput> parse_dataset(std::istream& in, std::size_t r, std::size_t q) {
  std::vector<LabeledInput> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("input") || !j.contains("label")) {
      throw ParseError(where + ": expected {\"input\": [...], \"label\": k}");
    }
    const auto& arr = j.at("input");
    if (!arr.is_array()) throw ParseError(where + ": 'input' must be an array");
    if (r != 0 && arr.size() != r) {
      throw ShapeError(where + ": input has " + std::to_string(arr.size()) +
                       " values, expected " + std::to_string(r));
    }
    LabeledInput rec;
    try {
      rec.u = get_reals(j, "input", arr.size(), "r");
      const auto& lab = j.at("label");
      if (!lab.is_number_integer() || lab.get<std::int64_t>() < 0) {
        throw ParseError("'label' must be a nonnegative integer");
      }
      rec.label = static_cast<std::size_t>(lab.get<std::int64_t>());
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (q != 0 && rec.label >= q) {
      throw InvalidLabel(where + ": label " + std::to_string(rec.label) + " >= q = " +
                       std::to_string(q));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LabeledInput> load_dataset(const std::filesystem::path& path, std::size_t r,
                                       std::size_t q) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_dataset(in, r, q);
}

std::string dataset_to_jsonl(std::span<const LabeledInput> data) {
  std::string out;
  for (const auto& rec : data) {
    out += json{{"input", rec.u}, {"label", rec.label}}.dump();
    out += '\n';
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string tok = text.substr(pos, end - pos);
    const auto first = tok.find_first_not_of(" \t");
    const auto last = tok.find_last_not_of(" \t");
    tok = first == std::string::npos ? "" : tok.substr(first, last - first + 1);
    if (tok.empty()) {
      if (end == text.size() && out.empty() && text.find_first_not_of(" \t") == std::string::npos) {
        break;
      }
      throw ParseError("empty entry in list '" + text + "'");
    }
    if (tok.front() == '+') tok.erase(0, 1);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw ParseError("not a finite number: '" + tok + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::string certify_csv(const CertTable& table, std::span<const CertMethod> methods,
                        std::span<const double> eps_grid) {
  std::string out = "method,epsilon,index,delta,certified,iterations,flags\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
      const auto& rows = table[m][e];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& res = rows[i];
        out += to_string(methods[m]);
        out += ',';
        out += format_real(eps_grid[e]);
        out += ',';
        out += std::to_string(i);
        out += ',';
        out += format_real(res.delta);
        out += res.certified ? ",1," : ",0,";
        if (res.diagnostics) out += std::to_string(res.diagnostics->iterations);
        out += ',';
        out += res.flags;
        out += '\n';
      }
    }
  }
  return out;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "method,epsilon,fraction\n";
  for (const auto& p : curve) {
    out += to_string(p.method) + "," + format_real(p.epsilon) + "," + format_real(p.fraction) +
           "\n";
  }
  return out;
}

std::string radius_csv(std::span<const RadiusRow> rows) {
  std::string out = "method,index,radius\n";
  for (const auto& row : rows) {
    out += to_string(row.method) + "," + std::to_string(row.index) + "," +
           format_real(row.radius) + "\n";
  }
  return out;
}

ImplicitNetwork synth_model(std::size_t n, std::size_t r, std::size_t q, std::uint64_t seed) {
  if (n == 0 || r == 0 || q == 0) throw ValueError("synth: n, r, q must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](std::size_t rows, std::size_t cols, double scale) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * gauss(rng);
    return m;
  };
  auto random_vector = [&](std::size_t d, double scale) {
    Vector v(d);
    for (auto& x : v) x = scale * gauss(rng);
    return v;
  };
  const auto eta = WeightVector::ones(n);
  const Matrix T = random_matrix(n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix A = build_wellposed_weights(T, eta);
  Matrix B = random_matrix(n, r, 1.0 / std::sqrt(static_cast<double>(r)));
  Matrix C = random_matrix(q, n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector b = random_vector(n, 0.1);
  Vector c = random_vector(q, 0.1);
  return {std::move(A), std::move(B), std::move(C), std::move(b), std::move(c),
          Activation::relu(), eta};
}

std::vector<LabeledInput> synth_dataset(const ImplicitNetwork& net, std::size_t count,
                                        std::uint64_t seed, LabelMode mode) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label(0, net.q() - 1);
  std::vector<LabeledInput> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    LabeledInput rec;
    rec.u.resize(net.r());
    for (auto& x : rec.u) x = unit(rng);
    if (mode == LabelMode::random) {
      rec.label = label(rng);
    } else {
      const auto y = forward_solve(net, rec.u).y;
      rec.label = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace imcert::io
