#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imcert/certify.hpp"
#include "imcert/network.hpp"

namespace imcert::io {

inline constexpr int kSchemaVersion = 1;

// Model JSON:
//   {"schema_version": 1, "n": .., "r": .., "q": ..,
//    "A": [n*n], "B": [n*r], "C": [q*n]   (row-major),
//    "b": [n], "c": [q],
//    "activation": {"kind": "relu"|"identity"|"tanh"|"leaky_relu"|"saturation",
//                   "slope": .., "lo": .., "hi": ..},
//    "eta": [n]   (optional)}
ImplicitNetwork model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ImplicitNetwork& net);
ImplicitNetwork load_model(const std::filesystem::path& path);
void save_model(const ImplicitNetwork& net, const std::filesystem::path& path);

// Dataset JSON-lines: one {"input": [r reals], "label": k} per line. Blank lines
// are skipped. Shapes are checked against `r` and `q` when nonzero.
std::vector<LabeledInput> parse_dataset(std::istream& in, std::size_t r = 0, std::size_t q = 0);
std::vector<LabeledInput> load_dataset(const std::filesystem::path& path, std::size_t r = 0,
                                       std::size_t q = 0);
std::string dataset_to_jsonl(std::span<const LabeledInput> data);

// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Locale-independent shortest form with at most 12 significant digits.
std::string format_real(double v);
std::vector<double> parse_real_list(const std::string& text);

std::string certify_csv(const CertTable& table, std::span<const CertMethod> methods,
                        std::span<const double> eps_grid);
std::string curve_csv(std::span<const CurvePoint> curve);

struct RadiusRow {
  CertMethod method;
  std::size_t index;
  double radius;
};
std::string radius_csv(std::span<const RadiusRow> rows);

// Random well-posed model: T ~ N(0, 1/n) entrywise, eta = 1, A built from T so
// that the weighted measure is <= 0; B ~ N(0, 1/r), C ~ N(0, 1/n), b, c ~ N(0, 0.01).
ImplicitNetwork synth_model(std::size_t n, std::size_t r, std::size_t q, std::uint64_t seed);

enum class LabelMode { predicted, random };

// Inputs uniform on [0, 1]^r. Predicted labels are the network's argmax.
std::vector<LabeledInput> synth_dataset(const ImplicitNetwork& net, std::size_t count,
                                        std::uint64_t seed, LabelMode mode = LabelMode::predicted);

}  // namespace imcert::io
