#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ranklist/errors.hpp"
#include "ranklist/rng.hpp"

namespace ranklist {

struct LabeledSample {
  std::string id;
  std::vector<double> features;
  double score = 0.0;
};

struct Dataset {
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples[0].features.size(); }
  const LabeledSample& operator[](std::size_t i) const { return samples[i]; }
};

// Round-trip-safe decimal rendering (17 significant digits).
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline double parse_real_field(const std::string& field, std::size_t line_no,
                               const char* what) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError("line " + std::to_string(line_no) + ": malformed " + what +
                     " '" + field + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": non-finite " + what +
                     " '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

// Expected layout: header "id,score,f0,...,f{d-1}", one sample per line.
inline Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("'" + path.string() + "': missing header line");
  }
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "score") {
    throw ParseError("'" + path.string() +
                     "': malformed header, expected 'id,score,f0,...'");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 2] != "f" + std::to_string(j)) {
      throw ParseError("'" + path.string() + "': malformed header, column " +
                       std::to_string(j + 2) + " should be f" + std::to_string(j));
    }
  }

  Dataset ds;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != dim + 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 2) + " columns, found " +
                       std::to_string(fields.size()));
    }
    LabeledSample s;
    s.id = fields[0];
    if (s.id.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty id");
    }
    if (!seen_ids.insert(s.id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate id '" +
                       s.id + "'");
    }
    s.score = detail::parse_real_field(fields[1], line_no, "score");
    s.features.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s.features.push_back(detail::parse_real_field(fields[j + 2], line_no, "feature"));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  const std::size_t dim = ds.dim();
  out << "id,score";
  for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  for (const LabeledSample& s : ds.samples) {
    if (s.features.size() != dim) {
      throw Error("sample '" + s.id + "' has inconsistent feature dimension");
    }
    out << s.id << ',' << format_real(s.score);
    for (double f : s.features) out << ',' << format_real(f);
    out << '\n';
  }
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

struct SyntheticConfig {
  std::size_t n = 0;
  std::size_t d = 0;
  double noise = 0.0;
  bool nonlinearity = false;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Dataset data;
  std::vector<double> weights;  // ground-truth weight vector
};

// Gaussian features, latent u = w.x (+ tanh(w.x) when nonlinearity is set),
// observation u + noise*eps rescaled affinely into [1, 7]. Fully determined
// by the seed. With noise == 0 the observed order equals the latent order.
inline SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n == 0) throw ConfigError("generate_synthetic: n must be positive");
  if (cfg.d == 0) throw ConfigError("generate_synthetic: d must be positive");
  if (!(cfg.noise >= 0.0) || !std::isfinite(cfg.noise)) {
    throw ConfigError("generate_synthetic: noise must be finite and >= 0");
  }

  Rng rng(cfg.seed);
  SyntheticData out;
  out.weights.resize(cfg.d);
  for (double& w : out.weights) w = rng.normal();

  out.data.samples.resize(cfg.n);
  std::vector<double> latent(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    LabeledSample& s = out.data.samples[i];
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "s%06zu", i);
    s.id = idbuf;
    s.features.resize(cfg.d);
    double u = 0.0;
    for (std::size_t j = 0; j < cfg.d; ++j) {
      s.features[j] = rng.normal();
      u += out.weights[j] * s.features[j];
    }
    if (cfg.nonlinearity) u += std::tanh(u);
    latent[i] = u;
  }
  if (cfg.noise > 0.0) {
    for (double& v : latent) v += rng.normal(0.0, cfg.noise);
  }

  double lo = latent[0], hi = latent[0];
  for (double v : latent) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < cfg.n; ++i) {
    out.data.samples[i].score =
        hi > lo ? 1.0 + 6.0 * (latent[i] - lo) / (hi - lo) : 4.0;
  }
  return out;
}

inline nlohmann::json synthetic_manifest(const SyntheticConfig& cfg,
                                         const std::vector<double>& weights) {
  return nlohmann::json{{"n", cfg.n},
                        {"d", cfg.d},
                        {"noise", cfg.noise},
                        {"nonlinearity", cfg.nonlinearity},
                        {"seed", cfg.seed},
                        {"weight_vector", weights}};
}

}  // namespace ranklist
