#include "its/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/core.h>
#include <json.hpp>

#include "http_client.hpp"
#include "its/csv.hpp"
#include "its/error.hpp"

namespace its::similarity {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double norm(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(s));
}

long double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

double clamp_unit(long double x) { return static_cast<double>(std::clamp(x, -1.0L, 1.0L)); }

std::map<std::string, std::vector<double>> load_vectors(const fs::path& path) {
  std::map<std::string, std::vector<double>> out;
  if (path.extension() == ".json") {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, path.string() + ": cannot open vectors file");
    const auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      fail(ErrorKind::ProviderError, path.string() + ": expected a JSON object of vectors");
    }
    for (const auto& [id, values] : doc.items()) {
      try {
        out[id] = values.get<std::vector<double>>();
      } catch (const json::exception&) {
        fail(ErrorKind::ProviderError, path.string() + ": vector for " + id + " is not numeric");
      }
    }
    return out;
  }
  if (!fs::exists(path)) fail(ErrorKind::Io, path.string() + ": vectors file not found");
  const auto table = csv::read(path);
  auto parse_row = [&](const csv::Row& row) {
    if (row.empty()) return;
    std::vector<double> values;
    for (std::size_t i = 1; i < row.size(); ++i) {
      try {
        values.push_back(std::stod(row[i]));
      } catch (const std::exception&) {
        fail(ErrorKind::ProviderError,
             fmt::format("{}: non-numeric value '{}' for {}", path.string(), row[i], row[0]));
      }
    }
    out[row[0]] = std::move(values);
  };
  // A header row is recognised by its first cell.
  if (!table.header.empty() && table.header[0] != "code_id") parse_row(table.header);
  for (const auto& r : table.rows) parse_row(r);
  return out;
}

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(fs::path path) : path_(std::move(path)) {}

std::vector<EmbeddingVector> FileEmbeddingProvider::embed(const std::vector<EmbedInput>& inputs) {
  const auto vectors = load_vectors(path_);
  std::vector<EmbeddingVector> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    const auto it = vectors.find(in.code_id);
    if (it == vectors.end()) fail(ErrorKind::MissingVector, in.code_id);
    out.push_back({in.code_id, it->second});
  }
  return out;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<EmbedInput>& inputs) {
  const auto key = detail::read_credential(config_.credential_env_var);
  json texts = json::array();
  for (const auto& in : inputs) texts.push_back(in.text);
  const json body = {{"model", config_.model_id}, {"input", texts}};
  const detail::RetryPolicy policy{config_.max_retries, config_.timeout, config_.backoff_base};
  const auto reply =
      detail::post_json(config_.endpoint_url, key, body.dump(), policy, ErrorKind::ProviderError);
  const auto doc = json::parse(reply.body, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::ProviderError, "embeddings endpoint returned non-JSON");

  std::vector<EmbeddingVector> out(inputs.size());
  std::vector<char> filled(inputs.size(), 0);
  try {
    const auto& data = doc.at("data");
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto idx = data[k].value("index", k);
      if (idx >= inputs.size()) fail(ErrorKind::ProviderError, "embedding index out of range");
      out[idx] = {inputs[idx].code_id, data[k].at("embedding").get<std::vector<double>>()};
      filled[idx] = 1;
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ProviderError, std::string("unexpected embeddings response: ") + e.what());
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!filled[i]) fail(ErrorKind::MissingVector, inputs[i].code_id);
  }
  return out;
}

std::vector<EmbeddingVector> embed_codes(const std::vector<EmbedInput>& inputs,
                                         EmbeddingProvider& provider) {
  if (inputs.empty()) fail(ErrorKind::ProviderError, "nothing to embed");
  auto vectors = provider.embed(inputs);
  if (vectors.size() != inputs.size()) {
    fail(ErrorKind::ProviderError,
         fmt::format("{} vectors returned for {} inputs", vectors.size(), inputs.size()));
  }
  const auto dim = vectors.front().dim();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim() != dim || dim == 0) {
      fail(ErrorKind::DimensionMismatch,
           fmt::format("{} has dim {}, expected {}", vectors[i].code_id, vectors[i].dim(), dim));
    }
    if (!(norm(vectors[i].values) > 0.0)) fail(ErrorKind::ZeroNorm, vectors[i].code_id);
  }
  return vectors;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    fail(ErrorKind::DimensionMismatch, fmt::format("{} vs {}", a.dim(), b.dim()));
  }
  const double na = norm(a.values);
  const double nb = norm(b.values);
  if (!(na > 0.0) || !(nb > 0.0)) {
    fail(ErrorKind::ZeroNorm, na > 0.0 ? b.code_id : a.code_id);
  }
  return clamp_unit(dot(a.values, b.values) / (static_cast<long double>(na) * nb));
}

namespace {

struct Prepared {
  std::vector<double> norms;
  SimilarityMatrix m;
};

Prepared prepare(const std::vector<EmbeddingVector>& vectors) {
  if (vectors.size() < 2) fail(ErrorKind::DimensionMismatch, "need at least two vectors");
  Prepared p;
  const auto n = vectors.size();
  const auto dim = vectors.front().dim();
  p.m.n = n;
  p.m.entries.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].dim() != dim) {
      fail(ErrorKind::DimensionMismatch,
           fmt::format("vector {} ({}) has dim {}, vector 0 has {}", i, vectors[i].code_id,
                       vectors[i].dim(), dim));
    }
    const double nv = norm(vectors[i].values);
    if (!(nv > 0.0)) fail(ErrorKind::ZeroNorm, fmt::format("vector {} ({})", i, vectors[i].code_id));
    p.norms.push_back(nv);
    p.m.code_ids.push_back(vectors[i].code_id);
  }
  return p;
}

inline void fill_row(SimilarityMatrix& m, const std::vector<EmbeddingVector>& v,
                     const std::vector<double>& norms, std::size_t i) {
  for (std::size_t j = i; j < m.n; ++j) {
    const long double denom = static_cast<long double>(norms[i]) * norms[j];
    const double c = clamp_unit(dot(v[i].values, v[j].values) / denom);
    m.entries[i * m.n + j] = c;
    m.entries[j * m.n + i] = c;
  }
}

}  // namespace

SimilarityMatrix similarity_matrix(const std::vector<EmbeddingVector>& vectors) {
  auto p = prepare(vectors);
  const auto n = static_cast<std::ptrdiff_t>(p.m.n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    fill_row(p.m, vectors, p.norms, static_cast<std::size_t>(i));
  }
  return std::move(p.m);
}

SimilarityMatrix similarity_matrix_serial(const std::vector<EmbeddingVector>& vectors) {
  auto p = prepare(vectors);
  for (std::size_t i = 0; i < p.m.n; ++i) fill_row(p.m, vectors, p.norms, i);
  return std::move(p.m);
}

void check_matrix(const SimilarityMatrix& m) {
  if (m.entries.size() != m.n * m.n || m.code_ids.size() != m.n) {
    fail(ErrorKind::InvalidMatrix, "matrix shape does not match n");
  }
  for (std::size_t i = 0; i < m.n; ++i) {
    if (std::abs(m.at(i, i) - 1.0) > 1e-6) {
      fail(ErrorKind::InvalidMatrix,
           fmt::format("diagonal entry {} ({}) is {}", i, m.code_ids[i], m.at(i, i)));
    }
    for (std::size_t j = 0; j < m.n; ++j) {
      const double v = m.at(i, j);
      if (!(v >= -1.0 && v <= 1.0)) {
        fail(ErrorKind::InvalidMatrix, fmt::format("entry ({}, {}) = {} outside [-1, 1]", i, j, v));
      }
      if (std::abs(v - m.at(j, i)) > 1e-9) {
        fail(ErrorKind::InvalidMatrix, fmt::format("entries ({0}, {1}) and ({1}, {0}) differ", i, j));
      }
    }
  }
}

UniquenessReport validate_uniqueness(const SimilarityMatrix& m, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::DomainError, fmt::format("threshold {} outside (0, 1]", threshold));
  }
  check_matrix(m);
  UniquenessReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      if (m.at(i, j) >= threshold - kTolerance) {
        r.flagged_pairs.push_back({m.code_ids[i], m.code_ids[j], m.at(i, j)});
      }
    }
  }
  r.passed = r.flagged_pairs.empty();
  return r;
}

}  // namespace its::similarity
