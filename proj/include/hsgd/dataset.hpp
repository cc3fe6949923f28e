#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hsgd/core.hpp"
#include "hsgd/rng.hpp"

namespace hsgd {

// Sparse row-major dataset. Labels are mapped to {-1,+1} for classification;
// an empty label vector marks unlabeled data (NN-PCA).
class Dataset {
 public:
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  int dim = 0;
  bool normalized = false;

  long n() const { return static_cast<long>(rows.size()); }

  void check_invariants() const {
    if (!labels.empty() && labels.size() != rows.size())
      throw std::invalid_argument("Dataset: labels length mismatch");
    for (const auto& r : rows) {
      if (r.dim != dim) throw std::invalid_argument("Dataset: row dimension mismatch");
      r.check_invariants();
      if (normalized && !r.values.empty()) {
        const double nrm = r.norm();
        if (std::fabs(nrm - 1.0) > 1e-9)
          throw std::invalid_argument("Dataset: normalized flag set but row norm != 1");
      }
    }
  }
};

// LIBSVM text format reader:
//   <label> <index>:<value> <index>:<value> ...
// Indices are 1-based and strictly ascending per line; blank lines and lines
// starting with '#' are skipped. Labels map to +1 (label > 0) or -1. Explicit
// zero values are dropped. The feature dimension is max index + 1 unless
// dim_override pins it (train/test files with different max indices).
inline Dataset parse_libsvm(std::istream& in, int dim_override = 0) {
  Dataset ds;
  std::string line;
  long line_no = 0;
  int max_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line.substr(start));
    std::string token;
    if (!(ls >> token)) continue;
    char* end = nullptr;
    const double raw_label = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
      throw ParseError("bad label token '" + token + "'", line_no);
    SparseRow row;
    int prev_index = 0;
    while (ls >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected <index>:<value>, got '" + token + "'", line_no);
      const std::string idx_s = token.substr(0, colon);
      const std::string val_s = token.substr(colon + 1);
      end = nullptr;
      const long idx = std::strtol(idx_s.c_str(), &end, 10);
      if (end == idx_s.c_str() || *end != '\0' || idx < 1)
        throw ParseError("bad feature index '" + idx_s + "'", line_no);
      if (idx <= prev_index)
        throw ParseError("feature indices not ascending at index " + std::to_string(idx), line_no);
      if (dim_override > 0 && idx > dim_override)
        throw ParseError("feature index exceeds pinned dimension", line_no);
      end = nullptr;
      const double val = std::strtod(val_s.c_str(), &end);
      if (end == val_s.c_str() || *end != '\0')
        throw ParseError("bad feature value '" + val_s + "'", line_no);
      prev_index = static_cast<int>(idx);
      if (val == 0.0) continue;
      row.indices.push_back(static_cast<int>(idx) - 1);
      row.values.push_back(val);
    }
    if (prev_index - 1 > max_index) max_index = prev_index - 1;
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(raw_label > 0.0 ? 1.0 : -1.0);
  }
  if (ds.rows.empty()) throw ParseError("empty input", line_no);
  ds.dim = dim_override > 0 ? dim_override : max_index + 1;
  if (ds.dim <= 0) ds.dim = 1;
  for (auto& r : ds.rows) r.dim = ds.dim;
  ds.check_invariants();
  return ds;
}

inline Dataset load_libsvm(const std::string& path, int dim_override = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in, dim_override);
}

// Inverse of parse_libsvm, printing values with enough digits to round-trip.
inline void serialize_libsvm(const Dataset& ds, std::ostream& out) {
  out.precision(17);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    out << (ds.labels.empty() ? 1.0 : ds.labels[i]);
    const auto& r = ds.rows[i];
    for (std::size_t k = 0; k < r.indices.size(); ++k)
      out << ' ' << (r.indices[k] + 1) << ':' << r.values[k];
    out << '\n';
  }
}

// Scales every nonzero row to unit Euclidean norm (zero rows untouched).
// Already-normalized inputs pass through unchanged, so the map is idempotent.
inline Dataset normalize_rows(Dataset ds) {
  if (ds.normalized) return ds;
  for (auto& r : ds.rows) {
    const double nrm = r.norm();
    if (nrm == 0.0) continue;
    const double inv = 1.0 / nrm;
    for (double& v : r.values) v *= inv;
  }
  ds.normalized = true;
  return ds;
}

// Deterministic shuffled split into disjoint, exhaustive (train, test) parts.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split: fraction must lie in [0, 1)");
  const long n = ds.n();
  const long test_n = static_cast<long>(std::floor(test_fraction * static_cast<double>(n) + 1e-9));
  std::vector<long> perm(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  auto rng = make_stream(seed, 0, 0, StreamLeg::kShuffle);
  for (long i = n - 1; i > 0; --i)
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
  std::vector<long> test_idx(perm.begin(), perm.begin() + test_n);
  std::vector<long> train_idx(perm.begin() + test_n, perm.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  auto take = [&](const std::vector<long>& idx) {
    Dataset part;
    part.dim = ds.dim;
    part.normalized = ds.normalized;
    part.rows.reserve(idx.size());
    for (long i : idx) {
      part.rows.push_back(ds.rows[static_cast<std::size_t>(i)]);
      if (!ds.labels.empty()) part.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    }
    return part;
  };
  return {take(train_idx), take(test_idx)};
}

// Classification accuracy with the sign(0) = +1 convention.
inline double accuracy(const DenseVector& x, const Dataset& ds) {
  if (ds.labels.empty()) throw std::invalid_argument("accuracy: dataset has no labels");
  long hits = 0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const double s = ds.rows[i].dot(x);
    const double pred = s >= 0.0 ? 1.0 : -1.0;
    if (pred == ds.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.rows.size());
}

// ---------------------------------------------------------------------------
// Binary cache, version-tagged. Little-endian layout:
//   magic "HSGDDS1\0" | u32 dim | u32 flags (bit0 = normalized, bit1 = labeled)
//   u64 n | per row: u32 nnz, i32 indices[nnz], f64 values[nnz] | f64 labels[n]
namespace detail {
constexpr char kCacheMagic[8] = {'H', 'S', 'G', 'D', 'D', 'S', '1', '\0'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("dataset cache: truncated");
  return v;
}
}  // namespace detail

inline void save_cache(const Dataset& ds, std::ostream& out) {
  out.write(detail::kCacheMagic, sizeof(detail::kCacheMagic));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ds.dim));
  std::uint32_t flags = 0;
  if (ds.normalized) flags |= 1u;
  if (!ds.labels.empty()) flags |= 2u;
  detail::write_pod<std::uint32_t>(out, flags);
  detail::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(ds.rows.size()));
  for (const auto& r : ds.rows) {
    detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(r.indices.size()));
    if (!r.indices.empty()) {
      out.write(reinterpret_cast<const char*>(r.indices.data()),
                static_cast<std::streamsize>(r.indices.size() * sizeof(int)));
      out.write(reinterpret_cast<const char*>(r.values.data()),
                static_cast<std::streamsize>(r.values.size() * sizeof(double)));
    }
  }
  if (!ds.labels.empty())
    out.write(reinterpret_cast<const char*>(ds.labels.data()),
              static_cast<std::streamsize>(ds.labels.size() * sizeof(double)));
}

inline Dataset load_cache(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCacheMagic, sizeof(magic)) != 0)
    throw std::runtime_error("dataset cache: bad magic/version");
  Dataset ds;
  ds.dim = static_cast<int>(detail::read_pod<std::uint32_t>(in));
  const std::uint32_t flags = detail::read_pod<std::uint32_t>(in);
  ds.normalized = (flags & 1u) != 0;
  const bool labeled = (flags & 2u) != 0;
  const std::uint64_t n = detail::read_pod<std::uint64_t>(in);
  ds.rows.resize(n);
  for (auto& r : ds.rows) {
    const std::uint32_t nnz = detail::read_pod<std::uint32_t>(in);
    r.dim = ds.dim;
    r.indices.resize(nnz);
    r.values.resize(nnz);
    if (nnz > 0) {
      in.read(reinterpret_cast<char*>(r.indices.data()),
              static_cast<std::streamsize>(nnz * sizeof(int)));
      in.read(reinterpret_cast<char*>(r.values.data()),
              static_cast<std::streamsize>(nnz * sizeof(double)));
    }
  }
  if (labeled) {
    ds.labels.resize(n);
    in.read(reinterpret_cast<char*>(ds.labels.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!in) throw std::runtime_error("dataset cache: truncated");
  return ds;
}

}  // namespace hsgd
