#pragma once

// TSV dataset interchange and a planted-partition generator with
// block-informative node attributes.
//
// Directory layout:
//   features.tsv  one line per node: <id> <x_1> ... <x_d>
//   edges.tsv     one line per undirected edge: <id> <id>
// Ids are arbitrary tokens; node k is the k-th distinct id of features.tsv.
// Blank lines and lines starting with '#' are ignored.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ggcn/errors.hpp"
#include "ggcn/graph.hpp"
#include "ggcn/random.hpp"

namespace ggcn {

enum class FeatureKind { binary, real };

struct DatasetBundle {
  Graph graph;
  std::string name;
  FeatureKind feature_kind = FeatureKind::real;
  // Input lines dropped while loading.
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges = 0;
};

inline FeatureKind classify_features(const Matrix& x) {
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    if (v != 0.0 && v != 1.0) return FeatureKind::real;
  }
  return FeatureKind::binary;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool skip_line(const std::vector<std::string_view>& tokens) {
  return tokens.empty() || tokens.front().front() == '#';
}

inline std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

inline double parse_number(std::string_view tok, const std::filesystem::path& file,
                           std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(where(file, line) + ": not a number '" + std::string(tok) + "'");
  }
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline DatasetBundle load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path feature_file = dir / "features.tsv";
  const std::filesystem::path edge_file = dir / "edges.tsv";
  std::ifstream fin(feature_file);
  if (!fin) throw ParseError("cannot open " + feature_file.string());

  std::unordered_map<std::string, Index> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(fin, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (detail::skip_line(tokens)) continue;
    if (tokens.size() < 2) {
      throw ParseError(detail::where(feature_file, lineno) + ": node id without features");
    }
    if (!rows.empty() && tokens.size() - 1 != rows.front().size()) {
      throw ParseError(detail::where(feature_file, lineno) + ": ragged row with " +
                       std::to_string(tokens.size() - 1) + " features, expected " +
                       std::to_string(rows.front().size()));
    }
    const std::string id(tokens[0]);
    if (!ids.emplace(id, static_cast<Index>(rows.size())).second) {
      throw ParseError(detail::where(feature_file, lineno) + ": duplicate node id '" + id + "'");
    }
    std::vector<double> row;
    row.reserve(tokens.size() - 1);
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      row.push_back(detail::parse_number(tokens[k], feature_file, lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(feature_file.string() + ": no nodes");

  const Index n = static_cast<Index>(rows.size());
  DatasetBundle bundle;
  bundle.name = std::filesystem::absolute(dir).lexically_normal().filename().string();
  if (bundle.name.empty()) bundle.name = std::filesystem::absolute(dir).parent_path().filename().string();
  bundle.graph.features.resize(n, static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < bundle.graph.features.cols(); ++k) bundle.graph.features(i, k) = rows[i][k];
  }
  bundle.graph.adjacency = Matrix::Zero(n, n);

  std::ifstream ein(edge_file);
  if (!ein) throw ParseError("cannot open " + edge_file.string());
  lineno = 0;
  while (std::getline(ein, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (detail::skip_line(tokens)) continue;
    if (tokens.size() != 2) {
      throw ParseError(detail::where(edge_file, lineno) + ": expected two node ids, got " +
                       std::to_string(tokens.size()) + " fields");
    }
    Index ends[2];
    for (int k = 0; k < 2; ++k) {
      const auto it = ids.find(std::string(tokens[k]));
      if (it == ids.end()) {
        throw ParseError(detail::where(edge_file, lineno) + ": unknown node id '" +
                         std::string(tokens[k]) + "'");
      }
      ends[k] = it->second;
    }
    if (ends[0] == ends[1]) {
      ++bundle.self_loops_dropped;
      continue;
    }
    double& a = bundle.graph.adjacency(ends[0], ends[1]);
    if (a != 0.0) {
      ++bundle.duplicate_edges;
      continue;
    }
    a = 1.0;
    bundle.graph.adjacency(ends[1], ends[0]) = 1.0;
  }
  bundle.feature_kind = classify_features(bundle.graph.features);
  return bundle;
}

// Writes the bundle with ids 0..n-1 and shortest round-trip number text.
inline void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Graph& g = bundle.graph;
  std::ofstream fout(dir / "features.tsv");
  for (Index i = 0; i < g.n(); ++i) {
    fout << i;
    for (Index k = 0; k < g.features.cols(); ++k) fout << '\t' << detail::format_number(g.features(i, k));
    fout << '\n';
  }
  std::ofstream eout(dir / "edges.tsv");
  for (auto [i, j] : g.edges()) eout << i << '\t' << j << '\n';
  if (!fout || !eout) throw std::runtime_error("failed writing dataset to " + dir.string());
}

struct SbmResult {
  DatasetBundle bundle;
  std::vector<Index> blocks;
};

// Planted partition: k contiguous near-equal blocks, edge probability p_in
// within a block and p_out across. Features are
// signal * one-hot(block, width d0 / k) + (1 - signal) * N(0, 1).
inline SbmResult gen_sbm_labeled(Index n, Index k_blocks, double p_in, double p_out, Index d0,
                                 double signal, Rng& rng) {
  detail::require(k_blocks >= 1 && n >= k_blocks, "gen_sbm: need 1 <= k_blocks <= n");
  detail::require(0.0 <= p_out && p_out < p_in && p_in <= 1.0,
                  "gen_sbm: need 0 <= p_out < p_in <= 1");
  detail::require(d0 >= k_blocks, "gen_sbm: feature dim must be >= number of blocks");
  detail::require(signal >= 0.0 && signal <= 1.0, "gen_sbm: signal must lie in [0,1]");

  SbmResult out;
  out.blocks.resize(n);
  const GrowthSchedule parts = build_schedule(n, k_blocks);
  for (std::size_t b = 0; b < parts.size(); ++b) {
    for (Index i : parts.batches[b]) out.blocks[i] = static_cast<Index>(b);
  }

  Graph& g = out.bundle.graph;
  g.adjacency = Matrix::Zero(n, n);
  std::bernoulli_distribution within(p_in), across(p_out);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const bool edge = out.blocks[i] == out.blocks[j] ? within(rng) : across(rng);
      if (edge) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  }

  const Index width = d0 / k_blocks;
  const Matrix noise = standard_normal(n, d0, rng);
  g.features = (1.0 - signal) * noise;
  for (Index i = 0; i < n; ++i) {
    for (Index c = out.blocks[i] * width; c < (out.blocks[i] + 1) * width; ++c) {
      g.features(i, c) += signal;
    }
  }
  out.bundle.name = "sbm";
  out.bundle.feature_kind = classify_features(g.features);
  return out;
}

inline DatasetBundle gen_sbm(Index n, Index k_blocks, double p_in, double p_out, Index d0,
                             double signal, Rng& rng) {
  return gen_sbm_labeled(n, k_blocks, p_in, p_out, d0, signal, rng).bundle;
}

// Scales every nonzero feature row to unit sum.
inline void row_normalize(Matrix& features) {
  for (Index i = 0; i < features.rows(); ++i) {
    const double s = features.row(i).sum();
    if (s != 0.0) features.row(i) /= s;
  }
}

}  // namespace ggcn
