#include "rtgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "rtgnn/rng.hpp"

namespace rtgnn {

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, nd::Tensor features,
             std::vector<int> labels, int num_classes)
    : num_nodes_(num_nodes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      adjacency_(num_nodes) {
  if (features_.rows() != num_nodes_) {
    throw GraphError(fmt::format("graph: {} feature rows for {} nodes", features_.rows(),
                                 num_nodes_));
  }
  if (labels_.size() != num_nodes_) {
    throw GraphError(fmt::format("graph: {} labels for {} nodes", labels_.size(), num_nodes_));
  }
  if (num_classes_ < 2) throw GraphError("graph: need at least 2 classes");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw GraphError(fmt::format("graph: label {} of node {} outside [0, {})", labels_[i], i,
                                   num_classes_));
    }
  }
  for (Edge& e : edges) {
    if (e.first >= num_nodes_ || e.second >= num_nodes_) {
      throw GraphError(fmt::format("graph: edge ({}, {}) references a node >= {}", e.first,
                                   e.second, num_nodes_));
    }
    if (e.first == e.second) throw GraphError(fmt::format("graph: self-loop on node {}", e.first));
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [u, v] : edges_) {
    adjacency_[u].push_back(v);
    adjacency_[v].push_back(u);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto& nbrs = adjacency_.at(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

nd::Tensor Graph::dense_adjacency() const {
  nd::Tensor a(num_nodes_, num_nodes_);
  for (const auto& [u, v] : edges_) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

bool Graph::operator==(const Graph& other) const {
  return num_nodes_ == other.num_nodes_ && edges_ == other.edges_ &&
         features_ == other.features_ && labels_ == other.labels_ &&
         num_classes_ == other.num_classes_;
}

namespace {

void validate_adjacency(const nd::Tensor& adj) {
  if (adj.rows() != adj.cols()) {
    throw GraphError("normalize_adjacency: adjacency must be square, got " + adj.shape_string());
  }
  const std::size_t n = adj.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (adj(i, i) != 0.0) throw GraphError(fmt::format("normalize_adjacency: nonzero diagonal at {}", i));
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adj(i, j) < 0.0 || adj(j, i) < 0.0) {
        throw GraphError(fmt::format("normalize_adjacency: negative weight at ({}, {})", i, j));
      }
      if (adj(i, j) != adj(j, i)) {
        throw GraphError(fmt::format("normalize_adjacency: asymmetric at ({}, {})", i, j));
      }
    }
  }
}

// Inverse square roots of the row sums of adj + I.
std::vector<double> inv_sqrt_degrees(const nd::Tensor& adj) {
  std::vector<double> s(adj.rows());
  for (std::size_t i = 0; i < adj.rows(); ++i) {
    double deg = 1.0;
    for (double w : adj.row(i)) deg += w;
    s[i] = 1.0 / std::sqrt(deg);
  }
  return s;
}

nd::Tensor normalized(const nd::Tensor& adj, const std::vector<double>& s) {
  const std::size_t n = adj.rows();
  nd::Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto in = adj.row(i);
    auto o = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double m = in[j] + (i == j ? 1.0 : 0.0);
      if (m != 0.0) o[j] = m * s[i] * s[j];
    }
  }
  return out;
}

}  // namespace

nd::Tensor normalize_adjacency(const nd::Tensor& adj) {
  validate_adjacency(adj);
  return normalized(adj, inv_sqrt_degrees(adj));
}

nd::Var normalize_adjacency(nd::Tape& tape, nd::Var adj) {
  const nd::Tensor& a = tape.value(adj);
  validate_adjacency(a);
  auto s = std::make_shared<std::vector<double>>(inv_sqrt_degrees(a));
  nd::Tensor out = normalized(a, *s);
  return tape.record(std::move(out), {adj}, [s](const nd::Tape::BackwardArgs& args) {
    // N_ij = M_ij s_i s_j with M = A + I and s = deg^{-1/2}, deg_i = Σ_j M_ij.
    const nd::Tensor& g = args.upstream;
    const nd::Tensor& m = *args.inputs[0];
    const std::size_t n = m.rows();
    std::vector<double> row_part(n, 0.0);
    std::vector<double> col_part(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto gi = g.row(i);
      auto mi = m.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        const double mij = mi[j] + (i == j ? 1.0 : 0.0);
        if (mij == 0.0) continue;
        row_part[i] += gi[j] * mij * (*s)[j];
        col_part[j] += gi[j] * mij * (*s)[i];
      }
    }
    std::vector<double> ddeg(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double sk = (*s)[k];
      ddeg[k] = -0.5 * sk * sk * sk * (row_part[k] + col_part[k]);
    }
    nd::Tensor& d = *args.grads[0];
    for (std::size_t k = 0; k < n; ++k) {
      auto gk = g.row(k);
      auto dk = d.row(k);
      const double sk = (*s)[k];
      for (std::size_t l = 0; l < n; ++l) dk[l] += gk[l] * sk * (*s)[l] + ddeg[k];
    }
  });
}

Split make_split(const Graph& graph, double train_frac, double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0)) {
    throw std::invalid_argument(fmt::format(
        "make_split: need positive fractions with train + val < 1, got {} and {}", train_frac,
        val_frac));
  }
  const std::size_t n = graph.num_nodes();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::min<std::size_t>(n, std::llround(train_frac * static_cast<double>(n)));
  const auto n_val =
      std::min<std::size_t>(n - n_train, std::llround(val_frac * static_cast<double>(n)));
  Split split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Graph generate_sbm(const SbmParams& params, std::uint64_t seed) {
  if (!(params.p_out >= 0.0 && params.p_out < params.p_in && params.p_in <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("generate_sbm: need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                    params.p_in, params.p_out));
  }
  if (params.num_classes < 2) throw std::invalid_argument("generate_sbm: need >= 2 classes");
  if (params.feature_dim < static_cast<std::size_t>(params.num_classes)) {
    throw std::invalid_argument("generate_sbm: feature_dim must be >= num_classes");
  }
  if (params.feature_noise < 0.0) throw std::invalid_argument("generate_sbm: negative noise");

  const std::size_t n = params.num_nodes;
  Rng label_rng = make_stream(seed, "sbm/labels");
  Rng edge_rng = make_stream(seed, "sbm/edges");
  Rng feature_rng = make_stream(seed, "sbm/features");

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % params.num_classes);
  std::shuffle(labels.begin(), labels.end(), label_rng);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? params.p_in : params.p_out;
      if (coin(edge_rng) < p) edges.emplace_back(i, j);
    }
  }

  nd::Tensor features(n, params.feature_dim);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = features.row(i);
    for (double& v : row) v = params.feature_noise * gauss(feature_rng);
    row[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  return Graph(n, std::move(edges), std::move(features), std::move(labels), params.num_classes);
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("load_graph: cannot open " + path.string());
  return in;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

Graph load_graph(const std::filesystem::path& dir) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t dim = 0;
  {
    auto in = open_input(dir / "features.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (blank(line)) continue;
      std::stringstream ss(line);
      std::string cell;
      std::size_t count = 0;
      while (std::getline(ss, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw GraphError(fmt::format("load_graph: bad feature '{}' on row {}", cell, rows));
        }
        ++count;
      }
      if (rows == 0) dim = count;
      if (count != dim) {
        throw GraphError(fmt::format("load_graph: feature row {} has {} columns, expected {}",
                                     rows, count, dim));
      }
      ++rows;
    }
  }

  std::vector<int> labels;
  {
    auto in = open_input(dir / "labels.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (blank(line)) continue;
      try {
        labels.push_back(std::stoi(line));
      } catch (const std::exception&) {
        throw GraphError(fmt::format("load_graph: bad label '{}'", line));
      }
    }
  }
  if (labels.size() != rows) {
    throw GraphError(fmt::format("load_graph: {} feature rows but {} labels", rows, labels.size()));
  }
  for (int y : labels) {
    if (y < 0) throw GraphError(fmt::format("load_graph: label {} out of range", y));
  }
  const int num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<Edge> edges;
  {
    auto in = open_input(dir / "edges.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (blank(line)) continue;
      std::stringstream ss(line);
      long long u = -1;
      long long v = -1;
      if (!(ss >> u >> v) || u < 0 || v < 0) {
        throw GraphError(fmt::format("load_graph: bad edge line '{}'", line));
      }
      if (u == v) throw GraphError(fmt::format("load_graph: self-loop on node {}", u));
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  return Graph(rows, std::move(edges), nd::Tensor(rows, dim, std::move(values)),
               std::move(labels), num_classes);
}

void save_graph(const Graph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream edges(dir / "edges.txt");
  for (const auto& [u, v] : graph.edges()) edges << u << ' ' << v << '\n';
  std::ofstream features(dir / "features.csv");
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    features << fmt::format("{}\n", fmt::join(graph.features().row(i), ","));
  }
  std::ofstream labels(dir / "labels.csv");
  for (int y : graph.labels()) labels << y << '\n';
  if (!edges || !features || !labels) throw GraphError("save_graph: write failed in " + dir.string());
}

}  // namespace rtgnn
