#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "rtgnn/graph.hpp"
#include "rtgnn/tape.hpp"
#include "test_support.hpp"

using namespace rtgnn;
using nd::Tensor;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rtgnn_graph_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Tensor random_weighted_adjacency(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < 0.4) a(i, j) = a(j, i) = u(rng) < 0.5 ? 1.0 : u(rng);
    }
  }
  return a;
}

double spectral_radius(const Tensor& m) {
  Tensor v(m.rows(), 1, 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Tensor w = nd::matmul(m, v);
    double norm = 0.0;
    for (double x : w.values()) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : w.values()) x /= norm;
    lambda = norm;
    v = std::move(w);
  }
  return lambda;
}

TEST(Graph, ConstructionValidates) {
  EXPECT_THROW(Graph(2, {{0, 0}}, Tensor(2, 1), {0, 1}, 2), GraphError);
  EXPECT_THROW(Graph(2, {{0, 2}}, Tensor(2, 1), {0, 1}, 2), GraphError);
  EXPECT_THROW(Graph(2, {}, Tensor(2, 1), {0, 2}, 2), GraphError);
  EXPECT_THROW(Graph(2, {}, Tensor(2, 1), {0, 0}, 1), GraphError);
  EXPECT_THROW(Graph(2, {}, Tensor(3, 1), {0, 1}, 2), GraphError);
  const Graph g(3, {{1, 0}, {0, 1}, {2, 1}}, Tensor(3, 1), {0, 1, 1}, 2);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(1, 0));
  const Tensor a = g.dense_adjacency();
  EXPECT_EQ(a, nd::transpose(a));
}

TEST(NormalizeAdjacency, Examples) {
  EXPECT_EQ(normalize_adjacency(Tensor(1, 1)), Tensor::from_rows({{1.0}}));
  const Tensor two = normalize_adjacency(Tensor::from_rows({{0, 1}, {1, 0}}));
  for (double v : two.values()) EXPECT_NEAR(v, 0.5, 1e-15);
  // A zero-weight edge is the same as no edge.
  EXPECT_EQ(normalize_adjacency(Tensor::from_rows({{0, 0}, {0, 0}})), Tensor::identity(2));
}

TEST(NormalizeAdjacency, WeightedTriangleMatchesOracle) {
  const Tensor out =
      normalize_adjacency(Tensor::from_rows({{0, 1, 0.5}, {1, 0, 0}, {0.5, 0, 0}}));
  const Tensor expected = Tensor::from_rows({{0.4, 0.4472135954999579, 0.25819888974716115},
                                             {0.4472135954999579, 0.5, 0.0},
                                             {0.25819888974716115, 0.0, 0.6666666666666669}});
  for (std::size_t k = 0; k < out.size(); ++k) {
    EXPECT_NEAR(out.values()[k], expected.values()[k], 1e-12);
  }
}

TEST(NormalizeAdjacency, RejectsInvalidInput) {
  EXPECT_THROW(normalize_adjacency(Tensor::from_rows({{0, 1}, {0, 0}})), GraphError);
  EXPECT_THROW(normalize_adjacency(Tensor::from_rows({{0, -1}, {-1, 0}})), GraphError);
  EXPECT_THROW(normalize_adjacency(Tensor::from_rows({{1, 0}, {0, 0}})), GraphError);
  EXPECT_THROW(normalize_adjacency(Tensor(2, 3)), GraphError);
}

TEST(NormalizeAdjacency, SymmetricWithSpectralRadiusAtMostOne) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor m = normalize_adjacency(random_weighted_adjacency(8, rng));
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) EXPECT_NEAR(m(i, j), m(j, i), 1e-12);
    }
    EXPECT_LE(spectral_radius(m), 1.0 + 1e-9);
  }
}

TEST(NormalizeAdjacency, TapedGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor a = random_weighted_adjacency(5, rng);
    const Tensor w = testutil::random_tensor(5, 5, rng);
    nd::Tape tape;
    nd::Var av = tape.leaf(Tensor(a).set_requires_grad(true));
    const Tensor analytic =
        tape.backward(tape.sum(tape.mul(normalize_adjacency(tape, av), tape.constant(w)))).of(av);
    // Perturb each symmetric pair of present edges jointly so the input stays
    // valid; the analytic counterpart is the sum of the two mirrored entries.
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = i + 1; j < 5; ++j) {
        const double h = 1e-6;
        if (a(i, j) < 10 * h) continue;
        Tensor up = a;
        Tensor down = a;
        up(i, j) = up(j, i) = a(i, j) + h;
        down(i, j) = down(j, i) = a(i, j) - h;
        auto f = [&](const Tensor& m) {
          const Tensor n = normalize_adjacency(m);
          double s = 0.0;
          for (std::size_t k = 0; k < n.size(); ++k) s += n.values()[k] * w.values()[k];
          return s;
        };
        const double numeric = (f(up) - f(down)) / (2 * h);
        const double exact = analytic(i, j) + analytic(j, i);
        const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
        ASSERT_LT(std::abs(numeric - exact) / denom, 1e-5) << i << "," << j;
      }
    }
  }
}

TEST(Split, SizesAndDeterminism) {
  const Graph g = generate_sbm({100, 4, 0.1, 0.01, 8, 0.1}, 1);
  const Split s = make_split(g, 0.05, 0.15, 9);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.val.size(), 15u);
  EXPECT_EQ(s.test.size(), 80u);
  const Split again = make_split(g, 0.05, 0.15, 9);
  EXPECT_EQ(s.train, again.train);
  EXPECT_EQ(s.val, again.val);
  EXPECT_EQ(s.test, again.test);
  std::vector<NodeId> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  EXPECT_NE(make_split(g, 0.05, 0.15, 10).train, s.train);
}

TEST(Split, RejectsBadFractions) {
  const Graph g = generate_sbm({20, 2, 0.5, 0.1, 4, 0.1}, 1);
  EXPECT_THROW(make_split(g, 0.5, 0.6, 1), std::invalid_argument);
  EXPECT_THROW(make_split(g, 0.0, 0.2, 1), std::invalid_argument);
  EXPECT_THROW(make_split(g, 0.2, -0.1, 1), std::invalid_argument);
}

TEST(Sbm, TwoTriangles) {
  const Graph g = generate_sbm({6, 2, 1.0, 0.0, 2, 0.0}, 3);
  EXPECT_EQ(g.num_edges(), 6u);
  for (const auto& [u, v] : g.edges()) EXPECT_EQ(g.labels()[u], g.labels()[v]);
  std::vector<int> counts(2, 0);
  for (int y : g.labels()) ++counts[static_cast<std::size_t>(y)];
  EXPECT_EQ(counts[0], 3);
  EXPECT_EQ(counts[1], 3);
}

TEST(Sbm, NoiselessFeaturesAreClassCentroids) {
  const Graph g = generate_sbm({40, 4, 0.3, 0.05, 6, 0.0}, 5);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_EQ(g.features()(i, c), c == static_cast<std::size_t>(g.labels()[i]) ? 1.0 : 0.0);
    }
  }
}

TEST(Sbm, IntraClassEdgeFractionMatchesExpectation) {
  // Oracle: p_in(n/C - 1) / (p_in(n/C - 1) + p_out·n(C-1)/C) = 0.76852.
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Graph g = generate_sbm(SbmParams{}, seed);
    std::size_t intra = 0;
    for (const auto& [u, v] : g.edges()) intra += g.labels()[u] == g.labels()[v] ? 1 : 0;
    total += static_cast<double>(intra) / static_cast<double>(g.num_edges());
  }
  EXPECT_NEAR(total / 5.0, 0.7685185185185185, 0.02);
}

TEST(Sbm, DeterministicAndValidated) {
  EXPECT_EQ(generate_sbm(SbmParams{}, 4), generate_sbm(SbmParams{}, 4));
  EXPECT_THROW(generate_sbm({100, 4, 0.01, 0.02, 8, 0.1}, 1), std::invalid_argument);
  EXPECT_THROW(generate_sbm({100, 4, 0.02, 0.02, 8, 0.1}, 1), std::invalid_argument);
}

TEST(LoadGraph, ToyFixture) {
  const Graph g = load_graph(testutil::fixture_dir("toy3"));
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.feature_dim(), 2u);
  EXPECT_EQ(g.num_classes(), 2);
}

TEST(LoadGraph, DuplicateAndReversedEdgesCollapse) {
  const Graph g = load_graph(testutil::fixture_dir("dup_edges"));
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
}

TEST(LoadGraph, Errors) {
  const auto dir = scratch_dir("errors");
  EXPECT_THROW(load_graph(dir), std::runtime_error);  // missing files
  std::ofstream(dir / "features.csv") << "1,2\n3,4\n";
  std::ofstream(dir / "labels.csv") << "0\n1\n1\n";
  std::ofstream(dir / "edges.txt") << "0 1\n";
  EXPECT_THROW(load_graph(dir), std::runtime_error);  // row mismatch
  std::ofstream(dir / "labels.csv") << "0\n1\n";
  std::ofstream(dir / "edges.txt") << "1 1\n";
  EXPECT_THROW(load_graph(dir), std::runtime_error);  // self-loop
  std::ofstream(dir / "edges.txt") << "0 1\n";
  std::ofstream(dir / "labels.csv") << "0\n-1\n";
  EXPECT_THROW(load_graph(dir), std::runtime_error);  // label out of range
  std::filesystem::remove_all(dir);
}

TEST(LoadGraph, RoundTrip) {
  const auto dir = scratch_dir("roundtrip");
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Graph g = generate_sbm({60, 3, 0.2, 0.02, 5, 0.7}, seed);
    save_graph(g, dir);
    EXPECT_EQ(load_graph(dir), g);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
