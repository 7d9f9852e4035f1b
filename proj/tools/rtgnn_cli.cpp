// rtgnn command-line entry point: run, ablate, sweep, gen-sbm.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "rtgnn/harness.hpp"

namespace {

using namespace rtgnn;

struct Options {
  std::string dataset;
  std::string sbm;
  std::uint64_t graph_seed = 0;
  std::string noise = "uniform";
  double noise_rate = 0.0;
  std::string pair_map;
  double label_rate = 5.0;
  std::string seeds = "1,2,3,4,5";
  TrainConfig config;
  bool no_ld = false, no_sr = false, no_pl = false, no_cr = false, no_ga = false;
  std::string out;
  // sweep only
  std::string param;
  std::string values;
};

void add_dataset_options(CLI::App& cmd, Options& o) {
  auto* dataset = cmd.add_option("--dataset", o.dataset,
                                 "Directory with edges.txt, features.csv, labels.csv");
  auto* sbm = cmd.add_option("--sbm", o.sbm, "Synthetic graph: \"n,C,p_in,p_out,d,noise\"");
  dataset->excludes(sbm);
  cmd.add_option("--graph-seed", o.graph_seed, "Seed of the synthetic graph")->capture_default_str();
}

void add_experiment_options(CLI::App& cmd, Options& o) {
  add_dataset_options(cmd, o);
  TrainConfig& c = o.config;
  cmd.add_option("--noise", o.noise, "uniform | pair")
      ->check(CLI::IsMember({"uniform", "pair"}))
      ->capture_default_str();
  cmd.add_option("--noise-rate", o.noise_rate, "Label corruption rate in [0, 0.5)")->capture_default_str();
  cmd.add_option("--pair-map", o.pair_map, "Pair-noise targets, one class per source class");
  cmd.add_option("--label-rate", o.label_rate, "Training label rate in percent")->capture_default_str();
  cmd.add_option("--seeds", o.seeds, "Comma-separated run seeds")->capture_default_str();
  cmd.add_option("--epochs", c.epochs)->capture_default_str();
  cmd.add_option("--lr", c.learning_rate)->capture_default_str();
  cmd.add_option("--weight-decay", c.weight_decay)->capture_default_str();
  cmd.add_option("--dropout", c.dropout)->capture_default_str();
  cmd.add_option("--hidden", c.hidden)->capture_default_str();
  cmd.add_option("--encoder-hidden", c.encoder_hidden)->capture_default_str();
  cmd.add_option("--k", c.k, "Candidate neighbors per node")->capture_default_str();
  cmd.add_option("--tau", c.tau, "Edge acceptance threshold")->capture_default_str();
  cmd.add_option("--n-neg", c.n_neg, "Negative samples per node")->capture_default_str();
  cmd.add_option("--alpha", c.alpha, "Reconstruction loss weight")->capture_default_str();
  cmd.add_option("--lambda", c.lambda, "Consistency regularization weight")->capture_default_str();
  cmd.add_option("--gamma", c.gamma, "Weight of unreinforced noisy candidates")->capture_default_str();
  cmd.add_option("--th-pse", c.th_pse, "Pseudo-label confidence threshold")->capture_default_str();
  cmd.add_flag("--no-ld", o.no_ld, "Disable labeled node division");
  cmd.add_flag("--no-sr", o.no_sr, "Disable self-reinforcement");
  cmd.add_flag("--no-pl", o.no_pl, "Disable pseudo-labeling");
  cmd.add_flag("--no-cr", o.no_cr, "Disable consistency regularization");
  cmd.add_flag("--no-ga", o.no_ga, "Disable graph augmentation");
  cmd.add_option("--out", o.out, "Output directory")->required();
}

DatasetSource dataset_source(const Options& o) {
  DatasetSource src;
  if (!o.dataset.empty()) src.path = o.dataset;
  if (!o.sbm.empty()) src.sbm = parse_sbm_params(o.sbm);
  src.graph_seed = o.graph_seed;
  return src;
}

ExperimentSpec experiment_spec(const Options& o) {
  ExperimentSpec spec;
  spec.dataset = dataset_source(o);
  spec.noise_kind = parse_noise_kind(o.noise);
  spec.noise_rate = o.noise_rate;
  if (!o.pair_map.empty()) spec.pair_map = parse_ints(o.pair_map);
  spec.label_rate = o.label_rate;
  spec.seeds = parse_seeds(o.seeds);
  spec.config = o.config;
  spec.config.flags = {!o.no_ld, !o.no_sr, !o.no_pl, !o.no_cr, !o.no_ga};
  spec.output_dir = o.out;
  return spec;
}

void print_run(const std::string& label, const RunResult& r) {
  std::printf("%s: test accuracy %.4f +- %.4f (best-val epoch), %.4f +- %.4f (final), %zu seeds\n",
              label.c_str(), r.test_best.mean, r.test_best.std, r.test_final.mean,
              r.test_final.std, r.seeds.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node classification with peer GCNs under label noise"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Train over every seed and write metrics");
  add_experiment_options(*run, o);
  auto* ablate = app.add_subcommand("ablate", "Run the module ablation grid");
  add_experiment_options(*ablate, o);
  auto* sweep = app.add_subcommand("sweep", "Sweep one hyperparameter");
  add_experiment_options(*sweep, o);
  sweep->add_option("--param", o.param, "alpha | tau | lambda")->required();
  sweep->add_option("--values", o.values, "Comma-separated values")->required();
  auto* gen = app.add_subcommand("gen-sbm", "Write a synthetic graph in dataset format");
  add_dataset_options(*gen, o);
  gen->add_option("--out", o.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_run("run", run_experiment(experiment_spec(o)));
    } else if (ablate->parsed()) {
      for (const AblationRow& row : run_ablation_grid(experiment_spec(o))) {
        print_run(row.variant, row.result);
      }
    } else if (sweep->parsed()) {
      const SweepParam param = parse_sweep_param(o.param);
      const std::vector<double> values = parse_doubles(o.values);
      for (const SweepRow& row : run_sweep(experiment_spec(o), param, values)) {
        print_run(o.param + "=" + std::to_string(row.value), row.result);
      }
    } else if (gen->parsed()) {
      if (!o.dataset.empty()) throw std::invalid_argument("gen-sbm takes --sbm, not --dataset");
      const Graph graph = load_dataset(dataset_source(o));
      save_graph(graph, o.out);
      std::printf("wrote %zu nodes, %zu edges to %s\n", graph.num_nodes(), graph.num_edges(),
                  o.out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
