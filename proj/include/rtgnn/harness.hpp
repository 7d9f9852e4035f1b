#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtgnn/graph.hpp"
#include "rtgnn/noise.hpp"
#include "rtgnn/trainer.hpp"

namespace rtgnn {

/// Either a directory in load_graph() format or SBM parameters.
struct DatasetSource {
  std::optional<std::filesystem::path> path;
  SbmParams sbm;
  /// Seed of the synthetic graph; shared by all run seeds.
  std::uint64_t graph_seed = 0;
};

Graph load_dataset(const DatasetSource& source);

/// Parses "n,C,p_in,p_out,d,noise".
SbmParams parse_sbm_params(std::string_view text);
/// Parses a comma-separated list of unsigned integers.
std::vector<std::uint64_t> parse_seeds(std::string_view text);
/// Parses a comma-separated list of integers.
std::vector<int> parse_ints(std::string_view text);
/// Parses a comma-separated list of reals.
std::vector<double> parse_doubles(std::string_view text);

struct ExperimentSpec {
  DatasetSource dataset;
  NoiseKind noise_kind = NoiseKind::Uniform;
  double noise_rate = 0.0;
  std::optional<std::vector<int>> pair_map;
  /// Percent of nodes with training labels; validation gets 20 - x percent.
  double label_rate = 5.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrainConfig config;
  std::optional<std::filesystem::path> output_dir;

  void validate() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double acc_val_best = 0.0;
  double acc_test_best = 0.0;
  double acc_test_final = 0.0;
  std::vector<EpochRecord> history;
  std::vector<GovernanceReport> reports;
  PeerState best_state;
};

struct Aggregate {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double std = 0.0;
};

Aggregate summarize(std::span<const double> values);

struct RunResult {
  std::vector<SeedResult> seeds;  ///< sorted by seed
  Aggregate test_best;
  Aggregate test_final;
};

/// Split and corrupted labels of one run seed.
struct SeedSetup {
  Split split;
  NoisyLabeling labels;
};

SeedSetup prepare_seed(const Graph& graph, const ExperimentSpec& spec, std::uint64_t seed);

/// split → corrupt → train → evaluate for every seed. Writes outputs when
/// spec.output_dir is set.
RunResult run_experiment(const ExperimentSpec& spec);
RunResult run_experiment(const Graph& graph, const ExperimentSpec& spec);

/// history_seed<k>.csv, governance_seed<k>.jsonl, checkpoint_seed<k>.bin,
/// summary.csv and aggregate.csv.
void write_run(const RunResult& result, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Ablations and sweeps
// ---------------------------------------------------------------------------

struct AblationVariant {
  std::string name;
  AblationFlags flags;
};

/// full, no-LD+SR, no-SR, no-PL, no-CR, no-GA.
std::vector<AblationVariant> ablation_variants();

struct AblationRow {
  std::string variant;
  RunResult result;
};

/// Runs every variant on the same seeds. With an output dir, each variant
/// gets a subdirectory and the comparison goes to ablation.csv.
std::vector<AblationRow> run_ablation_grid(const ExperimentSpec& spec);

enum class SweepParam { Alpha, Tau, Lambda };

SweepParam parse_sweep_param(std::string_view name);
std::string to_string(SweepParam param);

struct SweepRow {
  double value = 0.0;
  RunResult result;
};

/// One experiment per value; writes sweep_<param>.csv (value, mean, std, n_seeds).
std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, SweepParam param,
                                std::span<const double> values);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

inline const std::vector<std::string> kHistoryColumns = {
    "epoch",        "loss_total",    "loss_labeled", "loss_pse", "loss_rec",
    "acc_train",    "acc_val_noisy", "acc_test",     "n_clean",  "n_noisy",
    "n_sr",         "n_pse",         "noise_precision", "noise_recall"};

inline const std::vector<std::string> kSummaryColumns = {
    "seed", "best_epoch", "acc_val_noisy_best", "acc_test_best", "acc_test_final"};

void write_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable history_table(std::span<const EpochRecord> history);
CsvTable summary_table(const RunResult& result);

}  // namespace rtgnn
