#include "rtgnn/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "rtgnn/governance.hpp"
#include "rtgnn/rng.hpp"

namespace rtgnn {

namespace {

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    parts.push_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(fmt::format("cannot parse {} from '{}'", what, text));
  }
  return value;
}

}  // namespace

Graph load_dataset(const DatasetSource& source) {
  if (source.path) return load_graph(*source.path);
  return generate_sbm(source.sbm, source.graph_seed);
}

SbmParams parse_sbm_params(std::string_view text) {
  const auto parts = split_commas(text);
  if (parts.size() != 6) {
    throw std::invalid_argument(
        fmt::format("--sbm expects n,C,p_in,p_out,d,noise (6 values), got '{}'", text));
  }
  SbmParams p;
  p.num_nodes = parse_number<std::size_t>(parts[0], "n");
  p.num_classes = parse_number<int>(parts[1], "C");
  p.p_in = parse_number<double>(parts[2], "p_in");
  p.p_out = parse_number<double>(parts[3], "p_out");
  p.feature_dim = parse_number<std::size_t>(parts[4], "d");
  p.feature_noise = parse_number<double>(parts[5], "noise");
  return p;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (std::string_view part : split_commas(text)) {
    seeds.push_back(parse_number<std::uint64_t>(part, "seed"));
  }
  return seeds;
}

std::vector<int> parse_ints(std::string_view text) {
  std::vector<int> values;
  for (std::string_view part : split_commas(text)) values.push_back(parse_number<int>(part, "integer"));
  return values;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> values;
  for (std::string_view part : split_commas(text)) values.push_back(parse_number<double>(part, "value"));
  return values;
}

void ExperimentSpec::validate() const {
  if (!(label_rate > 0.0 && label_rate < 20.0)) {
    throw std::invalid_argument(fmt::format(
        "label rate must lie in (0, 20) percent so that validation keeps 20 - x > 0, got {}",
        label_rate));
  }
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("seeds must be distinct");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) {
    throw std::invalid_argument(fmt::format("noise rate must lie in [0, 0.5), got {}", noise_rate));
  }
  config.validate();
}

Aggregate summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Aggregate out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

SeedSetup prepare_seed(const Graph& graph, const ExperimentSpec& spec, std::uint64_t seed) {
  SeedSetup setup;
  setup.split = make_split(graph, spec.label_rate / 100.0, (20.0 - spec.label_rate) / 100.0,
                           stream_seed(seed, "split"));
  std::vector<NodeId> observed_ids = setup.split.train;
  observed_ids.insert(observed_ids.end(), setup.split.val.begin(), setup.split.val.end());
  std::sort(observed_ids.begin(), observed_ids.end());
  NoiseSpec noise{spec.noise_kind, spec.noise_rate, spec.pair_map};
  if (noise.kind == NoiseKind::Pair && !noise.pair_map) {
    noise.pair_map = cyclic_pair_map(graph.num_classes());
  }
  setup.labels = corrupt(graph.labels(), graph.num_classes(), observed_ids, noise,
                         stream_seed(seed, "noise"));
  return setup;
}

RunResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const Graph graph = load_dataset(spec.dataset);
  return run_experiment(graph, spec);
}

RunResult run_experiment(const Graph& graph, const ExperimentSpec& spec) {
  spec.validate();
  std::vector<std::uint64_t> seeds = spec.seeds;
  std::sort(seeds.begin(), seeds.end());
  RunResult result;
  std::vector<double> best;
  std::vector<double> final;
  for (std::uint64_t seed : seeds) {
    const SeedSetup setup = prepare_seed(graph, spec, seed);
    TrainConfig config = spec.config;
    config.seed = seed;
    TrainResult trained = train(graph, setup.labels, setup.split, config);

    SeedResult sr;
    sr.seed = seed;
    sr.best_epoch = trained.best_epoch;
    const EpochRecord& best_rec = trained.history[static_cast<std::size_t>(trained.best_epoch - 1)];
    sr.acc_val_best = best_rec.acc_val_noisy;
    sr.acc_test_best = best_rec.acc_test;
    sr.acc_test_final = trained.history.back().acc_test;
    sr.history = std::move(trained.history);
    sr.reports = std::move(trained.reports);
    sr.best_state = std::move(trained.best_state);
    best.push_back(sr.acc_test_best);
    final.push_back(sr.acc_test_final);
    result.seeds.push_back(std::move(sr));
  }
  result.test_best = summarize(best);
  result.test_final = summarize(final);
  if (spec.output_dir) write_run(result, *spec.output_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range(fmt::format("no CSV column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

// Cells are numbers or fixed identifiers, so no quoting dialect is needed;
// anything that would need one is rejected.
void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  auto check = [](const std::vector<std::string>& cells) {
    for (const std::string& c : cells) {
      if (c.find_first_of(",\"\r\n") != std::string::npos) {
        throw std::invalid_argument(fmt::format("CSV cell needs quoting: '{}'", c));
      }
    }
  };
  check(table.header);
  for (const auto& row : table.rows) check(row);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << fmt::format("{}\n", fmt::join(table.header, ","));
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::logic_error(fmt::format("CSV row has {} cells, header has {}", row.size(),
                                         table.header.size()));
    }
    out << fmt::format("{}\n", fmt::join(row, ","));
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (std::string_view cell : split_commas(line)) cells.emplace_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw std::runtime_error(
          fmt::format("{}: row with {} cells under a {}-column header", path.string(),
                      cells.size(), table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (first) throw std::runtime_error(fmt::format("{}: missing header", path.string()));
  return table;
}

CsvTable history_table(std::span<const EpochRecord> history) {
  CsvTable table{kHistoryColumns, {}};
  for (const EpochRecord& r : history) {
    table.rows.push_back({fmt::format("{}", r.epoch), fmt::format("{}", r.loss_total),
                          fmt::format("{}", r.loss_labeled), fmt::format("{}", r.loss_pse),
                          fmt::format("{}", r.loss_rec), fmt::format("{}", r.acc_train),
                          fmt::format("{}", r.acc_val_noisy), fmt::format("{}", r.acc_test),
                          fmt::format("{}", r.n_clean), fmt::format("{}", r.n_noisy),
                          fmt::format("{}", r.n_sr), fmt::format("{}", r.n_pse),
                          fmt::format("{}", r.noise_precision),
                          fmt::format("{}", r.noise_recall)});
  }
  return table;
}

CsvTable summary_table(const RunResult& result) {
  CsvTable table{kSummaryColumns, {}};
  for (const SeedResult& s : result.seeds) {
    table.rows.push_back({fmt::format("{}", s.seed), fmt::format("{}", s.best_epoch),
                          fmt::format("{}", s.acc_val_best), fmt::format("{}", s.acc_test_best),
                          fmt::format("{}", s.acc_test_final)});
  }
  return table;
}

void write_run(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const SeedResult& s : result.seeds) {
    write_csv(history_table(s.history), dir / fmt::format("history_seed{}.csv", s.seed));
    std::ofstream jsonl(dir / fmt::format("governance_seed{}.jsonl", s.seed), std::ios::binary);
    for (std::size_t e = 0; e < s.reports.size(); ++e) {
      const NoiseIdentification id{s.history[e].noise_precision, s.history[e].noise_recall};
      jsonl << to_json_line(s.reports[e], id) << '\n';
    }
    save_checkpoint(s.best_state, dir / fmt::format("checkpoint_seed{}.bin", s.seed));
  }
  write_csv(summary_table(result), dir / "summary.csv");
  const std::string n = fmt::format("{}", result.seeds.size());
  write_csv({{"metric", "mean", "std", "n_seeds"},
             {{"acc_test_best", fmt::format("{}", result.test_best.mean),
               fmt::format("{}", result.test_best.std), n},
              {"acc_test_final", fmt::format("{}", result.test_final.mean),
               fmt::format("{}", result.test_final.std), n}}},
            dir / "aggregate.csv");
}

std::vector<AblationVariant> ablation_variants() {
  auto with = [](auto edit) {
    AblationFlags f;
    edit(f);
    return f;
  };
  return {
      {"full", AblationFlags{}},
      {"no-LD+SR", with([](AblationFlags& f) { f.ld = f.sr = false; })},
      {"no-SR", with([](AblationFlags& f) { f.sr = false; })},
      {"no-PL", with([](AblationFlags& f) { f.pl = false; })},
      {"no-CR", with([](AblationFlags& f) { f.cr = false; })},
      {"no-GA", with([](AblationFlags& f) { f.ga = false; })},
  };
}

std::vector<AblationRow> run_ablation_grid(const ExperimentSpec& spec) {
  spec.validate();
  const Graph graph = load_dataset(spec.dataset);
  std::vector<AblationRow> rows;
  CsvTable table{{"variant", "mean_acc_test", "std_acc_test", "n_seeds"}, {}};
  for (const AblationVariant& variant : ablation_variants()) {
    ExperimentSpec sub = spec;
    sub.config.flags = variant.flags;
    if (spec.output_dir) sub.output_dir = *spec.output_dir / variant.name;
    RunResult result = run_experiment(graph, sub);
    table.rows.push_back({variant.name, fmt::format("{}", result.test_best.mean),
                          fmt::format("{}", result.test_best.std),
                          fmt::format("{}", result.seeds.size())});
    rows.push_back({variant.name, std::move(result)});
  }
  if (spec.output_dir) write_csv(table, *spec.output_dir / "ablation.csv");
  return rows;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "alpha") return SweepParam::Alpha;
  if (name == "tau") return SweepParam::Tau;
  if (name == "lambda") return SweepParam::Lambda;
  throw std::invalid_argument(
      fmt::format("unknown sweep parameter '{}' (expected alpha, tau or lambda)", name));
}

std::string to_string(SweepParam param) {
  switch (param) {
    case SweepParam::Alpha: return "alpha";
    case SweepParam::Tau: return "tau";
    case SweepParam::Lambda: return "lambda";
  }
  return "unknown";
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, SweepParam param,
                                std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("run_sweep: no values");
  spec.validate();
  const Graph graph = load_dataset(spec.dataset);
  const std::string name = to_string(param);
  std::vector<SweepRow> rows;
  CsvTable table{{"value", "mean", "std", "n_seeds"}, {}};
  for (double value : values) {
    ExperimentSpec sub = spec;
    switch (param) {
      case SweepParam::Alpha: sub.config.alpha = value; break;
      case SweepParam::Tau: sub.config.tau = value; break;
      case SweepParam::Lambda: sub.config.lambda = value; break;
    }
    if (spec.output_dir) sub.output_dir = *spec.output_dir / fmt::format("{}={}", name, value);
    RunResult result = run_experiment(graph, sub);
    table.rows.push_back({fmt::format("{}", value), fmt::format("{}", result.test_best.mean),
                          fmt::format("{}", result.test_best.std),
                          fmt::format("{}", result.seeds.size())});
    rows.push_back({value, std::move(result)});
  }
  if (spec.output_dir) write_csv(table, *spec.output_dir / fmt::format("sweep_{}.csv", name));
  return rows;
}

}  // namespace rtgnn
