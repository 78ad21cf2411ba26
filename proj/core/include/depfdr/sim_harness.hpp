#pragma once
// Monte Carlo comparison of Bayes BH on approximate posteriors against BH on
// marginal p-values.
//
// One experiment: fix a dependence structure (pi, P), estimate windowed
// moments from a training realization theta, draw the test signal eta once,
// then for each replication draw fresh N(0, 1) noise Z, form X = eps*eta + Z,
// and run both procedures. Every random draw comes from a seed-derived
// substream (see StreamTag), so results are a pure function of the config and
// replication r does not depend on n_reps or on the thread count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depfdr/hmm_signal.hpp"
#include "depfdr/matrix_ensembles.hpp"

namespace depfdr {

struct SimulationConfig {
  std::size_t d = 5;
  std::vector<std::size_t> null_states{1, 2};  // 1-based labels
  double psig = 0.1;
  std::size_t m = 100000;
  std::optional<int> w;  // default: 3 when the structure is dependent, 0 otherwise
  std::vector<double> epsilons{1.0};
  std::vector<double> alphas{0.2};
  double lambda = 0.0;
  double mu = 0.0;
  std::size_t n_reps = 1000;
  std::uint64_t seed = 0;
  double sinkhorn_tol = 1e-10;
  int sinkhorn_max_iter = 10000;
  int max_attempts = 50000;

  // Fixed structure instead of sampling one. Rows are rescaled to unit sum;
  // without `stationary` the exact stationary vector of P is used.
  std::optional<Matrix> transition;
  std::optional<std::vector<double>> stationary;

  bool redraw_signal = false;  // exploratory: fresh eta per replication
  unsigned threads = 1;        // 0 = hardware concurrency

  std::string records_path;
  std::string summary_path;
  std::string density_path;
  std::string posteriors_path;  // per-site dump for replication 0
  std::size_t density_points = 256;

  void validate() const;
};

SimulationConfig load_config(const std::string& json_text);

struct DependenceStructure {
  ParentChainSpec spec;
  SpectralSummary spectrum;
  int attempts = 0;  // 0 when fixed or rank one
};

DependenceStructure build_structure(const SimulationConfig& cfg);

// Half-window used by the experiment.
int resolved_window(const SimulationConfig& cfg, const DependenceStructure& structure);

struct ReplicationRecord {
  std::size_t rep = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  std::size_t r_bbh = 0;
  double fdp_bbh = 0.0;
  std::size_t ntd_bbh = 0;
  std::size_t r_bh = 0;
  double fdp_bh = 0.0;
  std::size_t ntd_bh = 0;
};

struct ProcedureSummary {
  double mean_fdp = 0.0;
  double sd_fdp = 0.0;
  double mean_ntd = 0.0;
  double sd_ntd = 0.0;
};

struct CellSummary {
  double epsilon = 0.0;
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  std::size_t n = 0;
  ProcedureSummary bbh;
  ProcedureSummary bh;
};

using SummaryTable = std::vector<CellSummary>;

// Groups records by (epsilon, alpha) in first-appearance order. Spreads are
// sample standard deviations over replications (NaN when a cell has n = 1).
SummaryTable summarize(std::span<const ReplicationRecord> records);

struct ExperimentResult {
  DependenceStructure structure;
  int w = 0;
  double psig_hat = 0.0;   // from theta
  double psi_tilde = 0.0;  // from eta
  std::size_t m1 = 0;
  std::vector<ReplicationRecord> records;  // rep-major, then epsilon, then alpha
  SummaryTable summary;
};

// Runs the experiment and writes whichever output paths are set. On failure
// the completed records are flushed to records_path before rethrowing.
ExperimentResult run_experiment(const SimulationConfig& cfg);

// File formats.
std::string records_csv(std::span<const ReplicationRecord> records);
std::vector<ReplicationRecord> parse_records_csv(const std::string& text);
std::string summary_json(const SimulationConfig& cfg, const ExperimentResult& result);
std::string density_csv(const SummaryTable& summary, std::span<const ReplicationRecord> records,
                        std::size_t points);
std::string structure_json(const DependenceStructure& structure, double psig,
                           std::optional<std::uint64_t> seed);
// Reads the structure file written by structure_json (or any JSON with
// "null_states", "P" and optionally "pi").
DependenceStructure load_structure(const std::string& json_text);
std::string moments_json(const WindowedMoments& moments, std::size_t m);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace depfdr
