// depfdr command-line front end.
//
// Exit codes: 0 success, 2 configuration or input error, 3 convergence or
// budget failure, 1 anything else.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "depfdr/cond_likelihood.hpp"
#include "depfdr/csv.hpp"
#include "depfdr/errors.hpp"
#include "depfdr/exact_oracle.hpp"
#include "depfdr/hmm_signal.hpp"
#include "depfdr/matrix_ensembles.hpp"
#include "depfdr/procedures.hpp"
#include "depfdr/random.hpp"
#include "depfdr/sim_harness.hpp"

namespace {

using namespace depfdr;
using json = nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

SimulationConfig base_config(const std::string& config_path) {
  if (config_path.empty()) return {};
  return load_config(read_text(config_path));
}

void apply_structure_file(SimulationConfig& cfg, const std::string& path) {
  const auto structure = load_structure(read_text(path));
  const auto& spec = structure.spec;
  cfg.d = spec.dim();
  cfg.null_states = spec.null_states().one_based();
  cfg.transition = spec.transition().entries();
  cfg.stationary = spec.pi().to_std();
}

// Flags shared by sample-matrix and run.
struct StructureFlags {
  std::size_t d = 0;
  std::vector<std::size_t> null_states;
  double psig = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_attempts = 0;
  std::string matrix;

  CLI::Option* d_opt = nullptr;
  CLI::Option* f_opt = nullptr;
  CLI::Option* psig_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* mu_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* attempts_opt = nullptr;
  CLI::Option* matrix_opt = nullptr;

  void add_to(CLI::App* app) {
    d_opt = app->add_option("--d", d, "number of parent states");
    f_opt = app->add_option("--F", null_states, "null states, 1-based comma list")->delimiter(',');
    psig_opt = app->add_option("--psig", psig, "stationary mass outside F");
    lambda_opt = app->add_option("--lambda", lambda, "lower bound on slem (0 = i.i.d.)");
    mu_opt = app->add_option("--mu", mu, "lower bound on tlem (0 = no bound)");
    seed_opt = app->add_option("--seed", seed, "master seed");
    tol_opt = app->add_option("--tol", tol, "Sinkhorn tolerance");
    attempts_opt = app->add_option("--max-attempts", max_attempts, "spectral rejection budget");
    matrix_opt = app->add_option("--matrix", matrix, "fixed structure JSON (sample-matrix output)");
  }

  void apply(SimulationConfig& cfg) const {
    if (matrix_opt->count()) apply_structure_file(cfg, matrix);
    if (d_opt->count()) cfg.d = d;
    if (f_opt->count()) cfg.null_states = null_states;
    if (psig_opt->count()) cfg.psig = psig;
    if (lambda_opt->count()) cfg.lambda = lambda;
    if (mu_opt->count()) cfg.mu = mu;
    if (seed_opt->count()) cfg.seed = seed;
    if (tol_opt->count()) cfg.sinkhorn_tol = tol;
    if (attempts_opt->count()) cfg.max_attempts = max_attempts;
  }
};

std::string decisions_csv(std::span<const double> values, const TestDecision& decision) {
  std::string out = "index,value,reject\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += fmt::format("{},{},{}\n", i, values[i], decision.reject[i]);
  }
  return out;
}

NoiseModel noise_by_name(const std::string& name, const std::string& kind) {
  NoiseKind k;
  if (kind == "additive") {
    k = NoiseKind::additive;
  } else if (kind == "multiplicative") {
    k = NoiseKind::multiplicative;
  } else {
    throw DomainError(fmt::format("unknown noise kind '{}'", kind));
  }
  if (name == "gaussian") return gaussian_noise(k);
  if (name == "logistic") return logistic_noise(k);
  throw DomainError(fmt::format("unknown noise model '{}'", name));
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multiple testing under hidden-Markov dependence: Bayes BH versus BH"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "depfdr 0.1.0");

  std::string config_path;

  // sample-matrix
  auto* sm = app.add_subcommand("sample-matrix", "sample a spectrally constrained (pi, P)");
  StructureFlags sm_flags;
  std::string sm_out;
  sm->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  sm_flags.add_to(sm);
  sm->add_option("-o,--out", sm_out, "output JSON (default stdout)");

  // simulate-signal
  auto* ss = app.add_subcommand("simulate-signal", "draw a training signal and its moment tables");
  std::string ss_matrix, ss_theta, ss_out;
  std::size_t ss_m = 0;
  int ss_w = 3;
  std::uint64_t ss_seed = 0;
  ss->add_option("--matrix", ss_matrix, "structure JSON")->required()->check(CLI::ExistingFile);
  ss->add_option("--m", ss_m, "number of sites")->required();
  ss->add_option("--w", ss_w, "half window")->capture_default_str();
  ss->add_option("--seed", ss_seed, "master seed")->required();
  ss->add_option("--theta-out", ss_theta, "write theta as one byte (0/1) per site");
  ss->add_option("-o,--out", ss_out, "moments JSON (default stdout)");

  // run
  auto* rn = app.add_subcommand("run", "full Monte Carlo experiment");
  StructureFlags rn_flags;
  std::size_t rn_m = 0, rn_reps = 0;
  int rn_w = 0;
  std::vector<double> rn_eps, rn_alpha;
  unsigned rn_threads = 1;
  std::string rn_records, rn_summary, rn_density, rn_dump;
  rn->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  rn_flags.add_to(rn);
  rn_flags.seed_opt->required();
  auto* rn_m_opt = rn->add_option("--m", rn_m, "number of sites");
  auto* rn_w_opt = rn->add_option("--w", rn_w, "half window");
  auto* rn_eps_opt = rn->add_option("--epsilon", rn_eps, "signal strengths")->delimiter(',');
  auto* rn_alpha_opt = rn->add_option("--alpha", rn_alpha, "target levels")->delimiter(',');
  auto* rn_reps_opt = rn->add_option("--n-reps,--reps", rn_reps, "replications");
  auto* rn_threads_opt = rn->add_option("--threads", rn_threads, "worker threads (0 = all cores)");
  auto* rn_records_opt = rn->add_option("--records", rn_records, "per-replication CSV");
  auto* rn_summary_opt = rn->add_option("--summary", rn_summary, "summary JSON");
  auto* rn_density_opt = rn->add_option("--density", rn_density, "density curves CSV");
  auto* rn_dump_opt =
      rn->add_option("--dump-sites", rn_dump, "debug: per-site logits and p-values of rep 0");
  auto* rn_redraw = rn->add_flag("--redraw-signal", "fresh eta per replication");

  // test
  auto* ts = app.add_subcommand("test", "run a procedure on a column of a CSV file");
  std::string ts_input, ts_procedure, ts_column, ts_truth, ts_out, ts_counts;
  double ts_alpha = 0.0;
  ts->add_option("--input", ts_input, "CSV with a header row")->required()->check(CLI::ExistingFile);
  ts->add_option("--procedure", ts_procedure, "bbh or bh")
      ->required()
      ->check(CLI::IsMember({"bbh", "bh"}));
  ts->add_option("--alpha", ts_alpha, "target level")->required();
  ts->add_option("--column", ts_column, "value column (default posterior / p_value)");
  ts->add_option("--truth", ts_truth, "0/1 truth column for outcome counts");
  ts->add_option("-o,--out", ts_out, "decisions CSV (default stdout)");
  ts->add_option("--counts", ts_counts, "counts JSON (default stderr)");

  // density
  auto* dn = app.add_subcommand("density", "kernel density curves from a records CSV");
  std::string dn_records, dn_out;
  std::size_t dn_points = 256;
  dn->add_option("--records", dn_records, "records CSV")->required()->check(CLI::ExistingFile);
  dn->add_option("--points", dn_points, "grid points per curve")->capture_default_str();
  dn->add_option("-o,--out", dn_out, "output CSV (default stdout)");

  // oracle (debug)
  auto* orc = app.add_subcommand("oracle", "exact posteriors for a small instance");
  orc->group("");
  std::string or_instance, or_method = "fb", or_out;
  orc->add_option("--instance", or_instance, "instance JSON")->required()->check(CLI::ExistingFile);
  orc->add_option("--method", or_method, "fb or brute")->check(CLI::IsMember({"fb", "brute"}));
  orc->add_option("-o,--out", or_out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*sm) {
    auto cfg = base_config(config_path);
    sm_flags.apply(cfg);
    cfg.validate();
    const auto structure = build_structure(cfg);
    emit(sm_out, structure_json(structure, structure.spec.psig(),
                                cfg.transition ? std::nullopt : std::optional(cfg.seed)));
    return 0;
  }

  if (*ss) {
    const auto structure = load_structure(read_text(ss_matrix));
    if (ss_w < 0) throw DomainError("w must be nonnegative");
    auto rng = Rng::derive(ss_seed, StreamTag::training);
    const auto theta = simulate_signal(structure.spec, ss_m, rng);
    if (!ss_theta.empty()) {
      const auto bits = theta.bits();
      write_text(ss_theta, std::string(bits.begin(), bits.end()));
    }
    emit(ss_out, moments_json(estimate_moments(theta, ss_w), ss_m));
    return 0;
  }

  if (*rn) {
    auto cfg = base_config(config_path);
    rn_flags.apply(cfg);
    if (rn_m_opt->count()) cfg.m = rn_m;
    if (rn_w_opt->count()) cfg.w = rn_w;
    if (rn_eps_opt->count()) cfg.epsilons = rn_eps;
    if (rn_alpha_opt->count()) cfg.alphas = rn_alpha;
    if (rn_reps_opt->count()) cfg.n_reps = rn_reps;
    if (rn_threads_opt->count()) cfg.threads = rn_threads;
    if (rn_records_opt->count()) cfg.records_path = rn_records;
    if (rn_summary_opt->count()) cfg.summary_path = rn_summary;
    if (rn_density_opt->count()) cfg.density_path = rn_density;
    if (rn_dump_opt->count()) cfg.posteriors_path = rn_dump;
    if (rn_redraw->count()) cfg.redraw_signal = true;

    const auto result = run_experiment(cfg);
    const auto& s = result.structure.spectrum;
    std::cout << fmt::format("structure: slem {:.4f}  tlem {:.4f}  attempts {}  w {}\n", s.slem,
                             s.tlem, result.structure.attempts, result.w);
    std::cout << fmt::format("psig_hat {:.5f}  psi_tilde {:.5f}  m1 {}\n", result.psig_hat,
                             result.psi_tilde, result.m1);
    std::cout << "epsilon  alpha  alpha_tilde   BBH fdp (sd)        BBH ntd (sd)          "
                 "BH fdp (sd)         BH ntd (sd)\n";
    for (const auto& c : result.summary) {
      std::cout << fmt::format(
          "{:<7} {:<6} {:<12.5f} {:.5f} ({:.5f})  {:>9.2f} ({:>8.4f})  {:.5f} ({:.5f})  "
          "{:>9.2f} ({:>8.4f})\n",
          c.epsilon, c.alpha, c.alpha_tilde, c.bbh.mean_fdp, c.bbh.sd_fdp, c.bbh.mean_ntd,
          c.bbh.sd_ntd, c.bh.mean_fdp, c.bh.sd_fdp, c.bh.mean_ntd, c.bh.sd_ntd);
    }
    return 0;
  }

  if (*ts) {
    const auto table = CsvTable::parse(read_text(ts_input));
    if (ts_column.empty()) ts_column = ts_procedure == "bbh" ? "posterior" : "p_value";
    const auto values = table.numeric_column(ts_column);
    const auto decision =
        ts_procedure == "bbh" ? bayes_bh(values, ts_alpha) : bh(values, ts_alpha);
    emit(ts_out, decisions_csv(values, decision));
    json counts = {{"procedure", ts_procedure},
                   {"alpha", ts_alpha},
                   {"m", values.size()},
                   {"R", decision.rejections}};
    counts["threshold"] = std::isnan(decision.threshold) ? json(nullptr) : json(decision.threshold);
    if (!ts_truth.empty()) {
      std::vector<std::uint8_t> bits;
      for (const double v : table.numeric_column(ts_truth)) {
        if (v != 0.0 && v != 1.0) throw DomainError("truth column must hold 0/1");
        bits.push_back(static_cast<std::uint8_t>(v));
      }
      const auto outcome = confusion(decision, BinarySignal(std::move(bits)));
      const auto& c = outcome.counts;
      counts.update({{"U", c.U}, {"V", c.V}, {"T", c.T}, {"S", c.S}, {"A", c.A}, {"m0", c.m0},
                     {"m1", c.m1}, {"fdp", outcome.fdp}, {"ntd", outcome.ntd}});
    }
    if (ts_counts.empty()) {
      std::cerr << counts.dump(2) << "\n";
    } else {
      write_text(ts_counts, counts.dump(2) + "\n");
    }
    return 0;
  }

  if (*dn) {
    const auto records = parse_records_csv(read_text(dn_records));
    emit(dn_out, density_csv(summarize(records), records, dn_points));
    return 0;
  }

  if (*orc) {
    const auto text = read_text(or_instance);
    const auto structure = load_structure(text);
    json doc;
    try {
      doc = json::parse(text);
      const Observations obs(doc.at("x").get<std::vector<double>>(), doc.at("epsilon").get<double>());
      const auto noise =
          noise_by_name(doc.value("noise", std::string("gaussian")),
                        doc.value("kind", std::string("additive")));
      const auto post = or_method == "fb"
                            ? forward_backward_posterior(structure.spec, obs, noise)
                            : brute_force_posterior(structure.spec, obs, noise);
      std::string out = "site,x,posterior\n";
      for (std::size_t t = 0; t < obs.size(); ++t) {
        out += fmt::format("{},{},{}\n", t, obs.x[t], post.probs[t]);
      }
      emit(or_out, out);
      std::cerr << fmt::format("log_evidence {}\n", post.log_evidence);
    } catch (const json::exception& e) {
      throw DomainError(fmt::format("malformed instance file: {}", e.what()));
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const depfdr::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const depfdr::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const depfdr::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
