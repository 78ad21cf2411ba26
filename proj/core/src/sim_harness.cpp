#include "depfdr/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "depfdr/cond_likelihood.hpp"
#include "depfdr/csv.hpp"
#include "depfdr/errors.hpp"
#include "depfdr/kde.hpp"
#include "depfdr/procedures.hpp"

namespace depfdr {

using json = nlohmann::json;

void SimulationConfig::validate() const {
  if (d < 2) throw DomainError("d must be at least 2");
  (void)NullStates::from_one_based(d, null_states);
  if (!transition && !(psig > 0.0 && psig < 1.0)) throw DomainError("psig must lie in (0, 1)");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in [0, 1)");
  if (lambda > 0.0 && !(mu >= 0.0 && mu < lambda)) throw DomainError("mu must lie in [0, lambda)");
  if (w && *w < 0) throw DomainError("w must be nonnegative");
  const int window = w.value_or(3);
  if (m <= static_cast<std::size_t>(2 * window + 1)) throw DomainError("m must exceed 2w + 1");
  if (n_reps < 1) throw DomainError("n_reps must be at least 1");
  if (epsilons.empty() || alphas.empty()) throw DomainError("need at least one epsilon and alpha");
  for (const double e : epsilons) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw DomainError("epsilon must be finite and >= 0");
  }
  for (const double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  }
  if (!(sinkhorn_tol > 0.0)) throw DomainError("sinkhorn_tol must be positive");
  if (sinkhorn_max_iter < 1 || max_attempts < 1) throw DomainError("iteration budgets must be positive");
  if (transition) {
    if (static_cast<std::size_t>(transition->rows()) != d ||
        static_cast<std::size_t>(transition->cols()) != d) {
      throw DomainError("transition matrix must be d x d");
    }
  }
  if (stationary && stationary->size() != d) throw DomainError("stationary vector must have d entries");
}

namespace {

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw DomainError("matrix must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw DomainError("matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> number_or_list(const json& value) {
  if (value.is_array()) return value.get<std::vector<double>>();
  return {value.get<double>()};
}

}  // namespace

SimulationConfig load_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw DomainError("config must be a JSON object");

  static const std::vector<std::string> kKnown = {
      "d", "null_states", "psig", "m", "w", "epsilon", "alpha", "lambda", "mu", "n_reps", "seed",
      "sinkhorn_tol", "sinkhorn_max_iter", "max_attempts", "transition", "stationary",
      "redraw_signal", "threads", "records", "summary", "density", "posteriors",
      "density_points"};
  for (const auto& item : doc.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), item.key()) == kKnown.end()) {
      throw DomainError(fmt::format("unknown config key '{}'", item.key()));
    }
  }

  SimulationConfig cfg;
  try {
    if (doc.contains("transition")) {
      cfg.transition = matrix_from_json(doc["transition"]);
      cfg.d = static_cast<std::size_t>(cfg.transition->rows());
    }
    if (doc.contains("d")) cfg.d = doc["d"].get<std::size_t>();
    if (doc.contains("null_states")) cfg.null_states = doc["null_states"].get<std::vector<std::size_t>>();
    if (doc.contains("psig")) cfg.psig = doc["psig"].get<double>();
    if (doc.contains("m")) cfg.m = doc["m"].get<std::size_t>();
    if (doc.contains("w")) cfg.w = doc["w"].get<int>();
    if (doc.contains("epsilon")) cfg.epsilons = number_or_list(doc["epsilon"]);
    if (doc.contains("alpha")) cfg.alphas = number_or_list(doc["alpha"]);
    if (doc.contains("lambda")) cfg.lambda = doc["lambda"].get<double>();
    if (doc.contains("mu")) cfg.mu = doc["mu"].get<double>();
    if (doc.contains("n_reps")) cfg.n_reps = doc["n_reps"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("sinkhorn_tol")) cfg.sinkhorn_tol = doc["sinkhorn_tol"].get<double>();
    if (doc.contains("sinkhorn_max_iter")) cfg.sinkhorn_max_iter = doc["sinkhorn_max_iter"].get<int>();
    if (doc.contains("max_attempts")) cfg.max_attempts = doc["max_attempts"].get<int>();
    if (doc.contains("stationary")) cfg.stationary = doc["stationary"].get<std::vector<double>>();
    if (doc.contains("redraw_signal")) cfg.redraw_signal = doc["redraw_signal"].get<bool>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<unsigned>();
    if (doc.contains("records")) cfg.records_path = doc["records"].get<std::string>();
    if (doc.contains("summary")) cfg.summary_path = doc["summary"].get<std::string>();
    if (doc.contains("density")) cfg.density_path = doc["density"].get<std::string>();
    if (doc.contains("posteriors")) cfg.posteriors_path = doc["posteriors"].get<std::string>();
    if (doc.contains("density_points")) cfg.density_points = doc["density_points"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("config field has the wrong type: {}", e.what()));
  }
  return cfg;
}

DependenceStructure build_structure(const SimulationConfig& cfg) {
  auto null_states = NullStates::from_one_based(cfg.d, cfg.null_states);
  if (cfg.transition) {
    auto p = TransitionMatrix::from_rounded(*cfg.transition);
    auto pi = cfg.stationary
                  ? ProbVector::normalized(Eigen::Map<const Vector>(
                        cfg.stationary->data(), static_cast<Eigen::Index>(cfg.stationary->size())))
                  : stationary_distribution(p);
    auto spectrum = eigenmoduli(p);
    return {ParentChainSpec(std::move(null_states), std::move(pi), std::move(p)),
            std::move(spectrum), 0};
  }
  auto rng = Rng::derive(cfg.seed, StreamTag::structure);
  auto pi = sample_stationary_vector(null_states, cfg.psig, rng);
  ConstrainedSamplerOptions options;
  options.sinkhorn.tol = cfg.sinkhorn_tol;
  options.sinkhorn.max_iter = cfg.sinkhorn_max_iter;
  options.max_attempts = cfg.max_attempts;
  auto sample = sample_constrained_transition(pi, cfg.lambda, cfg.mu, rng, options);
  return {ParentChainSpec(std::move(null_states), std::move(pi), std::move(sample.matrix)),
          std::move(sample.spectrum), sample.attempts};
}

int resolved_window(const SimulationConfig& cfg, const DependenceStructure& structure) {
  if (cfg.w) return *cfg.w;
  return structure.spectrum.slem > 1e-12 ? 3 : 0;
}

SummaryTable summarize(std::span<const ReplicationRecord> records) {
  struct Group {
    double epsilon, alpha;
    std::vector<const ReplicationRecord*> members;
  };
  std::vector<Group> groups;
  for (const auto& rec : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.epsilon == rec.epsilon && g.alpha == rec.alpha;
    });
    if (it == groups.end()) {
      groups.push_back({rec.epsilon, rec.alpha, {}});
      it = std::prev(groups.end());
    }
    it->members.push_back(&rec);
  }

  // Two-pass mean/sd in record order so results do not depend on threading.
  const auto stats = [](const std::vector<const ReplicationRecord*>& rows, auto field) {
    const auto n = static_cast<double>(rows.size());
    double mean = 0.0;
    for (const auto* r : rows) mean += field(*r);
    mean /= n;
    double ss = 0.0;
    for (const auto* r : rows) ss += (field(*r) - mean) * (field(*r) - mean);
    if (rows.size() < 2) return std::pair{mean, std::numeric_limits<double>::quiet_NaN()};
    return std::pair{mean, std::sqrt(ss / (n - 1.0))};
  };

  SummaryTable table;
  for (const auto& g : groups) {
    CellSummary cell;
    cell.epsilon = g.epsilon;
    cell.alpha = g.alpha;
    cell.n = g.members.size();
    cell.alpha_tilde = stats(g.members, [](const auto& r) { return r.alpha_tilde; }).first;
    std::tie(cell.bbh.mean_fdp, cell.bbh.sd_fdp) =
        stats(g.members, [](const auto& r) { return r.fdp_bbh; });
    std::tie(cell.bbh.mean_ntd, cell.bbh.sd_ntd) =
        stats(g.members, [](const auto& r) { return static_cast<double>(r.ntd_bbh); });
    std::tie(cell.bh.mean_fdp, cell.bh.sd_fdp) =
        stats(g.members, [](const auto& r) { return r.fdp_bh; });
    std::tie(cell.bh.mean_ntd, cell.bh.sd_ntd) =
        stats(g.members, [](const auto& r) { return static_cast<double>(r.ntd_bh); });
    table.push_back(cell);
  }
  return table;
}

namespace {

struct SharedInputs {
  const SimulationConfig& cfg;
  const ParentChainSpec& spec;
  const WindowedMoments& moments;
  const BinarySignal& eta;
  NoiseModel noise;
};

struct ReplicationData {
  BinarySignal eta;
  std::vector<double> z;
};

ReplicationData draw_replication(const SharedInputs& in, std::size_t rep) {
  ReplicationData data;
  if (in.cfg.redraw_signal) {
    auto rng = Rng::derive(in.cfg.seed, StreamTag::signal_redraw, rep);
    data.eta = simulate_signal(in.spec, in.cfg.m, rng);
  } else {
    data.eta = in.eta;
  }
  auto rng = Rng::derive(in.cfg.seed, StreamTag::noise, rep);
  data.z.resize(in.cfg.m);
  for (auto& v : data.z) v = rng.normal();
  return data;
}

std::vector<double> observe(const ReplicationData& data, double eps) {
  std::vector<double> x(data.z.size());
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = eps * data.eta[t] + data.z[t];
  return x;
}

void run_replication(const SharedInputs& in, std::size_t rep, ReplicationRecord* out) {
  const auto data = draw_replication(in, rep);
  std::size_t slot = 0;
  for (const double eps : in.cfg.epsilons) {
    const Observations obs(observe(data, eps), eps);
    const auto post = posteriors(approximate_logits(obs, in.noise, in.moments));
    const auto pvals = p_values_one_sided(obs.x);
    for (const double alpha : in.cfg.alphas) {
      ReplicationRecord& rec = out[slot++];
      rec.rep = rep;
      rec.epsilon = eps;
      rec.alpha = alpha;
      rec.alpha_tilde = augmented_alpha(data.eta, alpha);
      const auto bbh_outcome = confusion(bayes_bh(post.probs, alpha), data.eta);
      const auto bh_outcome = confusion(bh(pvals, rec.alpha_tilde), data.eta);
      rec.r_bbh = bbh_outcome.counts.R;
      rec.fdp_bbh = bbh_outcome.fdp;
      rec.ntd_bbh = bbh_outcome.ntd;
      rec.r_bh = bh_outcome.counts.R;
      rec.fdp_bh = bh_outcome.fdp;
      rec.ntd_bh = bh_outcome.ntd;
    }
  }
}

std::string posteriors_csv(const SharedInputs& in) {
  const auto data = draw_replication(in, 0);
  std::string out = "site,epsilon,eta,x,logit,posterior,p_value\n";
  for (const double eps : in.cfg.epsilons) {
    const Observations obs(observe(data, eps), eps);
    const auto post = posteriors(approximate_logits(obs, in.noise, in.moments));
    const auto pvals = p_values_one_sided(obs.x);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      out += fmt::format("{},{},{},{},{},{},{}\n", t, eps, data.eta[t], obs.x[t], post.logits[t],
                         post.probs[t], pvals[t]);
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const SimulationConfig& cfg) {
  cfg.validate();
  ExperimentResult result{build_structure(cfg), 0, 0.0, 0.0, 0, {}, {}};
  result.w = resolved_window(cfg, result.structure);
  if (cfg.m <= static_cast<std::size_t>(2 * result.w + 1)) throw DomainError("m must exceed 2w + 1");
  const auto& spec = result.structure.spec;

  auto training_rng = Rng::derive(cfg.seed, StreamTag::training);
  const auto theta = simulate_signal(spec, cfg.m, training_rng);
  const auto moments = estimate_moments(theta, result.w);
  result.psig_hat = moments.psig_hat();

  auto signal_rng = Rng::derive(cfg.seed, StreamTag::signal);
  const auto eta = simulate_signal(spec, cfg.m, signal_rng);
  result.psi_tilde = eta.proportion();
  result.m1 = eta.count_ones();

  const SharedInputs inputs{cfg, spec, moments, eta, gaussian_noise(NoiseKind::additive)};
  const std::size_t cells = cfg.epsilons.size() * cfg.alphas.size();
  result.records.resize(cfg.n_reps * cells);
  std::vector<std::uint8_t> done(cfg.n_reps, 0);

  unsigned workers = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                      : cfg.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.n_reps));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto work = [&] {
    while (!failed.load()) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= cfg.n_reps) return;
      try {
        run_replication(inputs, rep, result.records.data() + rep * cells);
        done[rep] = 1;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  if (error) {
    if (!cfg.records_path.empty()) {
      std::vector<ReplicationRecord> partial;
      for (std::size_t rep = 0; rep < cfg.n_reps; ++rep) {
        if (!done[rep]) continue;
        partial.insert(partial.end(), result.records.begin() + static_cast<long>(rep * cells),
                       result.records.begin() + static_cast<long>((rep + 1) * cells));
      }
      write_text(cfg.records_path, records_csv(partial));
    }
    std::rethrow_exception(error);
  }

  result.summary = summarize(result.records);

  if (!cfg.records_path.empty()) write_text(cfg.records_path, records_csv(result.records));
  if (!cfg.summary_path.empty()) write_text(cfg.summary_path, summary_json(cfg, result));
  if (!cfg.density_path.empty()) {
    write_text(cfg.density_path, density_csv(result.summary, result.records, cfg.density_points));
  }
  if (!cfg.posteriors_path.empty()) write_text(cfg.posteriors_path, posteriors_csv(inputs));
  return result;
}

std::string records_csv(std::span<const ReplicationRecord> records) {
  std::string out = "rep,epsilon,alpha,alpha_tilde,r_bbh,fdp_bbh,ntd_bbh,r_bh,fdp_bh,ntd_bh\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.rep, r.epsilon, r.alpha, r.alpha_tilde,
                       r.r_bbh, r.fdp_bbh, r.ntd_bbh, r.r_bh, r.fdp_bh, r.ntd_bh);
  }
  return out;
}

std::vector<ReplicationRecord> parse_records_csv(const std::string& text) {
  const auto table = CsvTable::parse(text);
  const auto col = [&](const char* name) { return table.numeric_column(name); };
  const auto rep = col("rep"), eps = col("epsilon"), alpha = col("alpha"),
             alpha_tilde = col("alpha_tilde"), r_bbh = col("r_bbh"), fdp_bbh = col("fdp_bbh"),
             ntd_bbh = col("ntd_bbh"), r_bh = col("r_bh"), fdp_bh = col("fdp_bh"),
             ntd_bh = col("ntd_bh");
  const auto count = [](double v) {
    if (!(v >= 0.0) || v != std::floor(v)) throw DomainError("count column holds a non-count");
    return static_cast<std::size_t>(v);
  };
  std::vector<ReplicationRecord> out(table.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {count(rep[i]), eps[i],        alpha[i],   alpha_tilde[i], count(r_bbh[i]),
              fdp_bbh[i],    count(ntd_bbh[i]), count(r_bh[i]), fdp_bh[i], count(ntd_bh[i])};
  }
  return out;
}

namespace {

json procedure_json(const ProcedureSummary& s) {
  return {{"mean_fdp", s.mean_fdp}, {"sd_fdp", s.sd_fdp}, {"mean_ntd", s.mean_ntd},
          {"sd_ntd", s.sd_ntd}};
}

json structure_to_json(const DependenceStructure& structure) {
  const auto& spec = structure.spec;
  return {{"d", spec.dim()},
          {"null_states", spec.null_states().one_based()},
          {"pi", spec.pi().to_std()},
          {"P", matrix_to_json(spec.transition().entries())},
          {"moduli", structure.spectrum.moduli},
          {"slem", structure.spectrum.slem},
          {"tlem", structure.spectrum.tlem},
          {"attempts", structure.attempts}};
}

}  // namespace

std::string summary_json(const SimulationConfig& cfg, const ExperimentResult& result) {
  // Thread count and output paths are deliberately absent: they must not
  // change the bytes of this file.
  json config = {{"d", cfg.d},
                 {"null_states", cfg.null_states},
                 {"psig", cfg.psig},
                 {"m", cfg.m},
                 {"w", result.w},
                 {"epsilon", cfg.epsilons},
                 {"alpha", cfg.alphas},
                 {"lambda", cfg.lambda},
                 {"mu", cfg.mu},
                 {"n_reps", cfg.n_reps},
                 {"seed", cfg.seed},
                 {"sinkhorn_tol", cfg.sinkhorn_tol},
                 {"redraw_signal", cfg.redraw_signal},
                 {"fixed_structure", cfg.transition.has_value()}};
  json cells = json::array();
  for (const auto& c : result.summary) {
    cells.push_back({{"epsilon", c.epsilon},
                     {"alpha", c.alpha},
                     {"alpha_tilde", c.alpha_tilde},
                     {"n", c.n},
                     {"bbh", procedure_json(c.bbh)},
                     {"bh", procedure_json(c.bh)}});
  }
  json doc = {{"config", config},
              {"structure", structure_to_json(result.structure)},
              {"psig_hat", result.psig_hat},
              {"psi_tilde", result.psi_tilde},
              {"m1", result.m1},
              {"cells", cells}};
  return doc.dump(2) + "\n";
}

std::string density_csv(const SummaryTable& summary, std::span<const ReplicationRecord> records,
                        std::size_t points) {
  std::string out = "epsilon,alpha,procedure,metric,x,density\n";
  for (const auto& cell : summary) {
    for (const char* procedure : {"bbh", "bh"}) {
      for (const char* metric : {"fdp", "ntd"}) {
        const bool bbh = procedure[1] == 'b';
        const bool fdp = metric[0] == 'f';
        std::vector<double> samples;
        for (const auto& r : records) {
          if (r.epsilon != cell.epsilon || r.alpha != cell.alpha) continue;
          samples.push_back(fdp ? (bbh ? r.fdp_bbh : r.fdp_bh)
                                : static_cast<double>(bbh ? r.ntd_bbh : r.ntd_bh));
        }
        try {
          const double h = silverman_bandwidth(samples);
          const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
          const auto grid = linspace(*lo - 3.0 * h, *hi + 3.0 * h, points);
          const auto dens = kde(samples, grid, h);
          for (std::size_t g = 0; g < grid.size(); ++g) {
            out += fmt::format("{},{},{},{},{},{}\n", cell.epsilon, cell.alpha, procedure, metric,
                               grid[g], dens[g]);
          }
        } catch (const DegenerateDensityError& e) {
          out += fmt::format("{},{},{},{},{},inf\n", cell.epsilon, cell.alpha, procedure, metric,
                             e.point_mass());
        }
      }
    }
  }
  return out;
}

std::string structure_json(const DependenceStructure& structure, double psig,
                           std::optional<std::uint64_t> seed) {
  json doc = structure_to_json(structure);
  doc["psig"] = psig;
  if (seed) doc["seed"] = *seed;
  return doc.dump(2) + "\n";
}

DependenceStructure load_structure(const std::string& json_text) {
  try {
    const json doc = json::parse(json_text);
    const Matrix raw = matrix_from_json(doc.at("P"));
    auto p = TransitionMatrix::from_rounded(raw);
    const auto labels = doc.at("null_states").get<std::vector<std::size_t>>();
    auto null_states = NullStates::from_one_based(p.dim(), labels);
    ProbVector pi = [&] {
      if (!doc.contains("pi")) return stationary_distribution(p);
      const auto v = doc["pi"].get<std::vector<double>>();
      return ProbVector::normalized(
          Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }();
    auto spectrum = eigenmoduli(p);
    const int attempts = doc.value("attempts", 0);
    return {ParentChainSpec(std::move(null_states), std::move(pi), std::move(p)),
            std::move(spectrum), attempts};
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("malformed structure file: {}", e.what()));
  }
}

std::string moments_json(const WindowedMoments& moments, std::size_t m) {
  const int w = moments.w();
  json doc = {{"m", m}, {"w", w}, {"psig_hat", moments.psig_hat()}};
  std::vector<int> offsets;
  for (int a = -w; a <= w; ++a) offsets.push_back(a);
  doc["offsets"] = offsets;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> mu;
    std::vector<std::vector<double>> pair;
    for (int a = -w; a <= w; ++a) {
      mu.push_back(moments.mu(i, a));
      std::vector<double> row;
      for (int b = -w; b <= w; ++b) row.push_back(moments.pair(i, a, b));
      pair.push_back(std::move(row));
    }
    doc["mu_cond"][std::to_string(i)] = mu;
    doc["j_cond"][std::to_string(i)] = pair;
  }
  return doc.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path));
  out << text;
  if (!out) throw Error(fmt::format("failed writing '{}'", path));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError(fmt::format("cannot open '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace depfdr
