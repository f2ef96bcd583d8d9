#ifndef NPSS_TOOLS_CLI_HPP_
#define NPSS_TOOLS_CLI_HPP_

// Command-line front end. run() parses, dispatches and maps failures to exit
// codes: 0 success, 2 usage error, 1 data or computation error.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npss/npss.hpp"

namespace npss::cli {

/// Bad flag value detected after parsing; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure tied to an input or output; reported with exit code 1.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr const char* kFormatsHelp =
    "File formats:\n"
    "  matrix CSV      one sample per line, comma separated; optional header row\n"
    "                  (an 'id' first column holds row identifiers)\n"
    "  matrix binary   .bin/.npss: \"NPSS\", u32 version 1, u64 rows, u64 cols,\n"
    "                  little-endian row-major doubles\n"
    "  scan report     JSON, format_version 1\n"
    "  eval report     CSV: proportion,auc,precision_mean,precision_std,\n"
    "                  recall_mean,recall_std,mean_scan_seconds[,individual_auc]\n"
    "  bench table     CSV: images,scan_mean_seconds,scan_std_seconds,\n"
    "                  total_mean_seconds,total_std_seconds\n"
    "Exit codes: 0 success, 2 usage error, 1 data error.\n"
    "NPSS_THREADS is used when --threads is not given.";

struct ScoreFlags {
  std::string score = "bj";
  std::size_t restarts = 10;
  std::size_t max_iterations = 100;
  double alpha_max = 0.5;
  std::string alpha_grid = "data";
  std::uint64_t seed = 0;

  void add_to(CLI::App& app) {
    app.add_option("--score", score, "Score function: bj (Berk-Jones) or hc (Higher Criticism)")
        ->check(CLI::IsMember({"bj", "hc"}))
        ->capture_default_str();
    app.add_option("--restarts", restarts, "Random restarts of the iterative ascent")->capture_default_str();
    app.add_option("--max-iterations", max_iterations, "Iteration cap per restart")->capture_default_str();
    app.add_option("--alpha-max", alpha_max, "Largest significance threshold, in (0, 1]")->capture_default_str();
    app.add_option("--alpha-grid", alpha_grid,
                   "Thresholds: 'data' (every observed p-value) or n (evenly spaced grid of n values)")
        ->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
  }

  ScanConfig config(std::size_t threads) const {
    ScanConfig c;
    c.score_function = parse_score_function(score);
    c.restarts = restarts;
    c.max_iterations = max_iterations;
    c.seed = seed;
    c.threads = threads;
    if (restarts < 1) throw UsageError("--restarts must be >= 1");
    if (max_iterations < 1) throw UsageError("--max-iterations must be >= 1");
    if (!(alpha_max > 0.0 && alpha_max <= 1.0)) throw UsageError("--alpha-max must lie in (0, 1]");
    if (alpha_grid == "data") {
      c.alpha_policy = AlphaPolicy::data_driven(alpha_max);
    } else {
      std::size_t n = 0;
      const auto* end = alpha_grid.data() + alpha_grid.size();
      const auto [ptr, ec] = std::from_chars(alpha_grid.data(), end, n);
      if (ec != std::errc() || ptr != end || n < 2) {
        throw UsageError("--alpha-grid must be 'data' or an integer >= 2, got '" + alpha_grid + "'");
      }
      c.alpha_policy = AlphaPolicy::linear_grid(n, alpha_max);
    }
    return c;
  }
};

inline ActivationMatrix load(const std::string& flag, const std::string& path) {
  try {
    return load_matrix(path);
  } catch (const std::exception& e) {
    throw RunError(flag + ": " + e.what());
  }
}

template <typename Fn>
void write(const std::string& flag, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    throw RunError(flag + ": " + e.what());
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

inline std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using detail::fixed;
  CLI::App app{"Non-parametric scan statistics for anomalous subsets of activation matrices", "npss"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(detail::kFormatsHelp);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: NPSS_THREADS or all cores)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress the summary line");

  // pvalues
  auto* pv = app.add_subcommand("pvalues", "Empirical p-values of a test matrix against a background");
  std::string pv_background, pv_test, pv_out;
  pv->add_option("--background", pv_background, "Background (known clean) activations")->required();
  pv->add_option("--test", pv_test, "Test activations")->required();
  pv->add_option("--out", pv_out, "Output p-value matrix (CSV, or binary for .bin/.npss)")->required();
  bool pv_lower = false;
  pv->add_flag("--lower-tail", pv_lower, "Score low activations instead of high ones");

  // scan
  auto* sc = app.add_subcommand("scan", "Scan a test matrix for its most anomalous subset");
  std::string sc_background, sc_test, sc_out, sc_mode = "group", sc_indicator;
  detail::ScoreFlags sc_flags;
  bool sc_no_timing = false, sc_lower = false;
  sc->add_option("--background", sc_background, "Background (known clean) activations")->required();
  sc->add_option("--test", sc_test, "Test activations")->required();
  sc->add_option("--out", sc_out,
                 "Output: JSON report (group) or CSV of per-row scores (individual)");
  sc->add_option("--mode", sc_mode, "group (joint row x node subset) or individual (each row alone)")
      ->check(CLI::IsMember({"group", "individual"}))
      ->capture_default_str();
  sc_flags.add_to(*sc);
  sc->add_option("--emit-indicator", sc_indicator,
                 "Also write the node subset as a 0/1 vector, one line per node (group mode)");
  sc->add_flag("--no-timing", sc_no_timing, "Write wall_time_seconds as 0 so reports are reproducible");
  sc->add_flag("--lower-tail", sc_lower, "Score low activations instead of high ones");

  // eval
  auto* ev = app.add_subcommand("eval", "Detection power and precision/recall over contamination proportions");
  std::string ev_background, ev_real, ev_fake, ev_out;
  std::vector<double> ev_proportions{0.1, 0.2, 0.3, 0.5};
  std::size_t ev_size = 100, ev_trials = 100, ev_clean = 100;
  bool ev_individual = false, ev_no_timing = false;
  detail::ScoreFlags ev_flags;
  ev->add_option("--background", ev_background, "Background activations")->required();
  ev->add_option("--real-pool", ev_real, "Pool of clean test samples")->required();
  ev->add_option("--fake-pool", ev_fake, "Pool of anomalous test samples")->required();
  ev->add_option("--proportions", ev_proportions, "Fractions of anomalous rows per test set")
      ->delimiter(',')
      ->capture_default_str();
  ev->add_option("--size", ev_size, "Rows per test set")->capture_default_str();
  ev->add_option("--trials", ev_trials, "Contaminated test sets per proportion")->capture_default_str();
  ev->add_option("--clean-trials", ev_clean, "Clean test sets (shared negatives)")->capture_default_str();
  ev->add_option("--out", ev_out, "Output report CSV")->required();
  ev->add_flag("--individual", ev_individual, "Also report per-row (individual scan) AUC");
  ev->add_flag("--no-timing", ev_no_timing, "Write mean_scan_seconds as 0");
  ev_flags.add_to(*ev);

  // synth
  auto* sy = app.add_subcommand("synth", "Write a synthetic benchmark (Gaussian nodes, shifted anomalous nodes)");
  SynthSpec sy_spec;
  std::string sy_dir;
  sy->add_option("--nodes", sy_spec.nodes, "Columns")->capture_default_str();
  sy->add_option("--anomalous", sy_spec.anomalous_nodes, "Shifted columns in the fake pool")->capture_default_str();
  sy->add_option("--shift", sy_spec.shift, "Mean shift of the anomalous columns")->capture_default_str();
  sy->add_option("--z", sy_spec.z_background, "Background rows")->capture_default_str();
  sy->add_option("--real", sy_spec.real_pool, "Real pool rows")->capture_default_str();
  sy->add_option("--fake", sy_spec.fake_pool, "Fake pool rows")->capture_default_str();
  sy->add_option("--seed", sy_spec.seed, "Random seed")->capture_default_str();
  sy->add_option("--out-dir", sy_dir,
                 "Directory for background.csv, real_pool.csv, fake_pool.csv, anomalous_nodes.txt")
      ->required();

  // bench
  auto* be = app.add_subcommand("bench", "Scan and pipeline run time against test-set size");
  std::string be_background, be_fake, be_out;
  std::vector<std::size_t> be_sizes{1, 10, 100, 1000};
  std::size_t be_reps = 3;
  detail::ScoreFlags be_flags;
  be->add_option("--background", be_background, "Background activations")->required();
  be->add_option("--fake-pool", be_fake, "Pool the test sets are drawn from")->required();
  be->add_option("--sizes", be_sizes, "Ascending test-set sizes")->delimiter(',')->capture_default_str();
  be->add_option("--reps", be_reps, "Repetitions per size")->capture_default_str();
  be->add_option("--out", be_out, "Output timing CSV");
  be_flags.add_to(*be);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "npss: " << e.what() << "\n";
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const std::size_t workers = resolve_threads(threads);

    if (pv->parsed()) {
      auto background = detail::load("--background", pv_background);
      auto test = detail::load("--test", pv_test);
      if (pv_lower) {
        background = negate_for_lower_tail(background);
        test = negate_for_lower_tail(test);
      }
      if (background.cols() != test.cols()) {
        throw RunError("--test: " + std::to_string(test.cols()) + " columns, --background has " +
                       std::to_string(background.cols()));
      }
      const auto pvals = compute_pvalues(background, test);
      detail::write("--out", [&] { save_matrix(pvals.as_matrix(), pv_out); });
      if (!quiet) {
        out << "pvalues: " << pvals.rows() << " x " << pvals.cols() << ", Z=" << background.rows() << ", "
            << fixed(detail::seconds_since(start), 3) << " s\n";
      }
      return 0;
    }

    if (sc->parsed()) {
      auto config = sc_flags.config(workers);
      config.mode = parse_scan_mode(sc_mode);
      if (!sc_indicator.empty() && config.mode != ScanMode::group) {
        throw UsageError("--emit-indicator requires --mode group");
      }
      auto background = detail::load("--background", sc_background);
      auto test = detail::load("--test", sc_test);
      if (sc_lower) {
        background = negate_for_lower_tail(background);
        test = negate_for_lower_tail(test);
      }
      if (background.cols() != test.cols()) {
        throw RunError("--test: " + std::to_string(test.cols()) + " columns, --background has " +
                       std::to_string(background.cols()));
      }
      const auto pvals = compute_pvalues(background, test);
      if (config.mode == ScanMode::individual) {
        const auto scores = individual_scan(pvals, config);
        if (!sc_out.empty()) detail::write("--out", [&] { save_individual(scores, sc_out); });
        if (!quiet) {
          std::size_t top = 0;
          for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i].score > scores[top].score) top = i;
          }
          out << "individual: " << scores.size() << " rows, max score " << fixed(scores[top].score, 6) << " (row "
              << top << ", |O_S|=" << scores[top].col_subset.size() << "), "
              << fixed(detail::seconds_since(start), 3) << " s\n";
        }
        return 0;
      }
      auto result = scan(pvals, config);
      if (sc_no_timing) result.wall_time_seconds = 0.0;
      if (!sc_out.empty()) detail::write("--out", [&] { save_result(result, sc_out); });
      if (!sc_indicator.empty()) {
        detail::write("--emit-indicator", [&] { save_indicator(result.col_subset, pvals.cols(), sc_indicator); });
      }
      if (!quiet) {
        out << "score " << fixed(result.score, 6) << ", |X_S|=" << result.row_subset.size()
            << ", |O_S|=" << result.col_subset.size() << ", " << fixed(detail::seconds_since(start), 3)
            << " s\n";
      }
      return 0;
    }

    if (ev->parsed()) {
      ExperimentSpec spec;
      spec.scan = ev_flags.config(1);
      spec.proportions = ev_proportions;
      spec.test_set_size = ev_size;
      spec.trials_per_condition = ev_trials;
      spec.clean_trials = ev_clean;
      spec.seed = ev_flags.seed;
      spec.individual = ev_individual;
      spec.threads = workers;
      if (ev_size < 1) throw UsageError("--size must be >= 1");
      if (ev_trials < 1) throw UsageError("--trials must be >= 1");
      if (ev_clean < 1) throw UsageError("--clean-trials must be >= 1");
      for (double p : ev_proportions) {
        if (!(p > 0.0 && p <= 1.0)) throw UsageError("--proportions values must lie in (0, 1]");
        if (p * static_cast<double>(ev_size) < 1.0) {
          throw UsageError("--proportions: " + format_double(p) + " of --size " + std::to_string(ev_size) +
                           " is less than one row");
        }
      }
      const auto background = detail::load("--background", ev_background);
      const auto real = detail::load("--real-pool", ev_real);
      const auto fake = detail::load("--fake-pool", ev_fake);
      if (real.cols() != background.cols()) throw RunError("--real-pool: column count differs from --background");
      if (fake.cols() != background.cols()) throw RunError("--fake-pool: column count differs from --background");
      if (real.rows() < ev_size) throw RunError("--real-pool: fewer rows than --size");
      const auto report = run_experiment(spec, real, fake, background);
      detail::write("--out", [&] { write_atomic(ev_out, eval_report_csv(report, !ev_no_timing)); });
      if (!quiet) {
        out << "eval: " << report.proportions.size() << " proportions";
        for (const auto& p : report.proportions) out << ", auc@" << format_double(p.proportion) << "=" << fixed(p.auc, 3);
        out << ", " << fixed(detail::seconds_since(start), 3) << " s\n";
      }
      return 0;
    }

    if (sy->parsed()) {
      try {
        sy_spec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto data = generate(sy_spec);
      const std::filesystem::path dir(sy_dir);
      detail::write("--out-dir", [&] {
        std::filesystem::create_directories(dir);
        save_matrix(data.background, dir / "background.csv", MatrixFormat::csv);
        save_matrix(data.real_pool, dir / "real_pool.csv", MatrixFormat::csv);
        save_matrix(data.fake_pool, dir / "fake_pool.csv", MatrixFormat::csv);
        save_indices(data.anomalous_nodes, dir / "anomalous_nodes.txt");
      });
      if (!quiet) {
        out << "synth: " << sy_spec.nodes << " nodes (" << sy_spec.anomalous_nodes << " shifted by "
            << format_double(sy_spec.shift) << "), Z=" << sy_spec.z_background << ", real " << sy_spec.real_pool
            << ", fake " << sy_spec.fake_pool << " -> " << dir.string() << "\n";
      }
      return 0;
    }

    if (be->parsed()) {
      const auto config = be_flags.config(workers);
      if (be_reps < 1) throw UsageError("--reps must be >= 1");
      if (be_sizes.empty() || !std::is_sorted(be_sizes.begin(), be_sizes.end()) || be_sizes.front() < 1) {
        throw UsageError("--sizes must be ascending positive integers");
      }
      const auto background = detail::load("--background", be_background);
      const auto fake = detail::load("--fake-pool", be_fake);
      if (fake.cols() != background.cols()) throw RunError("--fake-pool: column count differs from --background");
      if (fake.rows() < be_sizes.back()) throw RunError("--fake-pool: fewer rows than the largest of --sizes");
      const auto table = benchmark_runtime(be_sizes, background, fake, config, be_reps, be_flags.seed);
      const auto csv = timing_csv(table);
      if (!be_out.empty()) {
        detail::write("--out", [&] { write_atomic(be_out, csv); });
      } else if (!quiet) {
        out << csv;
      }
      if (!quiet) {
        const auto& last = table.back();
        out << "bench: " << table.size() << " sizes, " << last.images << " rows in "
            << fixed(last.scan_seconds.mean, 4) << " s (scan), " << fixed(last.total_seconds.mean, 4)
            << " s (total)\n";
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "npss: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "npss: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace npss::cli

#endif  // NPSS_TOOLS_CLI_HPP_
