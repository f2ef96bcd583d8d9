#ifndef NPSS_EVAL_HPP_
#define NPSS_EVAL_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "npss/matrix.hpp"
#include "npss/matrix_io.hpp"
#include "npss/parallel.hpp"
#include "npss/pvalues.hpp"
#include "npss/rng.hpp"
#include "npss/scan.hpp"

namespace npss {

struct TestSet {
  ActivationMatrix matrix;
  LabelVector labels;
};

/// Draws round(proportion * size) fake rows and the rest real rows, each
/// without replacement, then shuffles them together.
inline TestSet sample_test_set(const ActivationMatrix& real_pool, const ActivationMatrix& fake_pool,
                               double proportion, std::size_t size, Rng& rng) {
  if (real_pool.cols() != fake_pool.cols()) throw ShapeError("real and fake pools differ in column count");
  if (!(proportion >= 0.0 && proportion <= 1.0)) throw std::invalid_argument("proportion must lie in [0, 1]");
  const auto n_fake = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(size)));
  const std::size_t n_real = size - n_fake;
  if (n_fake > fake_pool.rows()) {
    throw std::invalid_argument("fake pool has " + std::to_string(fake_pool.rows()) + " rows, " +
                                std::to_string(n_fake) + " requested");
  }
  if (n_real > real_pool.rows()) {
    throw std::invalid_argument("real pool has " + std::to_string(real_pool.rows()) + " rows, " +
                                std::to_string(n_real) + " requested");
  }

  // partial Fisher-Yates: first k entries become a uniform sample
  const auto draw = [&rng](std::size_t pool, std::size_t k) {
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
  };
  const auto fake_rows = draw(fake_pool.rows(), n_fake);
  const auto real_rows = draw(real_pool.rows(), n_real);

  std::vector<std::pair<std::size_t, bool>> picks;  // (pool row, is_fake)
  picks.reserve(size);
  for (auto r : fake_rows) picks.emplace_back(r, true);
  for (auto r : real_rows) picks.emplace_back(r, false);
  std::shuffle(picks.begin(), picks.end(), rng);

  TestSet out{ActivationMatrix(size, real_pool.cols()), LabelVector(size, 0)};
  for (std::size_t i = 0; i < size; ++i) {
    const auto& src = picks[i].second ? fake_pool : real_pool;
    const auto row = src.row(picks[i].first);
    std::copy(row.begin(), row.end(), out.matrix.row(i).begin());
    out.labels[i] = picks[i].second ? 1 : 0;
  }
  return out;
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision and recall of `returned` against the positive labels. An empty
/// returned set has precision 0.
inline PrecisionRecall precision_recall(const std::vector<std::size_t>& returned, const LabelVector& labels) {
  const std::size_t positives = count_positives(labels);
  if (positives == 0) throw std::domain_error("recall undefined: labels contain no positives");
  std::size_t hits = 0;
  for (auto i : returned) {
    if (i >= labels.size()) throw std::out_of_range("returned index " + std::to_string(i) + " out of range");
    hits += labels[i] != 0;
  }
  PrecisionRecall pr;
  pr.precision = returned.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(returned.size());
  pr.recall = static_cast<double>(hits) / static_cast<double>(positives);
  return pr;
}

/// Mann-Whitney AUC: P(pos > neg) + P(pos == neg) / 2, via mid-ranks.
inline double compute_auc(const std::vector<double>& positive, const std::vector<double>& negative) {
  if (positive.empty() || negative.empty()) throw std::invalid_argument("compute_auc: empty score list");
  std::vector<std::pair<double, bool>> all;
  all.reserve(positive.size() + negative.size());
  for (double s : positive) all.emplace_back(s, true);
  for (double s : negative) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t pos_in_tie = 0;
    while (j < all.size() && all[j].first == all[i].first) pos_in_tie += all[j++].second;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid_rank * static_cast<double>(pos_in_tie);
    i = j;
  }
  const double n_pos = static_cast<double>(positive.size());
  const double n_neg = static_cast<double>(negative.size());
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 with fewer than two values
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

struct ExperimentSpec {
  std::vector<double> proportions{0.1, 0.2, 0.3, 0.5};
  std::size_t test_set_size = 100;
  std::size_t trials_per_condition = 100;
  std::size_t clean_trials = 100;
  ScanConfig scan{};
  std::uint64_t seed = 0;
  bool individual = false;  // also score each image on its own
  std::size_t threads = 1;

  void validate() const {
    scan.validate();
    if (proportions.empty()) throw std::invalid_argument("experiment: no proportions");
    for (double p : proportions) {
      if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("experiment: proportion outside (0, 1]");
      if (p * static_cast<double>(test_set_size) < 1.0) {
        throw std::invalid_argument("experiment: proportion * test_set_size must be >= 1");
      }
    }
    if (trials_per_condition < 1 || clean_trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  }
};

/// One scanned test set.
struct TrialRecord {
  double score = 0.0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  double precision = 0.0;
  double recall = 0.0;
  double scan_seconds = 0.0;  // p-values plus scan
};

struct ProportionReport {
  double proportion = 0.0;
  double auc = 0.0;
  MeanStd precision;
  MeanStd recall;
  double mean_scan_seconds = 0.0;
  std::vector<TrialRecord> trials;
  double individual_auc = std::numeric_limits<double>::quiet_NaN();
};

struct EvalReport {
  std::vector<ProportionReport> proportions;
  std::vector<TrialRecord> clean_trials;

  std::vector<double> clean_scores() const {
    std::vector<double> s;
    for (const auto& t : clean_trials) s.push_back(t.score);
    return s;
  }
};

namespace detail {

inline TrialRecord scan_trial(const BackgroundModel& background, const TestSet& set, ScanConfig config) {
  const auto start = std::chrono::steady_clock::now();
  const auto pvals = background.pvalues(set.matrix);
  config.threads = 1;
  const auto result = scan(pvals, config);
  TrialRecord rec;
  rec.scan_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.score = result.score;
  rec.rows = result.row_subset;
  rec.cols = result.col_subset;
  if (count_positives(set.labels) > 0) {
    const auto pr = precision_recall(rec.rows, set.labels);
    rec.precision = pr.precision;
    rec.recall = pr.recall;
  }
  return rec;
}

}  // namespace detail

/// Detection power and subset quality per contamination proportion.
///
/// Negative scores come from clean_trials all-real test sets of the same
/// size, shared by every proportion. Trial t of proportion index i draws from
/// the stream (seed, i + 1, t); clean trial t from (seed, 0, t).
inline EvalReport run_experiment(const ExperimentSpec& spec, const ActivationMatrix& real_pool,
                                 const ActivationMatrix& fake_pool, const ActivationMatrix& background) {
  spec.validate();
  if (background.cols() != real_pool.cols() || background.cols() != fake_pool.cols()) {
    throw ShapeError("background, real pool and fake pool must have the same column count");
  }
  const BackgroundModel model(background);
  const auto trial_config = [&](std::uint64_t group, std::uint64_t trial) {
    ScanConfig c = spec.scan;
    c.mode = ScanMode::group;
    c.seed = derive_seed(spec.seed, {group, trial, 1});
    return c;
  };

  EvalReport report;
  report.clean_trials.resize(spec.clean_trials);
  parallel_for(spec.clean_trials, spec.threads, [&](std::size_t t) {
    auto rng = make_rng(spec.seed, {0, t});
    const auto set = sample_test_set(real_pool, fake_pool, 0.0, spec.test_set_size, rng);
    report.clean_trials[t] = detail::scan_trial(model, set, trial_config(0, t));
  });
  const auto negatives = report.clean_scores();

  for (std::size_t i = 0; i < spec.proportions.size(); ++i) {
    ProportionReport pr;
    pr.proportion = spec.proportions[i];
    pr.trials.resize(spec.trials_per_condition);
    std::vector<std::vector<double>> indiv_pos(spec.trials_per_condition), indiv_neg(spec.trials_per_condition);

    parallel_for(spec.trials_per_condition, spec.threads, [&](std::size_t t) {
      auto rng = make_rng(spec.seed, {i + 1, t});
      const auto set = sample_test_set(real_pool, fake_pool, pr.proportion, spec.test_set_size, rng);
      pr.trials[t] = detail::scan_trial(model, set, trial_config(i + 1, t));
      if (spec.individual) {
        ScanConfig c = spec.scan;
        c.mode = ScanMode::individual;
        c.threads = 1;
        const auto scores = individual_scan(model.pvalues(set.matrix), c);
        for (const auto& s : scores) (set.labels[s.row] ? indiv_pos[t] : indiv_neg[t]).push_back(s.score);
      }
    });

    std::vector<double> positives, precision, recall, seconds;
    for (const auto& t : pr.trials) {
      positives.push_back(t.score);
      precision.push_back(t.precision);
      recall.push_back(t.recall);
      seconds.push_back(t.scan_seconds);
    }
    pr.auc = compute_auc(positives, negatives);
    pr.precision = mean_std(precision);
    pr.recall = mean_std(recall);
    pr.mean_scan_seconds = mean_std(seconds).mean;
    if (spec.individual) {
      std::vector<double> pos, neg;
      for (std::size_t t = 0; t < spec.trials_per_condition; ++t) {
        pos.insert(pos.end(), indiv_pos[t].begin(), indiv_pos[t].end());
        neg.insert(neg.end(), indiv_neg[t].begin(), indiv_neg[t].end());
      }
      if (!pos.empty() && !neg.empty()) pr.individual_auc = compute_auc(pos, neg);
    }
    report.proportions.push_back(std::move(pr));
  }
  return report;
}

/// Report CSV: proportion,auc,precision_mean,precision_std,recall_mean,
/// recall_std,mean_scan_seconds (plus individual_auc when it was computed).
inline std::string eval_report_csv(const EvalReport& report, bool include_timing = true) {
  const bool individual =
      !report.proportions.empty() && !std::isnan(report.proportions.front().individual_auc);
  std::string out = "proportion,auc,precision_mean,precision_std,recall_mean,recall_std,mean_scan_seconds";
  if (individual) out += ",individual_auc";
  out += '\n';
  for (const auto& p : report.proportions) {
    out += format_double(p.proportion) + ',' + format_double(p.auc) + ',' + format_double(p.precision.mean) + ',' +
           format_double(p.precision.std) + ',' + format_double(p.recall.mean) + ',' +
           format_double(p.recall.std) + ',' + format_double(include_timing ? p.mean_scan_seconds : 0.0);
    if (individual) out += ',' + format_double(p.individual_auc);
    out += '\n';
  }
  return out;
}

struct TimingRow {
  std::size_t images = 0;
  MeanStd scan_seconds;   // p-values + scan, in memory
  MeanStd total_seconds;  // load inputs + p-values + scan + write report
  double score = 0.0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};

/// Times the pipeline on test sets of each size drawn from `fake_pool`.
///
/// The test set for a size is fixed by (seed, size index), so repetitions
/// produce identical scan outputs and differ only in timing.
inline std::vector<TimingRow> benchmark_runtime(const std::vector<std::size_t>& sizes,
                                                const ActivationMatrix& background,
                                                const ActivationMatrix& fake_pool, const ScanConfig& config,
                                                std::size_t repetitions = 3, std::uint64_t seed = 0) {
  if (repetitions < 1) throw std::invalid_argument("benchmark: repetitions must be >= 1");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw std::invalid_argument("benchmark: sizes must be ascending");
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  const auto seconds_since = [](clock::time_point t) {
    return std::chrono::duration<double>(clock::now() - t).count();
  };

  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("npss-bench-" + std::to_string(rd()));
  fs::create_directories(dir);
  const auto background_path = dir / "background.csv";
  save_matrix(background, background_path, MatrixFormat::csv);

  std::vector<TimingRow> table;
  try {
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      auto rng = make_rng(seed, {s});
      const auto set = sample_test_set(fake_pool, fake_pool, 1.0, sizes[s], rng);
      const auto test_path = dir / ("test" + std::to_string(s) + ".csv");
      save_matrix(set.matrix, test_path, MatrixFormat::csv);

      TimingRow row;
      row.images = sizes[s];
      std::vector<double> scan_times, total_times;
      for (std::size_t rep = 0; rep < repetitions; ++rep) {
        auto start = clock::now();
        const auto pvals = BackgroundModel(background).pvalues(set.matrix);
        const auto result = scan(pvals, config);
        scan_times.push_back(seconds_since(start));

        start = clock::now();
        const auto bg = load_matrix(background_path, MatrixFormat::csv);
        const auto test = load_matrix(test_path, MatrixFormat::csv);
        const auto result2 = scan(BackgroundModel(bg).pvalues(test), config);
        save_result(result2, dir / "report.json");
        total_times.push_back(seconds_since(start));

        row.score = result.score;
        row.rows = result.row_subset;
        row.cols = result.col_subset;
      }
      row.scan_seconds = mean_std(scan_times);
      row.total_seconds = mean_std(total_times);
      table.push_back(std::move(row));
    }
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return table;
}

/// images,scan_mean_seconds,scan_std_seconds,total_mean_seconds,total_std_seconds
inline std::string timing_csv(const std::vector<TimingRow>& table) {
  std::string out = "images,scan_mean_seconds,scan_std_seconds,total_mean_seconds,total_std_seconds\n";
  for (const auto& r : table) {
    out += std::to_string(r.images) + ',' + format_double(r.scan_seconds.mean) + ',' +
           format_double(r.scan_seconds.std) + ',' + format_double(r.total_seconds.mean) + ',' +
           format_double(r.total_seconds.std) + '\n';
  }
  return out;
}

}  // namespace npss

#endif  // NPSS_EVAL_HPP_
