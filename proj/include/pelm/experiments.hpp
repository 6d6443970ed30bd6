#pragma once

// Study drivers: the (M, n_train) double-descent grid, saturation-vs-M slope
// estimation, the train-fraction study, network capacity arithmetic, and the
// inter-plane intensity-correlation diagnostic.
//
// Every sweep is deterministic given its seed list: training-row subsets are
// drawn per (seed, n_train) and channel subsets per (seed, M), so cells that
// share one of the two axes also share that part of the randomness. Records
// are emitted in canonical grid order regardless of execution order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pelm/detail/io.hpp"
#include "pelm/error.hpp"
#include "pelm/learning.hpp"
#include "pelm/optics.hpp"
#include "pelm/rng.hpp"

namespace pelm {

// ---------------------------------------------------------------------------
// Double descent

struct sweep_grid {
  std::vector<std::int64_t> m_values;
  std::vector<std::int64_t> n_train_values;
  std::vector<std::uint64_t> seeds;  // one repeat per seed
};

struct sweep_record {
  std::int64_t m = 0;
  std::int64_t n_train = 0;
  int repeat = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_ms = 0.0;  // informational; excluded from persisted artifacts
};

struct sweep_result {
  std::vector<sweep_record> records;
  sweep_grid grid;
  std::uint64_t fingerprint = 0;

  /// Mean test accuracy of one grid cell over all repeats.
  double mean_test_accuracy(std::int64_t m, std::int64_t n_train) const {
    double acc = 0.0;
    int count = 0;
    for (const auto& rec : records) {
      if (rec.m == m && rec.n_train == n_train) {
        acc += rec.test_accuracy;
        ++count;
      }
    }
    if (count == 0) fail_internal("no records for the requested sweep cell");
    return acc / count;
  }
};

namespace detail {

inline std::vector<int> labels_at(std::span<const int> labels,
                                  std::span<const std::int64_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::int64_t r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

/// First n rows of the pool under a seeded shuffle.
inline std::vector<std::int64_t> subsample_rows(
    const std::vector<std::int64_t>& pool, std::int64_t n, std::uint64_t seed) {
  if (n > static_cast<std::int64_t>(pool.size()))
    fail_config("requested training subset exceeds the training pool");
  std::vector<std::int64_t> shuffled = pool;
  rng gen(seed);
  gen.shuffle(shuffled);
  shuffled.resize(static_cast<std::size_t>(n));
  return shuffled;
}

}  // namespace detail

/// Evaluate one (rows, channels) cell of a sweep.
inline sweep_record run_sweep_cell(const feature_matrix& fm,
                                   std::span<const int> labels,
                                   const std::vector<std::int64_t>& train_rows,
                                   const std::vector<std::int64_t>& test_rows,
                                   const std::vector<std::int64_t>& channels,
                                   double lambda) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd h_train = gather(fm, train_rows, channels);
  const Eigen::MatrixXd h_test = gather(fm, test_rows, channels);
  const std::vector<int> y_train = detail::labels_at(labels, train_rows);
  const std::vector<int> y_test = detail::labels_at(labels, test_rows);
  const eval_report rep =
      evaluate_split(h_train, y_train, h_test, y_test, lambda);
  sweep_record rec;
  rec.m = static_cast<std::int64_t>(channels.size());
  rec.n_train = static_cast<std::int64_t>(train_rows.size());
  rec.train_accuracy = rep.train_accuracy;
  rec.test_accuracy = rep.test_accuracy;
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

/// Full (M, n_train) grid against a fixed held-out test set.
inline sweep_result run_double_descent(const feature_matrix& fm,
                                       std::span<const int> labels,
                                       const sweep_grid& grid,
                                       const split_indices& base_split,
                                       double lambda) {
  if (grid.m_values.empty() || grid.n_train_values.empty() || grid.seeds.empty())
    fail_config("sweep grid must list m_values, n_train_values and seeds");
  for (std::int64_t m : grid.m_values)
    if (m < 1 || m > fm.cols) fail_config("sweep m value out of range");
  for (std::int64_t n : grid.n_train_values)
    if (n < 1 || n > static_cast<std::int64_t>(base_split.train.size()))
      fail_config("sweep n_train value exceeds the training pool");
  if (static_cast<std::size_t>(fm.rows) != labels.size())
    fail_validation("label count does not match the feature matrix");

  sweep_result result;
  result.grid = grid;
  for (std::int64_t n : grid.n_train_values) {
    for (std::int64_t m : grid.m_values) {
      for (std::size_t r = 0; r < grid.seeds.size(); ++r) {
        const std::uint64_t seed = grid.seeds[r];
        const auto rows = detail::subsample_rows(
            base_split.train, n,
            derive_seed(seed, 0x726f7773u ^ static_cast<std::uint64_t>(n)));
        const auto channels = select_channel_indices(
            fm.cols, m,
            derive_seed(seed, 0x636f6c73u ^ static_cast<std::uint64_t>(m)));
        sweep_record rec = run_sweep_cell(fm, labels, rows, base_split.test,
                                          channels, lambda);
        rec.repeat = static_cast<int>(r);
        result.records.push_back(rec);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Interpolation-dip location

struct dip_report {
  std::int64_t n_train = 0;
  bool found = false;
  std::int64_t m_star = 0;  // argmin of mean test accuracy when found
};

/// Per n_train, the M minimizing mean test accuracy. Reported absent when
/// the minimum sits on the grid boundary (monotone profiles end up there).
inline std::vector<dip_report> locate_interpolation_dip(const sweep_result& result) {
  if (result.grid.m_values.size() < 5)
    fail_config("dip location needs at least 5 m values per n_train");
  std::vector<std::int64_t> ms = result.grid.m_values;
  std::sort(ms.begin(), ms.end());
  std::vector<dip_report> reports;
  for (std::int64_t n : result.grid.n_train_values) {
    std::vector<double> acc;
    acc.reserve(ms.size());
    for (std::int64_t m : ms) acc.push_back(result.mean_test_accuracy(m, n));
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < acc.size(); ++i)
      if (acc[i] < acc[argmin]) argmin = i;
    dip_report rep;
    rep.n_train = n;
    if (argmin > 0 && argmin + 1 < acc.size() &&
        acc[argmin] < acc[argmin - 1] && acc[argmin] < acc[argmin + 1]) {
      rep.found = true;
      rep.m_star = ms[argmin];
    }
    reports.push_back(rep);
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Saturation slope

struct saturation_point {
  double m = 0.0;
  double accuracy = 0.0;
};

struct saturation_fit {
  double slope = 0.0;       // least-squares accuracy gain per channel
  double plateau = 0.0;     // mean accuracy over the top decile of M
  double onset_m = 0.0;     // first M past the pre-plateau segment
  int pre_plateau_points = 0;
};

/// Fit the pre-plateau growth of an accuracy-vs-M curve. The plateau onset
/// is the first point whose accuracy gain per grid step drops below
/// `gain_epsilon`; the slope is the least-squares fit over the points before
/// it. Points must be sorted by ascending M.
inline saturation_fit fit_saturation_curve(std::span<const saturation_point> pts,
                                           double gain_epsilon = 0.001) {
  if (pts.size() < 2) fail_validation("saturation fit needs at least 2 points");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].m > pts[i - 1].m))
      fail_validation("saturation points must be sorted by M");

  std::size_t onset = pts.size();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].accuracy - pts[i - 1].accuracy < gain_epsilon) {
      onset = i;
      break;
    }
  }
  const std::size_t n_fit = onset == pts.size() ? pts.size() : onset;
  if (n_fit < 2) fail_validation("saturation fit: too few pre-plateau points");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n_fit; ++i) {
    sx += pts[i].m;
    sy += pts[i].accuracy;
    sxx += pts[i].m * pts[i].m;
    sxy += pts[i].m * pts[i].accuracy;
  }
  const double nd = static_cast<double>(n_fit);
  const double denom = nd * sxx - sx * sx;
  if (denom == 0.0) fail_validation("saturation fit: degenerate abscissa");

  saturation_fit fit;
  fit.slope = (nd * sxy - sx * sy) / denom;
  fit.pre_plateau_points = static_cast<int>(n_fit);
  fit.onset_m = onset < pts.size() ? pts[onset].m : pts.back().m;
  const std::size_t top = std::max<std::size_t>(1, pts.size() / 10);
  double plateau = 0.0;
  for (std::size_t i = pts.size() - top; i < pts.size(); ++i)
    plateau += pts[i].accuracy;
  fit.plateau = plateau / static_cast<double>(top);
  return fit;
}

struct saturation_series {
  std::string label;  // names the input-size variant
  std::vector<saturation_point> points;
  saturation_fit fit;
};

struct saturation_variant {
  std::string label;
  const feature_matrix* features = nullptr;
};

/// Accuracy-vs-M curves (mean over seeds) and their pre-plateau slopes for
/// feature matrices produced from different input sizes.
inline std::vector<saturation_series> run_saturation_study(
    std::span<const saturation_variant> variants, std::span<const int> labels,
    std::span<const std::int64_t> m_values, const split_indices& base_split,
    double lambda, std::span<const std::uint64_t> seeds,
    double gain_epsilon = 0.001) {
  if (variants.size() < 2)
    fail_config("saturation study needs at least two input sizes");
  if (m_values.size() < 2)
    fail_config("saturation study needs at least two M values");
  if (seeds.empty()) fail_config("saturation study needs explicit seeds");
  std::vector<std::int64_t> ms(m_values.begin(), m_values.end());
  std::sort(ms.begin(), ms.end());

  std::vector<int> y_train = detail::labels_at(labels, base_split.train);
  std::vector<int> y_test = detail::labels_at(labels, base_split.test);

  std::vector<saturation_series> out;
  for (const auto& variant : variants) {
    const feature_matrix& fm = *variant.features;
    saturation_series series;
    series.label = variant.label;
    for (std::int64_t m : ms) {
      if (m < 1 || m > fm.cols)
        fail_config("saturation m value out of range for " + variant.label);
      double acc = 0.0;
      for (std::uint64_t seed : seeds) {
        const auto channels = select_channel_indices(
            fm.cols, m, derive_seed(seed, 0x736174u ^ static_cast<std::uint64_t>(m)));
        const Eigen::MatrixXd h_train = gather(fm, base_split.train, channels);
        const Eigen::MatrixXd h_test = gather(fm, base_split.test, channels);
        acc += evaluate_split(h_train, y_train, h_test, y_test, lambda)
                   .test_accuracy;
      }
      series.points.push_back(
          {static_cast<double>(m), acc / static_cast<double>(seeds.size())});
    }
    series.fit = fit_saturation_curve(series.points, gain_epsilon);
    out.push_back(std::move(series));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train-fraction study

struct split_study_record {
  double fraction = 0.0;
  std::int64_t m = 0;
  int repeat = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct split_study_result {
  std::vector<split_study_record> records;
  /// Per M: the smallest fraction whose mean accuracy is within `tolerance`
  /// of the best fraction.
  std::vector<std::pair<std::int64_t, double>> smallest_sufficient_fraction;
  double tolerance = 0.02;
  std::uint64_t fingerprint = 0;

  double mean_test_accuracy(double fraction, std::int64_t m) const {
    double acc = 0.0;
    int count = 0;
    for (const auto& rec : records) {
      if (rec.m == m && rec.fraction == fraction) {
        acc += rec.test_accuracy;
        ++count;
      }
    }
    if (count == 0) fail_internal("no records for the requested fraction");
    return acc / count;
  }
};

/// Accuracy as a function of the training fraction of the full dataset,
/// holding the test set fixed. Fractions are taken of the total sample
/// count, so they cannot exceed the base training fraction.
inline split_study_result run_split_study(
    const feature_matrix& fm, std::span<const int> labels,
    std::span<const double> fractions, std::span<const std::int64_t> m_values,
    const split_indices& base_split, double lambda,
    std::span<const std::uint64_t> seeds, double tolerance = 0.02) {
  if (fractions.empty() || m_values.empty() || seeds.empty())
    fail_config("split study needs fractions, m_values and seeds");
  const auto n_total = static_cast<std::int64_t>(base_split.train.size() +
                                                 base_split.test.size());
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) fail_config("fractions must lie in (0, 1)");
    if (std::llround(f * static_cast<double>(n_total)) >
        static_cast<std::int64_t>(base_split.train.size()))
      fail_config("fraction exceeds the available training pool");
  }
  std::vector<int> y_test = detail::labels_at(labels, base_split.test);

  split_study_result result;
  result.tolerance = tolerance;
  for (std::int64_t m : m_values) {
    for (double f : fractions) {
      const std::int64_t n =
          std::max<std::int64_t>(1, std::llround(f * static_cast<double>(n_total)));
      for (std::size_t r = 0; r < seeds.size(); ++r) {
        const std::uint64_t seed = seeds[r];
        const auto rows = detail::subsample_rows(
            base_split.train, n, derive_seed(seed, 0x66726163u));
        const auto channels = select_channel_indices(
            fm.cols, m, derive_seed(seed, 0x636f6c73u ^ static_cast<std::uint64_t>(m)));
        const sweep_record cell = run_sweep_cell(fm, labels, rows,
                                                 base_split.test, channels, lambda);
        split_study_record rec;
        rec.fraction = f;
        rec.m = m;
        rec.repeat = static_cast<int>(r);
        rec.train_accuracy = cell.train_accuracy;
        rec.test_accuracy = cell.test_accuracy;
        result.records.push_back(rec);
      }
    }
  }
  for (std::int64_t m : m_values) {
    double best = 0.0;
    for (double f : fractions)
      best = std::max(best, result.mean_test_accuracy(f, m));
    double smallest = fractions.back();
    std::vector<double> sorted(fractions.begin(), fractions.end());
    std::sort(sorted.begin(), sorted.end());
    for (double f : sorted) {
      if (result.mean_test_accuracy(f, m) >= best - tolerance) {
        smallest = f;
        break;
      }
    }
    result.smallest_sufficient_fraction.emplace_back(m, smallest);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Network capacity

struct capacity_report {
  std::int64_t input_modes = 0;
  std::int64_t output_channels = 0;
  std::uint64_t capacity = 0;  // exact product
};

inline capacity_report capacity(std::int64_t input_modes,
                                std::int64_t output_channels) {
  if (input_modes <= 0 || output_channels <= 0)
    fail_config("capacity needs positive node counts");
  const auto l = static_cast<std::uint64_t>(input_modes);
  const auto m = static_cast<std::uint64_t>(output_channels);
  if (l > std::numeric_limits<std::uint64_t>::max() / m)
    fail_validation("capacity overflows 64-bit arithmetic");
  return {input_modes, output_channels, l * m};
}

/// 15,725,280,000-style thousands formatting.
inline std::string format_with_separators(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  out.reserve(digits.size() + digits.size() / 3);
  int since_sep = static_cast<int>(digits.size() % 3);
  if (since_sep == 0) since_sep = 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && since_sep == 0) {
      out.push_back(',');
      since_sep = 3;
    }
    out.push_back(digits[i]);
    --since_sep;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plane-correlation diagnostic

struct correlation_matrix {
  std::size_t planes = 0;
  std::vector<double> mean_abs_pearson;  // row-major planes x planes
  std::vector<bool> defined;             // false when a pattern was constant

  double at(std::size_t i, std::size_t j) const {
    return mean_abs_pearson[i * planes + j];
  }
  bool is_defined(std::size_t i, std::size_t j) const {
    return defined[i * planes + j];
  }
  double max_off_diagonal() const {
    double v = 0.0;
    for (std::size_t i = 0; i < planes; ++i)
      for (std::size_t j = 0; j < planes; ++j)
        if (i != j && is_defined(i, j)) v = std::max(v, at(i, j));
    return v;
  }
};

/// Mean absolute Pearson correlation between the per-plane intensity
/// patterns of a batch of masks. Quantization and binning are left out:
/// this probes the optical decorrelation itself.
inline correlation_matrix plane_correlation_diagnostic(
    const std::vector<phase_mask>& masks, const embedding_matrix& w,
    const std::vector<plane_spec>& planes, beam_geometry geom = {},
    int slm_bits = 8) {
  if (planes.size() < 2) fail_config("correlation diagnostic needs >= 2 planes");
  if (masks.size() < 16) fail_config("correlation diagnostic needs >= 16 masks");
  const std::size_t np = planes.size();

  std::vector<plane_propagator> props;
  props.reserve(np);
  for (const auto& p : planes) props.emplace_back(w.side, p, geom);

  correlation_matrix out;
  out.planes = np;
  out.mean_abs_pearson.assign(np * np, 0.0);
  out.defined.assign(np * np, true);
  std::vector<int> valid_count(np * np, 0);

  std::vector<std::vector<double>> centered(np);
  std::vector<double> norms(np);
  std::vector<std::complex<double>> field_out;
  for (const auto& mask : masks) {
    const optical_field field = synthesize_field(mask, w, geom, slm_bits);
    for (std::size_t j = 0; j < np; ++j) {
      const int side = props[j].detector_side();
      const std::size_t n = static_cast<std::size_t>(side) * side;
      field_out.resize(n);
      props[j].run(field, field_out);
      auto& v = centered[j];
      v.resize(n);
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::norm(field_out[i]);
        mean += v[i];
      }
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double& x : v) {
        x -= mean;
        ss += x * x;
      }
      norms[j] = std::sqrt(ss);
    }
    for (std::size_t a = 0; a < np; ++a) {
      for (std::size_t b = 0; b < np; ++b) {
        if (centered[a].size() != centered[b].size()) {
          out.defined[a * np + b] = false;  // incomparable detector grids
          continue;
        }
        if (norms[a] == 0.0 || norms[b] == 0.0) continue;  // constant pattern
        double dot = 0.0;
        for (std::size_t i = 0; i < centered[a].size(); ++i)
          dot += centered[a][i] * centered[b][i];
        out.mean_abs_pearson[a * np + b] += std::abs(dot / (norms[a] * norms[b]));
        ++valid_count[a * np + b];
      }
    }
  }
  for (std::size_t i = 0; i < np * np; ++i) {
    if (valid_count[i] == 0) {
      out.defined[i] = false;
      out.mean_abs_pearson[i] = 0.0;
    } else {
      out.mean_abs_pearson[i] /= valid_count[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence. Wall-clock timings deliberately stay out of these artifacts
// so identical configurations reproduce identical bytes.

inline void write_sweep_csv(const std::filesystem::path& path,
                            const sweep_result& result) {
  auto os = detail::open_out(path, /*binary=*/false);
  os << "m,n_train,repeat,train_accuracy,test_accuracy\n";
  for (const auto& r : result.records)
    os << r.m << ',' << r.n_train << ',' << r.repeat << ','
       << detail::format_double(r.train_accuracy) << ','
       << detail::format_double(r.test_accuracy) << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

inline void write_sweep_json(const std::filesystem::path& path,
                             const sweep_result& result) {
  nlohmann::json j;
  j["fingerprint"] = detail::hex64(result.fingerprint);
  j["grid"] = {{"m_values", result.grid.m_values},
               {"n_train_values", result.grid.n_train_values},
               {"seeds", result.grid.seeds}};
  auto records = nlohmann::json::array();
  for (const auto& r : result.records)
    records.push_back({{"m", r.m},
                       {"n_train", r.n_train},
                       {"repeat", r.repeat},
                       {"train_accuracy", r.train_accuracy},
                       {"test_accuracy", r.test_accuracy}});
  j["records"] = std::move(records);
  auto os = detail::open_out(path, /*binary=*/false);
  os << j.dump(2) << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

inline void write_split_study_csv(const std::filesystem::path& path,
                                  const split_study_result& result) {
  auto os = detail::open_out(path, /*binary=*/false);
  os << "fraction,m,repeat,train_accuracy,test_accuracy\n";
  for (const auto& r : result.records)
    os << detail::format_double(r.fraction) << ',' << r.m << ',' << r.repeat
       << ',' << detail::format_double(r.train_accuracy) << ','
       << detail::format_double(r.test_accuracy) << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

/// Long-format (study, series, x, y) rows for plotting tools.
struct long_row {
  std::string study;
  std::string series;
  double x = 0.0;
  double y = 0.0;
};

inline void write_long_csv(const std::filesystem::path& path,
                           std::span<const long_row> rows) {
  auto os = detail::open_out(path, /*binary=*/false);
  os << "study,series,x,y\n";
  for (const auto& r : rows)
    os << r.study << ',' << r.series << ',' << detail::format_double(r.x)
       << ',' << detail::format_double(r.y) << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

inline void write_correlation_csv(const std::filesystem::path& path,
                                  const correlation_matrix& corr) {
  auto os = detail::open_out(path, /*binary=*/false);
  os << "plane_i,plane_j,mean_abs_pearson,defined\n";
  for (std::size_t i = 0; i < corr.planes; ++i)
    for (std::size_t j = 0; j < corr.planes; ++j)
      os << i << ',' << j << ',' << detail::format_double(corr.at(i, j)) << ','
         << (corr.is_defined(i, j) ? 1 : 0) << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

}  // namespace pelm
