#pragma once

// Linear readout trained in closed form by ridge regression, label
// prediction by thresholding the regressed score at 0.5, and the digital
// random-projection baseline.
//
// The ridge system is solved in whichever form is smaller: the M x M normal
// equations (H^T H + lambda I) beta = H^T y when M <= N, or the equivalent
// dual N x N system beta = H^T (H H^T + lambda I)^{-1} y when M > N. Both
// produce the same minimizer of |H beta - y|^2 + lambda |beta|^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <json.hpp>

#include "pelm/detail/io.hpp"
#include "pelm/error.hpp"
#include "pelm/optics.hpp"
#include "pelm/rng.hpp"

namespace pelm {

// ---------------------------------------------------------------------------
// Train/test split

struct split_spec {
  double train_fraction = 0.67;
  std::uint64_t seed = 0;
  std::int64_t n_train = 0;
  std::int64_t n_test = 0;
};

struct split_indices {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

/// Seeded shuffle of [0, n); the first round(fraction * n) indices train.
inline split_indices make_split(std::int64_t n, double train_fraction,
                                std::uint64_t seed) {
  if (n < 2) fail_config("split needs at least two samples");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail_config("train_fraction must lie in (0, 1)");
  std::int64_t n_train = std::llround(train_fraction * static_cast<double>(n));
  n_train = std::clamp<std::int64_t>(n_train, 1, n - 1);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng gen(seed);
  gen.shuffle(idx);
  split_indices out;
  out.train.assign(idx.begin(), idx.begin() + n_train);
  out.test.assign(idx.begin() + n_train, idx.end());
  return out;
}

// ---------------------------------------------------------------------------
// Model

struct readout_model {
  Eigen::VectorXd beta;
  double lambda = 0.0;
  std::vector<std::int64_t> channel_subset;  // columns of the feature space
  bool bias = false;                         // trailing intercept weight
};

inline const char* regime_name(std::int64_t m, std::int64_t n_train) {
  if (m < n_train) return "under";
  if (m == n_train) return "interpolation";
  return "over";
}

struct eval_report {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::int64_t m = 0;
  std::int64_t n_train = 0;
  std::string regime;
};

// ---------------------------------------------------------------------------
// Ridge regression

inline readout_model fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& h,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               double lambda, bool bias = false) {
  if (!(lambda > 0.0)) fail_config("ridge lambda must be positive");
  if (h.rows() != y.size()) fail_validation("fit_ridge: row/label count mismatch");
  if (h.rows() == 0 || h.cols() == 0) fail_validation("fit_ridge: empty design");
  if (!h.allFinite() || !y.allFinite())
    fail_validation("fit_ridge: non-finite inputs");

  Eigen::MatrixXd hb;
  const Eigen::MatrixXd* design = &h;
  if (bias) {
    hb.resize(h.rows(), h.cols() + 1);
    hb.leftCols(h.cols()) = h;
    hb.col(h.cols()).setOnes();
    design = &hb;
  }
  const auto n = design->rows();
  const auto m = design->cols();

  readout_model model;
  model.lambda = lambda;
  model.bias = bias;
  if (m <= n) {
    Eigen::MatrixXd a = design->transpose() * (*design);
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      fail_validation("ridge system numerically singular; try a larger lambda");
    model.beta = llt.solve(design->transpose() * y);
  } else {
    Eigen::MatrixXd g = (*design) * design->transpose();
    g.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
      fail_validation("ridge system numerically singular; try a larger lambda");
    model.beta = design->transpose() * llt.solve(y);
  }
  return model;
}

inline Eigen::VectorXd scores(const readout_model& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& h) {
  const Eigen::Index m = model.beta.size() - (model.bias ? 1 : 0);
  if (h.cols() != m) fail_validation("predict: column count mismatch");
  Eigen::VectorXd s = h * model.beta.head(m);
  if (model.bias) s.array() += model.beta(m);
  return s;
}

/// Class 1 iff the regressed score is >= 0.5 (ties go to 1).
inline std::vector<int> predict(const readout_model& model,
                                const Eigen::Ref<const Eigen::MatrixXd>& h) {
  const Eigen::VectorXd s = scores(model, h);
  std::vector<int> labels(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) labels[i] = s(i) >= 0.5 ? 1 : 0;
  return labels;
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) fail_validation("accuracy: empty inputs");
  if (y_true.size() != y_pred.size())
    fail_validation("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    if (y_true[i] == y_pred[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

// ---------------------------------------------------------------------------
// Channel selection and gathering

inline std::vector<std::int64_t> select_channel_indices(std::int64_t m_total,
                                                        std::int64_t m,
                                                        std::uint64_t seed) {
  if (m < 1 || m > m_total) fail_config("channel count out of range");
  rng gen(seed);
  return gen.sample_without_replacement(m_total, m);
}

/// Dense double-precision submatrix of selected rows x columns.
inline Eigen::MatrixXd gather(const feature_matrix& fm,
                              std::span<const std::int64_t> rows,
                              std::span<const std::int64_t> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const float* src =
        fm.data.data() + static_cast<std::size_t>(rows[r]) * fm.cols;
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<double>(src[cols[c]]);
  }
  return out;
}

/// Restriction of a feature matrix to m randomly selected channels
/// (uniform, without replacement; selection order is recorded in the
/// channel map order of the result).
inline feature_matrix select_channels(const feature_matrix& fm, std::int64_t m,
                                      std::uint64_t seed) {
  const std::vector<std::int64_t> cols =
      select_channel_indices(fm.cols, m, seed);
  feature_matrix out;
  out.rows = fm.rows;
  out.cols = m;
  out.planes = fm.planes;
  out.calibration_max = fm.calibration_max;
  out.block = fm.block;
  out.slm_bits = fm.slm_bits;
  out.noise_std = fm.noise_std;
  out.embedding_seed = fm.embedding_seed;
  out.noise_seed = fm.noise_seed;
  out.channel_map.reserve(static_cast<std::size_t>(m));
  for (std::int64_t c : cols)
    out.channel_map.push_back(fm.channel_map[static_cast<std::size_t>(c)]);
  out.data.resize(static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(m));
  for (std::int64_t r = 0; r < fm.rows; ++r) {
    const float* src = fm.data.data() + static_cast<std::size_t>(r) * fm.cols;
    float* dst = out.data.data() + static_cast<std::size_t>(r) * m;
    for (std::int64_t c = 0; c < m; ++c)
      dst[c] = src[cols[static_cast<std::size_t>(c)]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train + evaluate convenience used by the sweep drivers

inline eval_report evaluate_split(const Eigen::Ref<const Eigen::MatrixXd>& h_train,
                                  std::span<const int> y_train,
                                  const Eigen::Ref<const Eigen::MatrixXd>& h_test,
                                  std::span<const int> y_test, double lambda,
                                  bool bias = false) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(y_train.size()));
  for (std::size_t i = 0; i < y_train.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = static_cast<double>(y_train[i]);
  const readout_model model = fit_ridge(h_train, y, lambda, bias);
  eval_report rep;
  rep.m = h_train.cols();
  rep.n_train = h_train.rows();
  rep.regime = regime_name(rep.m, rep.n_train);
  rep.train_accuracy = accuracy(y_train, predict(model, h_train));
  rep.test_accuracy = accuracy(y_test, predict(model, h_test));
  return rep;
}

// ---------------------------------------------------------------------------
// Digital random-projection baseline

/// Quadratic random-feature map: z = (x R)^2 entrywise.
inline Eigen::MatrixXd rp_features(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   const Eigen::Ref<const Eigen::MatrixXd>& r) {
  if (x.cols() != r.rows()) fail_validation("rp_features: shape mismatch");
  return (x * r).array().square();
}

/// Uniform projection matrix on [-1, 1], seeded.
inline Eigen::MatrixXd rp_projection(Eigen::Index input_dim, Eigen::Index m,
                                     std::uint64_t seed) {
  Eigen::MatrixXd r(input_dim, m);
  rng gen(seed);
  for (Eigen::Index i = 0; i < input_dim; ++i)
    for (Eigen::Index j = 0; j < m; ++j) r(i, j) = gen.uniform(-1.0, 1.0);
  return r;
}

namespace detail {

/// Round values onto 2^bits uniform levels over [0, ref_max].
inline void quantize_matrix(Eigen::MatrixXd& m, int bits, double ref_max) {
  if (!(ref_max > 0.0)) fail_validation("quantization reference must be positive");
  const double levels = static_cast<double>((1ull << bits) - 1);
  m = (m.array() / ref_max).cwiseMax(0.0).cwiseMin(1.0);
  m = (m.array() * levels).round() / levels * ref_max;
}

}  // namespace detail

struct rp_options {
  double lambda = 1e-4;
  int bits = 0;  // 8-bit machine when 8: inputs and features discretized
  bool bias = false;
};

/// Ridge on quadratic random projections of the raw document vectors,
/// trained and evaluated exactly like the photonic path. With bits > 0 the
/// input entries and the projected features are discretized to 2^bits
/// levels (scaled by their training-split maxima).
inline eval_report rp_baseline(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               std::span<const int> labels, std::int64_t m,
                               std::uint64_t seed, const split_indices& split,
                               const rp_options& opts = {}) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    fail_validation("rp_baseline: row/label mismatch");
  Eigen::MatrixXd input = x;
  if (opts.bits > 0) {
    double in_max = 0.0;
    for (std::int64_t r : split.train)
      in_max = std::max(in_max, input.row(r).maxCoeff());
    detail::quantize_matrix(input, opts.bits, in_max);
  }
  const Eigen::MatrixXd proj = rp_projection(input.cols(), m, seed);
  Eigen::MatrixXd z = rp_features(input, proj);
  if (opts.bits > 0) {
    double z_max = 0.0;
    for (std::int64_t r : split.train)
      z_max = std::max(z_max, z.row(r).maxCoeff());
    detail::quantize_matrix(z, opts.bits, z_max);
  }
  const auto take = [&](const std::vector<std::int64_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), z.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = z.row(rows[i]);
    return out;
  };
  std::vector<int> y_train, y_test;
  for (std::int64_t r : split.train) y_train.push_back(labels[static_cast<std::size_t>(r)]);
  for (std::int64_t r : split.test) y_test.push_back(labels[static_cast<std::size_t>(r)]);
  return evaluate_split(take(split.train), y_train, take(split.test), y_test,
                        opts.lambda, opts.bias);
}

// ---------------------------------------------------------------------------
// Model persistence: JSON header + raw beta block

inline void save_model(const std::filesystem::path& path,
                       const readout_model& model) {
  nlohmann::json header;
  header["lambda"] = model.lambda;
  header["bias"] = model.bias;
  header["beta_length"] = model.beta.size();
  header["channel_subset"] = model.channel_subset;
  const std::string text = header.dump();
  auto os = detail::open_out(path);
  detail::write_pod(os, static_cast<std::uint64_t>(text.size()));
  detail::write_bytes(os, text.data(), text.size());
  detail::write_bytes(os, model.beta.data(),
                      static_cast<std::size_t>(model.beta.size()) * sizeof(double));
  os.close();
  if (!os) fail_io("failed writing " + path.string());
}

inline readout_model load_model(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  const auto header_len = detail::read_pod<std::uint64_t>(is, "model header length");
  if (header_len > (1ull << 30))
    fail_validation("model header length implausible: " + path.string());
  std::string text(header_len, '\0');
  detail::read_bytes(is, text.data(), text.size(), "model header");
  nlohmann::json header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded())
    fail_validation("model header is not valid JSON: " + path.string());
  readout_model model;
  model.lambda = header.at("lambda").get<double>();
  model.bias = header.at("bias").get<bool>();
  model.channel_subset =
      header.at("channel_subset").get<std::vector<std::int64_t>>();
  const auto beta_len = header.at("beta_length").get<std::int64_t>();
  model.beta.resize(beta_len);
  detail::read_bytes(is, model.beta.data(),
                     static_cast<std::size_t>(beta_len) * sizeof(double),
                     "model beta block");
  return model;
}

}  // namespace pelm
