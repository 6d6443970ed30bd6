#pragma once

// Synthetic data for tests and demos.
//
// make_synthetic_corpus builds a labeled review-like corpus from a Zipf
// word pool: a subset of "polarity" words is tilted toward one class, doc
// lengths are lognormal, a small fraction of short rare-word documents adds
// realistic heavy-tailed weight outliers, and light markup/punctuation noise
// exercises the preprocessing path. Words are synthesized so they are fixed
// points of the stemmer and never collide with stop words.
//
// make_planted_features draws speckle-like (unit-mean exponential) random
// features and labels them by a noisy linear rule, the standard setting in
// which small-ridge regression shows a test-error peak at M = n_train.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pelm/corpus.hpp"
#include "pelm/error.hpp"
#include "pelm/optics.hpp"
#include "pelm/rng.hpp"
#include "pelm/stemmer.hpp"
#include "pelm/stopwords.hpp"

namespace pelm {

// ---------------------------------------------------------------------------
// Word pool

namespace detail {

/// Candidate word #i: CV syllables plus a trailing consonant ("bakot").
inline std::string synthetic_word_candidate(std::uint64_t i) {
  static constexpr char consonants[] = "bdfgklmnprtvz";
  static constexpr char vowels[] = "aeiou";
  static constexpr char finals[] = "kmptzbgnv";
  const std::uint64_t syllables = 65;  // 13 consonants x 5 vowels
  std::string w;
  std::uint64_t s1 = i % syllables;
  std::uint64_t s2 = (i / syllables) % syllables;
  std::uint64_t f = (i / (syllables * syllables)) % 9;
  w.push_back(consonants[s1 % 13]);
  w.push_back(vowels[s1 / 13]);
  w.push_back(consonants[s2 % 13]);
  w.push_back(vowels[s2 / 13]);
  w.push_back(finals[f]);
  return w;
}

}  // namespace detail

/// Deterministic pool of distinct, stemmer-stable, non-stop-word tokens.
inline std::vector<std::string> synthetic_word_pool(std::size_t count) {
  std::vector<std::string> pool;
  pool.reserve(count);
  for (std::uint64_t c = 0; pool.size() < count; ++c) {
    if (c > 1'000'000) fail_internal("synthetic word pool exhausted");
    std::string w = detail::synthetic_word_candidate(c);
    if (is_stopword(w)) continue;
    if (stem(w) != w) continue;
    pool.push_back(std::move(w));
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Corpus generator

struct synthetic_corpus_spec {
  std::int64_t n_docs = 5000;
  int pool_words = 11000;
  double zipf_exponent = 1.25;
  int polarity_first = 60;   // polarity words sit on these Zipf ranks
  int polarity_last = 4060;
  int polarity_stride = 8;
  double polarity_strength = 1.2;  // class weight tilt factor
  double length_log_mean = std::log(100.0);
  double length_log_sigma = 0.8;
  int min_length = 15;
  int max_length = 500;
  double outlier_fraction = 0.005;  // short rare-word documents
  int outlier_length = 20;
  int outlier_tail = 4000;  // outlier words come from the last `tail` ranks
  double markup_rate = 0.02;
  std::uint64_t seed = 1;
};

inline std::vector<document> make_synthetic_corpus(const synthetic_corpus_spec& spec) {
  if (spec.n_docs < 2) fail_config("synthetic corpus needs at least 2 documents");
  if (spec.pool_words < spec.polarity_last)
    fail_config("synthetic pool smaller than the polarity rank range");
  const std::vector<std::string> pool =
      synthetic_word_pool(static_cast<std::size_t>(spec.pool_words));

  // Zipf weights with a class-dependent tilt on alternating polarity ranks.
  std::vector<double> base(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    base[i] = 1.0 / std::pow(static_cast<double>(i) + 10.0, spec.zipf_exponent);
  std::vector<double> w_pos = base, w_neg = base;
  const double tilt = 1.0 + spec.polarity_strength;
  bool toward_pos = true;
  for (int r = spec.polarity_first; r < spec.polarity_last; r += spec.polarity_stride) {
    if (toward_pos) {
      w_pos[static_cast<std::size_t>(r)] *= tilt;
      w_neg[static_cast<std::size_t>(r)] /= tilt;
    } else {
      w_pos[static_cast<std::size_t>(r)] /= tilt;
      w_neg[static_cast<std::size_t>(r)] *= tilt;
    }
    toward_pos = !toward_pos;
  }
  const auto to_cdf = [](std::vector<double>& w) {
    double total = 0.0;
    for (double v : w) total += v;
    double acc = 0.0;
    for (double& v : w) {
      acc += v / total;
      v = acc;
    }
    w.back() = 1.0;
  };
  to_cdf(w_pos);
  to_cdf(w_neg);

  rng gen(spec.seed);
  const auto draw_word = [&](const std::vector<double>& cdf) {
    const double u = gen.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(it - cdf.begin());
  };

  const std::int64_t n_outliers = static_cast<std::int64_t>(
      std::ceil(spec.outlier_fraction * static_cast<double>(spec.n_docs)));
  std::vector<document> docs;
  docs.reserve(static_cast<std::size_t>(spec.n_docs));
  for (std::int64_t i = 0; i < spec.n_docs; ++i) {
    document d;
    d.id = i;
    d.label = gen.below(2) == 1 ? 1 : 0;

    std::vector<std::size_t> words;
    if (i < n_outliers) {
      for (int t = 0; t < spec.outlier_length; ++t)
        words.push_back(static_cast<std::size_t>(spec.pool_words - spec.outlier_tail +
                                                 static_cast<std::int64_t>(gen.below(
                                                     static_cast<std::uint64_t>(spec.outlier_tail)))));
    } else {
      const double len_raw =
          std::exp(spec.length_log_mean + spec.length_log_sigma * gen.gaussian());
      const int len = std::clamp(static_cast<int>(len_raw), spec.min_length,
                                 spec.max_length);
      const auto& cdf = d.label == 1 ? w_pos : w_neg;
      for (int t = 0; t < len; ++t) words.push_back(draw_word(cdf));
    }

    // render as sentence-like text with light markup noise
    std::string text;
    bool capitalize = true;
    std::uint64_t until_break = 6 + gen.below(10);
    for (std::size_t t = 0; t < words.size(); ++t) {
      std::string tok = pool[words[t]];
      if (capitalize) {
        tok[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
        capitalize = false;
      }
      if (!text.empty()) text += ' ';
      text += tok;
      if (--until_break == 0 && t + 1 < words.size()) {
        text += '.';
        capitalize = true;
        until_break = 6 + gen.below(10);
      } else if (gen.uniform() < spec.markup_rate) {
        text += " <br />";
      }
    }
    text += '.';
    d.text = std::move(text);
    docs.push_back(std::move(d));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Planted-rule random features

struct planted_features_spec {
  std::int64_t rows = 0;
  std::int64_t m_total = 0;
  double noise_std = 0.25;  // label noise relative to the unit-variance score
  std::uint64_t seed = 0;
};

struct planted_dataset {
  feature_matrix features;
  std::vector<int> labels;
};

/// Nonnegative speckle-like features (unit-mean exponential) labeled by the
/// sign of a centered linear rule plus Gaussian noise.
inline planted_dataset make_planted_features(const planted_features_spec& spec) {
  if (spec.rows < 2 || spec.m_total < 1)
    fail_config("planted features need rows >= 2 and m_total >= 1");
  planted_dataset out;
  feature_matrix& fm = out.features;
  fm.rows = spec.rows;
  fm.cols = spec.m_total;
  fm.block = 1;
  fm.slm_bits = 0;
  fm.data.resize(static_cast<std::size_t>(spec.rows) *
                 static_cast<std::size_t>(spec.m_total));
  fm.channel_map.resize(static_cast<std::size_t>(spec.m_total));
  for (std::int64_t c = 0; c < spec.m_total; ++c)
    fm.channel_map[static_cast<std::size_t>(c)] = {-1, 0, static_cast<int>(c)};

  rng feature_gen(derive_seed(spec.seed, 0x66656174u));
  for (float& v : fm.data)
    v = static_cast<float>(feature_gen.exponential());

  rng rule_gen(derive_seed(spec.seed, 0x72756c65u));
  std::vector<double> weights(static_cast<std::size_t>(spec.m_total));
  for (double& w : weights) w = rule_gen.gaussian();

  rng noise_gen(derive_seed(spec.seed, 0x6e6f6973u));
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.m_total));
  out.labels.resize(static_cast<std::size_t>(spec.rows));
  for (std::int64_t r = 0; r < spec.rows; ++r) {
    const float* row = fm.data.data() + static_cast<std::size_t>(r) * spec.m_total;
    double score = 0.0;
    for (std::int64_t c = 0; c < spec.m_total; ++c)
      score += (static_cast<double>(row[c]) - 1.0) * weights[static_cast<std::size_t>(c)];
    score *= scale;
    score += spec.noise_std * noise_gen.gaussian();
    out.labels[static_cast<std::size_t>(r)] = score >= 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace pelm
