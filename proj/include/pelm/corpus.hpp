#pragma once

// Labeled-corpus ingestion, preprocessing, vocabulary construction and
// sparse tf-idf weighting.
//
// tf-idf(k, j) = (n_kj / V_j) * log10(N / S_k), with n_kj the count of term
// k in document j, V_j the token count of document j after preprocessing,
// and S_k the number of documents containing term k.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pelm/detail/io.hpp"
#include "pelm/error.hpp"
#include "pelm/stemmer.hpp"
#include "pelm/stopwords.hpp"

namespace pelm {

struct document {
  std::int64_t id = 0;
  std::string text;
  int label = 0;  // binary class in {0, 1}
};

enum class corpus_format { csv, directory };

inline corpus_format parse_corpus_format(const std::string& s) {
  if (s == "csv") return corpus_format::csv;
  if (s == "dir" || s == "directory") return corpus_format::directory;
  fail_config("unknown corpus format: " + s + " (expected csv|dir)");
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace detail {

/// Replace markup tags (anything between '<' and '>') with spaces.
inline std::string strip_markup(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_tag = false;
  for (char c : text) {
    if (c == '<') {
      in_tag = true;
      out.push_back(' ');
    } else if (c == '>') {
      in_tag = false;
      out.push_back(' ');
    } else {
      out.push_back(in_tag ? ' ' : c);
    }
  }
  return out;
}

inline std::vector<std::string> tokenize_alnum_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace detail

/// Markup removal, lowercasing, alphanumeric tokenization, stop-word
/// filtering and suffix stemming. Stop words are filtered again after
/// stemming so the whole map is idempotent on its own output.
inline std::vector<std::string> preprocess(const std::string& text) {
  std::vector<std::string> tokens =
      detail::tokenize_alnum_lower(detail::strip_markup(text));
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (std::string& tok : tokens) {
    if (is_stopword(tok)) continue;
    std::string stemmed = stem(std::move(tok));
    if (stemmed.empty() || is_stopword(stemmed)) continue;
    out.push_back(std::move(stemmed));
  }
  return out;
}

inline std::vector<std::string> preprocess(const document& doc) {
  return preprocess(doc.text);
}

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// RFC 4180-style records: quoted fields may contain commas, newlines and
/// doubled quotes.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& data) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_record = [&] {
    end_field();
    // skip records that are entirely empty (trailing newline)
    if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline int parse_label(const std::string& raw, std::int64_t record_index) {
  const std::string s = trim(raw);
  if (s == "0") return 0;
  if (s == "1") return 1;
  fail_validation("unknown label value '" + s + "' in record " +
                  std::to_string(record_index));
}

inline std::vector<document> ingest_csv(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  auto records = parse_csv(data);
  std::size_t first = 0;
  if (!records.empty() && records[0].size() == 2) {
    std::string h0 = trim(records[0][0]), h1 = trim(records[0][1]);
    std::transform(h0.begin(), h0.end(), h0.begin(), ::tolower);
    std::transform(h1.begin(), h1.end(), h1.begin(), ::tolower);
    if (h0 == "label" && h1 == "text") first = 1;
  }
  std::vector<document> docs;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::int64_t idx = static_cast<std::int64_t>(r);
    if (rec.size() < 2)
      fail_validation("malformed record " + std::to_string(idx) +
                      ": expected label,text");
    document d;
    d.id = static_cast<std::int64_t>(docs.size());
    d.label = parse_label(rec[0], idx);
    // texts containing unquoted commas arrive as extra fields; rejoin them
    d.text = rec[1];
    for (std::size_t f = 2; f < rec.size(); ++f) d.text += "," + rec[f];
    if (trim(d.text).empty())
      fail_validation("malformed record " + std::to_string(idx) + ": empty text");
    docs.push_back(std::move(d));
  }
  if (docs.empty()) fail_validation("no records in " + path.string());
  return docs;
}

inline std::vector<document> ingest_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) fail_io("not a directory: " + root.string());
  std::vector<document> docs;
  // Fixed class order (neg=0 first, then pos=1) and sorted file names keep
  // the id assignment deterministic.
  const std::pair<const char*, int> classes[] = {{"neg", 0}, {"pos", 1}};
  for (const auto& [sub, label] : classes) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      document d;
      d.id = static_cast<std::int64_t>(docs.size());
      d.label = label;
      d.text = slurp(f);
      if (trim(d.text).empty())
        fail_validation("empty review file: " + f.string());
      docs.push_back(std::move(d));
    }
  }
  if (docs.empty())
    fail_validation("no records under " + root.string() +
                    " (expected neg/*.txt and pos/*.txt)");
  return docs;
}

}  // namespace detail

/// Load all labeled documents from `source`, deterministically ordered by id.
inline std::vector<document> ingest_corpus(const std::filesystem::path& source,
                                           corpus_format format) {
  if (!std::filesystem::exists(source)) fail_io("no such path: " + source.string());
  switch (format) {
    case corpus_format::csv:
      return detail::ingest_csv(source);
    case corpus_format::directory:
      return detail::ingest_directory(source);
  }
  fail_internal("unreachable corpus format");
}

// ---------------------------------------------------------------------------
// Vocabulary

struct vocabulary {
  std::vector<std::string> terms;           // (corpus frequency desc, term asc)
  std::vector<std::int64_t> doc_frequency;  // S_k, aligned with terms
  std::int64_t min_frequency = 1;
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t size() const noexcept { return terms.size(); }

  void rebuild_index() {
    index.clear();
    index.reserve(terms.size());
    for (std::uint32_t k = 0; k < terms.size(); ++k) index[terms[k]] = k;
  }
};

/// Build the vocabulary over preprocessed documents. Terms whose total
/// corpus count is below `min_frequency` are dropped; if `max_terms` > 0
/// only the most frequent `max_terms` survive.
inline vocabulary build_vocabulary(
    const std::vector<std::vector<std::string>>& docs,
    std::int64_t min_frequency, std::int64_t max_terms = 0) {
  if (min_frequency < 1) fail_config("min_frequency must be >= 1");
  if (docs.empty()) fail_validation("empty corpus");
  std::unordered_map<std::string, std::int64_t> corpus_freq;
  std::unordered_map<std::string, std::int64_t> doc_freq;
  std::unordered_set<std::string_view> in_doc;
  for (const auto& tokens : docs) {
    in_doc.clear();
    for (const auto& tok : tokens) {
      ++corpus_freq[tok];
      if (in_doc.insert(tok).second) ++doc_freq[tok];
    }
  }
  std::vector<std::pair<std::string, std::int64_t>> retained;
  retained.reserve(corpus_freq.size());
  for (auto& [term, count] : corpus_freq)
    if (count >= min_frequency) retained.emplace_back(term, count);
  if (retained.empty())
    fail_validation("no terms survive min_frequency=" +
                    std::to_string(min_frequency));
  std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_terms > 0 && static_cast<std::int64_t>(retained.size()) > max_terms)
    retained.resize(static_cast<std::size_t>(max_terms));

  vocabulary vocab;
  vocab.min_frequency = min_frequency;
  vocab.terms.reserve(retained.size());
  vocab.doc_frequency.reserve(retained.size());
  for (auto& [term, count] : retained) {
    vocab.doc_frequency.push_back(doc_freq.at(term));
    vocab.terms.push_back(std::move(term));
  }
  vocab.rebuild_index();
  return vocab;
}

// ---------------------------------------------------------------------------
// tf-idf

/// Sparse tf-idf matrix in CSR form. Entries are structural: one per
/// (document, vocabulary term) occurrence pair, so column k holds exactly
/// S_k entries. A stored value may still be exactly zero when S_k = N.
struct tfidf_matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> row_ptr;   // rows + 1
  std::vector<std::uint32_t> col_idx;  // sorted within each row
  std::vector<double> values;
  std::vector<std::int64_t> doc_lengths;  // V_j, tokens after preprocessing
  std::vector<std::int64_t> flagged_rows;  // rows with no retained terms

  std::size_t nnz() const noexcept { return values.size(); }

  std::span<const std::uint32_t> row_cols(std::int64_t r) const {
    return {col_idx.data() + row_ptr[r], col_idx.data() + row_ptr[r + 1]};
  }
  std::span<const double> row_values(std::int64_t r) const {
    return {values.data() + row_ptr[r], values.data() + row_ptr[r + 1]};
  }

  /// Dense copy of a row, zero-padded or truncated to `length`.
  void dense_row(std::int64_t r, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto cs = row_cols(r);
    const auto vs = row_values(r);
    for (std::size_t i = 0; i < cs.size(); ++i)
      if (cs[i] < out.size()) out[cs[i]] = vs[i];
  }
};

inline tfidf_matrix tfidf(const std::vector<std::vector<std::string>>& docs,
                          const vocabulary& vocab) {
  if (docs.empty()) fail_validation("empty corpus");
  const std::int64_t n_docs = static_cast<std::int64_t>(docs.size());
  tfidf_matrix m;
  m.rows = n_docs;
  m.cols = static_cast<std::int64_t>(vocab.size());
  m.row_ptr.reserve(docs.size() + 1);
  m.row_ptr.push_back(0);
  m.doc_lengths.reserve(docs.size());

  std::vector<double> idf(vocab.size());
  for (std::size_t k = 0; k < vocab.size(); ++k)
    idf[k] = std::log10(static_cast<double>(n_docs) /
                        static_cast<double>(vocab.doc_frequency[k]));

  std::map<std::uint32_t, std::int64_t> counts;  // ordered -> sorted columns
  for (std::int64_t r = 0; r < n_docs; ++r) {
    const auto& tokens = docs[static_cast<std::size_t>(r)];
    const auto v_j = static_cast<std::int64_t>(tokens.size());
    m.doc_lengths.push_back(v_j);
    counts.clear();
    for (const auto& tok : tokens) {
      auto it = vocab.index.find(tok);
      if (it != vocab.index.end()) ++counts[it->second];
    }
    for (const auto& [col, n_kj] : counts) {
      m.col_idx.push_back(col);
      m.values.push_back(static_cast<double>(n_kj) /
                         static_cast<double>(v_j) * idf[col]);
    }
    if (counts.empty()) m.flagged_rows.push_back(r);
    m.row_ptr.push_back(static_cast<std::int64_t>(m.col_idx.size()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Inspection outputs

/// Write documents in the CSV intake layout (label,text with quoting).
inline void write_corpus_csv(const std::filesystem::path& path,
                             std::span<const document> docs) {
  auto os = detail::open_out(path, /*binary=*/false);
  os << "label,text\n";
  for (const auto& d : docs) {
    os << d.label << ",\"";
    for (char c : d.text) {
      if (c == '"') os << "\"\"";
      else os << c;
    }
    os << "\"\n";
  }
  if (!os) fail_io("failed writing " + path.string());
}

inline void write_vocabulary(const std::filesystem::path& path,
                             const vocabulary& vocab) {
  auto os = detail::open_out(path, /*binary=*/false);
  for (std::size_t k = 0; k < vocab.size(); ++k)
    os << vocab.terms[k] << '\t' << vocab.doc_frequency[k] << '\n';
  if (!os) fail_io("failed writing " + path.string());
}

/// Triplet dump (row, col, value), one entry per line.
inline void write_tfidf_triplets(const std::filesystem::path& path,
                                 const tfidf_matrix& m) {
  auto os = detail::open_out(path, /*binary=*/false);
  for (std::int64_t r = 0; r < m.rows; ++r) {
    const auto cs = m.row_cols(r);
    const auto vs = m.row_values(r);
    for (std::size_t i = 0; i < cs.size(); ++i)
      os << r << ' ' << cs[i] << ' ' << detail::format_double(vs[i]) << '\n';
  }
  if (!os) fail_io("failed writing " + path.string());
}

}  // namespace pelm
