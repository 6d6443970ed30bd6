#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace pelm {

/// Fixed English stop-word list (NLTK 3.x English list, reduced to its
/// apostrophe-free token forms so it matches the alphanumeric tokenizer).
/// Versioned here; changing it changes every downstream vocabulary.
inline const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves",
      "you", "your", "yours", "yourself", "yourselves",
      "he", "him", "his", "himself", "she", "her", "hers", "herself",
      "it", "its", "itself", "they", "them", "their", "theirs", "themselves",
      "what", "which", "who", "whom", "this", "that", "these", "those",
      "am", "is", "are", "was", "were", "be", "been", "being",
      "have", "has", "had", "having", "do", "does", "did", "doing",
      "a", "an", "the", "and", "but", "if", "or", "because", "as",
      "until", "while", "of", "at", "by", "for", "with", "about",
      "against", "between", "into", "through", "during", "before",
      "after", "above", "below", "to", "from", "up", "down", "in",
      "out", "on", "off", "over", "under", "again", "further", "then",
      "once", "here", "there", "when", "where", "why", "how",
      "all", "any", "both", "each", "few", "more", "most", "other",
      "some", "such", "no", "nor", "not", "only", "own", "same",
      "so", "than", "too", "very",
      "s", "t", "can", "will", "just", "don", "should", "now",
      "d", "ll", "m", "o", "re", "ve", "y",
      "ain", "aren", "couldn", "didn", "doesn", "hadn", "hasn",
      "haven", "isn", "ma", "mightn", "mustn", "needn", "shan",
      "shouldn", "wasn", "weren", "won", "wouldn",
  };
  return words;
}

inline bool is_stopword(std::string_view token) {
  return stopword_set().count(std::string(token)) > 0;
}

}  // namespace pelm
