#pragma once

// Rule-based suffix stemmer (Porter's 1980 rule set) iterated to a fixed
// point, so stemming its own output is a no-op. Input must already be
// lowercase ASCII.

#include <array>
#include <string>
#include <string_view>

namespace pelm {

namespace detail::porter {

inline bool is_vowel_letter(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// y counts as a vowel when preceded by a consonant.
inline bool is_consonant(std::string_view w, std::size_t i) {
  const char c = w[i];
  if (is_vowel_letter(c)) return false;
  if (c == 'y') return i == 0 ? true : !is_consonant(w, i - 1);
  return true;
}

/// Porter measure: the number of VC sequences in [C](VC)^m[V].
inline int measure(std::string_view w) {
  int m = 0;
  std::size_t i = 0;
  const std::size_t n = w.size();
  while (i < n && is_consonant(w, i)) ++i;
  while (i < n) {
    while (i < n && !is_consonant(w, i)) ++i;
    if (i == n) break;
    ++m;
    while (i < n && is_consonant(w, i)) ++i;
  }
  return m;
}

inline bool contains_vowel(std::string_view w) {
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

inline bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends consonant-vowel-consonant where the final consonant is not
// w, x or y.
inline bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1))
    return false;
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

inline bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct rule {
  std::string_view suffix;
  std::string_view replacement;
  int min_measure;  // measure of the stem must exceed this
};

// Applies the first (longest-listed) matching rule whose stem measure is
// large enough. Returns true if a rule fired.
inline bool apply_rules(std::string& w, std::initializer_list<rule> rules) {
  for (const rule& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    std::string_view stem(w.data(), w.size() - r.suffix.size());
    if (measure(stem) > r.min_measure) {
      w.resize(stem.size());
      w.append(r.replacement);
    }
    return true;  // longest match decides, even if the condition fails
  }
  return false;
}

inline void step_1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (!ends_with(w, "ss") && ends_with(w, "s")) {
    w.pop_back();
  }
}

inline void step_1b(std::string& w) {
  if (ends_with(w, "eed")) {
    std::string_view stem(w.data(), w.size() - 3);
    if (measure(stem) > 0) w.pop_back();
    return;
  }
  bool removed = false;
  if (ends_with(w, "ed")) {
    std::string_view stem(w.data(), w.size() - 2);
    if (contains_vowel(stem)) {
      w.resize(stem.size());
      removed = true;
    }
  } else if (ends_with(w, "ing")) {
    std::string_view stem(w.data(), w.size() - 3);
    if (contains_vowel(stem)) {
      w.resize(stem.size());
      removed = true;
    }
  }
  if (!removed) return;
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w) && !ends_with(w, "l") &&
             !ends_with(w, "s") && !ends_with(w, "z")) {
    w.pop_back();
  } else if (measure(w) == 1 && ends_cvc(w)) {
    w.push_back('e');
  }
}

inline void step_1c(std::string& w) {
  if (ends_with(w, "y") && contains_vowel(std::string_view(w.data(), w.size() - 1)))
    w.back() = 'i';
}

inline void step_2(std::string& w) {
  apply_rules(w, {{"ational", "ate", 0}, {"ization", "ize", 0},
                  {"iveness", "ive", 0}, {"fulness", "ful", 0},
                  {"ousness", "ous", 0}, {"tional", "tion", 0},
                  {"biliti", "ble", 0},  {"alism", "al", 0},
                  {"ation", "ate", 0},   {"entli", "ent", 0},
                  {"ousli", "ous", 0},   {"aliti", "al", 0},
                  {"iviti", "ive", 0},   {"enci", "ence", 0},
                  {"anci", "ance", 0},   {"izer", "ize", 0},
                  {"abli", "able", 0},   {"alli", "al", 0},
                  {"ator", "ate", 0},    {"eli", "e", 0}});
}

inline void step_3(std::string& w) {
  apply_rules(w, {{"icate", "ic", 0}, {"ative", "", 0}, {"alize", "al", 0},
                  {"iciti", "ic", 0}, {"ical", "ic", 0}, {"ness", "", 0},
                  {"ful", "", 0}});
}

inline void step_4(std::string& w) {
  // "ion" only drops when the stem ends in s or t.
  static constexpr std::array<std::string_view, 18> plain = {
      "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent",
      "ism",   "ate",  "iti",  "ous",  "ive",  "ize",  "ou",  "er",
      "ic",    "al"};
  for (std::string_view suf : plain) {
    if (!ends_with(w, suf)) continue;
    std::string_view stem(w.data(), w.size() - suf.size());
    if (measure(stem) > 1) w.resize(stem.size());
    return;
  }
  if (ends_with(w, "ion")) {
    std::string_view stem(w.data(), w.size() - 3);
    if (measure(stem) > 1 && !stem.empty() &&
        (stem.back() == 's' || stem.back() == 't'))
      w.resize(stem.size());
  }
}

inline void step_5a(std::string& w) {
  if (!ends_with(w, "e")) return;
  std::string_view stem(w.data(), w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) w.pop_back();
}

inline void step_5b(std::string& w) {
  if (measure(w) > 1 && ends_double_consonant(w) && w.back() == 'l')
    w.pop_back();
}

inline std::string stem_once(std::string w) {
  if (w.size() <= 2) return w;
  step_1a(w);
  step_1b(w);
  step_1c(w);
  step_2(w);
  step_3(w);
  step_4(w);
  step_5a(w);
  step_5b(w);
  return w;
}

}  // namespace detail::porter

/// Suffix-stem a lowercase token, iterating until stable.
inline std::string stem(std::string token) {
  for (int round = 0; round < 8; ++round) {
    std::string next = detail::porter::stem_once(token);
    if (next == token) return next;
    token = std::move(next);
  }
  return token;
}

}  // namespace pelm
