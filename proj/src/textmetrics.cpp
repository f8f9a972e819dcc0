#include "dcap/textmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace dcap {

TokenSeq tokenize(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char ch : text) {
    const char c = static_cast<char>(std::tolower(ch));
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') {
      cleaned.push_back(c);
    } else {
      cleaned.push_back(' ');
    }
  }
  TokenSeq tokens;
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    const std::size_t start = cleaned.find_first_not_of(' ', pos);
    if (start == std::string::npos) break;
    const std::size_t end = cleaned.find(' ', start);
    tokens.push_back(cleaned.substr(start, end - start));
    pos = end == std::string::npos ? cleaned.size() : end;
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Porter stemmer (the classic 1980 algorithm, ASCII only).

namespace {

class PorterStemmer {
 public:
  std::string run(const std::string& word) {
    b_ = word;
    k_ = static_cast<int>(b_.size()) - 1;
    if (k_ <= 1) return b_;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, k_ + 1);
  }

 private:
  std::string b_;
  int k_ = 0;  // index of last letter of the current stem
  int j_ = 0;  // general offset used by the measure

  bool cons(int i) const {
    switch (b_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // number of consonant-vowel sequences in [0, j_]
  int m() const {
    int n = 0, i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_cons(int j) const {
    return j >= 1 && b_[j] == b_[j - 1] && cons(j);
  }

  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = b_[i];
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    if (len > k_ + 1) return false;
    if (b_.compare(k_ - len + 1, len, s) != 0) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(const char* s) {
    const int len = static_cast<int>(std::strlen(s));
    b_.replace(j_ + 1, b_.size() - j_ - 1, s);
    k_ = j_ + len;
  }

  void replace_if_m(const char* s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (b_[k_] == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (b_[k_ - 1] != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_cons(k_)) {
        const char ch = b_[k_];
        if (ch != 'l' && ch != 's' && ch != 'z') --k_;
      } else {
        j_ = k_;
        if (m() == 1 && cvc(k_)) set_to("e");
      }
    }
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
  }

  void step2() {
    switch (b_[k_ - 1]) {
      case 'a':
        if (ends("ational")) { replace_if_m("ate"); break; }
        if (ends("tional")) { replace_if_m("tion"); break; }
        break;
      case 'c':
        if (ends("enci")) { replace_if_m("ence"); break; }
        if (ends("anci")) { replace_if_m("ance"); break; }
        break;
      case 'e':
        if (ends("izer")) { replace_if_m("ize"); break; }
        break;
      case 'l':
        if (ends("abli")) { replace_if_m("able"); break; }
        if (ends("alli")) { replace_if_m("al"); break; }
        if (ends("entli")) { replace_if_m("ent"); break; }
        if (ends("eli")) { replace_if_m("e"); break; }
        if (ends("ousli")) { replace_if_m("ous"); break; }
        break;
      case 'o':
        if (ends("ization")) { replace_if_m("ize"); break; }
        if (ends("ation")) { replace_if_m("ate"); break; }
        if (ends("ator")) { replace_if_m("ate"); break; }
        break;
      case 's':
        if (ends("alism")) { replace_if_m("al"); break; }
        if (ends("iveness")) { replace_if_m("ive"); break; }
        if (ends("fulness")) { replace_if_m("ful"); break; }
        if (ends("ousness")) { replace_if_m("ous"); break; }
        break;
      case 't':
        if (ends("aliti")) { replace_if_m("al"); break; }
        if (ends("iviti")) { replace_if_m("ive"); break; }
        if (ends("biliti")) { replace_if_m("ble"); break; }
        break;
      default:
        break;
    }
  }

  void step3() {
    switch (b_[k_]) {
      case 'e':
        if (ends("icate")) { replace_if_m("ic"); break; }
        if (ends("ative")) { replace_if_m(""); break; }
        if (ends("alize")) { replace_if_m("al"); break; }
        break;
      case 'i':
        if (ends("iciti")) { replace_if_m("ic"); break; }
        break;
      case 'l':
        if (ends("ical")) { replace_if_m("ic"); break; }
        if (ends("ful")) { replace_if_m(""); break; }
        break;
      case 's':
        if (ends("ness")) { replace_if_m(""); break; }
        break;
      default:
        break;
    }
  }

  void step4() {
    switch (b_[k_ - 1]) {
      case 'a': if (ends("al")) break; return;
      case 'c': if (ends("ance") || ends("ence")) break; return;
      case 'e': if (ends("er")) break; return;
      case 'i': if (ends("ic")) break; return;
      case 'l': if (ends("able") || ends("ible")) break; return;
      case 'n':
        if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break;
        return;
      case 'o':
        if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) break;
        if (ends("ou")) break;
        return;
      case 's': if (ends("ism")) break; return;
      case 't': if (ends("ate") || ends("iti")) break; return;
      case 'u': if (ends("ous")) break; return;
      case 'v': if (ends("ive")) break; return;
      case 'z': if (ends("ize")) break; return;
      default: return;
    }
    if (m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (b_[k_] == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (b_[k_] == 'l' && double_cons(k_) && m() > 1) --k_;
  }
};

}  // namespace

std::string porter_stem(const std::string& word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return word;  // stem pure ascii words only
  }
  return PorterStemmer().run(word);
}

// ---------------------------------------------------------------------------
// n-gram helpers

namespace {

// joined key: tokens cannot contain spaces, so ' ' is a safe separator
std::string join_ngram(const TokenSeq& tokens, std::size_t start, int n) {
  std::string key = tokens[start];
  for (int i = 1; i < n; ++i) {
    key.push_back(' ');
    key += tokens[start + i];
  }
  return key;
}

std::map<std::string, int> ngram_counts(const TokenSeq& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[join_ngram(tokens, i, n)];
    }
  }
  return counts;
}

int lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

void require_refs(const std::vector<TokenSeq>& refs, const char* op) {
  if (refs.empty()) {
    throw std::invalid_argument(std::string(op) + ": at least one reference required");
  }
}

}  // namespace

DfTable build_df(const std::vector<std::vector<TokenSeq>>& reference_corpora) {
  if (reference_corpora.empty()) {
    throw std::invalid_argument("build_df: empty corpus");
  }
  DfTable table;
  table.corpus_size = static_cast<int>(reference_corpora.size());
  for (const auto& refs : reference_corpora) {
    for (int n = 1; n <= DfTable::kMaxOrder; ++n) {
      std::map<std::string, int> seen;
      for (const auto& ref : refs) {
        for (const auto& [key, count] : ngram_counts(ref, n)) {
          seen[key] = 1;
        }
      }
      for (const auto& [key, one] : seen) table.df[n - 1][key] += 1;
    }
  }
  return table;
}

double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& refs,
             bool smooth) {
  require_refs(refs, "bleu4");
  const int c = static_cast<int>(candidate.size());

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const auto cand = ngram_counts(candidate, n);
    std::map<std::string, int> max_ref;
    for (const auto& ref : refs) {
      for (const auto& [key, count] : ngram_counts(ref, n)) {
        max_ref[key] = std::max(max_ref[key], count);
      }
    }
    long long matched = 0, total = 0;
    for (const auto& [key, count] : cand) {
      total += count;
      auto it = max_ref.find(key);
      if (it != max_ref.end()) matched += std::min(count, it->second);
    }
    double precision;
    if (matched > 0) {
      precision = static_cast<double>(matched) / static_cast<double>(total);
    } else if (smooth) {
      precision = 1.0 / static_cast<double>(total + 1);
    } else {
      return 0.0;
    }
    log_sum += 0.25 * std::log(precision);
  }

  // closest reference length, ties to the shorter
  int r = static_cast<int>(refs.front().size());
  for (const auto& ref : refs) {
    const int len = static_cast<int>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) ||
        (std::abs(len - c) == std::abs(r - c) && len < r)) {
      r = len;
    }
  }
  const double bp =
      c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c))
            : 1.0;
  return bp * std::exp(log_sum);
}

double rougel(const TokenSeq& candidate, const std::vector<TokenSeq>& refs) {
  require_refs(refs, "rougel");
  constexpr double kBeta = 1.2;
  double best = 0.0;
  for (const auto& ref : refs) {
    if (candidate.empty() || ref.empty()) continue;
    const int lcs = lcs_length(candidate, ref);
    if (lcs == 0) continue;
    const double p = static_cast<double>(lcs) / candidate.size();
    const double r = static_cast<double>(lcs) / ref.size();
    const double f = (1.0 + kBeta * kBeta) * p * r / (r + kBeta * kBeta * p);
    best = std::max(best, f);
  }
  return best;
}

double cider_d(const TokenSeq& candidate, const std::vector<TokenSeq>& refs,
               const DfTable& df) {
  require_refs(refs, "cider_d");
  if (df.corpus_size < 1) {
    throw std::invalid_argument("cider_d: DfTable must be prebuilt");
  }
  constexpr double kSigma = 6.0;
  const double log_corpus = std::log(static_cast<double>(df.corpus_size));

  // tf-idf vector for one sentence at one n-gram order
  const auto tfidf = [&](const TokenSeq& tokens, int n) {
    std::map<std::string, double> vec;
    for (const auto& [key, count] : ngram_counts(tokens, n)) {
      const double idf =
          log_corpus - std::log(std::max(1.0, static_cast<double>(df.lookup(n, key))));
      vec[key] = count * idf;
    }
    return vec;
  };

  double score_over_n = 0.0;
  for (int n = 1; n <= DfTable::kMaxOrder; ++n) {
    const auto cand_vec = tfidf(candidate, n);
    double cand_norm2 = 0.0;
    for (const auto& [key, v] : cand_vec) cand_norm2 += v * v;

    double sim_sum = 0.0;
    for (const auto& ref : refs) {
      const auto ref_vec = tfidf(ref, n);
      double ref_norm2 = 0.0;
      for (const auto& [key, v] : ref_vec) ref_norm2 += v * v;

      double dot = 0.0;
      for (const auto& [key, v] : cand_vec) {
        auto it = ref_vec.find(key);
        // candidate counts clipped to the reference's
        if (it != ref_vec.end()) dot += std::min(v, it->second) * it->second;
      }
      double sim = 0.0;
      if (cand_norm2 > 0.0 && ref_norm2 > 0.0) {
        sim = dot / std::sqrt(cand_norm2 * ref_norm2);
        const double delta =
            static_cast<double>(candidate.size()) - static_cast<double>(ref.size());
        sim *= std::exp(-delta * delta / (2.0 * kSigma * kSigma));
      }
      sim_sum += sim;
    }
    score_over_n += sim_sum / static_cast<double>(refs.size());
  }
  return 10.0 * score_over_n / static_cast<double>(DfTable::kMaxOrder);
}

namespace {

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};

// Greedy two-stage alignment (exact, then stem). Within a stage each
// candidate token takes the reference slot continuing the previous match
// when possible, otherwise the lowest unmatched slot; chunks are counted on
// the final alignment.
MeteorAlignment align_meteor(const TokenSeq& cand, const TokenSeq& ref) {
  std::vector<int> cand_to_ref(cand.size(), -1);
  std::vector<char> ref_used(ref.size(), 0);

  const auto stage = [&](auto&& key_fn) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cand_to_ref[i] != -1) continue;
      const std::string key = key_fn(cand[i]);
      int chosen = -1;
      // prefer continuing the previous token's chunk
      if (i > 0 && cand_to_ref[i - 1] != -1) {
        const int next = cand_to_ref[i - 1] + 1;
        if (next < static_cast<int>(ref.size()) && !ref_used[next] &&
            key_fn(ref[next]) == key) {
          chosen = next;
        }
      }
      if (chosen == -1) {
        for (std::size_t r = 0; r < ref.size(); ++r) {
          if (!ref_used[r] && key_fn(ref[r]) == key) {
            chosen = static_cast<int>(r);
            break;
          }
        }
      }
      if (chosen != -1) {
        cand_to_ref[i] = chosen;
        ref_used[chosen] = 1;
      }
    }
  };

  stage([](const std::string& w) { return w; });
  stage([](const std::string& w) { return porter_stem(w); });

  MeteorAlignment out;
  int prev_ref = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand_to_ref[i] == -1) continue;
    ++out.matches;
    if (cand_to_ref[i] != prev_ref + 1) ++out.chunks;
    prev_ref = cand_to_ref[i];
  }
  return out;
}

}  // namespace

double meteor_lite(const TokenSeq& candidate,
                   const std::vector<TokenSeq>& refs) {
  require_refs(refs, "meteor_lite");
  constexpr double kAlpha = 0.9;   // recall weight in Fmean
  constexpr double kGamma = 0.5;   // fragmentation penalty weight
  constexpr double kBetaPow = 3.0; // fragmentation exponent
  double best = 0.0;
  for (const auto& ref : refs) {
    if (candidate.empty() || ref.empty()) continue;
    const MeteorAlignment a = align_meteor(candidate, ref);
    if (a.matches == 0) continue;
    const double m = a.matches;
    const double p = m / candidate.size();
    const double r = m / ref.size();
    const double fmean = p * r / (kAlpha * p + (1.0 - kAlpha) * r);
    const double penalty =
        kGamma * std::pow(static_cast<double>(a.chunks) / m, kBetaPow);
    best = std::max(best, fmean * (1.0 - penalty));
  }
  return best;
}

}  // namespace dcap
