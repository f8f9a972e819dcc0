#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace dcap {

// Lowercased tokens, punctuation stripped. Produced by tokenize().
using TokenSeq = std::vector<std::string>;

// Lowercase, replace every character outside [a-z0-9'] with a space, split
// on whitespace. Empty input yields an empty sequence.
TokenSeq tokenize(const std::string& text);

// Classic Porter stemming, used by meteor_lite for stem matches.
std::string porter_stem(const std::string& word);

// Document frequencies per n-gram order (1..4) over a corpus of reference
// sets; df[g] = number of reference sets in which g appears at least once.
struct DfTable {
  static constexpr int kMaxOrder = 4;
  std::array<std::map<std::string, int>, kMaxOrder> df;  // key: joined n-gram
  int corpus_size = 0;

  int lookup(int n, const std::string& key) const {
    auto it = df[n - 1].find(key);
    return it == df[n - 1].end() ? 0 : it->second;
  }
};

DfTable build_df(const std::vector<std::vector<TokenSeq>>& reference_corpora);

// Sentence-level BLEU with equal weights over n = 1..4, clipped n-gram
// precision against max reference counts, geometric mean, brevity penalty
// exp(1 - r/c) when c < r (r = closest-length reference, ties to the
// shorter). Zero whenever any n-gram precision is zero; the optional
// smoothing adds 1 to numerator and denominator of zero precisions.
double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& refs,
             bool smooth = false);

// LCS F-measure with beta = 1.2, maximum over references.
double rougel(const TokenSeq& candidate, const std::vector<TokenSeq>& refs);

// CIDEr-D: TF-IDF n-gram cosine with clipped candidate counts, Gaussian
// length penalty (sigma = 6), averaged over references then over n = 1..4,
// scaled by 10. Requires a prebuilt DfTable.
double cider_d(const TokenSeq& candidate, const std::vector<TokenSeq>& refs,
               const DfTable& df);

// Unigram matcher without external lexical resources: greedy one-to-one
// alignment by exact match then Porter-stem match, Fmean with alpha = 0.9,
// fragmentation penalty 0.5 * (chunks/m)^3, maximum over references.
double meteor_lite(const TokenSeq& candidate,
                   const std::vector<TokenSeq>& refs);

}  // namespace dcap
