// Copyright 2026 The dischargegen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DISCHARGEGEN_EVALUATION_HPP
#define DISCHARGEGEN_EVALUATION_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "concepts.hpp"
#include "corpus.hpp"
#include "http.hpp"
#include "json.hpp"

namespace dischargegen::eval {

enum class MetricId {
  kBleu4,
  kRouge1,
  kRouge2,
  kRougeL,
  kMeteor,
  kConceptF1,  // lexicon-based stand-in for MEDCON
  kBertScore,  // remote only
  kAlignScore, // remote only
};

inline constexpr MetricId kLocalMetrics[] = {
    MetricId::kBleu4,  MetricId::kRouge1, MetricId::kRouge2,
    MetricId::kRougeL, MetricId::kMeteor, MetricId::kConceptF1};

std::string_view metric_name(MetricId m);
std::optional<MetricId> parse_metric(std::string_view name);
inline bool is_remote_metric(MetricId m) {
  return m == MetricId::kBertScore || m == MetricId::kAlignScore;
}

// Lowercase, split on Unicode whitespace, strip ASCII punctuation from both
// ends of each token, drop tokens that end up empty.
std::vector<std::string> tokenize_eval(std::string_view text);

struct NgramOverlap {
  std::size_t clipped = 0;          // sum over n-grams of min(count_c, count_r)
  std::size_t candidate_total = 0;  // n-grams in the candidate
  std::size_t reference_total = 0;
};

// Clipped n-gram overlap by sorting n-gram start positions and merging.
template <class T>
NgramOverlap ngram_overlap(std::span<const T> cand, std::span<const T> ref,
                           std::size_t n) {
  NgramOverlap out;
  if (n == 0) return out;
  const auto starts = [n](std::span<const T> seq) {
    std::vector<std::size_t> idx;
    idx.reserve(seq.size() >= n ? seq.size() - n + 1 : 0);
    for (std::size_t i = 0; i + n <= seq.size(); ++i) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(seq.begin() + a, seq.begin() + a + n,
                                          seq.begin() + b, seq.begin() + b + n);
    });
    return idx;
  };
  const auto cs = starts(cand);
  const auto rs = starts(ref);
  out.candidate_total = cs.size();
  out.reference_total = rs.size();

  // -1, 0, 1 comparison of cand n-gram at a with ref n-gram at b.
  const auto cmp = [&](std::span<const T> x, std::size_t a, std::span<const T> y,
                       std::size_t b) {
    for (std::size_t k = 0; k < n; ++k) {
      if (x[a + k] < y[b + k]) return -1;
      if (y[b + k] < x[a + k]) return 1;
    }
    return 0;
  };
  std::size_t i = 0, j = 0;
  while (i < cs.size() && j < rs.size()) {
    const int c = cmp(cand, cs[i], ref, rs[j]);
    if (c < 0) {
      ++i;
    } else if (c > 0) {
      ++j;
    } else {
      std::size_t ci = i, rj = j;
      while (ci < cs.size() && cmp(cand, cs[ci], cand, cs[i]) == 0) ++ci;
      while (rj < rs.size() && cmp(ref, rs[rj], ref, rs[j]) == 0) ++rj;
      out.clipped += std::min(ci - i, rj - j);
      i = ci;
      j = rj;
    }
  }
  return out;
}

template <class T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Smoothing constant for zero higher-order n-gram matches.
inline constexpr double kBleuEpsilon = 1e-9;

// Sentence BLEU-4 from per-order overlaps. Orders for which the candidate
// has no n-grams are left out of the geometric mean.
double bleu4_from_overlaps(std::span<const NgramOverlap, 4> overlaps,
                           std::size_t candidate_len, std::size_t reference_len);

template <class T>
double bleu4(std::span<const T> cand, std::span<const T> ref) {
  std::array<NgramOverlap, 4> ov;
  for (std::size_t n = 1; n <= 4; ++n) ov[n - 1] = ngram_overlap(cand, ref, n);
  return bleu4_from_overlaps(ov, cand.size(), ref.size());
}

double bleu4(std::span<const std::string> cand, std::span<const std::string> ref);

// F1 of clipped n-gram overlap. Both sides without n-grams score 1, one
// side without n-grams scores 0.
double rouge_n(std::span<const std::string> cand, std::span<const std::string> ref,
               std::size_t n);
double f1_from_lcs(std::size_t lcs, std::size_t cand_len, std::size_t ref_len);
double rouge_l(std::span<const std::string> cand, std::span<const std::string> ref);

// Suffix stripper used by the METEOR stem stage: removes the first of
// "ing", "es", "ed", "s" that leaves at least three characters.
std::string meteor_stem(std::string_view word);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};
MeteorAlignment meteor_align(std::span<const std::string> cand,
                             std::span<const std::string> ref);
// Exact then stem matching; Fmean = 10PR/(R+9P), penalty 0.5*(chunks/m)^3.
double meteor(std::span<const std::string> cand, std::span<const std::string> ref);

// F1 over the deduplicated, normalized concept sets of both texts.
double concept_f1(std::string_view candidate, std::string_view reference,
                  const concepts::Lexicon& lexicon);

struct RemoteScore {
  double value = 0.0;
  bool clamped = false;
  double raw = 0.0;
};

// POST {"candidate","reference","metric"} -> {"value"}; value clamped to [0,1].
class RemoteScorer {
 public:
  RemoteScorer(http::Endpoint endpoint, http::RetryPolicy policy)
      : endpoint_(std::move(endpoint)), policy_(policy) {}
  RemoteScore score(std::string_view candidate, std::string_view reference,
                    MetricId metric) const;

 private:
  http::Endpoint endpoint_;
  http::RetryPolicy policy_;
};

struct MetricReport {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::map<MetricId, double> scores;
};

struct AggregateReport {
  std::map<TargetSection, std::map<MetricId, double>> per_target;
  std::map<TargetSection, std::size_t> sample_counts;
  std::map<MetricId, double> cross_target;
  double overall = 0.0;
  std::vector<MetricId> unavailable;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Per-target means over samples, then the unweighted mean of the two targets
// per metric, then the unweighted mean over metrics. Sums run over sorted
// values so the result does not depend on report order.
AggregateReport aggregate(std::span<const MetricReport> reports);

struct Sample {
  std::string hadm_id;
  TargetSection target = TargetSection::kBriefHospitalCourse;
  std::string candidate;
  std::string reference;
};

struct EvalOptions {
  std::vector<MetricId> metrics{std::begin(kLocalMetrics), std::end(kLocalMetrics)};
  const concepts::Lexicon* lexicon = nullptr;  // required for kConceptF1
  std::optional<http::Endpoint> scorer;         // required for remote metrics
  http::RetryPolicy retry;
  std::size_t concurrency = 4;
};

struct EvalResult {
  std::vector<MetricReport> reports;  // sorted by (hadm_id, target)
  std::vector<MetricId> unavailable;  // remote metrics dropped for this run
  std::vector<std::string> warnings;
};

// Scores every sample. A remote metric whose scorer cannot be reached is
// removed from every report and listed as unavailable.
EvalResult evaluate_samples(std::span<const Sample> samples,
                            const EvalOptions& options);

// Rows `hadm_id,target,metric,value` with a header.
void write_scores_csv(std::ostream& out, std::span<const MetricReport> reports);

}  // namespace dischargegen::eval

#endif  // DISCHARGEGEN_EVALUATION_HPP
