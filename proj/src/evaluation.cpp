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

#include "evaluation.hpp"

#include <cmath>
#include <mutex>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace dischargegen::eval {

std::string_view metric_name(MetricId m) {
  switch (m) {
    case MetricId::kBleu4: return "bleu4";
    case MetricId::kRouge1: return "rouge1";
    case MetricId::kRouge2: return "rouge2";
    case MetricId::kRougeL: return "rougeL";
    case MetricId::kMeteor: return "meteor";
    case MetricId::kConceptF1: return "concept_f1";
    case MetricId::kBertScore: return "bertscore";
    case MetricId::kAlignScore: return "alignscore";
  }
  return "unknown";
}

std::optional<MetricId> parse_metric(std::string_view name) {
  for (MetricId m : {MetricId::kBleu4, MetricId::kRouge1, MetricId::kRouge2,
                     MetricId::kRougeL, MetricId::kMeteor, MetricId::kConceptF1,
                     MetricId::kBertScore, MetricId::kAlignScore}) {
    if (metric_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

}  // namespace

std::vector<std::string> tokenize_eval(std::string_view s) {
  std::vector<std::string> out;
  for (std::string_view tok : text::split_whitespace(s)) {
    while (!tok.empty() && is_ascii_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && is_ascii_punct(tok.back())) tok.remove_suffix(1);
    if (!tok.empty()) out.push_back(text::to_lower_ascii(tok));
  }
  return out;
}

double bleu4_from_overlaps(std::span<const NgramOverlap, 4> overlaps,
                           std::size_t candidate_len, std::size_t reference_len) {
  if (candidate_len == 0 || overlaps[0].clipped == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (const NgramOverlap& o : overlaps) {
    if (o.candidate_total == 0) continue;
    const double total = static_cast<double>(o.candidate_total);
    const double p = o.clipped > 0 ? o.clipped / total : kBleuEpsilon / total;
    log_sum += std::log(p);
    ++orders;
  }
  const double precision = std::exp(log_sum / orders);
  const double c = static_cast<double>(candidate_len);
  const double r = static_cast<double>(reference_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(precision * bp, 0.0, 1.0);
}

double bleu4(std::span<const std::string> cand, std::span<const std::string> ref) {
  return bleu4<std::string>(cand, ref);
}

namespace {

double f1(double overlap, double cand_total, double ref_total) {
  if (cand_total == 0 && ref_total == 0) return 1.0;
  if (cand_total == 0 || ref_total == 0 || overlap == 0) return 0.0;
  const double p = overlap / cand_total;
  const double r = overlap / ref_total;
  return 2 * p * r / (p + r);
}

}  // namespace

double rouge_n(std::span<const std::string> cand, std::span<const std::string> ref,
               std::size_t n) {
  if (n != 1 && n != 2) {
    throw Error(ErrorKind::kInvalidArgument, "rouge_n supports n = 1 or 2");
  }
  const NgramOverlap o = ngram_overlap(cand, ref, n);
  return f1(static_cast<double>(o.clipped), static_cast<double>(o.candidate_total),
            static_cast<double>(o.reference_total));
}

double f1_from_lcs(std::size_t lcs, std::size_t cand_len, std::size_t ref_len) {
  return f1(static_cast<double>(lcs), static_cast<double>(cand_len),
            static_cast<double>(ref_len));
}

double rouge_l(std::span<const std::string> cand, std::span<const std::string> ref) {
  return f1_from_lcs(lcs_length(cand, ref), cand.size(), ref.size());
}

std::string meteor_stem(std::string_view word) {
  for (std::string_view suffix : {"ing", "es", "ed", "s"}) {
    if (word.ends_with(suffix) && word.size() - suffix.size() >= 3) {
      return std::string(word.substr(0, word.size() - suffix.size()));
    }
  }
  return std::string(word);
}

MeteorAlignment meteor_align(std::span<const std::string> cand,
                             std::span<const std::string> ref) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> link(cand.size(), kNone);
  std::vector<bool> ref_used(ref.size(), false);

  // Each stage walks the candidate left to right. A token continues the
  // previous token's chunk when the next reference slot matches; otherwise
  // it takes the leftmost free matching slot.
  const auto stage = [&](auto&& same) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (link[i] != kNone) continue;
      std::size_t pick = kNone;
      if (i > 0 && link[i - 1] != kNone) {
        const std::size_t j = link[i - 1] + 1;
        if (j < ref.size() && !ref_used[j] && same(i, j)) pick = j;
      }
      for (std::size_t j = 0; pick == kNone && j < ref.size(); ++j) {
        if (!ref_used[j] && same(i, j)) pick = j;
      }
      if (pick != kNone) {
        link[i] = pick;
        ref_used[pick] = true;
      }
    }
  };
  stage([&](std::size_t i, std::size_t j) { return cand[i] == ref[j]; });
  std::vector<std::string> cand_stems, ref_stems;
  for (const auto& w : cand) cand_stems.push_back(meteor_stem(w));
  for (const auto& w : ref) ref_stems.push_back(meteor_stem(w));
  stage([&](std::size_t i, std::size_t j) { return cand_stems[i] == ref_stems[j]; });

  MeteorAlignment a;
  std::size_t prev_i = kNone, prev_j = kNone;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (link[i] == kNone) continue;
    ++a.matches;
    if (prev_i == kNone || i != prev_i + 1 || link[i] != prev_j + 1) ++a.chunks;
    prev_i = i;
    prev_j = link[i];
  }
  return a;
}

double meteor(std::span<const std::string> cand, std::span<const std::string> ref) {
  const MeteorAlignment a = meteor_align(cand, ref);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / cand.size();
  const double r = m / ref.size();
  const double fmean = 10 * p * r / (r + 9 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1 - penalty);
}

double concept_f1(std::string_view candidate, std::string_view reference,
                  const concepts::Lexicon& lexicon) {
  if (lexicon.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "concept_f1 needs a non-empty lexicon");
  }
  const auto concept_set = [&](std::string_view s) {
    std::set<std::string> out;
    for (const auto& span : concepts::extract_concepts(s, {}, lexicon)) {
      out.insert(concepts::normalize_surface(span.text));
    }
    return out;
  };
  const auto c = concept_set(candidate);
  const auto r = concept_set(reference);
  std::size_t common = 0;
  for (const auto& x : c) common += r.count(x);
  return f1(static_cast<double>(common), static_cast<double>(c.size()),
            static_cast<double>(r.size()));
}

RemoteScore RemoteScorer::score(std::string_view candidate,
                                std::string_view reference, MetricId metric) const {
  if (!is_remote_metric(metric)) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(metric_name(metric)) + " is not a remote metric");
  }
  const nlohmann::json payload = {{"candidate", candidate},
                                  {"reference", reference},
                                  {"metric", metric_name(metric)}};
  const auto result = http::post_json(endpoint_, payload, policy_);
  if (!result.body.is_object() || !result.body.contains("value") ||
      !result.body["value"].is_number()) {
    throw RemoteError(ErrorKind::kProtocol,
                      endpoint_.url() + " answer lacks a numeric \"value\"",
                      result.retries);
  }
  RemoteScore s;
  s.raw = result.body["value"].get<double>();
  if (!std::isfinite(s.raw)) {
    throw RemoteError(ErrorKind::kProtocol, "scorer returned a non-finite value",
                      result.retries);
  }
  s.value = std::clamp(s.raw, 0.0, 1.0);
  s.clamped = s.value != s.raw;
  return s;
}

AggregateReport aggregate(std::span<const MetricReport> reports) {
  AggregateReport agg;
  if (reports.empty()) {
    throw Error(ErrorKind::kAggregation, "no metric reports to aggregate");
  }
  std::set<MetricId> metrics;
  for (const auto& [m, v] : reports.front().scores) metrics.insert(m);
  std::map<TargetSection, std::map<MetricId, std::vector<double>>> values;
  for (const MetricReport& r : reports) {
    std::set<MetricId> here;
    for (const auto& [m, v] : r.scores) {
      here.insert(m);
      values[r.target][m].push_back(v);
    }
    if (here != metrics) {
      throw Error(ErrorKind::kAggregation,
                  "report for " + r.hadm_id + " covers a different metric set");
    }
    ++agg.sample_counts[r.target];
  }
  for (TargetSection t : kTargets) {
    if (agg.sample_counts[t] == 0) {
      throw Error(ErrorKind::kAggregation, "target " +
                                               std::string(target_display_name(t)) +
                                               " has no samples");
    }
  }
  for (TargetSection t : kTargets) {
    for (auto& [m, vs] : values[t]) {
      std::sort(vs.begin(), vs.end());
      double sum = 0.0;
      for (double v : vs) sum += v;
      agg.per_target[t][m] = sum / static_cast<double>(vs.size());
    }
  }
  double overall = 0.0;
  for (MetricId m : metrics) {
    const double cross = (agg.per_target[TargetSection::kBriefHospitalCourse][m] +
                          agg.per_target[TargetSection::kDischargeInstructions][m]) /
                         2.0;
    agg.cross_target[m] = cross;
    overall += cross;
  }
  agg.overall = metrics.empty() ? 0.0 : overall / static_cast<double>(metrics.size());
  return agg;
}

nlohmann::json AggregateReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [t, ms] : per_target) {
    nlohmann::json o = nlohmann::json::object();
    for (const auto& [m, v] : ms) o[std::string(metric_name(m))] = v;
    per[std::string(target_key(t))] = std::move(o);
  }
  nlohmann::json cross = nlohmann::json::object();
  for (const auto& [m, v] : cross_target) cross[std::string(metric_name(m))] = v;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [t, n] : sample_counts) counts[std::string(target_key(t))] = n;
  nlohmann::json missing = nlohmann::json::array();
  for (MetricId m : unavailable) missing.push_back(metric_name(m));
  return {{"per_target", std::move(per)},
          {"cross_target", std::move(cross)},
          {"overall", overall},
          {"sample_counts", std::move(counts)},
          {"unavailable", std::move(missing)},
          {"warnings", warnings}};
}

EvalResult evaluate_samples(std::span<const Sample> samples,
                            const EvalOptions& options) {
  if (options.metrics.empty()) {
    throw Error(ErrorKind::kConfig, "no metrics configured");
  }
  std::vector<MetricId> local, remote;
  for (MetricId m : options.metrics) {
    (is_remote_metric(m) ? remote : local).push_back(m);
  }
  const bool need_lexicon =
      std::find(local.begin(), local.end(), MetricId::kConceptF1) != local.end();
  if (need_lexicon && (options.lexicon == nullptr || options.lexicon->empty())) {
    throw Error(ErrorKind::kConfig, "concept_f1 requires a lexicon");
  }

  EvalResult result;
  std::optional<RemoteScorer> scorer;
  if (!remote.empty()) {
    if (options.scorer) {
      scorer.emplace(*options.scorer, options.retry);
    } else {
      for (MetricId m : remote) {
        result.unavailable.push_back(m);
        result.warnings.push_back(std::string(metric_name(m)) +
                                  ": no scorer endpoint configured");
      }
      remote.clear();
    }
  }

  result.reports.resize(samples.size());
  std::mutex mu;
  std::set<MetricId> failed;
  parallel_for(samples.size(), options.concurrency, [&](std::size_t i) {
    const Sample& s = samples[i];
    MetricReport& rep = result.reports[i];
    rep.hadm_id = s.hadm_id;
    rep.target = s.target;
    const auto c = tokenize_eval(s.candidate);
    const auto r = tokenize_eval(s.reference);
    for (MetricId m : local) {
      double v = 0.0;
      switch (m) {
        case MetricId::kBleu4: v = bleu4(c, r); break;
        case MetricId::kRouge1: v = rouge_n(c, r, 1); break;
        case MetricId::kRouge2: v = rouge_n(c, r, 2); break;
        case MetricId::kRougeL: v = rouge_l(c, r); break;
        case MetricId::kMeteor: v = meteor(c, r); break;
        case MetricId::kConceptF1:
          v = concept_f1(s.candidate, s.reference, *options.lexicon);
          break;
        default: break;
      }
      rep.scores[m] = v;
    }
    for (MetricId m : remote) {
      {
        std::lock_guard lock(mu);
        if (failed.count(m)) continue;
      }
      try {
        const RemoteScore rs = scorer->score(s.candidate, s.reference, m);
        rep.scores[m] = rs.value;
        if (rs.clamped) {
          std::lock_guard lock(mu);
          result.warnings.push_back(std::string(metric_name(m)) + " for " +
                                    s.hadm_id + "/" + std::string(target_key(s.target)) +
                                    ": value " + std::to_string(rs.raw) +
                                    " clamped to [0,1]");
        }
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (failed.insert(m).second) {
          result.warnings.push_back(std::string(metric_name(m)) +
                                    " unavailable: " + e.what());
        }
      }
    }
  });

  for (MetricId m : failed) {
    result.unavailable.push_back(m);
    for (MetricReport& rep : result.reports) rep.scores.erase(m);
  }
  std::sort(result.unavailable.begin(), result.unavailable.end());
  std::sort(result.warnings.begin(), result.warnings.end());
  std::stable_sort(result.reports.begin(), result.reports.end(),
                   [](const MetricReport& a, const MetricReport& b) {
                     return std::tie(a.hadm_id, a.target) < std::tie(b.hadm_id, b.target);
                   });
  return result;
}

void write_scores_csv(std::ostream& out, std::span<const MetricReport> reports) {
  const std::vector<std::string> header = {"hadm_id", "target", "metric", "value"};
  csv::write_row(out, header);
  for (const MetricReport& r : reports) {
    for (const auto& [m, v] : r.scores) {
      const std::vector<std::string> row = {r.hadm_id, std::string(target_key(r.target)),
                                            std::string(metric_name(m)),
                                            nlohmann::json(v).dump()};
      csv::write_row(out, row);
    }
  }
}

}  // namespace dischargegen::eval
