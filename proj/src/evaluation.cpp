// SPDX-License-Identifier: Apache-2.0
#include "peprank/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

// An empty prediction (base model produced nothing) is scored as unmatched.
MatchResult match_or_empty(const Peptide& pred, const Peptide& truth, const MassTable& table,
                           MatchTolerance tol) {
  if (pred.empty()) return {};
  return aa_match(pred, truth, table, tol);
}

}  // namespace

std::size_t MatchResult::n_matched() const {
  return static_cast<std::size_t>(std::count(per_residue.begin(), per_residue.end(), true));
}

MatchResult aa_match(const Peptide& pred, const Peptide& truth, const MassTable& table,
                     MatchTolerance tol) {
  if (pred.empty() || truth.empty()) throw DataError("aa_match: peptides must be non-empty");
  const auto pm = residue_masses(pred, table);
  const auto tm = residue_masses(truth, table);
  const auto cp = cumulative_masses(pred, table, Direction::kPrefix);
  const auto ct = cumulative_masses(truth, table, Direction::kPrefix);

  MatchResult result;
  result.per_residue.assign(pred.size(), false);
  std::size_t i = 0, j = 0;
  while (i < pred.size() && j < truth.size()) {
    if (std::abs(cp[i] - ct[j]) < tol.cumulative_da) {
      const bool residue_ok = std::abs(pm[i] - tm[j]) < tol.residue_da;
      const bool before_ok = std::abs((cp[i] - pm[i]) - (ct[j] - tm[j])) < tol.cumulative_da;
      const bool ok = residue_ok && before_ok;
      result.per_residue[i] = ok;
      result.aligned.push_back({i, j, ok});
      ++i;
      ++j;
    } else if (cp[i] < ct[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  result.peptide_matched =
      pred.size() == truth.size() &&
      std::all_of(result.per_residue.begin(), result.per_residue.end(), [](bool b) { return b; });
  return result;
}

double CorpusStats::aa_precision() const {
  return n_all_aa == 0 ? 0.0 : double(n_match_aa) / double(n_all_aa);
}

double CorpusStats::peptide_recall() const {
  return n_all_pep == 0 ? 0.0 : double(n_match_pep) / double(n_all_pep);
}

CorpusStats corpus_stats(const std::vector<PredictionPair>& pairs, const MassTable& table,
                         MatchTolerance tol) {
  if (pairs.empty()) throw DataError("corpus_stats: empty corpus");
  CorpusStats stats;
  for (const auto& [pred, truth] : pairs) {
    const auto m = match_or_empty(pred, truth, table, tol);
    stats.n_all_pep += 1;
    stats.n_match_pep += m.peptide_matched ? 1 : 0;
    stats.n_all_aa += pred.size();
    stats.n_match_aa += m.n_matched();
  }
  return stats;
}

std::vector<LengthBin> parse_length_bins(const std::string& text) {
  std::vector<LengthBin> bins;
  std::stringstream ss(text);
  std::string item;
  auto parse_num = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ParseError("bad length bin '" + item + "'");
    return v;
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    LengthBin bin;
    if (dash == std::string::npos) {
      bin.lo = bin.hi = parse_num(item);
    } else {
      bin.lo = parse_num(std::string_view(item).substr(0, dash));
      bin.hi = parse_num(std::string_view(item).substr(dash + 1));
    }
    if (bin.lo > bin.hi) throw ParseError("empty length bin '" + item + "'");
    bins.push_back(bin);
  }
  if (bins.empty()) throw ParseError("no length bins given");
  return bins;
}

std::vector<BinRecall> length_binned_recall(const std::vector<PredictionPair>& pairs,
                                            const MassTable& table,
                                            const std::vector<LengthBin>& bins,
                                            MatchTolerance tol) {
  std::vector<BinRecall> out;
  for (const auto& b : bins) out.push_back({b, 0, 0, std::nullopt});
  for (const auto& [pred, truth] : pairs) {
    const std::size_t len = truth.size();
    bool covered = false;
    const bool matched = match_or_empty(pred, truth, table, tol).peptide_matched;
    for (auto& r : out) {
      if (len < r.bin.lo || len > r.bin.hi) continue;
      covered = true;
      r.n_all += 1;
      r.n_match += matched ? 1 : 0;
    }
    if (!covered)
      throw DataError("length_binned_recall: truth length " + std::to_string(len) +
                      " is not covered by any bin");
  }
  for (auto& r : out)
    if (r.n_all > 0) r.recall = double(r.n_match) / double(r.n_all);
  return out;
}

std::map<std::string, TokenRecall> residue_confusion(const std::vector<PredictionPair>& pairs,
                                                     const MassTable& table,
                                                     MatchTolerance tol) {
  if (pairs.empty()) throw DataError("residue_confusion: empty corpus");
  std::map<std::string, TokenRecall> out;
  for (const auto& [pred, truth] : pairs) {
    for (const auto& t : truth.residues) out[t].occurrences += 1;
    for (const auto& a : match_or_empty(pred, truth, table, tol).aligned)
      if (pred[a.pred_index] == truth[a.truth_index]) out[truth[a.truth_index]].hits += 1;
  }
  return out;
}

ContributionReport contribution_analysis(const std::vector<SelectionRecord>& records,
                                         const MassTable& table, MatchTolerance tol) {
  ContributionReport report;
  report.n_records = records.size();
  for (const auto& rec : records)
    for (const auto& c : rec.candidates) report.counts.emplace(c.model, 0);

  for (const auto& rec : records) {
    if (rec.selected.empty() || rec.truth.empty()) continue;
    if (!aa_match(rec.selected, rec.truth, table, tol).peptide_matched) continue;
    std::set<std::string> providers;
    for (const auto& c : rec.candidates)
      if (c.peptide == rec.selected) providers.insert(c.model);
    if (providers.size() != 1) continue;
    report.counts[*providers.begin()] += 1;
    report.n_unique_correct += 1;
  }
  if (report.n_unique_correct > 0)
    for (const auto& [model, count] : report.counts)
      report.shares[model] = double(count) / double(report.n_unique_correct);
  return report;
}

}  // namespace peprank
