// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peprank/mass.hpp"

namespace peprank {

struct MatchTolerance {
  double residue_da = 0.1;
  double cumulative_da = 0.5;
};

/// One residue pair visited by the two-pointer walk whose cumulative masses
/// agreed within the cumulative tolerance.
struct AlignedPair {
  std::size_t pred_index = 0;
  std::size_t truth_index = 0;
  bool matched = false;
};

struct MatchResult {
  std::vector<bool> per_residue;  // aligned to the predicted peptide
  std::vector<AlignedPair> aligned;
  bool peptide_matched = false;

  std::size_t n_matched() const;
};

MatchResult aa_match(const Peptide& pred, const Peptide& truth, const MassTable& table,
                     MatchTolerance tol = {});

struct PredictionPair {
  Peptide pred;
  Peptide truth;
};

struct CorpusStats {
  std::size_t n_match_pep = 0;
  std::size_t n_all_pep = 0;
  std::size_t n_match_aa = 0;
  std::size_t n_all_aa = 0;  // predicted residues

  double aa_precision() const;
  double peptide_recall() const;
};

CorpusStats corpus_stats(const std::vector<PredictionPair>& pairs, const MassTable& table,
                         MatchTolerance tol = {});

/// Inclusive truth-length range.
struct LengthBin {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct BinRecall {
  LengthBin bin;
  std::size_t n_match = 0;
  std::size_t n_all = 0;
  std::optional<double> recall;  // absent when the bin is empty
};

/// Parses "7-9,10-12" style bin lists.
std::vector<LengthBin> parse_length_bins(const std::string& text);

std::vector<BinRecall> length_binned_recall(const std::vector<PredictionPair>& pairs,
                                            const MassTable& table,
                                            const std::vector<LengthBin>& bins,
                                            MatchTolerance tol = {});

struct TokenRecall {
  std::size_t hits = 0;
  std::size_t occurrences = 0;
  double recall() const { return occurrences == 0 ? 0.0 : double(hits) / double(occurrences); }
};

/// Exact-token recall per truth token over the pairs aligned by aa_match.
std::map<std::string, TokenRecall> residue_confusion(const std::vector<PredictionPair>& pairs,
                                                     const MassTable& table,
                                                     MatchTolerance tol = {});

struct ModelCandidate {
  std::string model;
  Peptide peptide;
};

struct SelectionRecord {
  std::vector<ModelCandidate> candidates;
  Peptide selected;
  Peptide truth;
};

struct ContributionReport {
  std::size_t n_records = 0;
  std::size_t n_unique_correct = 0;
  /// Every model seen in the candidates, with its share of the filtered set.
  /// Absent shares mean the filtered set was empty.
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> shares;
};

/// Share of correctly selected peptides provided by exactly one base model.
ContributionReport contribution_analysis(const std::vector<SelectionRecord>& records,
                                         const MassTable& table, MatchTolerance tol = {});

}  // namespace peprank
