// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "peprank/candidates.hpp"
#include "peprank/evaluation.hpp"
#include "peprank/model.hpp"
#include "peprank/spectrum.hpp"

namespace peprank {

struct Selection {
  std::string spectrum_id;
  std::size_t selected_index = 0;
  std::string selected_model;
  std::string selected_peptide;
  std::vector<double> scores;  // predicted PMD per candidate, file order
};

/// Scores one candidate set in evaluation mode and picks the lowest
/// predicted PMD.
Selection rerank_one(const RerankModel& model, const ProcessedSpectrum& spectrum, const CandidateSet& set);

/// Reranks every candidate set against its preprocessed spectrum. Spectra
/// that preprocessing empties are an error here. Work is split across
/// `workers` threads; output order follows the candidate file.
std::vector<Selection> rerank_run(const RerankModel& model, const std::vector<RawSpectrum>& spectra,
                                  const std::vector<CandidateSet>& candidates,
                                  const PreprocessConfig& preprocess = {}, std::size_t workers = 1);

/// TSV with header: spectrum_id, selected_index, selected_model,
/// selected_peptide, scores (comma-separated, candidate order).
void write_selections(std::ostream& out, const std::vector<Selection>& selections);
std::vector<Selection> read_selections(std::istream& in);

/// Keeps only candidates whose model is in `models`; throws DataError when a
/// set ends up empty.
std::vector<CandidateSet> filter_models(const std::vector<CandidateSet>& candidates,
                                        const std::set<std::string>& models);

struct SubsetResult {
  std::set<std::string> models;
  CorpusStats stats;
};

/// For each model subset: filter candidates, rerank, and score the
/// selections against the labels.
std::vector<SubsetResult> zero_shot_eval(const RerankModel& model, const std::vector<RawSpectrum>& spectra,
                                         const std::vector<CandidateSet>& candidates,
                                         const std::vector<std::set<std::string>>& subsets,
                                         const PreprocessConfig& preprocess = {}, std::size_t workers = 1);

/// Peptide recall of a list of selections against the joined labels.
CorpusStats score_selections(const std::vector<Selection>& selections, const std::vector<RawSpectrum>& spectra,
                             const std::vector<CandidateSet>& candidates, const MassTable& table);

}  // namespace peprank
