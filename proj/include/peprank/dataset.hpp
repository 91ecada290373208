// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "peprank/candidates.hpp"
#include "peprank/mass.hpp"
#include "peprank/spectrum.hpp"

namespace peprank {

/// One labeled spectrum with its candidates and regression targets.
struct TrainingInstance {
  ProcessedSpectrum spectrum;
  std::vector<std::string> models;
  std::vector<Peptide> candidates;
  Peptide label;
  std::vector<double> pmd_targets;  // [c]
  std::vector<double> rmd_targets;  // [c * (width - 1)], zero on padding
  std::size_t width = 0;            // longest candidate + 1
};

struct BuildOptions {
  PreprocessConfig preprocess;
  PrecursorTolerance precursor;
  std::size_t max_len = 32;  // candidates longer than this exclude the instance
  bool strict = false;
};

struct TrainingSet {
  std::vector<TrainingInstance> instances;
  std::vector<Exclusion> excluded;
};

/// Joins candidate sets to spectra by id. The label comes from the candidate
/// record, else from the spectrum's SEQ. Spectra failing preprocessing or the
/// precursor gates, and instances where every candidate already matches the
/// label, are excluded and reported.
TrainingSet build_training_set(const std::vector<RawSpectrum>& spectra,
                               const std::vector<CandidateSet>& candidates, const MassTable& table,
                               const BuildOptions& options = {});

/// Pairs each candidate set with its spectrum; throws DataError when an id
/// has no spectrum.
std::vector<std::pair<const RawSpectrum*, const CandidateSet*>> join_by_id(
    const std::vector<RawSpectrum>& spectra, const std::vector<CandidateSet>& candidates);

/// Label text for a joined record, if any.
std::optional<std::string> resolve_label(const RawSpectrum& spectrum, const CandidateSet& set);

/// Parses at ingestion: peptides longer than 100 residues are truncated.
Peptide ingest_peptide(const std::string& text, const MassTable& table);

}  // namespace peprank
