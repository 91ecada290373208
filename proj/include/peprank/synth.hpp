// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "peprank/candidates.hpp"
#include "peprank/mass.hpp"
#include "peprank/spectrum.hpp"

namespace peprank {

struct SynthConfig {
  std::size_t min_len = 7;
  std::size_t max_len = 20;
  double peak_dropout = 0.1;
  std::size_t noise_min = 5;
  std::size_t noise_max = 20;
  int charge_min = 2;
  int charge_max = 3;
  std::size_t mutants = 3;
  /// Substitutes are drawn with weight exp(-|dM| / similarity_scale), so
  /// residues of similar mass are preferred.
  double similarity_scale = 20.0;

  void validate() const;
};

struct SyntheticData {
  std::vector<RawSpectrum> spectra;  // labeled via SEQ
  std::vector<CandidateSet> candidates;
};

/// Random labeled spectra with b/y ladders, noise peaks and dropout, plus
/// candidate sets holding the label and `mutants` edited variants in a random
/// order. Candidate slot j is attributed to model "model_j".
SyntheticData synthesize_dataset(std::uint64_t seed, std::size_t n_spectra, const SynthConfig& config = {},
                                 const MassTable& table = MassTable::default_table());

}  // namespace peprank
