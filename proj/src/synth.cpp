// SPDX-License-Identifier: Apache-2.0
#include "peprank/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "peprank/errors.hpp"
#include "peprank/evaluation.hpp"
#include "peprank/metrics.hpp"

namespace peprank {

namespace {

Peptide random_peptide(std::mt19937_64& rng, const MassTable& table, std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
  std::uniform_int_distribution<std::size_t> tok(0, table.size() - 1);
  Peptide p;
  const std::size_t len = len_dist(rng);
  for (std::size_t i = 0; i < len; ++i) p.residues.push_back(table.token(tok(rng)));
  return p;
}

Peptide mutate(const Peptide& label, std::mt19937_64& rng, const MassTable& table, const SynthConfig& config) {
  Peptide out = label;
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<std::size_t> tok(0, table.size() - 1);
  const int k = label.size() > 1 ? kind(rng) : std::uniform_int_distribution<int>(0, 1)(rng);
  if (k == 0) {  // substitution
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, label.size() - 1)(rng);
    const double m = table.mass(label[pos]);
    std::vector<double> weights(table.size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double delta = std::abs(table.mass_at(i) - m);
      if (delta > 0.1) weights[i] = std::exp(-delta / config.similarity_scale);
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    out.residues[pos] = table.token(pick(rng));
  } else if (k == 1) {  // insertion
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, label.size())(rng);
    out.residues.insert(out.residues.begin() + static_cast<std::ptrdiff_t>(pos), table.token(tok(rng)));
  } else {  // deletion
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, label.size() - 1)(rng);
    out.residues.erase(out.residues.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return out;
}

std::vector<Peak> fragment_peaks(const Peptide& p, const MassTable& table, const SynthConfig& config,
                                 double neutral_mass, std::mt19937_64& rng) {
  const auto prefix = cumulative_masses(p, table, Direction::kPrefix);
  const auto suffix = cumulative_masses(p, table, Direction::kSuffix);
  std::bernoulli_distribution keep(1.0 - config.peak_dropout);
  std::uniform_real_distribution<double> strong(0.2, 1.0);
  std::vector<Peak> peaks;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double b = prefix[i] + kProtonMass;
    const double y = suffix[i + 1] + kWaterMass + kProtonMass;
    // Draw both coins and intensities unconditionally so the stream of
    // random numbers does not depend on earlier outcomes.
    const bool keep_b = keep(rng), keep_y = keep(rng);
    const double ib = strong(rng), iy = strong(rng);
    if (keep_b) peaks.push_back({b, ib});
    if (keep_y) peaks.push_back({y, iy});
  }
  const std::size_t n_noise =
      std::uniform_int_distribution<std::size_t>(config.noise_min, config.noise_max)(rng);
  std::uniform_real_distribution<double> noise_mz(PreprocessConfig{}.min_mz, std::max(neutral_mass, 200.0));
  std::uniform_real_distribution<double> weak(0.01, 0.3);
  for (std::size_t i = 0; i < n_noise; ++i) {
    const double mz = noise_mz(rng);
    peaks.push_back({mz, weak(rng)});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
  return peaks;
}

}  // namespace

void SynthConfig::validate() const {
  if (min_len == 0 || min_len > max_len) throw DomainError("synth: need 1 <= min_len <= max_len");
  if (max_len > kMaxIngestLength) throw DomainError("synth: max_len above the ingestion limit");
  if (!(peak_dropout >= 0.0 && peak_dropout < 1.0)) throw DomainError("synth: peak_dropout must be in [0, 1)");
  if (noise_min > noise_max) throw DomainError("synth: noise_min > noise_max");
  if (charge_min < 1 || charge_min > charge_max) throw DomainError("synth: invalid charge range");
  if (!(similarity_scale > 0.0)) throw DomainError("synth: similarity_scale must be positive");
}

SyntheticData synthesize_dataset(std::uint64_t seed, std::size_t n_spectra, const SynthConfig& config,
                                 const MassTable& table) {
  config.validate();
  const PeptideScorer scorer(table);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> charge_dist(config.charge_min, config.charge_max);
  SyntheticData out;
  for (std::size_t n = 0; n < n_spectra; ++n) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%05zu", n);
    const Peptide label = random_peptide(rng, table, config.min_len, config.max_len);
    const int charge = charge_dist(rng);
    const double neutral = peptide_neutral_mass(label, table);

    RawSpectrum spec;
    spec.spectrum_id = id;
    spec.precursor = Precursor::from_mz(theoretical_mz(neutral, charge), charge);
    spec.peaks = fragment_peaks(label, table, config, neutral, rng);
    spec.label = label.render();

    std::vector<Peptide> mutants;
    for (std::size_t attempts = 0; mutants.size() < config.mutants; ++attempts) {
      if (attempts > 1000) throw DomainError("synth: could not generate distinct mutants");
      Peptide m = mutate(label, rng, table, config);
      if (m.empty() || m.size() > kMaxIngestLength) continue;
      if (scorer.pmd(m, label) <= 0.0) continue;
      if (aa_match(m, label, table).peptide_matched) continue;
      if (std::find(mutants.begin(), mutants.end(), m) != mutants.end()) continue;
      mutants.push_back(std::move(m));
    }
    const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, config.mutants)(rng);
    CandidateSet set;
    set.spectrum_id = id;
    set.label = label.render();
    for (std::size_t j = 0, next = 0; j <= config.mutants; ++j) {
      const Peptide& p = j == slot ? label : mutants[next++];
      set.candidates.push_back({"model_" + std::to_string(j), p.render()});
    }
    out.spectra.push_back(std::move(spec));
    out.candidates.push_back(std::move(set));
  }
  return out;
}

}  // namespace peprank
