// SPDX-License-Identifier: Apache-2.0
#include "peprank/dataset.hpp"

#include <algorithm>
#include <unordered_map>

#include "peprank/errors.hpp"
#include "peprank/evaluation.hpp"
#include "peprank/metrics.hpp"

namespace peprank {

std::vector<std::pair<const RawSpectrum*, const CandidateSet*>> join_by_id(
    const std::vector<RawSpectrum>& spectra, const std::vector<CandidateSet>& candidates) {
  std::unordered_map<std::string, const RawSpectrum*> by_id;
  for (const auto& s : spectra) by_id.emplace(s.spectrum_id, &s);
  std::vector<std::pair<const RawSpectrum*, const CandidateSet*>> out;
  out.reserve(candidates.size());
  for (const auto& set : candidates) {
    const auto it = by_id.find(set.spectrum_id);
    if (it == by_id.end()) throw DataError("no spectrum with id '" + set.spectrum_id + "'");
    out.emplace_back(it->second, &set);
  }
  return out;
}

std::optional<std::string> resolve_label(const RawSpectrum& spectrum, const CandidateSet& set) {
  if (set.label) return set.label;
  return spectrum.label;
}

Peptide ingest_peptide(const std::string& text, const MassTable& table) {
  return parse_peptide(text, table).truncated(kMaxIngestLength);
}

TrainingSet build_training_set(const std::vector<RawSpectrum>& spectra,
                               const std::vector<CandidateSet>& candidates, const MassTable& table,
                               const BuildOptions& options) {
  const PeptideScorer scorer(table);
  TrainingSet out;
  auto exclude = [&](const std::string& id, std::string reason) {
    if (options.strict) throw DataError("spectrum '" + id + "': " + reason);
    out.excluded.push_back({id, std::move(reason)});
  };
  for (const auto& [raw, set] : join_by_id(spectra, candidates)) {
    const auto label_text = resolve_label(*raw, *set);
    if (!label_text) throw DataError("spectrum '" + set->spectrum_id + "' has no label");
    TrainingInstance inst;
    inst.label = ingest_peptide(*label_text, table);
    if (!validate_precursor(*raw, inst.label, table, options.precursor)) {
      exclude(set->spectrum_id, "precursor outside tolerance of the label");
      continue;
    }
    auto processed = preprocess_spectrum(*raw, options.preprocess);
    if (!processed) {
      exclude(set->spectrum_id, "no peaks left after filtering");
      continue;
    }
    inst.spectrum = std::move(*processed);
    bool too_long = false;
    for (const auto& c : set->candidates) {
      inst.models.push_back(c.model);
      inst.candidates.push_back(ingest_peptide(c.peptide, table));
      too_long = too_long || inst.candidates.back().size() > options.max_len;
    }
    if (too_long) {
      exclude(set->spectrum_id, "candidate longer than max_len " + std::to_string(options.max_len));
      continue;
    }
    const bool all_correct = std::all_of(inst.candidates.begin(), inst.candidates.end(), [&](const Peptide& p) {
      return aa_match(p, inst.label, table).peptide_matched;
    });
    if (all_correct) {
      out.excluded.push_back({set->spectrum_id, "every candidate matches the label"});
      continue;
    }
    std::size_t longest = 0;
    for (const auto& c : inst.candidates) longest = std::max(longest, c.size());
    inst.width = longest + 1;
    inst.rmd_targets.assign(inst.candidates.size() * longest, 0.0);
    for (std::size_t r = 0; r < inst.candidates.size(); ++r) {
      inst.pmd_targets.push_back(scorer.pmd(inst.candidates[r], inst.label));
      const auto v = scorer.rmd(inst.candidates[r], inst.label);
      std::copy(v.begin(), v.end(), inst.rmd_targets.begin() + r * longest);
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace peprank
