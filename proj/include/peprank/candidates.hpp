// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace peprank {

struct CandidateEntry {
  std::string model;
  std::string peptide;
  bool operator==(const CandidateEntry&) const = default;
};

/// One spectrum's candidate list, in file order.
struct CandidateSet {
  std::string spectrum_id;
  std::vector<CandidateEntry> candidates;
  std::optional<std::string> label;
  bool operator==(const CandidateSet&) const = default;
};

/// JSON Lines: {"spectrum_id", "candidates": [{"model", "peptide"}], "label"?}.
/// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<CandidateSet> load_candidates(std::istream& in);
std::vector<CandidateSet> load_candidates_file(const std::string& path);
void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets);

/// Distinct model names in order of first appearance.
std::vector<std::string> model_names(const std::vector<CandidateSet>& sets);

}  // namespace peprank
