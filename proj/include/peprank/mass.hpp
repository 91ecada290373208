// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace peprank {

inline constexpr double kWaterMass = 18.010565;
inline constexpr double kProtonMass = 1.007276;

/// Residue token -> monoisotopic mass. Tokens are kept sorted by symbol so
/// that the index of a token (used for embedding lookups) does not depend on
/// the order of the source file.
class MassTable {
 public:
  MassTable() = default;

  /// Validates uniqueness, positivity and n >= 2.
  static MassTable from_entries(std::vector<std::pair<std::string, double>> entries);

  /// Parses "token<TAB>mass" lines; '#' starts a comment.
  static MassTable load(std::istream& in);
  static MassTable load_file(const std::string& path);

  /// 20 canonical residues plus M(O), N(D), Q(D).
  static const MassTable& default_table();

  std::size_t size() const { return tokens_.size(); }
  std::span<const std::string> tokens() const { return tokens_; }
  std::span<const double> masses() const { return masses_; }

  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  double mass_at(std::size_t index) const { return masses_.at(index); }

  std::optional<std::size_t> index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token).has_value(); }

  /// Throws UnknownTokenError.
  double mass(std::string_view token) const;
  std::size_t require_index(std::string_view token) const;

  void write(std::ostream& out) const;

  bool operator==(const MassTable&) const = default;

 private:
  std::vector<std::string> tokens_;
  std::vector<double> masses_;
};

enum class Direction { kPrefix, kSuffix };

/// Ordered residue tokens, e.g. [M(O), K].
struct Peptide {
  std::vector<std::string> residues;

  std::size_t size() const { return residues.size(); }
  bool empty() const { return residues.empty(); }
  const std::string& operator[](std::size_t i) const { return residues[i]; }

  /// Concatenated token text; parse_peptide(render()) round-trips.
  std::string render() const;
  Peptide reversed() const;
  Peptide truncated(std::size_t max_len) const;

  bool operator==(const Peptide&) const = default;
};

/// Longest peptide kept at ingestion boundaries.
inline constexpr std::size_t kMaxIngestLength = 100;

/// Greedy left-to-right tokenizer: a base letter optionally followed by one
/// parenthesized modification group forms a single token.
Peptide parse_peptide(std::string_view text, const MassTable& table, bool allow_empty = false);

std::vector<double> residue_masses(const Peptide& peptide, const MassTable& table);

/// prefix[i] = sum_{j<=i} M(r_j); suffix[i] = sum_{j>=i} M(r_j).
std::vector<double> cumulative_masses(const Peptide& peptide, const MassTable& table,
                                      Direction direction);

double peptide_neutral_mass(const Peptide& peptide, const MassTable& table);

/// (mz - proton) * charge.
double precursor_neutral_mass(double mz, int charge);

/// m/z of a peptide observed at the given charge.
double theoretical_mz(double neutral_mass, int charge);

struct Precursor {
  double mz = 0.0;
  int charge = 0;
  double neutral_mass = 0.0;

  static Precursor from_mz(double mz, int charge);
  static Precursor from_neutral_mass(double neutral_mass, int charge);
};

}  // namespace peprank
