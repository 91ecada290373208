// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "peprank/mass.hpp"

namespace peprank {

/// Pairwise residue mass divergence |M(r_i) - M(r_j)| over a table's tokens
/// (row-major, table index order).
class DivergenceMatrix {
 public:
  explicit DivergenceMatrix(const MassTable& table);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

DivergenceMatrix divergence_matrix(const MassTable& table);

/// Mean off-diagonal divergence; throws DataError for degenerate tables (g == 0).
double gap_penalty(const MassTable& table);

/// Precomputed divergence matrix and gap for one table. Read-only after
/// construction, so a single instance can be shared across threads.
class PeptideScorer {
 public:
  explicit PeptideScorer(const MassTable& table);

  const MassTable& table() const { return *table_; }
  double gap() const { return gap_; }
  const DivergenceMatrix& divergence() const { return divergence_; }

  /// Alignment cost F[|Q|][|K|] / g.
  double pmd(const Peptide& query, const Peptide& target) const;

  /// Signed deviation of each query prefix mass from its nearest target
  /// prefix mass (lowest target index on ties).
  std::vector<double> rmd(const Peptide& query, const Peptide& target) const;

 private:
  const MassTable* table_;
  DivergenceMatrix divergence_;
  double gap_;
};

double pmd(const Peptide& query, const Peptide& target, const MassTable& table);

/// Exhaustive enumeration of all monotone alignments. Test oracle for pmd();
/// limited to |Q| + |K| <= 12.
double pmd_bruteforce(const Peptide& query, const Peptide& target, const MassTable& table);

std::vector<double> rmd(const Peptide& query, const Peptide& target, const MassTable& table);

}  // namespace peprank
