// SPDX-License-Identifier: Apache-2.0
#include "peprank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "peprank/errors.hpp"

namespace peprank {

namespace {

std::vector<std::size_t> token_indices(const Peptide& p, const MassTable& table) {
  std::vector<std::size_t> out;
  out.reserve(p.size());
  for (const auto& r : p.residues) out.push_back(table.require_index(r));
  return out;
}

// Enumerates every monotone alignment of q[i..] against k[j..].
double best_alignment(const std::vector<std::size_t>& q, const std::vector<std::size_t>& k,
                      std::size_t i, std::size_t j, const DivergenceMatrix& div, double gap) {
  if (i == q.size() && j == k.size()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  if (i < q.size() && j < k.size())
    best = std::min(best, div(q[i], k[j]) + best_alignment(q, k, i + 1, j + 1, div, gap));
  if (i < q.size()) best = std::min(best, gap + best_alignment(q, k, i + 1, j, div, gap));
  if (j < k.size()) best = std::min(best, gap + best_alignment(q, k, i, j + 1, div, gap));
  return best;
}

}  // namespace

DivergenceMatrix::DivergenceMatrix(const MassTable& table) : n_(table.size()), values_(n_ * n_) {
  if (n_ < 2) throw DataError("divergence matrix needs at least two residues");
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      values_[i * n_ + j] = i == j ? 0.0 : std::abs(table.mass_at(i) - table.mass_at(j));
}

DivergenceMatrix divergence_matrix(const MassTable& table) { return DivergenceMatrix(table); }

double gap_penalty(const MassTable& table) {
  const DivergenceMatrix div(table);
  const std::size_t n = div.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sum += div(i, j);
  const double g = sum / static_cast<double>(n * (n - 1));
  if (!(g > 0.0)) throw DataError("degenerate mass table: all residue masses are identical");
  return g;
}

PeptideScorer::PeptideScorer(const MassTable& table)
    : table_(&table), divergence_(table), gap_(gap_penalty(table)) {}

double PeptideScorer::pmd(const Peptide& query, const Peptide& target) const {
  const auto q = token_indices(query, *table_);
  const auto k = token_indices(target, *table_);
  const std::size_t cols = k.size() + 1;
  // Two rolling rows of F.
  std::vector<double> prev(cols), curr(cols);
  for (std::size_t j = 0; j < cols; ++j) prev[j] = gap_ * static_cast<double>(j);
  for (std::size_t i = 1; i <= q.size(); ++i) {
    curr[0] = gap_ * static_cast<double>(i);
    for (std::size_t j = 1; j < cols; ++j) {
      curr[j] = std::min({prev[j - 1] + divergence_(q[i - 1], k[j - 1]), prev[j] + gap_,
                          curr[j - 1] + gap_});
    }
    std::swap(prev, curr);
  }
  return prev[k.size()] / gap_;
}

std::vector<double> PeptideScorer::rmd(const Peptide& query, const Peptide& target) const {
  if (target.empty()) throw DataError("rmd: target peptide is empty");
  if (query.empty()) throw DataError("rmd: query peptide is empty");
  const auto qp = cumulative_masses(query, *table_, Direction::kPrefix);
  const auto kp = cumulative_masses(target, *table_, Direction::kPrefix);
  std::vector<double> out(qp.size());
  // Target prefixes are strictly increasing, so a forward-moving pointer finds
  // the nearest one for the (also increasing) query prefixes.
  std::size_t j = 0;
  for (std::size_t i = 0; i < qp.size(); ++i) {
    while (j + 1 < kp.size() && std::abs(qp[i] - kp[j + 1]) < std::abs(qp[i] - kp[j])) ++j;
    out[i] = qp[i] - kp[j];
  }
  return out;
}

double pmd(const Peptide& query, const Peptide& target, const MassTable& table) {
  return PeptideScorer(table).pmd(query, target);
}

double pmd_bruteforce(const Peptide& query, const Peptide& target, const MassTable& table) {
  if (query.size() + target.size() > 12)
    throw DomainError("pmd_bruteforce: |Q| + |K| must not exceed 12");
  const DivergenceMatrix div(table);
  const double gap = gap_penalty(table);
  return best_alignment(token_indices(query, table), token_indices(target, table), 0, 0, div,
                        gap) /
         gap;
}

std::vector<double> rmd(const Peptide& query, const Peptide& target, const MassTable& table) {
  return PeptideScorer(table).rmd(query, target);
}

}  // namespace peprank
