// SPDX-License-Identifier: Apache-2.0
#include "peprank/mass.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "peprank/errors.hpp"
#include "peprank/text.hpp"

namespace peprank {

using text::trim;

MassTable MassTable::from_entries(std::vector<std::pair<std::string, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  MassTable table;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [token, mass] = entries[i];
    if (token.empty()) throw DataError("mass table: empty token");
    if (i > 0 && entries[i - 1].first == token)
      throw DataError("mass table: duplicate token '" + token + "'");
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw DataError("mass table: non-positive mass for token '" + token + "'");
    table.tokens_.push_back(token);
    table.masses_.push_back(mass);
  }
  if (table.size() < 2) throw DataError("mass table: at least two residues are required");
  return table;
}

MassTable MassTable::load(std::istream& in) {
  std::vector<std::pair<std::string, double>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError("mass table line " + std::to_string(line_no) + ": expected token<TAB>mass");
    const auto token = trim(view.substr(0, tab));
    const auto value = trim(view.substr(tab + 1));
    double mass = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), mass);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw ParseError("mass table line " + std::to_string(line_no) + ": unparseable mass '" +
                       std::string(value) + "'");
    entries.emplace_back(std::string(token), mass);
  }
  if (entries.empty()) throw DataError("mass table: no entries");
  return from_entries(std::move(entries));
}

MassTable MassTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mass table '" + path + "'");
  return load(in);
}

const MassTable& MassTable::default_table() {
  static const MassTable table = from_entries({
      {"G", 57.02146},  {"A", 71.03711},  {"S", 87.03203},  {"P", 97.05276},
      {"V", 99.06841},  {"T", 101.04768}, {"C", 103.00919}, {"L", 113.08406},
      {"I", 113.08406}, {"N", 114.04293}, {"D", 115.02694}, {"Q", 128.05858},
      {"K", 128.09496}, {"E", 129.04259}, {"M", 131.04049}, {"H", 137.05891},
      {"F", 147.06841}, {"R", 156.10111}, {"Y", 163.06333}, {"W", 186.07931},
      // Oxidation (M), deamidation (N, Q)
      {"M(O)", 147.03540}, {"N(D)", 115.02695}, {"Q(D)", 129.04260},
  });
  return table;
}

std::optional<std::size_t> MassTable::index_of(std::string_view token) const {
  const auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token,
                                   [](const std::string& a, std::string_view b) { return a < b; });
  if (it == tokens_.end() || *it != token) return std::nullopt;
  return static_cast<std::size_t>(it - tokens_.begin());
}

std::size_t MassTable::require_index(std::string_view token) const {
  if (auto idx = index_of(token)) return *idx;
  throw UnknownTokenError("unknown residue token '" + std::string(token) + "'");
}

double MassTable::mass(std::string_view token) const { return masses_[require_index(token)]; }

void MassTable::write(std::ostream& out) const {
  for (std::size_t i = 0; i < size(); ++i) {
    out << tokens_[i] << '\t' << text::format_double(masses_[i]) << '\n';
  }
}

std::string Peptide::render() const {
  std::string out;
  for (const auto& r : residues) out += r;
  return out;
}

Peptide Peptide::reversed() const {
  Peptide p{residues};
  std::reverse(p.residues.begin(), p.residues.end());
  return p;
}

Peptide Peptide::truncated(std::size_t max_len) const {
  Peptide p{residues};
  if (p.residues.size() > max_len) p.residues.resize(max_len);
  return p;
}

Peptide parse_peptide(std::string_view text, const MassTable& table, bool allow_empty) {
  text = trim(text);
  if (text.empty() && !allow_empty) throw DataError("empty peptide");
  Peptide peptide;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '(' || c == ')')
      throw ParseError("dangling '" + std::string(1, c) + "' at offset " + std::to_string(pos) +
                       " in '" + std::string(text) + "'");
    std::size_t end = pos + 1;
    if (end < text.size() && text[end] == '(') {
      const auto close = text.find(')', end);
      if (close == std::string_view::npos)
        throw ParseError("unclosed '(' in '" + std::string(text) + "'");
      if (text.substr(end + 1, close - end - 1).find('(') != std::string_view::npos)
        throw ParseError("nested '(' in '" + std::string(text) + "'");
      end = close + 1;
    }
    auto token = text.substr(pos, end - pos);
    table.require_index(token);
    peptide.residues.emplace_back(token);
    pos = end;
  }
  return peptide;
}

std::vector<double> residue_masses(const Peptide& peptide, const MassTable& table) {
  std::vector<double> out;
  out.reserve(peptide.size());
  for (const auto& r : peptide.residues) out.push_back(table.mass(r));
  return out;
}

std::vector<double> cumulative_masses(const Peptide& peptide, const MassTable& table,
                                      Direction direction) {
  auto masses = residue_masses(peptide, table);
  if (direction == Direction::kPrefix) {
    std::partial_sum(masses.begin(), masses.end(), masses.begin());
  } else {
    std::partial_sum(masses.rbegin(), masses.rend(), masses.rbegin());
  }
  return masses;
}

double peptide_neutral_mass(const Peptide& peptide, const MassTable& table) {
  double total = 0.0;
  for (const auto& r : peptide.residues) total += table.mass(r);
  return total + kWaterMass;
}

double precursor_neutral_mass(double mz, int charge) {
  if (charge <= 0) throw DomainError("precursor charge must be positive, got " + std::to_string(charge));
  if (!(mz > kProtonMass)) throw DomainError("precursor m/z must exceed the proton mass");
  return (mz - kProtonMass) * charge;
}

double theoretical_mz(double neutral_mass, int charge) {
  if (charge <= 0) throw DomainError("charge must be positive, got " + std::to_string(charge));
  return neutral_mass / charge + kProtonMass;
}

Precursor Precursor::from_mz(double mz, int charge) {
  return Precursor{mz, charge, precursor_neutral_mass(mz, charge)};
}

Precursor Precursor::from_neutral_mass(double neutral_mass, int charge) {
  return Precursor{theoretical_mz(neutral_mass, charge), charge, neutral_mass};
}

}  // namespace peprank
