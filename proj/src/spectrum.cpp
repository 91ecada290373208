// SPDX-License-Identifier: Apache-2.0
#include "peprank/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "peprank/errors.hpp"
#include "peprank/text.hpp"

namespace peprank {

namespace {

struct BlockState {
  std::string title;
  std::optional<double> pepmass;
  std::optional<int> charge;
  std::optional<std::string> seq;
  std::vector<Peak> peaks;
  std::size_t start_line = 0;
};

std::string block_name(const BlockState& b, std::size_t index) {
  if (!b.title.empty()) return "'" + b.title + "'";
  return "#" + std::to_string(index) + " (line " + std::to_string(b.start_line) + ")";
}

int parse_charge(std::string_view value, std::string_view where) {
  // "2+", "+2", "2", "2+ and 3+" -> first charge
  value = text::trim(value);
  std::string digits;
  for (char c : value) {
    if (c >= '0' && c <= '9') {
      digits += c;
    } else if (!digits.empty()) {
      break;
    }
  }
  if (digits.empty()) throw ParseError(std::string(where) + ": bad CHARGE '" + std::string(value) + "'");
  if (value.find('-') != std::string_view::npos)
    throw ParseError(std::string(where) + ": negative CHARGE is not supported");
  return static_cast<int>(text::parse_int(digits, where));
}

RawSpectrum finish_block(BlockState& b, std::size_t index) {
  const auto name = "MGF block " + block_name(b, index);
  if (!b.pepmass) throw ParseError(name + ": missing PEPMASS");
  if (!b.charge) throw ParseError(name + ": missing CHARGE");
  RawSpectrum s;
  s.spectrum_id = b.title.empty() ? std::to_string(index) : b.title;
  try {
    s.precursor = Precursor::from_mz(*b.pepmass, *b.charge);
  } catch (const DomainError& e) {
    throw ParseError(name + ": " + e.what());
  }
  s.label = b.seq;
  s.peaks = std::move(b.peaks);
  std::stable_sort(s.peaks.begin(), s.peaks.end(),
                   [](const Peak& a, const Peak& c) { return a.mz < c.mz; });
  return s;
}

}  // namespace

RawSpectrum ProcessedSpectrum::to_raw() const {
  RawSpectrum raw;
  raw.spectrum_id = spectrum_id;
  raw.precursor = precursor;
  raw.label = label;
  for (std::size_t i = 0; i < mz.size(); ++i) raw.peaks.push_back({mz[i], raw_intensity[i]});
  return raw;
}

std::vector<RawSpectrum> parse_mgf(std::istream& in) {
  std::vector<RawSpectrum> out;
  std::optional<BlockState> block;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = text::trim(line);
    if (view.empty()) continue;
    if (!block) {
      if (view == "BEGIN IONS") {
        block.emplace();
        block->start_line = line_no;
      } else if (view.front() != '#' && view.find('=') == std::string_view::npos) {
        throw ParseError("MGF line " + std::to_string(line_no) + ": content outside BEGIN/END IONS");
      }
      continue;
    }
    if (view == "END IONS") {
      out.push_back(finish_block(*block, out.size()));
      block.reset();
      continue;
    }
    if (view == "BEGIN IONS")
      throw ParseError("MGF line " + std::to_string(line_no) + ": nested BEGIN IONS");
    const auto where = "MGF line " + std::to_string(line_no);
    if (const auto eq = view.find('='); eq != std::string_view::npos &&
                                        !(view.front() >= '0' && view.front() <= '9')) {
      const auto key = view.substr(0, eq);
      const auto value = text::trim(view.substr(eq + 1));
      if (key == "TITLE") {
        block->title = std::string(value);
      } else if (key == "PEPMASS") {
        const auto first = value.substr(0, value.find_first_of(" \t"));
        block->pepmass = text::parse_double(first, where + " PEPMASS");
      } else if (key == "CHARGE") {
        block->charge = parse_charge(value, where);
      } else if (key == "SEQ") {
        block->seq = std::string(value);
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < view.size()) {
      const auto start = view.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const auto end = view.find_first_of(" \t", start);
      fields.push_back(view.substr(start, end == std::string_view::npos ? end : end - start));
      pos = end == std::string_view::npos ? view.size() : end;
    }
    if (fields.size() < 2)
      throw ParseError(where + ": malformed peak line in block " + block_name(*block, out.size()));
    Peak p{text::parse_double(fields[0], where + " m/z"),
           text::parse_double(fields[1], where + " intensity")};
    if (p.intensity < 0.0 || !std::isfinite(p.intensity) || !std::isfinite(p.mz))
      throw ParseError(where + ": invalid peak values");
    block->peaks.push_back(p);
  }
  if (block)
    throw ParseError("MGF block " + block_name(*block, out.size()) + ": unterminated (missing END IONS)");
  return out;
}

std::vector<RawSpectrum> parse_mgf_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open MGF file '" + path + "'");
  return parse_mgf(in);
}

void write_mgf(std::ostream& out, const std::vector<RawSpectrum>& spectra) {
  for (const auto& s : spectra) {
    out << "BEGIN IONS\n";
    out << "TITLE=" << s.spectrum_id << '\n';
    out << "PEPMASS=" << text::format_double(s.precursor.mz) << '\n';
    out << "CHARGE=" << s.precursor.charge << "+\n";
    if (s.label) out << "SEQ=" << *s.label << '\n';
    for (const auto& p : s.peaks)
      out << text::format_double(p.mz) << ' ' << text::format_double(p.intensity) << '\n';
    out << "END IONS\n\n";
  }
}

std::optional<ProcessedSpectrum> preprocess_spectrum(const RawSpectrum& raw,
                                                     const PreprocessConfig& config) {
  std::vector<Peak> kept;
  for (const auto& p : raw.peaks)
    if (p.mz >= config.min_mz && p.mz <= config.max_mz) kept.push_back(p);
  if (kept.empty()) return std::nullopt;

  if (kept.size() > config.max_peaks) {
    // Most intense first; ties keep the lower m/z.
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) {
      if (a.intensity != b.intensity) return a.intensity > b.intensity;
      return a.mz < b.mz;
    });
    kept.resize(config.max_peaks);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.mz < b.mz; });

  ProcessedSpectrum out;
  out.spectrum_id = raw.spectrum_id;
  out.precursor = raw.precursor;
  out.label = raw.label;
  double total = 0.0;
  for (const auto& p : kept) total += std::sqrt(p.intensity);
  if (!(total > 0.0)) return std::nullopt;
  for (const auto& p : kept) {
    out.mz.push_back(p.mz);
    out.raw_intensity.push_back(p.intensity);
    out.intensity.push_back(std::sqrt(p.intensity) / total);
  }
  return out;
}

bool validate_precursor(const RawSpectrum& spectrum, const Peptide& label, const MassTable& table,
                        PrecursorTolerance tol) {
  const double mass = peptide_neutral_mass(label, table);
  const double mz = theoretical_mz(mass, spectrum.precursor.charge);
  const bool mz_ok = std::abs(spectrum.precursor.mz - mz) <= tol.mz_da;
  const bool ppm_ok = std::abs(spectrum.precursor.neutral_mass - mass) / mass <= tol.ppm * 1e-6;
  return mz_ok && ppm_ok;
}

PreprocessResult preprocess_all(const std::vector<RawSpectrum>& raw,
                                const PreprocessConfig& config, bool strict,
                                const MassTable* validate_with, PrecursorTolerance tol) {
  PreprocessResult result;
  auto exclude = [&](const RawSpectrum& s, std::string reason) {
    if (strict) throw DataError("spectrum '" + s.spectrum_id + "': " + reason);
    result.excluded.push_back({s.spectrum_id, std::move(reason)});
  };
  for (const auto& s : raw) {
    if (validate_with && s.label) {
      const auto label = parse_peptide(*s.label, *validate_with);
      if (!validate_precursor(s, label, *validate_with, tol)) {
        exclude(s, "precursor outside tolerance");
        continue;
      }
    }
    auto processed = preprocess_spectrum(s, config);
    if (!processed) {
      exclude(s, "no peaks left after filtering");
      continue;
    }
    result.spectra.push_back(std::move(*processed));
  }
  return result;
}

}  // namespace peprank
