// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "peprank/mass.hpp"

namespace peprank {

struct Peak {
  double mz = 0.0;
  double intensity = 0.0;

  bool operator==(const Peak&) const = default;
};

struct RawSpectrum {
  std::string spectrum_id;
  std::vector<Peak> peaks;  // ascending m/z
  Precursor precursor;
  std::optional<std::string> label;
};

struct PreprocessConfig {
  double min_mz = 50.5;
  double max_mz = 4500.0;
  std::size_t max_peaks = 300;
};

/// Peaks filtered to the m/z window, truncated to the most intense
/// max_peaks and normalized as sqrt(I) / sum(sqrt(I)).
struct ProcessedSpectrum {
  std::string spectrum_id;
  std::vector<double> mz;
  std::vector<double> intensity;      // normalized
  std::vector<double> raw_intensity;  // as read, for re-export
  Precursor precursor;
  std::optional<std::string> label;

  std::size_t size() const { return mz.size(); }

  /// The retained peaks with their original intensities.
  RawSpectrum to_raw() const;
};

std::vector<RawSpectrum> parse_mgf(std::istream& in);
std::vector<RawSpectrum> parse_mgf_file(const std::string& path);
void write_mgf(std::ostream& out, const std::vector<RawSpectrum>& spectra);

/// Returns nullopt when no peak survives filtering.
std::optional<ProcessedSpectrum> preprocess_spectrum(const RawSpectrum& raw,
                                                     const PreprocessConfig& config = {});

struct PrecursorTolerance {
  double mz_da = 2.0;
  double ppm = 50.0;
};

bool validate_precursor(const RawSpectrum& spectrum, const Peptide& label, const MassTable& table,
                        PrecursorTolerance tol = {});

struct Exclusion {
  std::string spectrum_id;
  std::string reason;
};

struct PreprocessResult {
  std::vector<ProcessedSpectrum> spectra;
  std::vector<Exclusion> excluded;
};

/// Preprocesses a batch. Empty spectra (and, when a table is given, labeled
/// spectra failing the precursor gates) are excluded and reported; with
/// strict set, the first exclusion throws DataError instead.
PreprocessResult preprocess_all(const std::vector<RawSpectrum>& raw,
                                const PreprocessConfig& config, bool strict,
                                const MassTable* validate_with = nullptr,
                                PrecursorTolerance tol = {});

}  // namespace peprank
