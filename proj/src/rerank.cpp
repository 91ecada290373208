// SPDX-License-Identifier: Apache-2.0
#include "peprank/rerank.hpp"

#include <istream>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "peprank/dataset.hpp"
#include "peprank/errors.hpp"
#include "peprank/text.hpp"

namespace peprank {

Selection rerank_one(const RerankModel& model, const ProcessedSpectrum& spectrum, const CandidateSet& set) {
  std::vector<Peptide> peptides;
  for (const auto& c : set.candidates) {
    peptides.push_back(ingest_peptide(c.peptide, model.table()));
    if (peptides.back().size() > model.config().max_len)
      throw DataError("spectrum '" + set.spectrum_id + "': candidate '" + c.peptide + "' is longer than max_len " +
                      std::to_string(model.config().max_len));
  }
  ag::NoGradGuard guard;
  const auto out = model.forward(spectrum, peptides, {});
  Selection sel;
  sel.spectrum_id = set.spectrum_id;
  sel.scores.assign(out.pmd_pred.values().begin(), out.pmd_pred.values().end());
  sel.selected_index = rerank_select(sel.scores);
  sel.selected_model = set.candidates[sel.selected_index].model;
  sel.selected_peptide = set.candidates[sel.selected_index].peptide;
  return sel;
}

std::vector<Selection> rerank_run(const RerankModel& model, const std::vector<RawSpectrum>& spectra,
                                  const std::vector<CandidateSet>& candidates, const PreprocessConfig& preprocess,
                                  std::size_t workers) {
  const auto joined = join_by_id(spectra, candidates);
  std::vector<Selection> out(joined.size());
  std::vector<std::exception_ptr> errors(std::max<std::size_t>(workers, 1));
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < joined.size(); i += errors.size()) {
        const auto processed = preprocess_spectrum(*joined[i].first, preprocess);
        if (!processed) throw DataError("spectrum '" + joined[i].first->spectrum_id + "' has no peaks after filtering");
        out[i] = rerank_one(model, *processed, *joined[i].second);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < errors.size(); ++w) threads.emplace_back(work, w);
  work(0);
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_selections(std::ostream& out, const std::vector<Selection>& selections) {
  out << "spectrum_id\tselected_index\tselected_model\tselected_peptide\tscores\n";
  for (const auto& s : selections)
    out << s.spectrum_id << '\t' << s.selected_index << '\t' << s.selected_model << '\t' << s.selected_peptide
        << '\t' << text::join_doubles(s.scores) << '\n';
}

std::vector<Selection> read_selections(std::istream& in) {
  std::vector<Selection> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, '\t');
    if (n == 1) {
      if (cols.size() != 5 || cols[0] != "spectrum_id") throw ParseError("selections: missing header row");
      continue;
    }
    if (cols.size() != 5) throw ParseError("selections line " + std::to_string(n) + ": expected 5 columns");
    Selection s;
    s.spectrum_id = cols[0];
    s.selected_index = static_cast<std::size_t>(text::parse_int(cols[1], "selected_index"));
    s.selected_model = cols[2];
    s.selected_peptide = cols[3];
    for (const auto& v : text::split(cols[4], ',')) s.scores.push_back(text::parse_double(v, "score"));
    if (s.selected_index >= s.scores.size())
      throw ParseError("selections line " + std::to_string(n) + ": selected_index out of range");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CandidateSet> filter_models(const std::vector<CandidateSet>& candidates,
                                        const std::set<std::string>& models) {
  std::vector<CandidateSet> out;
  out.reserve(candidates.size());
  for (const auto& set : candidates) {
    CandidateSet kept{set.spectrum_id, {}, set.label};
    for (const auto& c : set.candidates)
      if (models.count(c.model)) kept.candidates.push_back(c);
    if (kept.candidates.empty())
      throw DataError("spectrum '" + set.spectrum_id + "' has no candidates from the selected models");
    out.push_back(std::move(kept));
  }
  return out;
}

CorpusStats score_selections(const std::vector<Selection>& selections, const std::vector<RawSpectrum>& spectra,
                             const std::vector<CandidateSet>& candidates, const MassTable& table) {
  std::unordered_map<std::string, std::string> labels;
  for (const auto& [raw, set] : join_by_id(spectra, candidates))
    if (auto l = resolve_label(*raw, *set)) labels.emplace(set->spectrum_id, *l);
  std::vector<PredictionPair> pairs;
  for (const auto& s : selections) {
    const auto it = labels.find(s.spectrum_id);
    if (it == labels.end()) throw DataError("no label for spectrum '" + s.spectrum_id + "'");
    pairs.push_back({ingest_peptide(s.selected_peptide, table), ingest_peptide(it->second, table)});
  }
  return corpus_stats(pairs, table);
}

std::vector<SubsetResult> zero_shot_eval(const RerankModel& model, const std::vector<RawSpectrum>& spectra,
                                         const std::vector<CandidateSet>& candidates,
                                         const std::vector<std::set<std::string>>& subsets,
                                         const PreprocessConfig& preprocess, std::size_t workers) {
  const auto names = model_names(candidates);
  const std::set<std::string> present(names.begin(), names.end());
  std::vector<SubsetResult> out;
  for (const auto& subset : subsets) {
    if (subset.empty()) throw DataError("zero-shot: empty model subset");
    for (const auto& m : subset)
      if (!present.count(m)) throw DataError("zero-shot: model '" + m + "' does not occur in the candidates");
    const auto filtered = filter_models(candidates, subset);
    const auto selections = rerank_run(model, spectra, filtered, preprocess, workers);
    out.push_back({subset, score_selections(selections, spectra, filtered, model.table())});
  }
  return out;
}

}  // namespace peprank
