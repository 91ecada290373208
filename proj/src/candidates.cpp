// SPDX-License-Identifier: Apache-2.0
#include "peprank/candidates.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "peprank/errors.hpp"
#include "peprank/text.hpp"

namespace peprank {

namespace {

using nlohmann::json;

std::string required_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError("line " + std::to_string(line) + ": missing field '" + key + "'");
  if (!it->is_string())
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<CandidateSet> load_candidates(std::istream& in) {
  std::vector<CandidateSet> out;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = text::trim(raw);
    if (body.empty()) continue;
    json record;
    try {
      record = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    if (!record.is_object()) throw DataError("line " + std::to_string(line) + ": record must be an object");
    CandidateSet set;
    set.spectrum_id = required_string(record, "spectrum_id", line);
    const auto it = record.find("candidates");
    if (it == record.end()) throw DataError("line " + std::to_string(line) + ": missing field 'candidates'");
    if (!it->is_array()) throw DataError("line " + std::to_string(line) + ": 'candidates' must be an array");
    if (it->empty()) throw DataError("line " + std::to_string(line) + ": empty candidate list for '" + set.spectrum_id + "'");
    for (const auto& c : *it) {
      if (!c.is_object()) throw DataError("line " + std::to_string(line) + ": candidate must be an object");
      set.candidates.push_back({required_string(c, "model", line), required_string(c, "peptide", line)});
      if (set.candidates.back().peptide.empty())
        throw DataError("line " + std::to_string(line) + ": empty candidate peptide");
    }
    if (const auto lab = record.find("label"); lab != record.end() && !lab->is_null()) {
      if (!lab->is_string()) throw DataError("line " + std::to_string(line) + ": 'label' must be a string");
      set.label = lab->get<std::string>();
    }
    if (!seen.insert(set.spectrum_id).second)
      throw DataError("line " + std::to_string(line) + ": duplicate spectrum_id '" + set.spectrum_id + "'");
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<CandidateSet> load_candidates_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open candidate file '" + path + "'");
  return load_candidates(in);
}

void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets) {
  for (const auto& set : sets) {
    json record;
    record["spectrum_id"] = set.spectrum_id;
    record["candidates"] = json::array();
    for (const auto& c : set.candidates) record["candidates"].push_back({{"model", c.model}, {"peptide", c.peptide}});
    if (set.label) record["label"] = *set.label;
    out << record.dump() << '\n';
  }
}

std::vector<std::string> model_names(const std::vector<CandidateSet>& sets) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& set : sets)
    for (const auto& c : set.candidates)
      if (seen.insert(c.model).second) names.push_back(c.model);
  return names;
}

}  // namespace peprank
