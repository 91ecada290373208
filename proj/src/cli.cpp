// SPDX-License-Identifier: Apache-2.0
#include "peprank/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peprank/candidates.hpp"
#include "peprank/checkpoint.hpp"
#include "peprank/config.hpp"
#include "peprank/dataset.hpp"
#include "peprank/errors.hpp"
#include "peprank/evaluation.hpp"
#include "peprank/metrics.hpp"
#include "peprank/rerank.hpp"
#include "peprank/spectrum.hpp"
#include "peprank/synth.hpp"
#include "peprank/text.hpp"
#include "peprank/train.hpp"

namespace peprank {

namespace {

struct Globals {
  std::string mass_table;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool strict = false;
};

// Opens `path` for writing; "-" means the provided stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw DataError("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::string fmt(double v) { return text::format_double(v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  const MassTable& table() {
    if (!table_) {
      table_ = g_.mass_table.empty() ? MassTable::default_table() : MassTable::load_file(g_.mass_table);
    }
    return *table_;
  }

  RunConfig run_config() {
    RunConfig c = g_.config.empty() ? RunConfig{} : load_run_config(g_.config);
    if (g_.seed) c.seed = *g_.seed;
    c.train.workers = g_.workers;
    return c;
  }

  void echo(const std::string& command, const nlohmann::json& extra) {
    nlohmann::json j = extra;
    j["command"] = command;
    j["mass_table"] = g_.mass_table.empty() ? "default" : g_.mass_table;
    j["workers"] = g_.workers;
    j["strict"] = g_.strict;
    err_ << "config " << j.dump() << '\n';
  }

  void report_exclusions(const std::vector<Exclusion>& excluded) {
    for (const auto& e : excluded) err_ << "warning: excluded " << e.spectrum_id << ": " << e.reason << '\n';
  }

  // ---------------------------------------------------------------- metrics
  void metrics(const std::string& pairs_path, const std::string& out_path) {
    echo("metrics", {{"pairs", pairs_path}, {"out", out_path}});
    const auto& tab = table();
    const PeptideScorer scorer(tab);
    auto in = open_input(pairs_path);
    Output out(out_path, out_);
    *out << "query\ttarget\tpmd\trmd\n";
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (text::trim(line).empty() || line[0] == '#') continue;
      const auto cols = text::split(line, '\t');
      if (cols.size() != 2) throw DataError("pairs line " + std::to_string(n) + ": expected query<TAB>target");
      if (n == 1 && cols[0] == "query" && cols[1] == "target") continue;
      const auto q = parse_peptide(cols[0], tab, true);
      const auto k = parse_peptide(cols[1], tab, true);
      const double p = scorer.pmd(q, k);
      const std::string r = (q.empty() || k.empty()) ? "NA" : text::join_doubles(scorer.rmd(q, k));
      *out << cols[0] << '\t' << cols[1] << '\t' << fmt(p) << '\t' << r << '\n';
    }
  }

  // ------------------------------------------------------------- preprocess
  void preprocess(const std::string& mgf, const std::string& out_path, const std::string& report, bool validate) {
    const auto cfg = run_config();
    echo("preprocess", {{"mgf", mgf}, {"out", out_path}, {"report", report}, {"validate_precursor", validate},
                        {"preprocess", to_json(cfg)["preprocess"]}, {"precursor", to_json(cfg)["precursor"]}});
    const auto raw = parse_mgf_file(mgf);
    const auto result = preprocess_all(raw, cfg.preprocess, g_.strict, validate ? &table() : nullptr, cfg.precursor);
    std::vector<RawSpectrum> kept;
    for (const auto& s : result.spectra) kept.push_back(s.to_raw());
    Output out(out_path, out_);
    write_mgf(*out, kept);
    report_exclusions(result.excluded);
    if (!report.empty()) {
      Output rep(report, out_);
      *rep << "spectrum_id\treason\n";
      for (const auto& e : result.excluded) *rep << e.spectrum_id << '\t' << e.reason << '\n';
    }
  }

  // ------------------------------------------------------------------ synth
  void synth(std::size_t n, const std::string& mgf, const std::string& candidates) {
    const auto cfg = run_config();
    echo("synth", {{"n", n}, {"seed", cfg.seed}, {"out_mgf", mgf}, {"out_candidates", candidates},
                   {"synth", to_json(cfg)["synth"]}});
    const auto data = synthesize_dataset(cfg.seed, n, cfg.synth, table());
    Output m(mgf, out_);
    write_mgf(*m, data.spectra);
    Output c(candidates, out_);
    write_candidates(*c, data.candidates);
  }

  // ------------------------------------------------------------------ train
  struct TrainArgs {
    std::string mgf, candidates, out, log, profile;
    std::optional<std::size_t> epochs;
    std::optional<double> max_seconds;
  };

  void train_cmd(const TrainArgs& a) {
    auto cfg = run_config();
    if (!a.profile.empty()) {
      if (a.profile == "full") {
        const auto workers = cfg.train.workers;
        cfg.train = TrainConfig::full();
        cfg.train.workers = workers;
      } else if (a.profile != "desk") {
        throw DataError("unknown profile '" + a.profile + "'");
      }
      cfg.profile = a.profile;
    }
    if (a.epochs) cfg.train.epochs = *a.epochs;
    if (a.max_seconds) cfg.train.max_seconds = *a.max_seconds;
    cfg.train.validate();
    auto echoed = to_json(cfg);
    echoed["mgf"] = a.mgf;
    echoed["candidates"] = a.candidates;
    echoed["out"] = a.out;
    echo("train", echoed);

    const auto raw = parse_mgf_file(a.mgf);
    const auto sets = load_candidates_file(a.candidates);
    BuildOptions opts{cfg.preprocess, cfg.precursor, cfg.train.model.max_len, g_.strict};
    const auto data = build_training_set(raw, sets, table(), opts);
    report_exclusions(data.excluded);
    err_ << "training on " << data.instances.size() << " instances\n";
    RerankModel model(cfg.train.model, table(), cfg.seed);
    std::unique_ptr<Output> log;
    if (!a.log.empty()) {
      log = std::make_unique<Output>(a.log, out_);
      **log << "step\tepoch\tlr\tloss\tgrad_norm\n";
    }
    const auto result = train(model, data.instances, cfg.train, cfg.seed, [&](const StepLog& s) {
      if (log)
        **log << s.step << '\t' << s.epoch << '\t' << fmt(s.lr) << '\t' << fmt(s.loss) << '\t' << fmt(s.grad_norm)
              << '\n';
    });
    if (result.stopped_early) err_ << "warning: stopped after " << result.steps << " steps (time budget)\n";
    save_checkpoint_file(a.out, model, cfg.seed, result.steps);
  }

  // ----------------------------------------------------------------- rerank
  void rerank(const std::string& ckpt, const std::string& mgf, const std::string& candidates,
              const std::string& out_path) {
    const auto cfg = run_config();
    echo("rerank", {{"checkpoint", ckpt}, {"mgf", mgf}, {"candidates", candidates}, {"out", out_path},
                    {"preprocess", to_json(cfg)["preprocess"]}});
    const auto model = load_model(ckpt);
    const auto selections =
        rerank_run(model, parse_mgf_file(mgf), load_candidates_file(candidates), cfg.preprocess, g_.workers);
    Output out(out_path, out_);
    write_selections(*out, selections);
  }

  RerankModel load_model(const std::string& path) {
    auto model = model_from_checkpoint(load_checkpoint_file(path));
    if (!g_.mass_table.empty() && !(model.table() == table()))
      throw DataError("checkpoint mass table differs from --mass-table");
    return model;
  }

  // --------------------------------------------------------------- evaluate
  struct Labeled {
    std::vector<RawSpectrum> spectra;
    std::vector<CandidateSet> sets;
    std::map<std::string, std::string> labels;
    std::map<std::string, const CandidateSet*> by_id;
  };

  Labeled load_labeled(const std::string& mgf, const std::string& candidates) {
    Labeled l;
    l.spectra = parse_mgf_file(mgf);
    l.sets = load_candidates_file(candidates);
    for (const auto& [raw, set] : join_by_id(l.spectra, l.sets)) {
      if (auto lab = resolve_label(*raw, *set)) l.labels[set->spectrum_id] = *lab;
      l.by_id[set->spectrum_id] = set;
    }
    return l;
  }

  static void write_stats_row(std::ostream& out, const std::string& scope, const CorpusStats& s) {
    out << scope << '\t' << s.n_match_pep << '\t' << s.n_all_pep << '\t' << s.n_match_aa << '\t' << s.n_all_aa
        << '\t' << fmt(s.peptide_recall()) << '\t' << fmt(s.aa_precision()) << '\n';
  }

  void evaluate(const std::string& selections, const std::string& predictions, const std::string& mgf,
                const std::string& candidates, const std::string& out_path) {
    echo("evaluate", {{"selections", selections}, {"predictions", predictions}, {"mgf", mgf},
                      {"candidates", candidates}, {"out", out_path}});
    const auto& tab = table();
    std::vector<std::pair<std::string, CorpusStats>> rows;
    if (!predictions.empty()) {
      auto in = open_input(predictions);
      std::map<std::string, std::vector<PredictionPair>> by_model;
      std::vector<PredictionPair> all;
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
          throw peprank::ParseError("predictions line " + std::to_string(n) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("spectrum_id") || !j.contains("pred") || !j.contains("truth") ||
            !j["pred"].is_string() || !j["truth"].is_string())
          throw DataError("predictions line " + std::to_string(n) + ": need spectrum_id, pred and truth");
        PredictionPair p{parse_peptide(j["pred"].get<std::string>(), tab, true).truncated(kMaxIngestLength),
                         ingest_peptide(j["truth"].get<std::string>(), tab)};
        if (j.contains("model") && j["model"].is_string()) by_model[j["model"].get<std::string>()].push_back(p);
        all.push_back(std::move(p));
      }
      rows.emplace_back("all", corpus_stats(all, tab));
      for (const auto& [m, pairs] : by_model) rows.emplace_back("model:" + m, corpus_stats(pairs, tab));
    } else {
      if (selections.empty() || mgf.empty() || candidates.empty())
        throw CLI::ValidationError("evaluate needs --predictions, or --selections with --mgf and --candidates");
      auto in = open_input(selections);
      const auto sel = read_selections(in);
      const auto l = load_labeled(mgf, candidates);
      std::vector<PredictionPair> reranked;
      std::map<std::string, std::vector<PredictionPair>> per_model;
      const auto names = model_names(l.sets);
      for (const auto& s : sel) {
        const auto it = l.labels.find(s.spectrum_id);
        if (it == l.labels.end()) throw DataError("no label for spectrum '" + s.spectrum_id + "'");
        const auto truth = ingest_peptide(it->second, tab);
        reranked.push_back({ingest_peptide(s.selected_peptide, tab), truth});
        const auto set = l.by_id.find(s.spectrum_id);
        for (const auto& m : names) {
          Peptide first;  // a model missing from this spectrum counts as unmatched
          for (const auto& c : set->second->candidates)
            if (c.model == m) {
              first = ingest_peptide(c.peptide, tab);
              break;
            }
          per_model[m].push_back({first, truth});
        }
      }
      rows.emplace_back("reranked", corpus_stats(reranked, tab));
      for (const auto& m : names) rows.emplace_back("model:" + m, corpus_stats(per_model[m], tab));
    }
    Output out(out_path, out_);
    *out << "scope\tn_match_pep\tn_all_pep\tn_match_aa\tn_all_aa\tpeptide_recall\taa_precision\n";
    for (const auto& [scope, s] : rows) write_stats_row(*out, scope, s);
  }

  // ---------------------------------------------------------------- analyze
  struct AnalyzeArgs {
    std::string report, selections, mgf, candidates, checkpoint, subsets, bins, out;
  };

  std::vector<PredictionPair> selection_pairs(const std::vector<Selection>& sel, const Labeled& l) {
    std::vector<PredictionPair> pairs;
    for (const auto& s : sel) {
      const auto it = l.labels.find(s.spectrum_id);
      if (it == l.labels.end()) throw DataError("no label for spectrum '" + s.spectrum_id + "'");
      pairs.push_back({ingest_peptide(s.selected_peptide, table()), ingest_peptide(it->second, table())});
    }
    return pairs;
  }

  void analyze(const AnalyzeArgs& a) {
    const auto cfg = run_config();
    echo("analyze", {{"report", a.report}, {"selections", a.selections}, {"mgf", a.mgf},
                     {"candidates", a.candidates}, {"checkpoint", a.checkpoint}, {"subsets", a.subsets},
                     {"bins", a.bins}, {"out", a.out}});
    if (a.mgf.empty() || a.candidates.empty()) throw CLI::ValidationError("analyze needs --mgf and --candidates");
    const auto l = load_labeled(a.mgf, a.candidates);
    const auto& tab = table();
    Output out(a.out, out_);
    auto need_selections = [&] {
      if (a.selections.empty()) throw CLI::ValidationError("report '" + a.report + "' needs --selections");
      auto in = open_input(a.selections);
      return read_selections(in);
    };
    if (a.report == "lengths") {
      const auto pairs = selection_pairs(need_selections(), l);
      *out << "bin\tn_match\tn_all\trecall\n";
      for (const auto& b : length_binned_recall(pairs, tab, parse_length_bins(a.bins)))
        *out << b.bin.lo << '-' << b.bin.hi << '\t' << b.n_match << '\t' << b.n_all << '\t' << fmt_opt(b.recall)
             << '\n';
    } else if (a.report == "confusion") {
      const auto pairs = selection_pairs(need_selections(), l);
      *out << "token\thits\toccurrences\trecall\n";
      for (const auto& [tok, r] : residue_confusion(pairs, tab))
        *out << tok << '\t' << r.hits << '\t' << r.occurrences << '\t' << fmt(r.recall()) << '\n';
    } else if (a.report == "contribution") {
      const auto sel = need_selections();
      std::vector<SelectionRecord> records;
      for (const auto& s : sel) {
        const auto it = l.labels.find(s.spectrum_id);
        if (it == l.labels.end()) throw DataError("no label for spectrum '" + s.spectrum_id + "'");
        SelectionRecord r;
        for (const auto& c : l.by_id.at(s.spectrum_id)->candidates)
          r.candidates.push_back({c.model, ingest_peptide(c.peptide, tab)});
        r.selected = ingest_peptide(s.selected_peptide, tab);
        r.truth = ingest_peptide(it->second, tab);
        records.push_back(std::move(r));
      }
      const auto rep = contribution_analysis(records, tab);
      err_ << "contribution: " << rep.n_unique_correct << " of " << rep.n_records
           << " records were correct and provided by exactly one model\n";
      *out << "model\tunique_correct\tshare\n";
      for (const auto& [m, count] : rep.counts) {
        const auto sh = rep.shares.find(m);
        *out << m << '\t' << count << '\t' << (sh == rep.shares.end() ? "NA" : fmt(sh->second)) << '\n';
      }
    } else if (a.report == "zero-shot") {
      if (a.checkpoint.empty()) throw CLI::ValidationError("report 'zero-shot' needs --checkpoint");
      std::vector<std::set<std::string>> subsets;
      if (a.subsets.empty()) {
        // Default: grow the pool one model at a time in file order.
        std::set<std::string> acc;
        for (const auto& m : model_names(l.sets)) {
          acc.insert(m);
          subsets.push_back(acc);
        }
      } else {
        for (const auto& group : text::split(a.subsets, ';')) {
          std::set<std::string> s;
          for (const auto& m : text::split(group, ',')) {
            const auto name = std::string(text::trim(m));
            if (!name.empty()) s.insert(name);
          }
          subsets.push_back(std::move(s));
        }
      }
      const auto model = load_model(a.checkpoint);
      const auto results = zero_shot_eval(model, l.spectra, l.sets, subsets, cfg.preprocess, g_.workers);
      *out << "subset\tn_models\tn_spectra\tpeptide_recall\taa_precision\tchange\n";
      std::optional<double> previous;
      for (const auto& r : results) {
        std::string name;
        for (const auto& m : r.models) name += (name.empty() ? "" : ",") + m;
        const double recall = r.stats.peptide_recall();
        *out << name << '\t' << r.models.size() << '\t' << r.stats.n_all_pep << '\t' << fmt(recall) << '\t'
             << fmt(r.stats.aa_precision()) << '\t' << (previous ? fmt(recall - *previous) : "NA") << '\n';
        previous = recall;
      }
    } else {
      throw CLI::ValidationError("unknown report '" + a.report + "'");
    }
  }

  Globals g_;

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::optional<MassTable> table_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Cli cli(out, err);
  CLI::App app{"Reranks candidate peptides for tandem mass spectra.", "peprank"};
  app.require_subcommand(1);
  app.fallthrough();
  auto& g = cli.g_;
  app.add_option("--mass-table", g.mass_table, "Residue mass table (token<TAB>mass); default table if omitted")
      ->check(CLI::ExistingFile);
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; },
                                         "Random seed (overrides the config)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "Turn ingestion warnings into errors");

  std::string pairs, out_path = "-";
  auto* metrics = app.add_subcommand("metrics", "PMD and RMD for query/target pairs");
  metrics->add_option("--pairs", pairs, "TSV of query<TAB>target")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", out_path, "Output TSV ('-' = stdout)");

  std::string mgf, report;
  bool validate = false;
  auto* preprocess = app.add_subcommand("preprocess", "Filter and normalize an MGF file");
  preprocess->add_option("--mgf", mgf, "Input MGF")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--out", out_path, "Output MGF ('-' = stdout)");
  preprocess->add_option("--report", report, "Exclusion report TSV");
  preprocess->add_flag("--validate-precursor", validate, "Apply the precursor gates to labeled spectra");

  std::size_t n_spectra = 200;
  std::string out_mgf, out_candidates;
  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled MGF and candidate file");
  synth->add_option("--n", n_spectra, "Number of spectra")->check(CLI::PositiveNumber);
  synth->add_option("--out-mgf", out_mgf, "Output MGF")->required();
  synth->add_option("--out-candidates", out_candidates, "Output candidate JSON Lines")->required();

  Cli::TrainArgs targs;
  auto* train_sc = app.add_subcommand("train", "Train a reranker and write a checkpoint");
  train_sc->add_option("--mgf", targs.mgf, "Labeled MGF")->required()->check(CLI::ExistingFile);
  train_sc->add_option("--candidates", targs.candidates, "Candidate JSON Lines")->required()->check(CLI::ExistingFile);
  train_sc->add_option("--out", targs.out, "Checkpoint path")->required();
  train_sc->add_option("--log", targs.log, "Per-step loss log TSV");
  train_sc->add_option("--profile", targs.profile, "desk or full (overrides the config profile)")
      ->check(CLI::IsMember({"desk", "full"}));
  train_sc->add_option_function<std::size_t>("--epochs", [&](std::size_t e) { targs.epochs = e; }, "Epoch override");
  train_sc->add_option_function<double>("--max-seconds", [&](double s) { targs.max_seconds = s; },
                                        "Stop after this much training time");

  std::string ckpt, candidates;
  auto* rerank_sc = app.add_subcommand("rerank", "Select one candidate per spectrum");
  rerank_sc->add_option("--checkpoint", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  rerank_sc->add_option("--mgf", mgf, "MGF")->required()->check(CLI::ExistingFile);
  rerank_sc->add_option("--candidates", candidates, "Candidate JSON Lines")->required()->check(CLI::ExistingFile);
  rerank_sc->add_option("--out", out_path, "Selections TSV ('-' = stdout)");

  std::string selections, predictions;
  auto* evaluate = app.add_subcommand("evaluate", "Peptide recall and amino-acid precision");
  evaluate->add_option("--selections", selections, "Selections TSV from rerank")->check(CLI::ExistingFile);
  evaluate->add_option("--predictions", predictions, "Prediction JSON Lines {spectrum_id, pred, truth, model?}")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--mgf", mgf, "MGF holding labels (with --selections)")->check(CLI::ExistingFile);
  evaluate->add_option("--candidates", candidates, "Candidate JSON Lines (with --selections)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", out_path, "Report TSV ('-' = stdout)");

  Cli::AnalyzeArgs aargs;
  aargs.out = "-";
  aargs.bins = "1-8,9-12,13-16,17-100";
  auto* analyze = app.add_subcommand("analyze", "Length, residue, contribution and zero-shot reports");
  analyze->add_option("--report", aargs.report, "lengths, confusion, contribution or zero-shot")
      ->required()
      ->check(CLI::IsMember({"lengths", "confusion", "contribution", "zero-shot"}));
  analyze->add_option("--selections", aargs.selections, "Selections TSV")->check(CLI::ExistingFile);
  analyze->add_option("--mgf", aargs.mgf, "MGF holding labels")->required()->check(CLI::ExistingFile);
  analyze->add_option("--candidates", aargs.candidates, "Candidate JSON Lines")->required()->check(CLI::ExistingFile);
  analyze->add_option("--checkpoint", aargs.checkpoint, "Checkpoint (zero-shot)")->check(CLI::ExistingFile);
  analyze->add_option("--subsets", aargs.subsets, "Model subsets, e.g. 'a;a,b' (zero-shot)");
  analyze->add_option("--bins", aargs.bins, "Truth-length bins, e.g. '7-9,10-12' (lengths)");
  analyze->add_option("--out", aargs.out, "Report TSV ('-' = stdout)");

  try {
    app.parse(argc, argv);
    if (*metrics) cli.metrics(pairs, out_path);
    else if (*preprocess) cli.preprocess(mgf, out_path, report, validate);
    else if (*synth) cli.synth(n_spectra, out_mgf, out_candidates);
    else if (*train_sc) cli.train_cmd(targs);
    else if (*rerank_sc) cli.rerank(ckpt, mgf, candidates, out_path);
    else if (*evaluate) cli.evaluate(selections, predictions, mgf, candidates, out_path);
    else if (*analyze) cli.analyze(aargs);
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << sub->help();
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace peprank
