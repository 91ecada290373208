// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "peprank/checkpoint.hpp"
#include "peprank/cli.hpp"
#include "peprank/text.hpp"

using namespace peprank;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "peprank");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("peprank_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"bogus"}).code == kExitUsage);
  CHECK(run({"metrics"}).code == kExitUsage);
  CHECK(run({"metrics", "--pairs", "/nonexistent/file"}).code == kExitUsage);
}

TEST_CASE("cli metrics") {
  const auto pairs = scratch() / "pairs.tsv";
  write(pairs, "query\ttarget\nGA\tGG\nPEPTIDE\tPEPTIDE\n\tGA\n");
  const auto r = run({"metrics", "--pairs", pairs.string()});
  REQUIRE(r.code == kExitOk);
  const auto lines = text::split(r.out, '\n');
  CHECK(lines[0] == "query\ttarget\tpmd\trmd");
  CHECK(text::split(lines[1], '\t')[2].substr(0, 8) == "0.421487");
  CHECK(text::split(lines[2], '\t')[2] == "0");
  CHECK(text::split(lines[3], '\t')[3] == "NA");
  CHECK(r.err.find("config {") != std::string::npos);

  write(pairs, "GA\tGZ\n");
  const auto bad = run({"metrics", "--pairs", pairs.string()});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find("Z") != std::string::npos);
}

TEST_CASE("cli mass table override") {
  const auto table = scratch() / "table.tsv";
  write(table, "# two tokens\nG\t57.02146\nA\t71.03711  # alanine\n");
  const auto pairs = scratch() / "pairs2.tsv";
  write(pairs, "GA\tGG\nK\tK\n");
  CHECK(run({"--mass-table", table.string(), "metrics", "--pairs", pairs.string()}).code == kExitData);
  write(pairs, "GA\tGG\n");
  CHECK(run({"--mass-table", table.string(), "metrics", "--pairs", pairs.string()}).code == kExitOk);
}

TEST_CASE("cli end to end") {
  const auto d = scratch();
  const auto mgf = (d / "s.mgf").string(), cands = (d / "c.jsonl").string();
  REQUIRE(run({"--seed", "4", "synth", "--n", "10", "--out-mgf", mgf, "--out-candidates", cands}).code == kExitOk);
  const std::string mgf_bytes = slurp(mgf);
  REQUIRE(run({"--seed", "4", "synth", "--n", "10", "--out-mgf", mgf, "--out-candidates", cands}).code == kExitOk);
  CHECK(slurp(mgf) == mgf_bytes);

  const auto pre = (d / "p.mgf").string(), report = (d / "r.tsv").string();
  const auto p = run({"preprocess", "--mgf", mgf, "--out", pre, "--report", report, "--validate-precursor"});
  REQUIRE(p.code == kExitOk);
  CHECK(first_line(slurp(report)) == "spectrum_id\treason");
  const auto pre2 = (d / "p2.mgf").string();
  REQUIRE(run({"preprocess", "--mgf", pre, "--out", pre2}).code == kExitOk);
  CHECK(slurp(pre2) == slurp(pre));

  const auto cfg = (d / "cfg.json").string();
  write(cfg, R"({"model":{"d":16,"encoder_layers":1,"mixer_layers":1,"n_heads":2,"ff_dim":32},"train":{"batch_size":5}})");
  const auto ckpt = (d / "m.ckpt").string(), log = (d / "log.tsv").string();
  const auto t = run({"--config", cfg, "--seed", "3", "train", "--mgf", mgf, "--candidates", cands, "--out", ckpt,
                      "--log", log, "--epochs", "2"});
  REQUIRE_MESSAGE(t.code == kExitOk, t.err);
  const auto log_lines = text::split(slurp(log), '\n');
  CHECK(log_lines[0] == "step\tepoch\tlr\tloss\tgrad_norm");
  CHECK(log_lines.size() >= 5);  // header + 4 steps
  const auto ck = load_checkpoint_file(ckpt);
  CHECK(ck.config.d == 16);
  CHECK(ck.step == 4);
  CHECK(ck.seed == 3);

  const auto sel = (d / "sel.tsv").string();
  REQUIRE(run({"rerank", "--checkpoint", ckpt, "--mgf", mgf, "--candidates", cands, "--out", sel}).code == kExitOk);
  CHECK(first_line(slurp(sel)) == "spectrum_id\tselected_index\tselected_model\tselected_peptide\tscores");
  CHECK(text::split(slurp(sel), '\n').size() >= 11);

  const auto ev = run({"evaluate", "--selections", sel, "--mgf", mgf, "--candidates", cands});
  REQUIRE(ev.code == kExitOk);
  const auto ev_lines = text::split(ev.out, '\n');
  CHECK(ev_lines[0] == "scope\tn_match_pep\tn_all_pep\tn_match_aa\tn_all_aa\tpeptide_recall\taa_precision");
  CHECK(ev_lines[1].rfind("reranked\t", 0) == 0);
  CHECK(ev_lines[2].rfind("model:model_0\t", 0) == 0);

  for (const std::string rep : {"lengths", "confusion", "contribution"}) {
    const auto a = run({"analyze", "--report", rep, "--selections", sel, "--mgf", mgf, "--candidates", cands});
    CHECK_MESSAGE(a.code == kExitOk, a.err);
  }
  const auto zs = run({"analyze", "--report", "zero-shot", "--checkpoint", ckpt, "--mgf", mgf, "--candidates", cands,
                       "--subsets", "model_0;model_0,model_1"});
  REQUIRE_MESSAGE(zs.code == kExitOk, zs.err);
  CHECK(text::split(zs.out, '\n')[0] == "subset\tn_models\tn_spectra\tpeptide_recall\taa_precision\tchange");

  // Corrupt checkpoint -> data error naming the problem.
  const auto broken = (d / "broken.ckpt").string();
  write(broken, "NOPE");
  const auto bad = run({"rerank", "--checkpoint", broken, "--mgf", mgf, "--candidates", cands});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find("magic") != std::string::npos);

  // Unknown config keys are rejected.
  write(cfg, R"({"train":{"epoch":2}})");
  CHECK(run({"--config", cfg, "train", "--mgf", mgf, "--candidates", cands, "--out", ckpt}).code == kExitData);
}

TEST_CASE("cli evaluate from predictions") {
  const auto preds = scratch() / "preds.jsonl";
  write(preds, R"({"spectrum_id":"a","pred":"GAV","truth":"GAV","model":"x"}
{"spectrum_id":"b","pred":"GAW","truth":"GAV","model":"x"}
)");
  const auto r = run({"evaluate", "--predictions", preds.string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  const auto lines = text::split(r.out, '\n');
  const auto all = text::split(lines[1], '\t');
  CHECK(all[1] == "1");
  CHECK(all[2] == "2");
  CHECK(all[5] == "0.5");
}
