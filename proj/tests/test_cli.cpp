#include "doctest.h"

#include "cli_fixture.hpp"
#include "golden.hpp"

#include "doccheck/checkpoint.hpp"
#include "json.hpp"

#include <cstdlib>

namespace fs = std::filesystem;
using cli_fixture::run;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The last stderr line must be the one-line JSON error record.
nlohmann::json error_record(const cli_fixture::Run& r) {
  std::string s = r.err;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return nlohmann::json::parse(s.substr(s.rfind('\n') + 1));
}

}  // namespace

TEST_CASE("check on the fixture file matches the golden output") {
  const auto r = run({"check", "--lang", "python", cli_fixture::kSample, "--checkpoint", cli_fixture::checkpoint()});
  REQUIRE(r.code == 0);
  CHECK(golden::matches(DOCCHECK_FIXTURES "/check/sample.py.golden.json", r.out));
  const auto arr = nlohmann::ordered_json::parse(r.out);
  REQUIRE(arr.size() == 2);
  CHECK(arr[0]["function_name"] == "add");
  CHECK(arr[1]["prediction"] == "missing_docstring");

  // the extension gives the same language; jsonl carries the same records
  CHECK(run({"check", cli_fixture::kSample, "--checkpoint", cli_fixture::checkpoint()}).out == r.out);
  const auto lines = run({"check", cli_fixture::kSample, "--checkpoint", cli_fixture::checkpoint(), "--format", "jsonl"});
  CHECK(lines.out == arr[0].dump() + "\n" + arr[1].dump() + "\n");
}

TEST_CASE("exit codes and error records") {
  SUBCASE("unknown subcommand is a usage error") {
    const auto r = run({"frobnicate"});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("Usage:") != std::string::npos);
    CHECK(error_record(r)["error"] == "usage");
  }
  SUBCASE("no subcommand") { CHECK(run({}).code == 1); }
  SUBCASE("help goes to stdout") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("check") != std::string::npos);
  }
  SUBCASE("threshold outside (0, 1)") {
    CHECK(run({"check", cli_fixture::kSample, "--checkpoint", "x", "--threshold", "1"}).code == 1);
  }
  SUBCASE("unknown language name") {
    CHECK(run({"check", cli_fixture::kSample, "--checkpoint", cli_fixture::checkpoint(), "--lang", "cobol"}).code == 1);
  }
  SUBCASE("missing input is a data error") {
    const auto r = run({"check", "no/such/file.py", "--checkpoint", cli_fixture::checkpoint()});
    CHECK(r.code == 2);
    CHECK(r.out.empty());
    CHECK(error_record(r)["error"] == "IoError");
  }
  SUBCASE("corrupt checkpoint is a data error") {
    const auto bad = cli_fixture::workdir() / "bad.ckpt";
    std::ofstream(bad) << "not a checkpoint";
    CHECK(run({"check", cli_fixture::kSample, "--checkpoint", bad.string()}).code == 2);
  }
  SUBCASE("undeclared extension without --lang") {
    const auto txt = cli_fixture::workdir() / "notes.txt";
    std::ofstream(txt) << "hello";
    CHECK(run({"check", txt.string(), "--checkpoint", cli_fixture::checkpoint()}).code == 1);
  }
}

TEST_CASE("checkpoint comes from the environment when the flag is absent") {
  ::unsetenv("DOCCHECK_CHECKPOINT");
  CHECK(run({"check", cli_fixture::kSample}).code == 1);
  ::setenv("DOCCHECK_CHECKPOINT", cli_fixture::checkpoint().c_str(), 1);
  const auto r = run({"check", cli_fixture::kSample});
  ::unsetenv("DOCCHECK_CHECKPOINT");
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out).size() == 2);
}

TEST_CASE("a directory without matching files checks to an empty array") {
  const auto dir = cli_fixture::workdir() / "empty_dir";
  fs::create_directories(dir);
  std::ofstream(dir / "README.md") << "# nothing here\n";
  const auto r = run({"check", dir.string(), "--checkpoint", cli_fixture::checkpoint()});
  CHECK(r.code == 0);
  CHECK(r.out == "[]\n");
}

TEST_CASE("extract writes one record per line") {
  const auto r = run({"extract", DOCCHECK_FIXTURES "/check"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    CHECK(nlohmann::json::parse(line).contains("docstring_raw"));
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("build-dataset, train and eval reproduce byte-identical files") {
  const auto dir = cli_fixture::workdir() / "repro";
  fs::create_directories(dir);
  auto once = [&](const std::string& tag) {
    const std::string pairs = (dir / (tag + ".jsonl")).string();
    REQUIRE(run({"build-dataset", "--synthetic", "6", "--shuffled-negatives", "--seed", "3", "--out", pairs,
                 "--split", (dir / (tag + ".split.json")).string()})
                .code == 0);
    REQUIRE(run({"train", pairs, "--epochs", "3", "--vocab-size", "300", "--seed", "3", "--out",
                 (dir / (tag + ".ckpt")).string(), "--log", (dir / (tag + ".loss.jsonl")).string()})
                .code == 0);
    const auto ev = run({"eval", pairs, "--checkpoint", (dir / (tag + ".ckpt")).string(), "--scores",
                         (dir / (tag + ".scores.jsonl")).string()});
    REQUIRE(ev.code == 0);
    return ev.out;
  };
  const std::string a = once("a"), b = once("b");
  CHECK(a == b);
  for (const char* ext : {".jsonl", ".split.json", ".ckpt", ".loss.jsonl", ".scores.jsonl"}) {
    CAPTURE(ext);
    const std::string fa = slurp(dir / (std::string("a") + ext));
    CHECK_FALSE(fa.empty());
    CHECK(fa == slurp(dir / (std::string("b") + ext)));
  }
  const auto report = nlohmann::json::parse(a);
  CHECK(report.contains("f1"));
  CHECK(report.contains("bleu4"));

  const auto base = run({"eval", (dir / "a.jsonl").string(), "--baseline", "tfidf", "--train", (dir / "a.jsonl").string()});
  CHECK(base.code == 0);
  CHECK(nlohmann::json::parse(base.out)["accuracy"].get<double>() >= 0.5);
}

TEST_CASE("finetune and build-dataset from extracted records") {
  const auto dir = cli_fixture::workdir() / "ft";
  fs::create_directories(dir);
  const std::string recs = (dir / "records.jsonl").string();
  REQUIRE(run({"extract", DOCCHECK_FIXTURES "/extract/python", "--out", recs}).code == 0);
  const auto built = run({"build-dataset", "--records", recs});
  REQUIRE(built.code == 0);
  const auto first = nlohmann::json::parse(built.out.substr(0, built.out.find('\n')));
  CHECK(first["label"] == "unlabeled");
  CHECK(first["provenance"] == "extracted");

  const std::string labeled = (dir / "labeled.jsonl").string();
  REQUIRE(run({"build-dataset", "--synthetic", "4", "--shuffled-negatives", "--out", labeled}).code == 0);
  const auto ft = run({"finetune", labeled, "--checkpoint", cli_fixture::checkpoint(), "--epochs", "2", "--out",
                       (dir / "ft.ckpt").string()});
  CHECK(ft.code == 0);
  const auto rep = nlohmann::json::parse(ft.out.substr(0, ft.out.find('\n')));
  CHECK(rep["total"] == rep["bc"]);
  CHECK(run({"build-dataset", "--synthetic", "4", "--records", recs}).code == 1);
}
