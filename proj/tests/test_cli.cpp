#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "temos/cli/commands.hpp"
#include "temos/cli/manifest.hpp"
#include "temos/data/synth.hpp"
#include "temos/diag/gradcheck_suite.hpp"
#include "temos/eval/metrics.hpp"
#include "temos/motion/tmf.hpp"

using namespace temos;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("temos_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Hash of every file except the manifest, whose timestamps differ per run.
std::string outputs_hash(const fs::path& dir) {
  std::string all;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) all += fs::relative(f, dir).string() + cli::git_blob_hash_file(f);
  return cli::git_blob_hash(all);
}

motion::MotionSequence read_joints(const fs::path& p) {
  return motion::motion_from_tmf(motion::read_tmf_file(p), 12.5);
}

// Small corpus and a briefly trained checkpoint shared by several cases.
const fs::path& trained_run() {
  static const fs::path dir = [] {
    const auto d = scratch("shared");
    REQUIRE(run({"synth", "--seed", "0", "--n", "12", "--out", (d / "data").string()}).code == 0);
    std::ofstream(d / "cfg.txt") << "epochs = 2\nbatch_size = 4\nlayers = 1\ndim = 16\nheads = 2\nff_dim = 32\n"
                                    "lr = 1e-3\ndropout = 0\n";
    const auto r = run({"train", "--config", (d / "cfg.txt").string(), "--data", (d / "data").string(), "--out",
                        (d / "run").string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("git blob hashes match git hash-object") {
  CHECK(cli::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(cli::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("synth writes a deterministic, loadable corpus with a manifest") {
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  REQUIRE(run({"synth", "--seed", "4", "--n", "15", "--out", a.string()}).code == 0);
  REQUIRE(run({"synth", "--seed", "4", "--n", "15", "--out", b.string()}).code == 0);
  CHECK(outputs_hash(a) == outputs_hash(b));
  CHECK(fs::exists(a / "manifest.json"));

  const auto loaded = data::load_kit(a);
  const auto direct = data::synth_corpus(4, 15);
  REQUIRE(loaded.entries.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(loaded.entries[i].id == direct[i].id);
    CHECK(loaded.entries[i].descriptions.size() == direct[i].descriptions.size());
    CHECK(loaded.entries[i].features.frames == direct[i].features.frames);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train writes checkpoints, metrics and a manifest") {
  const auto& d = trained_run();
  for (const char* f : {"final.ckpt", "best.ckpt", "metrics.csv", "manifest.json"}) CHECK(fs::exists(d / "run" / f));
  const auto manifest = slurp(d / "run" / "manifest.json");
  CHECK(manifest.find(cli::content_hash(d / "cfg.txt")) != std::string::npos);
}

TEST_CASE("sample: random draws differ, z = 0 repeats, durations vary") {
  const auto& d = trained_run();
  const auto ck = (d / "run" / "final.ckpt").string();
  const auto out = scratch("sample");
  auto r = run({"sample", "--checkpoint", ck, "--text", "a person walks forward", "--frames", "25", "--count", "2",
                "--seed", "3", "--out", (out / "k2").string()});
  REQUIRE(r.code == 0);
  const auto m0 = read_joints(out / "k2" / "sample_00.tmf1");
  const auto m1 = read_joints(out / "k2" / "sample_01.tmf1");
  CHECK(m0.frames == 25);
  CHECK(eval::ape(m0, m1, eval::Grouping::Root) > 0.0);
  CHECK(fs::exists(out / "k2" / "sample_00_traj.txt"));

  for (const char* sub : {"z1", "z2"})
    REQUIRE(run({"sample", "--checkpoint", ck, "--text", "a person walks forward", "--count", "5", "--zero", "--out",
                 (out / sub).string()})
                .code == 0);
  CHECK_FALSE(fs::exists(out / "z1" / "sample_01.tmf1"));
  CHECK(slurp(out / "z1" / "sample_00.tmf1") == slurp(out / "z2" / "sample_00.tmf1"));

  for (const char* f : {"7", "90"}) {
    REQUIRE(run({"sample", "--checkpoint", ck, "--text", "someone turns left", "--frames", f, "--zero", "--out",
                 (out / f).string()})
                .code == 0);
    CHECK(read_joints(out / f / "sample_00.tmf1").frames == std::stoul(f));
  }
  CHECK(run({"sample", "--checkpoint", ck, "--text", " ?! ", "--out", (out / "bad").string()}).code == cli::kUsage);
  fs::remove_all(out);
}

TEST_CASE("evaluate writes a report") {
  const auto& d = trained_run();
  const auto out = scratch("eval");
  const auto r = run({"evaluate", "--checkpoint", (d / "run" / "final.ckpt").string(), "--data",
                      (d / "data").string(), "--mode", "k_random_best", "--k", "3", "--split", "test", "--out",
                      (out / "report.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "manifest.json"));
  std::ifstream in(out / "report.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 3);  // header, summary and the single test entry
  CHECK(run({"evaluate", "--checkpoint", (d / "run" / "final.ckpt").string(), "--data", (d / "data").string(),
             "--mode", "nope", "--out", (out / "x.csv").string()})
            .code == cli::kUsage);
  fs::remove_all(out);
}

TEST_CASE("roundtrip reports a tiny error, is idempotent and rejects other widths") {
  const auto& d = trained_run();
  const auto file = (d / "data" / "synth_00001_joints.tmf1").string();
  const auto a = run({"roundtrip", file, "--fps", "100"});
  REQUIRE(a.code == 0);
  const auto pos = a.out.find("max_abs_error ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(a.out.substr(pos + 14)) < 1e-4);
  CHECK(run({"roundtrip", file, "--fps", "100"}).out == a.out);

  const auto bad = scratch("bad_width");
  fs::create_directories(bad);
  motion::write_tmf_file(bad / "x.tmf1", motion::TmfMatrix{4, 64, std::vector<float>(256, 0.0f)});
  CHECK(run({"roundtrip", (bad / "x.tmf1").string()}).code == cli::kDataError);
  std::ofstream(bad / "junk.tmf1") << "junk";
  CHECK(run({"roundtrip", (bad / "junk.tmf1").string()}).code == cli::kDataError);
  fs::remove_all(bad);
}

TEST_CASE("gradcheck lists every op, passes and is reproducible") {
  const auto a = run({"gradcheck", "--seed", "11"});
  CHECK(a.code == 0);
  for (const auto& name : diag::gradcheck_names()) CHECK(a.out.find(name + " ") != std::string::npos);
  CHECK(a.out.find("all checks passed") != std::string::npos);
  CHECK(run({"gradcheck", "--seed", "11"}).out == a.out);
}

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"synth"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  const auto d = scratch("empty");
  fs::create_directories(d);
  std::ofstream(d / "cfg.txt") << "epochs = 1\n";
  CHECK(run({"train", "--config", (d / "cfg.txt").string(), "--data", d.string(), "--out", (d / "o").string()}).code ==
        cli::kDataError);
  std::ofstream(d / "bad.txt") << "epochs = zero\n";
  CHECK(run({"train", "--config", (d / "bad.txt").string(), "--data", d.string(), "--out", (d / "o").string()}).code ==
        cli::kUsage);
  fs::remove_all(d);
}
