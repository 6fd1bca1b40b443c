#include "temos/cli/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "temos/cli/manifest.hpp"
#include "temos/data/synth.hpp"
#include "temos/diag/gradcheck_suite.hpp"
#include "temos/errors.hpp"
#include "temos/eval/evaluate.hpp"
#include "temos/motion/codecs.hpp"
#include "temos/motion/tmf.hpp"
#include "temos/train/trainer.hpp"

namespace temos::cli {

namespace {

void report_issues(const data::LoadResult& r, std::ostream& err) {
  for (const auto& i : r.skipped) err << "skipped " << i.id << ": " << i.message << '\n';
  for (const auto& i : r.errors) err << "error " << i.id << ": " << i.message << '\n';
  if (r.unannotated > 0) err << r.unannotated << " motions without descriptions ignored\n";
}

void write_polyline(const std::filesystem::path& path, const motion::MotionSequence& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# frame x y\n" << std::setprecision(9);
  for (std::size_t f = 0; f < m.frames; ++f) {
    const auto r = m.at(f, motion::mmm::kRoot);
    out << f << ' ' << r.x() << ' ' << r.y() << '\n';
  }
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t n = 100;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  RunManifest mf{"synth", {{"seed", str(a.seed)}, {"n", str(a.n)}, {"out", a.out}}, a.seed, {}, utc_timestamp(), {}};
  const auto corpus = data::synth_corpus(a.seed, a.n);
  data::write_kit(a.out, corpus);
  mf.finished = utc_timestamp();
  mf.write(a.out);
  out << "wrote " << corpus.size() << " entries to " << a.out << '\n';
  return kOk;
}

struct TrainArgs {
  std::string config, data, out;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = train::TrainConfig::load(a.config);
  RunManifest mf{"train", {}, cfg.seed, {}, utc_timestamp(), {}};
  for (const auto& [k, v] : cfg.items()) mf.config[k] = v;
  mf.config["data"] = a.data;
  mf.config["out"] = a.out;
  mf.add_input("config", a.config);
  mf.add_input("data", a.data);
  auto loaded = data::load_kit(a.data, {cfg.codec, {}});
  report_issues(loaded, err);
  if (loaded.entries.empty()) throw DataError("no usable entries in " + a.data);
  const auto result = train::train(cfg, std::move(loaded.entries), a.out, &out);
  mf.finished = utc_timestamp();
  mf.write(a.out);
  out << "final checkpoint " << result.final_checkpoint.string() << '\n';
  if (!result.best_checkpoint.empty()) out << "best checkpoint " << result.best_checkpoint.string() << '\n';
  return kOk;
}

struct SampleArgs {
  std::string checkpoint, text, out;
  std::size_t frames = 60;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  bool zero = false;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  RunManifest mf{"sample",
                 {{"text", a.text}, {"frames", str(a.frames)}, {"count", str(a.count)}, {"seed", str(a.seed)},
                  {"zero", a.zero ? "true" : "false"}, {"out", a.out}},
                 a.seed, {}, utc_timestamp(), {}};
  mf.add_input("checkpoint", a.checkpoint);
  if (a.count == 0) throw InvalidArgument("--count must be at least 1");
  const eval::Generator gen(train::load_checkpoint(a.checkpoint));
  const auto dist = gen.encode(a.text);
  std::filesystem::create_directories(a.out);
  std::mt19937_64 rng(a.seed);
  const std::size_t n = a.zero ? 1 : a.count;
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = gen.decode(a.zero ? gen.zero() : gen.sample(dist, rng), a.frames);
    std::ostringstream stem;
    stem << "sample_" << std::setw(2) << std::setfill('0') << i;
    motion::write_tmf_file(std::filesystem::path(a.out) / (stem.str() + ".tmf1"), motion::to_tmf(m));
    write_polyline(std::filesystem::path(a.out) / (stem.str() + "_traj.txt"), m);
  }
  mf.finished = utc_timestamp();
  mf.write(a.out);
  out << "wrote " << n << " motion(s) of " << a.frames << " frames at " << data::kModelFps << " fps to " << a.out
      << '\n';
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, data, mode = "single_random", out = "report.csv", split = "test", ids;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  double fps = 100.0;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest mf{"evaluate",
                 {{"mode", a.mode}, {"k", str(a.k)}, {"seed", str(a.seed)}, {"split", a.split}, {"fps", str(a.fps)},
                  {"data", a.data}, {"out", a.out}},
                 a.seed, {}, utc_timestamp(), {}};
  mf.add_input("checkpoint", a.checkpoint);
  mf.add_input("data", a.data);
  eval::EvalOptions opt;
  opt.mode.kind = eval::eval_kind_from_string(a.mode);
  opt.mode.k = a.k;
  opt.seed = a.seed;
  opt.target_fps = a.fps;
  opt.mode.validate();
  const auto split = data::split_from_string(a.split);

  const eval::Generator gen(train::load_checkpoint(a.checkpoint));
  data::LoadOptions lo{gen.checkpoint().config.codec, {}};
  if (!a.ids.empty()) {
    lo.ids = data::read_id_list(a.ids);
    mf.add_input("ids", a.ids);
  }
  auto loaded = data::load_kit(a.data, lo);
  report_issues(loaded, err);
  std::vector<data::DatasetEntry> entries;
  for (auto& e : loaded.entries)
    if (a.ids.empty() ? e.split == split : true) entries.push_back(std::move(e));
  if (entries.empty()) throw DataError("no entries to evaluate");

  const auto result = eval::evaluate(gen, entries, opt);
  const std::filesystem::path report(a.out);
  if (report.has_parent_path()) std::filesystem::create_directories(report.parent_path());
  eval::write_report_csv(report, result);
  mf.finished = utc_timestamp();
  mf.write(report.has_parent_path() ? report.parent_path() : std::filesystem::path("."));

  out << a.mode << " on " << entries.size() << " entries\n" << std::setprecision(4) << std::fixed;
  for (const char* name : {"APE", "AVE"}) {
    const auto& v = std::string(name) == "APE" ? result.summary.ape : result.summary.ave;
    out << name;
    for (auto g : eval::kGroupings) out << "  " << eval::to_string(g) << ' ' << v[static_cast<std::size_t>(g)];
    out << '\n';
  }
  return kOk;
}

struct RoundtripArgs {
  std::string motion, out;
  double fps = 100.0;
};

int cmd_roundtrip(const RoundtripArgs& a, std::ostream& out) {
  RunManifest mf{"roundtrip", {{"motion", a.motion}, {"fps", str(a.fps)}}, 0, {}, utc_timestamp(), {}};
  mf.add_input("motion", a.motion);
  const auto t = motion::read_tmf_file(a.motion);
  double worst = 0.0;
  std::string codec;
  if (t.cols == motion::kMmmJointCount * 3) {
    codec = "skeleton64";
    const auto m = motion::motion_from_tmf(t, a.fps);
    const auto back = motion::decode_skeleton(motion::encode_skeleton(m));
    const auto ref = motion::canonicalize(m);
    for (std::size_t i = 0; i < ref.positions.size(); ++i)
      worst = std::max(worst, std::abs(ref.positions[i] - back.positions[i]));
  } else if (t.cols == data::kSmplFileColumns) {
    codec = "smpl135";
    const auto s = data::read_smpl_file(a.motion, a.fps);
    const auto back = motion::decode_smpl(motion::encode_smpl(s));
    const auto ref = motion::canonicalize_smpl(s);
    for (std::size_t i = 0; i < ref.body_rots.size(); ++i)
      worst = std::max(worst, (ref.body_rots[i] - back.body_rots[i]).cwiseAbs().maxCoeff());
    for (std::size_t f = 0; f < ref.frames; ++f) {
      worst = std::max(worst, (ref.global_rot[f] - back.global_rot[f]).cwiseAbs().maxCoeff());
      worst = std::max(worst, (ref.root_trans[f] - back.root_trans[f]).cwiseAbs().maxCoeff());
    }
  } else {
    throw DataError("roundtrip: " + std::to_string(t.cols) + " columns per frame; expected " +
                    std::to_string(motion::kMmmJointCount * 3) + " (joints) or " +
                    std::to_string(data::kSmplFileColumns) + " (SMPL poses)");
  }
  std::ostringstream line;
  line << std::setprecision(6) << std::scientific << "codec " << codec << " frames " << t.rows
       << " max_abs_error " << worst << '\n';
  out << line.str();
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream(std::filesystem::path(a.out) / "roundtrip.txt") << line.str();
    mf.finished = utc_timestamp();
    mf.write(a.out);
  }
  return kOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::string out;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  RunManifest mf{"gradcheck", {{"seed", str(a.seed)}, {"seeds", str(a.seeds)}}, a.seed, {}, utc_timestamp(), {}};
  std::ostringstream table;
  table << std::left << std::setw(18) << "op" << std::setw(8) << "seed" << std::setw(14) << "max_rel_err"
        << std::setw(8) << "coords" << "result\n";
  bool all = true;
  for (std::uint64_t s = a.seed; s < a.seed + a.seeds; ++s) {
    for (const auto& r : diag::run_gradchecks(s)) {
      all = all && r.passed;
      table << std::setw(18) << r.name << std::setw(8) << s << std::setw(14) << std::scientific
            << std::setprecision(3) << r.max_rel_error << std::setw(8) << r.coords << (r.passed ? "pass" : "FAIL")
            << '\n';
    }
  }
  table << (all ? "all checks passed\n" : "gradient check FAILED\n");
  out << table.str();
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream(std::filesystem::path(a.out) / "gradcheck.txt") << table.str();
    mf.finished = utc_timestamp();
    mf.write(a.out);
  }
  return all ? kOk : kNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-conditioned motion generation: data, training, sampling and evaluation", "temos"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic corpus in the KIT layout");
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--n", synth.n, "Number of entries")->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "key = value config file")->required()->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", tr.out, "Output directory")->required();

  SampleArgs sa;
  auto* sp = app.add_subcommand("sample", "Generate motions for a text");
  sp->add_option("--checkpoint", sa.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  sp->add_option("--text", sa.text, "Description")->required();
  sp->add_option("--frames,--duration", sa.frames, "Duration in frames at 12.5 fps")->check(CLI::Range(2, 100000));
  sp->add_option("--count", sa.count, "Number of motions");
  sp->add_option("--seed", sa.seed, "Random seed");
  sp->add_option("--out", sa.out, "Output directory")->required();
  sp->add_flag("--zero", sa.zero, "Decode z = 0 once instead of sampling");

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compute APE/AVE on a split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--mode", ev.mode, "deterministic | z_zero | single_random | k_random_avg | k_random_best");
  e->add_option("--k", ev.k, "Samples for the k modes");
  e->add_option("--seed", ev.seed, "Random seed");
  e->add_option("--out", ev.out, "Report CSV");
  e->add_option("--split", ev.split, "train | val | test");
  e->add_option("--ids", ev.ids, "Evaluate only the ids listed in this file")->check(CLI::ExistingFile);
  e->add_option("--fps", ev.fps, "Frame rate for comparison")->check(CLI::PositiveNumber);

  RoundtripArgs rt;
  auto* r = app.add_subcommand("roundtrip", "Encode and decode a motion file and report the error");
  r->add_option("--motion,motion", rt.motion, "TMF1 joints or SMPL pose file")->required()->check(CLI::ExistingFile);
  r->add_option("--fps", rt.fps, "Frame rate of the file")->check(CLI::PositiveNumber);
  r->add_option("--out", rt.out, "Optional output directory for the report");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient checks for every op");
  g->add_option("--seed", gc.seed, "First seed");
  g->add_option("--seeds", gc.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  g->add_option("--out", gc.out, "Optional output directory for the table");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (t->parsed()) return cmd_train(tr, out, err);
    if (sp->parsed()) return cmd_sample(sa, out);
    if (e->parsed()) return cmd_evaluate(ev, out, err);
    if (r->parsed()) return cmd_roundtrip(rt, out);
    if (g->parsed()) return cmd_gradcheck(gc, out);
  } catch (const InvalidArgument& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kDataError;
  } catch (const NumericalError& ex) {
    err << "numerical error: " << ex.what() << '\n';
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "data error: " << ex.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace temos::cli
