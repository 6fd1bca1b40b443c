#include "temos/eval/evaluate.hpp"

#include <fstream>
#include <iomanip>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::eval {

Generator::Generator(train::Checkpoint ck) : ck_(std::move(ck)) {}

model::LatentDistribution<float> Generator::encode(std::string_view text) const {
  const auto sample = data::tokenize(text, ck_.vocab);
  const auto mask = nn::AttentionMask::all_valid(1, sample.tokens.size());
  return ck_.model.encode_text(sample.tokens, mask, nn::ForwardContext::eval());
}

std::vector<float> Generator::mean(const model::LatentDistribution<float>& d) const {
  return {d.mu.values().begin(), d.mu.values().end()};
}

std::vector<float> Generator::zero() const { return std::vector<float>(ck_.model.config().dim, 0.0f); }

std::vector<float> Generator::sample(const model::LatentDistribution<float>& d, std::mt19937_64& rng) const {
  if (!d.stochastic()) return mean(d);
  const auto z = model::reparameterize(d, rng);
  return {z.values().begin(), z.values().end()};
}

motion::MotionSequence Generator::decode(const std::vector<float>& z, std::size_t frames) const {
  if (ck_.config.codec != data::Codec::Skeleton64) {
    throw InvalidArgument("joint output needs a skeleton64 checkpoint; SMPL bodies are not supported");
  }
  if (frames < 2) throw InvalidArgument("decode: need at least 2 frames");
  const std::size_t d = ck_.model.config().dim;
  if (z.size() != d) throw InvalidArgument("decode: latent has " + std::to_string(z.size()) + " values, expected " + std::to_string(d));
  const std::size_t durations[1] = {frames};
  const auto h = ck_.model.decode(nn::Tensor<float>::from({1, d}, z), durations, nn::ForwardContext::eval());
  auto f = motion::FeatureSequence::zeros(frames, ck_.model.config().feature_dim, data::kModelFps);
  std::copy(h.values().begin(), h.values().end(), f.values.begin());
  f.standardized = true;
  for (double v : f.values)
    if (!std::isfinite(v)) throw NumericalError("decoder produced non-finite features");
  return motion::decode_skeleton(motion::destandardize(f, ck_.stats));
}

std::string_view to_string(EvalKind k) {
  switch (k) {
    case EvalKind::Deterministic:
      return "deterministic";
    case EvalKind::ZZero:
      return "z_zero";
    case EvalKind::SingleRandom:
      return "single_random";
    case EvalKind::KRandomAvg:
      return "k_random_avg";
    case EvalKind::KRandomBest:
      return "k_random_best";
  }
  return "?";
}

EvalKind eval_kind_from_string(std::string_view name) {
  for (auto k : {EvalKind::Deterministic, EvalKind::ZZero, EvalKind::SingleRandom, EvalKind::KRandomAvg,
                 EvalKind::KRandomBest})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown evaluation mode '" + std::string(name) + "'");
}

void EvalMode::validate() const {
  if ((kind == EvalKind::KRandomAvg || kind == EvalKind::KRandomBest) && k < 1) {
    throw InvalidArgument("evaluation: k must be at least 1");
  }
}

std::size_t EvalMode::samples() const {
  return kind == EvalKind::KRandomAvg || kind == EvalKind::KRandomBest ? k : 1;
}

std::mt19937_64 entry_rng(std::uint64_t seed, std::string_view id) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

MetricReport score(const motion::MotionSequence& gt, const motion::MotionSequence& pred_model_rate, double fps) {
  const auto target = std::abs(gt.fps - fps) > 1e-9 ? motion::resample(gt, fps) : gt;
  const auto pred = motion::interpolate_to(pred_model_rate, fps, target.frames);
  return compute_metrics(canonicalize_for_eval(target), canonicalize_for_eval(pred));
}

std::size_t best_of(const std::vector<MetricReport>& samples, std::size_t k) {
  if (k == 0 || k > samples.size()) throw InvalidArgument("best_of: k out of range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (samples[i].root_ape() < samples[best].root_ape()) best = i;
  return best;
}

EvalResult evaluate(const Generator& gen, const std::vector<data::DatasetEntry>& entries, const EvalOptions& options) {
  options.mode.validate();
  const auto& ck = gen.checkpoint();
  if (ck.config.codec != data::Codec::Skeleton64) {
    throw InvalidArgument("evaluation is only available for skeleton64 checkpoints");
  }
  for (const auto& e : entries) {
    if (e.features.dim != ck.model.config().feature_dim) {
      throw InvalidArgument("entry " + e.id + " features do not match the checkpoint codec");
    }
    if (e.descriptions.empty()) throw InvalidArgument("entry " + e.id + " has no description");
  }
  if (entries.empty()) throw InvalidArgument("evaluation: no entries");

  EvalResult result;
  result.entries.resize(entries.size());
  const std::size_t n = options.mode.samples();
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      const auto& e = entries[i];
      auto rng = entry_rng(options.seed, e.id);
      const auto dist = gen.encode(e.descriptions.front().raw);
      EntryResult& r = result.entries[i];
      r.id = e.id;
      for (std::size_t s = 0; s < n; ++s) {
        std::vector<float> z;
        switch (options.mode.kind) {
          case EvalKind::Deterministic:
            z = gen.mean(dist);
            break;
          case EvalKind::ZZero:
            z = gen.zero();
            break;
          default:
            z = gen.sample(dist, rng);
        }
        r.samples.push_back(score(e.joints, gen.decode(z, e.features.frames), options.target_fps));
      }
      if (options.mode.kind == EvalKind::KRandomBest) {
        r.chosen = best_of(r.samples, n);
        r.report = r.samples[r.chosen];
      } else {
        for (const auto& s : r.samples) r.report += s;
        r.report /= static_cast<double>(n);
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& r : result.entries) result.summary += r.report;
  result.summary /= static_cast<double>(result.entries.size());
  return result;
}

void write_report_csv(const std::filesystem::path& path, const EvalResult& result) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id";
  for (const char* m : {"APE", "AVE"})
    for (auto g : kGroupings) out << ',' << m << '_' << to_string(g);
  out << '\n' << std::setprecision(9);
  auto row = [&](const std::string& id, const MetricReport& r) {
    out << id;
    for (double v : r.ape) out << ',' << v;
    for (double v : r.ave) out << ',' << v;
    out << '\n';
  };
  row("ALL", result.summary);
  for (const auto& e : result.entries) row(e.id, e.report);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace temos::eval
