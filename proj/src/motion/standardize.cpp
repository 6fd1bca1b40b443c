#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::motion {

// Two-pass per-channel mean and population std over every frame of every
// sequence.
StandardizationStats fit_standardization(std::span<const FeatureSequence* const> train) {
  if (train.empty()) throw InvalidArgument("fit_standardization: empty training set");
  const std::size_t p = train.front()->dim;
  StandardizationStats stats{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  std::size_t count = 0;
  for (const FeatureSequence* f : train) {
    if (f->dim != p) throw InvalidArgument("fit_standardization: mixed feature widths");
    if (f->standardized) throw InvalidArgument("fit_standardization: input already standardized");
    for (std::size_t t = 0; t < f->frames; ++t)
      for (std::size_t c = 0; c < p; ++c) stats.mean[c] += f->row(t)[c];
    count += f->frames;
  }
  if (count == 0) throw InvalidArgument("fit_standardization: no frames");
  for (auto& m : stats.mean) m /= static_cast<double>(count);
  for (const FeatureSequence* f : train)
    for (std::size_t t = 0; t < f->frames; ++t)
      for (std::size_t c = 0; c < p; ++c) {
        const double d = f->row(t)[c] - stats.mean[c];
        stats.std[c] += d * d;
      }
  for (auto& s : stats.std) s = std::max(std::sqrt(s / static_cast<double>(count)), kStdFloor);
  return stats;
}

StandardizationStats fit_standardization(std::span<const FeatureSequence> train) {
  std::vector<const FeatureSequence*> ptrs;
  ptrs.reserve(train.size());
  for (const auto& f : train) ptrs.push_back(&f);
  return fit_standardization(std::span<const FeatureSequence* const>(ptrs));
}

FeatureSequence standardize(const FeatureSequence& f, const StandardizationStats& stats) {
  if (f.dim != stats.dim()) throw InvalidArgument("standardize: width mismatch");
  if (f.standardized) throw InvalidArgument("standardize: already standardized");
  FeatureSequence out = f;
  out.standardized = true;
  for (std::size_t t = 0; t < f.frames; ++t)
    for (std::size_t c = 0; c < f.dim; ++c) out.row(t)[c] = (f.row(t)[c] - stats.mean[c]) / stats.std[c];
  return out;
}

FeatureSequence destandardize(const FeatureSequence& f, const StandardizationStats& stats) {
  if (f.dim != stats.dim()) throw InvalidArgument("destandardize: width mismatch");
  if (!f.standardized) throw InvalidArgument("destandardize: input is not standardized");
  FeatureSequence out = f;
  out.standardized = false;
  for (std::size_t t = 0; t < f.frames; ++t)
    for (std::size_t c = 0; c < f.dim; ++c) out.row(t)[c] = f.row(t)[c] * stats.std[c] + stats.mean[c];
  return out;
}

}  // namespace temos::motion
