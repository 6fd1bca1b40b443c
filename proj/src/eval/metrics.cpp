#include "temos/eval/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "temos/errors.hpp"
#include "temos/motion/codecs.hpp"

namespace temos::eval {

namespace {

void require_pair(const motion::MotionSequence& gt, const motion::MotionSequence& pred, const char* who) {
  if (gt.joint_set != motion::JointSet::MMM21 || pred.joint_set != motion::JointSet::MMM21 ||
      gt.joints != motion::kMmmJointCount || pred.joints != motion::kMmmJointCount) {
    throw InvalidArgument(std::string(who) + ": expected MMM21 motions");
  }
  if (gt.frames != pred.frames) {
    throw InvalidArgument(std::string(who) + ": " + std::to_string(gt.frames) + " ground-truth frames vs " +
                          std::to_string(pred.frames) + " predicted");
  }
  if (gt.frames == 0) throw InvalidArgument(std::string(who) + ": empty motion");
}

// Per-frame coordinates of the joints a grouping looks at, flattened as
// [frames x count x dims].
struct View {
  std::size_t count = 0;
  std::size_t dims = 3;
  std::vector<double> v;
  const double* at(std::size_t f, std::size_t j) const { return &v[(f * count + j) * dims]; }
};

View view(const motion::MotionSequence& m, Grouping g) {
  View out;
  switch (g) {
    case Grouping::Root:
    case Grouping::Traj:
      out.count = 1;
      out.dims = g == Grouping::Root ? 3 : 2;
      for (std::size_t f = 0; f < m.frames; ++f)
        for (std::size_t c = 0; c < out.dims; ++c) out.v.push_back(m.at(f, motion::mmm::kRoot)[static_cast<Eigen::Index>(c)]);
      break;
    case Grouping::MeanLocal:
      out.count = m.joints - 1;
      for (std::size_t f = 0; f < m.frames; ++f) {
        const auto lf = motion::compute_local_frame(m, f);
        const Eigen::Matrix3d rt = lf.rotation().transpose();
        for (std::size_t j = 1; j < m.joints; ++j) {
          const Eigen::Vector3d p = rt * (m.at(f, j) - lf.origin);
          out.v.insert(out.v.end(), {p.x(), p.y(), p.z()});
        }
      }
      break;
    case Grouping::MeanGlobal:
      out.count = m.joints;
      out.v = m.positions;
      break;
  }
  return out;
}

std::vector<double> variances(const View& x, std::size_t frames) {
  std::vector<double> var(x.count * x.dims, 0.0);
  for (std::size_t j = 0; j < x.count; ++j) {
    for (std::size_t c = 0; c < x.dims; ++c) {
      double mean = 0.0;
      for (std::size_t f = 0; f < frames; ++f) mean += x.at(f, j)[c];
      mean /= static_cast<double>(frames);
      double s = 0.0;
      for (std::size_t f = 0; f < frames; ++f) s += (x.at(f, j)[c] - mean) * (x.at(f, j)[c] - mean);
      var[j * x.dims + c] = s / static_cast<double>(frames - 1);
    }
  }
  return var;
}

}  // namespace

std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::Root:
      return "root";
    case Grouping::Traj:
      return "traj";
    case Grouping::MeanLocal:
      return "mean_local";
    case Grouping::MeanGlobal:
      return "mean_global";
  }
  return "?";
}

MetricReport& MetricReport::operator+=(const MetricReport& o) {
  for (std::size_t i = 0; i < 4; ++i) {
    ape[i] += o.ape[i];
    ave[i] += o.ave[i];
  }
  return *this;
}

MetricReport& MetricReport::operator/=(double n) {
  for (std::size_t i = 0; i < 4; ++i) {
    ape[i] /= n;
    ave[i] /= n;
  }
  return *this;
}

motion::MotionSequence canonicalize_for_eval(const motion::MotionSequence& m) {
  m.validate();
  return motion::canonicalize(m);
}

double ape(const motion::MotionSequence& gt, const motion::MotionSequence& pred, Grouping g) {
  require_pair(gt, pred, "ape");
  const View a = view(gt, g), b = view(pred, g);
  double total = 0.0;
  for (std::size_t f = 0; f < gt.frames; ++f) {
    for (std::size_t j = 0; j < a.count; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < a.dims; ++c) sq += (a.at(f, j)[c] - b.at(f, j)[c]) * (a.at(f, j)[c] - b.at(f, j)[c]);
      total += std::sqrt(sq);
    }
  }
  return total / static_cast<double>(gt.frames * a.count);
}

double ave(const motion::MotionSequence& gt, const motion::MotionSequence& pred, Grouping g) {
  require_pair(gt, pred, "ave");
  if (gt.frames < 2) throw InvalidArgument("ave: need at least 2 frames");
  const View a = view(gt, g), b = view(pred, g);
  const auto va = variances(a, gt.frames), vb = variances(b, gt.frames);
  double total = 0.0;
  for (std::size_t j = 0; j < a.count; ++j) {
    double sq = 0.0;
    for (std::size_t c = 0; c < a.dims; ++c) sq += (va[j * a.dims + c] - vb[j * a.dims + c]) * (va[j * a.dims + c] - vb[j * a.dims + c]);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(a.count);
}

MetricReport compute_metrics(const motion::MotionSequence& gt, const motion::MotionSequence& pred) {
  MetricReport r;
  for (auto g : kGroupings) {
    r.ape[static_cast<std::size_t>(g)] = ape(gt, pred, g);
    r.ave[static_cast<std::size_t>(g)] = ave(gt, pred, g);
  }
  return r;
}

}  // namespace temos::eval
