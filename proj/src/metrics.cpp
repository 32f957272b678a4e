#include "mvgeom/metrics.hpp"

#include "mvgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mvgeom {

namespace {

void check_rotation(const Mat3& r, const char* what) {
  constexpr double kTol = 1e-6;
  if (!r.allFinite() || (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > kTol ||
      std::abs(r.determinant() - 1.0) > kTol) {
    throw DomainError(std::string("rotation_angle: ") + what + " is not a rotation");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

double rotation_angle(const Mat3& ra, const Mat3& rb) {
  check_rotation(ra, "first argument");
  check_rotation(rb, "second argument");
  // Same angle as acos((tr - 1) / 2), but atan2 keeps full precision near 0 and pi.
  const Mat3 m = ra * rb.transpose();
  const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double s = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
  return std::atan2(s, c);
}

void PoseSequencePair::validate() const {
  if (reconstruction_failed) return;
  if (generated.size() != estimated.size()) {
    throw DomainError("pose pair: generated and estimated sequences differ in length");
  }
  if (generated.empty()) throw DomainError("pose pair: empty sequence");
}

std::vector<double> per_frame_pose_accuracy(const PoseSequencePair& pair) {
  pair.validate();
  std::vector<double> scores(pair.generated.size(), 0.0);
  if (pair.reconstruction_failed) return scores;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!pair.estimated[j]) continue;
    scores[j] = 1.0 - rotation_angle(pair.estimated[j]->rotation, pair.generated[j].rotation) / std::numbers::pi;
  }
  return scores;
}

double camera_pose_accuracy(const PoseSequencePair& pair) {
  if (pair.reconstruction_failed) return 0.0;
  const auto scores = per_frame_pose_accuracy(pair);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

std::optional<double> masked_reprojection_error(const FeatureGrid& frame, const FeatureGrid& gt,
                                                const FeatureGrid& mask) {
  return masked_reprojection_error(std::vector<FeatureGrid>{frame}, std::vector<FeatureGrid>{gt},
                                   std::vector<FeatureGrid>{mask});
}

std::optional<double> masked_reprojection_error(const std::vector<FeatureGrid>& frames,
                                                const std::vector<FeatureGrid>& gt,
                                                const std::vector<FeatureGrid>& masks) {
  if (frames.size() != gt.size() || frames.size() != masks.size()) {
    throw DomainError("masked_reprojection_error: frame counts differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const FeatureGrid& f = frames[n];
    const FeatureGrid& g = gt[n];
    const FeatureGrid& m = masks[n];
    if (!f.same_shape(g) || m.height() != f.height() || m.width() != f.width() || m.channels() != 1) {
      throw DomainError("masked_reprojection_error: dimension mismatch");
    }
    for (int r = 0; r < f.height(); ++r) {
      for (int c = 0; c < f.width(); ++c) {
        if (m.at(r, c) != 1.0f) continue;
        for (int ch = 0; ch < f.channels(); ++ch) {
          const double d = static_cast<double>(f.at(r, c, ch)) - g.at(r, c, ch);
          sum += d * d;
          ++count;
        }
      }
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

EstimatedTrajectory read_estimated_trajectory(std::istream& in) {
  EstimatedTrajectory out;
  std::string line;
  int line_no = 0;
  bool saw_failed = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "missing") {
      out.cameras.emplace_back(std::nullopt);
    } else if (t == "failed") {
      saw_failed = true;
    } else {
      try {
        out.cameras.emplace_back(parse_camera_line(t));
      } catch (const FormatError& e) {
        throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  if (saw_failed) {
    if (!out.cameras.empty()) throw FormatError("estimated trajectory: 'failed' must be the only entry");
    out.failed = true;
  }
  return out;
}

EstimatedTrajectory read_estimated_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_estimated_trajectory(in);
}

PoseSequencePair make_pose_pair(const std::vector<CameraPose>& generated, const EstimatedTrajectory& estimated) {
  PoseSequencePair pair;
  for (const auto& cam : generated) pair.generated.push_back(cam.pose);
  pair.reconstruction_failed = estimated.failed;
  for (const auto& cam : estimated.cameras) {
    pair.estimated.push_back(cam ? std::optional<RigidPose>(cam->pose) : std::nullopt);
  }
  pair.validate();
  return pair;
}

}  // namespace mvgeom
