#pragma once

#include "mvgeom/camera.hpp"
#include "mvgeom/gridio.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

/// Angle in [0, pi] of the relative rotation Ra Rb^T. Throws DomainError
/// unless both inputs are rotations (orthonormal, det +1, tol 1e-6).
double rotation_angle(const Mat3& ra, const Mat3& rb);

struct PoseSequencePair {
  std::vector<RigidPose> generated;
  std::vector<std::optional<RigidPose>> estimated;  // nullopt: frame not registered
  bool reconstruction_failed = false;

  void validate() const;
};

/// Per-frame score 1 - angle / pi, 0 for missing estimates.
std::vector<double> per_frame_pose_accuracy(const PoseSequencePair& pair);

/// Mean per-frame score; 0 when reconstruction failed outright.
double camera_pose_accuracy(const PoseSequencePair& pair);

/// Mean squared error over cells where mask == 1, averaged over channels and
/// frames. nullopt when no cell is masked in.
std::optional<double> masked_reprojection_error(const std::vector<FeatureGrid>& frames,
                                                const std::vector<FeatureGrid>& gt,
                                                const std::vector<FeatureGrid>& masks);
std::optional<double> masked_reprojection_error(const FeatureGrid& frame, const FeatureGrid& gt,
                                                const FeatureGrid& mask);

/// Estimated trajectory: trajectory lines, with a line reading `missing` for
/// an unregistered frame. A file whose only entry is `failed` marks a failed
/// reconstruction.
struct EstimatedTrajectory {
  std::vector<std::optional<CameraPose>> cameras;
  bool failed = false;
};

EstimatedTrajectory read_estimated_trajectory(std::istream& in);
EstimatedTrajectory read_estimated_trajectory(const std::string& path);

PoseSequencePair make_pose_pair(const std::vector<CameraPose>& generated, const EstimatedTrajectory& estimated);

}  // namespace mvgeom
