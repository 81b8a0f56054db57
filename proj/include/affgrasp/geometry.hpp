#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "affgrasp/errors.hpp"
#include "affgrasp/rng.hpp"

namespace affgrasp {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Points = Eigen::MatrixX3d;
using ControlPointSet = Eigen::Matrix<double, 7, 3>;

/// Quaternion is stored (w, x, y, z), unit length, canonicalized to w >= 0.
struct GraspPose {
  Vec4 quat{1.0, 0.0, 0.0, 0.0};
  Vec3 trans{0.0, 0.0, 0.0};

  GraspPose() = default;
  GraspPose(const Vec4& q, const Vec3& t);

  Mat3 rotation() const;
  Vec3 apply(const Vec3& p) const { return rotation() * p + trans; }

  /// Constant pose used to stand in for affordance labels with no grasps.
  static GraspPose sentinel() { return GraspPose(); }
};

/// Parallel-jaw skeleton as 7 control points in the gripper frame. Fingers
/// close along x, approach along +z, base behind the palm at -z.
struct GripperSpec {
  double width = 0.08;
  double finger_depth = 0.046;
  double base_offset = 0.066;
  Eigen::Matrix<double, 7, 3> control_points;
  int mid_index = 2;

  static GripperSpec parallel_jaw();

  /// All lengths multiplied by s; used to express the gripper in
  /// normalized-cloud units (s = 1/cloud_scale).
  GripperSpec scaled(double s) const;

  Vec3 mid_point() const { return control_points.row(mid_index); }
};

struct PointCloud {
  Points points;
  std::optional<Points> normals;

  Eigen::Index size() const { return points.rows(); }
  bool has_normals() const { return normals.has_value(); }

  /// Throws InvalidInputError on empty cloud, non-finite coordinates, or
  /// non-unit normals.
  void validate() const;
};

Mat3 rotation_from_quaternion(const Vec4& q);
Vec4 quaternion_from_rotation(const Mat3& r);
Vec4 quaternion_multiply(const Vec4& a, const Vec4& b);

/// Extrinsic XYZ Euler rotation with zero z angle: R = Ry(y) * Rx(x)
/// (rotate about world x first, then world y).
Mat3 euler_xy_rotation(double x, double y);

ControlPointSet grasp_to_control_points(const GraspPose& pose, const GripperSpec& spec);

/// Greedy farthest point sampling. First index is `start`; each following
/// index maximizes the minimum distance to the selected set, ties broken by
/// smallest index. Deterministic.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int n, int start = 0);

struct NormalizedCloud {
  PointCloud cloud;
  Vec3 centroid;
  double scale;  // max distance from centroid; denormalize: p*scale + centroid
};

NormalizedCloud normalize_cloud(const PointCloud& cloud);

PointCloud jitter_points(const PointCloud& cloud, double sigma, double clip, Rng& rng);

/// Indices retained after independent Bernoulli(p) dropout; never empty
/// (falls back to {0} if every point was dropped).
std::vector<int> dropout_indices(Eigen::Index n, double p, Rng& rng);
PointCloud dropout_points(const PointCloud& cloud, double p, Rng& rng);

struct PartialViewResult {
  PointCloud cloud;          // rotated, visible subset
  std::vector<int> indices;  // into the input cloud
};

/// Rotates the object by camera_rotation and keeps the points visible from a
/// viewer at -z looking toward +z: per-cell z-buffer over a resolution^2 grid
/// spanning the xy bounding box, slab thickness delta behind the nearest
/// point, plus back-face culling (normal . view > 0 dropped). delta <= 0
/// selects 2x the median nearest-neighbor spacing.
PartialViewResult partial_view(const PointCloud& surface, const Mat3& camera_rotation,
                               int resolution, double delta = -1.0);

PointCloud select_points(const PointCloud& cloud, const std::vector<int>& indices);

}  // namespace affgrasp
