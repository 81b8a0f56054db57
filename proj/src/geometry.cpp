#include "affgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affgrasp {

GraspPose::GraspPose(const Vec4& q, const Vec3& t) : trans(t) {
  const double n = q.norm();
  if (n < 1e-12) throw InvalidInputError("GraspPose: zero-norm quaternion");
  quat = q / n;
  if (quat[0] < 0.0) quat = -quat;
}

Mat3 GraspPose::rotation() const { return rotation_from_quaternion(quat); }

GripperSpec GripperSpec::parallel_jaw() {
  GripperSpec s;
  s.control_points << 0.00, 0.0, -0.066,   // base
                      0.00, 0.0, -0.033,   // approach
                      0.00, 0.0,  0.000,   // mid (P_cm)
                     -0.04, 0.0,  0.000,   // left shoulder
                      0.04, 0.0,  0.000,   // right shoulder
                     -0.04, 0.0,  0.046,   // left fingertip
                      0.04, 0.0,  0.046;   // right fingertip
  return s;
}

GripperSpec GripperSpec::scaled(double s) const {
  GripperSpec out = *this;
  out.width *= s;
  out.finger_depth *= s;
  out.base_offset *= s;
  out.control_points *= s;
  return out;
}

void PointCloud::validate() const {
  if (points.rows() < 1) throw InvalidInputError("PointCloud: empty");
  if (!points.allFinite()) throw InvalidInputError("PointCloud: non-finite coordinate");
  if (normals) {
    if (normals->rows() != points.rows())
      throw InvalidInputError("PointCloud: normals row count mismatch");
    for (Eigen::Index i = 0; i < normals->rows(); ++i) {
      if (std::abs(normals->row(i).norm() - 1.0) > 1e-6)
        throw InvalidInputError("PointCloud: non-unit normal");
    }
  }
}

Mat3 rotation_from_quaternion(const Vec4& q) {
  const double n = q.norm();
  if (n < 1e-12) throw InvalidInputError("rotation_from_quaternion: zero-norm quaternion");
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Vec4 quaternion_from_rotation(const Mat3& r) {
  // Shepperd's method: pick the largest of the four candidates for stability.
  Vec4 q;
  const double tr = r.trace();
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s;
  }
  q.normalize();
  if (q[0] < 0.0) q = -q;
  return q;
}

Vec4 quaternion_multiply(const Vec4& a, const Vec4& b) {
  const double w1 = a[0], x1 = a[1], y1 = a[2], z1 = a[3];
  const double w2 = b[0], x2 = b[1], y2 = b[2], z2 = b[3];
  return Vec4(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
              w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
              w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
              w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2);
}

Mat3 euler_xy_rotation(double x, double y) {
  Mat3 rx, ry;
  const double cx = std::cos(x), sx = std::sin(x);
  const double cy = std::cos(y), sy = std::sin(y);
  rx << 1, 0, 0,
        0, cx, -sx,
        0, sx, cx;
  ry << cy, 0, sy,
        0, 1, 0,
        -sy, 0, cy;
  return ry * rx;
}

ControlPointSet grasp_to_control_points(const GraspPose& pose, const GripperSpec& spec) {
  const Mat3 r = pose.rotation();
  ControlPointSet out;
  for (int i = 0; i < 7; ++i) {
    out.row(i) = (r * spec.control_points.row(i).transpose() + pose.trans).transpose();
  }
  return out;
}

std::vector<int> farthest_point_sample(const PointCloud& cloud, int n, int start) {
  const Eigen::Index total = cloud.size();
  if (n < 1 || n > total) throw InvalidInputError("farthest_point_sample: n out of range");
  if (start < 0 || start >= total) throw InvalidInputError("farthest_point_sample: bad start");

  std::vector<int> picked;
  picked.reserve(n);
  std::vector<char> selected(total, 0);
  Eigen::VectorXd min_dist = Eigen::VectorXd::Constant(total, std::numeric_limits<double>::infinity());

  int current = start;
  for (int k = 0; k < n; ++k) {
    picked.push_back(current);
    selected[current] = 1;
    if (k + 1 == n) break;
    const Vec3 p = cloud.points.row(current);
    int best = -1;
    double best_dist = -1.0;
    for (Eigen::Index i = 0; i < total; ++i) {
      if (selected[i]) continue;
      const double d = (cloud.points.row(i).transpose() - p).norm();
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = static_cast<int>(i);
      }
    }
    current = best;
  }
  return picked;
}

NormalizedCloud normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  const Vec3 centroid = cloud.points.colwise().mean();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    scale = std::max(scale, (cloud.points.row(i).transpose() - centroid).norm());
  }
  if (scale < 1e-12)
    throw DegenerateInputError("normalize_cloud: zero-scale cloud (all points identical)");
  NormalizedCloud out;
  out.centroid = centroid;
  out.scale = scale;
  out.cloud.points = (cloud.points.rowwise() - centroid.transpose()) / scale;
  out.cloud.normals = cloud.normals;
  return out;
}

PointCloud jitter_points(const PointCloud& cloud, double sigma, double clip, Rng& rng) {
  if (sigma < 0 || clip < 0) throw InvalidInputError("jitter_points: negative sigma or clip");
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      out.points(i, c) += std::clamp(rng.normal(0.0, sigma), -clip, clip);
    }
  }
  return out;
}

std::vector<int> dropout_indices(Eigen::Index n, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InvalidInputError("dropout_points: p must be in [0, 1)");
  std::vector<int> keep;
  keep.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rng.uniform() >= p) keep.push_back(static_cast<int>(i));
  }
  if (keep.empty()) keep.push_back(0);
  return keep;
}

PointCloud select_points(const PointCloud& cloud, const std::vector<int>& indices) {
  PointCloud out;
  out.points.resize(indices.size(), 3);
  if (cloud.normals) out.normals.emplace(indices.size(), 3);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.points.row(i) = cloud.points.row(indices[i]);
    if (cloud.normals) out.normals->row(i) = cloud.normals->row(indices[i]);
  }
  return out;
}

PointCloud dropout_points(const PointCloud& cloud, double p, Rng& rng) {
  return select_points(cloud, dropout_indices(cloud.size(), p, rng));
}

namespace {

// Median nearest-neighbor spacing, subsampled to a bounded stride for large
// clouds. Used only for the auto slab thickness.
double median_nn_spacing(const Points& pts) {
  const Eigen::Index n = pts.rows();
  if (n < 2) return 1e-3;
  const Eigen::Index cap = 512;
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / cap);
  std::vector<double> nn;
  for (Eigen::Index i = 0; i < n; i += stride) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (pts.row(i) - pts.row(j)).norm());
    }
    nn.push_back(best);
  }
  std::sort(nn.begin(), nn.end());
  return nn[nn.size() / 2];
}

}  // namespace

PartialViewResult partial_view(const PointCloud& surface, const Mat3& camera_rotation,
                               int resolution, double delta) {
  if (!surface.has_normals()) throw InvalidInputError("partial_view: normals required");
  if (resolution < 8) throw InvalidInputError("partial_view: resolution must be >= 8");
  surface.validate();

  const Eigen::Index n = surface.size();
  Points pts = surface.points * camera_rotation.transpose();
  Points nrm = *surface.normals * camera_rotation.transpose();

  if (delta <= 0.0) delta = 2.0 * median_nn_spacing(pts);

  const double minx = pts.col(0).minCoeff(), maxx = pts.col(0).maxCoeff();
  const double miny = pts.col(1).minCoeff(), maxy = pts.col(1).maxCoeff();
  const double wx = std::max(maxx - minx, 1e-12);
  const double wy = std::max(maxy - miny, 1e-12);

  auto cell_of = [&](Eigen::Index i) {
    int cx = std::min(resolution - 1, static_cast<int>((pts(i, 0) - minx) / wx * resolution));
    int cy = std::min(resolution - 1, static_cast<int>((pts(i, 1) - miny) / wy * resolution));
    return cy * resolution + cx;
  };

  std::vector<double> cell_min(static_cast<std::size_t>(resolution) * resolution,
                               std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto c = cell_of(i);
    cell_min[c] = std::min(cell_min[c], pts(i, 2));
  }

  PartialViewResult out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (nrm(i, 2) > 0.0) continue;  // back-facing relative to the +z view ray
    if (pts(i, 2) > cell_min[cell_of(i)] + delta) continue;
    out.indices.push_back(static_cast<int>(i));
  }
  if (out.indices.empty()) throw DegenerateInputError("partial_view: empty visible set");

  out.cloud.points.resize(out.indices.size(), 3);
  out.cloud.normals.emplace(out.indices.size(), 3);
  for (std::size_t k = 0; k < out.indices.size(); ++k) {
    out.cloud.points.row(k) = pts.row(out.indices[k]);
    out.cloud.normals->row(k) = nrm.row(out.indices[k]);
  }
  return out;
}

}  // namespace affgrasp
