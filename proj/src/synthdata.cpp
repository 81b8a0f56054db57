#include "affgrasp/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace affgrasp::synth {

const char* to_string(AffordanceLabel label) {
  switch (label) {
    case AffordanceLabel::grasp: return "grasp";
    case AffordanceLabel::wrap: return "wrap";
    case AffordanceLabel::pour: return "pour";
    case AffordanceLabel::contain: return "contain";
    case AffordanceLabel::cut_stab: return "cut_stab";
    case AffordanceLabel::wear: return "wear";
  }
  throw InvalidInputError("unknown affordance label");
}

AffordanceLabel label_from_string(const std::string& name) {
  for (auto l : all_labels()) {
    if (name == to_string(l)) return l;
  }
  throw InvalidInputError("unknown affordance label: " + name);
}

std::vector<AffordanceLabel> all_labels() {
  return {AffordanceLabel::grasp, AffordanceLabel::wrap, AffordanceLabel::pour,
          AffordanceLabel::contain, AffordanceLabel::cut_stab, AffordanceLabel::wear};
}

const char* to_string(Category c) {
  switch (c) {
    case Category::mug: return "mug";
    case Category::bottle: return "bottle";
    case Category::knife: return "knife";
    case Category::hat: return "hat";
    case Category::bowl: return "bowl";
    case Category::scissor: return "scissor";
  }
  throw InvalidInputError("unknown category");
}

Category category_from_string(const std::string& name) {
  for (auto c : all_categories()) {
    if (name == to_string(c)) return c;
  }
  throw InvalidInputError("unknown category: " + name);
}

std::vector<Category> all_categories() {
  return {Category::mug, Category::bottle, Category::knife, Category::hat, Category::bowl,
          Category::scissor};
}

const char* to_string(PartTag t) {
  switch (t) {
    case PartTag::handle: return "handle";
    case PartTag::body: return "body";
    case PartTag::rim: return "rim";
    case PartTag::interior: return "interior";
    case PartTag::blade: return "blade";
    case PartTag::brim: return "brim";
    case PartTag::neck: return "neck";
    case PartTag::dome: return "dome";
    case PartTag::ring_handle: return "ring_handle";
  }
  throw InvalidInputError("unknown part tag");
}

std::map<AffordanceLabel, std::set<PartTag>> affordance_regions(Category category) {
  using L = AffordanceLabel;
  using P = PartTag;
  switch (category) {
    case Category::mug:
      return {{L::grasp, {P::handle}},
              {L::pour, {P::rim}},
              {L::wrap, {P::body}},
              {L::contain, {P::rim, P::interior}}};
    case Category::bottle:
      return {{L::grasp, {P::neck}}, {L::wrap, {P::body}}, {L::contain, {P::rim}}};
    case Category::knife:
      return {{L::grasp, {P::handle}}, {L::cut_stab, {P::handle}}};
    case Category::bowl:
      return {{L::grasp, {P::rim}}, {L::wrap, {P::body}}};
    case Category::hat:
      return {{L::grasp, {P::brim}}, {L::wear, {P::dome}}};
    case Category::scissor:
      return {{L::grasp, {P::ring_handle}}, {L::cut_stab, {P::ring_handle}}};
  }
  throw InvalidInputError("unknown category");
}

namespace {

struct Sample {
  Vec3 point;
  Vec3 normal;
};

struct Primitive {
  double area;
  PartTag tag;
  std::function<Sample(Rng&)> draw;
};

// Cylinder side wall about the z axis. sign=-1 flips normals inward.
Primitive cylinder_side(double radius, double z0, double z1, PartTag tag, double sign = 1.0) {
  return {2.0 * M_PI * radius * (z1 - z0), tag, [=](Rng& rng) {
            const double theta = rng.uniform(0.0, 2.0 * M_PI);
            const double z = rng.uniform(z0, z1);
            const Vec3 radial(std::cos(theta), std::sin(theta), 0.0);
            return Sample{Vec3(radius * radial.x(), radius * radial.y(), z), sign * radial};
          }};
}

// Flat annulus at height z, radii [r0, r1], normal (0,0,nz).
Primitive annulus(double r0, double r1, double z, double nz, PartTag tag) {
  return {M_PI * (r1 * r1 - r0 * r0), tag, [=](Rng& rng) {
            const double r = std::sqrt(rng.uniform(r0 * r0, r1 * r1));
            const double theta = rng.uniform(0.0, 2.0 * M_PI);
            return Sample{Vec3(r * std::cos(theta), r * std::sin(theta), z), Vec3(0, 0, nz)};
          }};
}

// Spherical zone of radius r centered at `center`, polar angle range given by
// cos(theta) in [c0, c1] measured from +z. sign=-1 flips normals inward.
Primitive sphere_zone(const Vec3& center, double r, double c0, double c1, PartTag tag,
                      double sign = 1.0) {
  return {2.0 * M_PI * r * r * (c1 - c0), tag, [=](Rng& rng) {
            const double c = rng.uniform(c0, c1);
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            const Vec3 dir(s * std::cos(phi), s * std::sin(phi), c);
            return Sample{center + r * dir, sign * dir};
          }};
}

// Torus with ring in the plane spanned by (e1, e2) around `center`; ring angle
// phi restricted to [phi0, phi1]. Uniform area via rejection on the Jacobian.
Primitive torus_section(const Vec3& center, const Vec3& e1, const Vec3& e2, double major,
                        double minor, double phi0, double phi1, PartTag tag) {
  const Vec3 axis = e1.cross(e2);
  return {(phi1 - phi0) * 2.0 * M_PI * major * minor, tag, [=](Rng& rng) {
            while (true) {
              const double phi = rng.uniform(phi0, phi1);
              const double theta = rng.uniform(0.0, 2.0 * M_PI);
              if (rng.uniform() > (major + minor * std::cos(theta)) / (major + minor)) continue;
              const Vec3 ring_dir = std::cos(phi) * e1 + std::sin(phi) * e2;
              const Vec3 normal = std::cos(theta) * ring_dir + std::sin(theta) * axis;
              return Sample{center + major * ring_dir + minor * normal, normal};
            }
          }};
}

// Axis-aligned box face: origin corner, spanned by (u*du, v*dv), fixed normal.
Primitive box_face(const Vec3& corner, const Vec3& u, const Vec3& v, const Vec3& normal,
                   PartTag tag) {
  return {u.norm() * v.norm(), tag, [=](Rng& rng) {
            return Sample{corner + rng.uniform() * u + rng.uniform() * v, normal.normalized()};
          }};
}

// All six faces of a box centered at `center` with half extents `half`,
// optionally rotated by `rot`.
void add_box(std::vector<Primitive>& prims, const Vec3& center, const Vec3& half, const Mat3& rot,
             PartTag tag) {
  for (int axis = 0; axis < 3; ++axis) {
    for (double sgn : {-1.0, 1.0}) {
      Vec3 n = Vec3::Zero();
      n[axis] = sgn;
      const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
      Vec3 u = Vec3::Zero(), v = Vec3::Zero();
      u[ua] = 2.0 * half[ua];
      v[va] = 2.0 * half[va];
      Vec3 corner = -half;
      corner[axis] = sgn * half[axis];
      prims.push_back(box_face(center + rot * corner, rot * u, rot * v, rot * n, tag));
    }
  }
}

ObjectRecord assemble(Category category, std::uint64_t seed, int n, std::vector<Primitive> prims,
                      std::map<std::string, double> params, Rng& rng) {
  double total = 0.0;
  for (const auto& p : prims) total += p.area;

  ObjectRecord rec;
  rec.category = category;
  rec.seed = seed;
  rec.id = std::string(to_string(category)) + "-" + std::to_string(seed);
  rec.params = std::move(params);
  rec.surface.points.resize(n, 3);
  rec.surface.normals.emplace(n, 3);
  rec.tags.resize(n);

  for (int i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    std::size_t pi = 0;
    while (pi + 1 < prims.size() && u > prims[pi].area) {
      u -= prims[pi].area;
      ++pi;
    }
    const Sample s = prims[pi].draw(rng);
    rec.surface.points.row(i) = s.point;
    rec.surface.normals->row(i) = s.normal.normalized();
    rec.tags[i] = prims[pi].tag;
  }

  // Uniform object frame: centroid at origin.
  const Vec3 centroid = rec.surface.points.colwise().mean();
  rec.surface.points.rowwise() -= centroid.transpose();
  return rec;
}

}  // namespace

ObjectRecord make_object(Category category, std::uint64_t seed, int n_surface_points) {
  if (n_surface_points < 512) throw InvalidInputError("make_object: need >= 512 surface points");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(category) + 101));
  std::vector<Primitive> prims;
  std::map<std::string, double> params;

  switch (category) {
    case Category::mug: {
      const double r = rng.uniform(0.033, 0.038);
      const double h = rng.uniform(0.08, 0.11);
      const double wall = 0.004;
      const double hr = rng.uniform(0.016, 0.022);   // handle major radius
      const double ht = rng.uniform(0.005, 0.0075);  // handle tube radius
      params = {{"radius", r}, {"height", h}, {"wall", wall}, {"handle_major", hr},
                {"handle_tube", ht}};
      prims.push_back(cylinder_side(r, 0.0, h, PartTag::body));
      prims.push_back(annulus(0.0, r, 0.0, -1.0, PartTag::body));
      prims.push_back(cylinder_side(r - wall, wall, h, PartTag::interior, -1.0));
      prims.push_back(annulus(0.0, r - wall, wall, 1.0, PartTag::interior));
      prims.push_back(annulus(r - wall, r, h, 1.0, PartTag::rim));
      // Handle ring in the x-z plane, arcing out from the body side.
      const Vec3 hc(r + hr * 0.55, 0.0, h * 0.5);
      prims.push_back(torus_section(hc, Vec3(1, 0, 0), Vec3(0, 0, 1), hr, ht, -0.62 * M_PI,
                                    0.62 * M_PI, PartTag::handle));
      break;
    }
    case Category::bottle: {
      const double r = rng.uniform(0.030, 0.037);
      const double h = rng.uniform(0.10, 0.15);
      const double nr = r * rng.uniform(0.35, 0.45);
      const double nh = rng.uniform(0.035, 0.055);
      params = {{"radius", r}, {"height", h}, {"neck_radius", nr}, {"neck_height", nh}};
      prims.push_back(cylinder_side(r, 0.0, h, PartTag::body));
      prims.push_back(annulus(0.0, r, 0.0, -1.0, PartTag::body));
      prims.push_back(annulus(nr, r, h, 1.0, PartTag::body));  // shoulder
      prims.push_back(cylinder_side(nr, h, h + nh, PartTag::neck));
      prims.push_back(annulus(nr * 0.55, nr, h + nh, 1.0, PartTag::rim));
      break;
    }
    case Category::knife: {
      const double blade_len = rng.uniform(0.08, 0.12);
      const double handle_len = rng.uniform(0.08, 0.10);
      const double blade_w = rng.uniform(0.016, 0.022);
      const double handle_w = rng.uniform(0.014, 0.018);
      const double handle_t = rng.uniform(0.010, 0.014);
      params = {{"blade_len", blade_len}, {"handle_len", handle_len}, {"blade_w", blade_w},
                {"handle_w", handle_w}, {"handle_t", handle_t}};
      add_box(prims, Vec3(blade_len / 2, 0, 0), Vec3(blade_len / 2, blade_w / 2, 0.0012),
              Mat3::Identity(), PartTag::blade);
      add_box(prims, Vec3(-handle_len / 2, 0, 0), Vec3(handle_len / 2, handle_w / 2, handle_t / 2),
              Mat3::Identity(), PartTag::handle);
      break;
    }
    case Category::hat: {
      const double rd = rng.uniform(0.042, 0.055);
      const double rb = rd + rng.uniform(0.020, 0.032);
      const double shell = 0.0022;
      params = {{"dome_radius", rd}, {"brim_radius", rb}, {"shell", shell}};
      prims.push_back(sphere_zone(Vec3(0, 0, 0), rd, 0.05, 1.0, PartTag::dome));
      prims.push_back(sphere_zone(Vec3(0, 0, 0), rd - shell, 0.05, 1.0, PartTag::dome, -1.0));
      prims.push_back(annulus(rd, rb, 0.0, 1.0, PartTag::brim));
      prims.push_back(annulus(rd, rb, -shell, -1.0, PartTag::brim));
      break;
    }
    case Category::bowl: {
      const double r = rng.uniform(0.050, 0.068);
      const double wall = 0.004;
      params = {{"radius", r}, {"wall", wall}};
      prims.push_back(sphere_zone(Vec3(0, 0, 0), r, -1.0, -0.05, PartTag::body));
      prims.push_back(sphere_zone(Vec3(0, 0, 0), r - wall, -1.0, -0.05, PartTag::interior, -1.0));
      prims.push_back(torus_section(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), r - wall / 2,
                                    wall / 2, 0.0, 2.0 * M_PI, PartTag::rim));
      break;
    }
    case Category::scissor: {
      const double len = rng.uniform(0.10, 0.12);
      const double w = rng.uniform(0.010, 0.013);
      const double t = 0.0015;
      const double ring_major = rng.uniform(0.011, 0.014);
      const double ring_tube = rng.uniform(0.0026, 0.0034);
      const double cross = rng.uniform(0.16, 0.24);  // half cross angle, radians
      params = {{"length", len}, {"width", w}, {"ring_major", ring_major},
                {"ring_tube", ring_tube}, {"cross_angle", cross}};
      for (double sgn : {-1.0, 1.0}) {
        Mat3 rz;
        const double a = sgn * cross;
        rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
        add_box(prims, rz * Vec3(len * 0.28, 0, sgn * t), Vec3(len / 2, w / 2, t / 2), rz,
                PartTag::blade);
        const Vec3 rc = rz * Vec3(-len * 0.22 - ring_major, 0, sgn * t);
        prims.push_back(torus_section(rc, rz * Vec3(1, 0, 0), rz * Vec3(0, 1, 0), ring_major,
                                      ring_tube, 0.0, 2.0 * M_PI, PartTag::ring_handle));
      }
      break;
    }
  }
  return assemble(category, seed, n_surface_points, std::move(prims), std::move(params), rng);
}

std::vector<GraspPose> propose_grasps(const ObjectRecord& object, int n, Rng& rng) {
  if (n < 1) throw InvalidInputError("propose_grasps: n must be >= 1");
  const GripperSpec spec = GripperSpec::parallel_jaw();
  const Points& pts = object.surface.points;
  const Points& nrm = *object.surface.normals;
  const Eigen::Index total = pts.rows();

  const double max_gap = spec.width * 0.95;
  const double ray_tol = 0.006;
  const double min_sep = 0.003;

  std::vector<GraspPose> out;
  const int max_attempts = 40 * n;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
    const int i = rng.uniform_int(static_cast<int>(total));
    const Vec3 p = pts.row(i);
    const Vec3 dir = -nrm.row(i).transpose();  // inward

    // Opposing point: nearest along the inward ray with an outward normal
    // roughly parallel to the ray.
    int best = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < total; ++j) {
      const Vec3 v = pts.row(j).transpose() - p;
      const double t = v.dot(dir);
      if (t < min_sep || t > best_t) continue;
      if ((v - t * dir).norm() > ray_tol) continue;
      if (nrm.row(j).dot(dir) < 0.5) continue;
      best = static_cast<int>(j);
      best_t = t;
    }
    if (best < 0 || best_t > max_gap) continue;

    const Vec3 q = pts.row(best);
    const Vec3 closing = (q - p).normalized();
    const Vec3 mid = 0.5 * (p + q);

    // Roll about the closing axis picks the approach direction.
    Vec3 helper = std::abs(closing.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 e1 = helper.cross(closing).normalized();
    const Vec3 e2 = closing.cross(e1);
    const double roll = rng.uniform(0.0, 2.0 * M_PI);
    const Vec3 approach = std::cos(roll) * e1 + std::sin(roll) * e2;

    const double depth = rng.uniform(0.3, 0.9) * spec.finger_depth;
    Mat3 rot;
    rot.col(0) = closing;
    rot.col(2) = approach;
    rot.col(1) = approach.cross(closing);
    out.emplace_back(quaternion_from_rotation(rot), mid - depth * approach);
  }
  return out;
}

OracleReport grasp_oracle_report(const ObjectRecord& object, const GraspPose& pose,
                                 double friction_mu, const GripperSpec& spec) {
  const Mat3 rot_t = pose.rotation().transpose();
  const Points& pts = object.surface.points;
  const Points& nrm = *object.surface.normals;

  const double half_w = spec.width / 2.0;
  const double pad_half = 0.1 * spec.width;
  const double finger_t = 0.1 * spec.width;
  const double stem_half = 0.125 * spec.width;
  const double palm_depth = spec.base_offset / 2.0;
  const double cone_cos = std::cos(std::atan(friction_mu));

  OracleReport rep;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec3 p = rot_t * (pts.row(i).transpose() - pose.trans);
    const Vec3 n = rot_t * nrm.row(i).transpose();

    const bool in_y = std::abs(p.y()) <= pad_half;
    const bool in_finger_z = p.z() >= 0.0 && p.z() <= spec.finger_depth;

    if (in_y && in_finger_z && std::abs(p.x()) <= half_w) {
      rep.contact_indices.push_back(static_cast<int>(i));
      if (p.x() < 0.0 && n.x() <= -cone_cos) rep.left_contact = true;
      if (p.x() >= 0.0 && n.x() >= cone_cos) rep.right_contact = true;
    }

    // Gripper body volumes: finger material, palm bar, base stem.
    if (in_y && in_finger_z && std::abs(p.x()) > half_w && std::abs(p.x()) <= half_w + finger_t)
      rep.collision = true;
    if (in_y && p.z() < 0.0 && p.z() >= -palm_depth && std::abs(p.x()) <= half_w + finger_t)
      rep.collision = true;
    if (in_y && p.z() < -palm_depth && p.z() >= -spec.base_offset && std::abs(p.x()) <= stem_half)
      rep.collision = true;
  }
  rep.success = rep.left_contact && rep.right_contact && !rep.collision;
  return rep;
}

bool grasp_oracle(const ObjectRecord& object, const GraspPose& pose, double friction_mu,
                  const GripperSpec& spec) {
  return grasp_oracle_report(object, pose, friction_mu, spec).success;
}

std::vector<LabeledGrasp> label_grasps(const ObjectRecord& object,
                                       const std::vector<GraspPose>& poses, double mu,
                                       const GripperSpec& spec) {
  const auto regions = affordance_regions(object.category);
  std::vector<LabeledGrasp> out;
  out.reserve(poses.size() + regions.size());
  std::map<AffordanceLabel, int> success_count;

  for (const auto& pose : poses) {
    const OracleReport rep = grasp_oracle_report(object, pose, mu, spec);

    AffordanceLabel best = regions.begin()->first;
    int best_count = 0;
    for (const auto& [label, parts] : regions) {
      int count = 0;
      for (int idx : rep.contact_indices) {
        if (parts.count(object.tags[idx])) ++count;
      }
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    if (best_count == 0) {
      // No contacts inside any region: nearest region by distance from the
      // closing center.
      const Vec3 center = pose.apply(Vec3(0, 0, spec.finger_depth / 2.0));
      double best_dist = std::numeric_limits<double>::infinity();
      for (const auto& [label, parts] : regions) {
        for (Eigen::Index i = 0; i < object.surface.points.rows(); ++i) {
          if (!parts.count(object.tags[static_cast<int>(i)])) continue;
          const double d = (object.surface.points.row(i).transpose() - center).norm();
          if (d < best_dist) {
            best_dist = d;
            best = label;
          }
        }
      }
    }

    out.push_back({pose, best, rep.success, false});
    if (rep.success) ++success_count[best];
  }

  for (const auto& [label, parts] : regions) {
    if (success_count[label] == 0) out.push_back({GraspPose::sentinel(), label, true, true});
  }
  return out;
}

std::map<AffordanceLabel, std::vector<GraspPose>> TrainingRecord::successful_by_label(
    bool include_sentinels) const {
  std::map<AffordanceLabel, std::vector<GraspPose>> by_label;
  for (const auto& g : grasps) {
    if (!g.success) continue;
    if (g.sentinel && !include_sentinels) continue;
    by_label[g.label].push_back(g.pose);
  }
  return by_label;
}

}  // namespace affgrasp::synth
