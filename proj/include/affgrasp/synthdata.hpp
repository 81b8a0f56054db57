#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affgrasp/geometry.hpp"

namespace affgrasp::synth {

/// Task labels with stable integer codes 0..5.
enum class AffordanceLabel : int {
  grasp = 0,
  wrap = 1,
  pour = 2,
  contain = 3,
  cut_stab = 4,
  wear = 5,
};
inline constexpr int kNumLabels = 6;

const char* to_string(AffordanceLabel label);
AffordanceLabel label_from_string(const std::string& name);
std::vector<AffordanceLabel> all_labels();

enum class Category : int { mug = 0, bottle = 1, knife = 2, hat = 3, bowl = 4, scissor = 5 };
inline constexpr int kNumCategories = 6;
const char* to_string(Category c);
Category category_from_string(const std::string& name);
std::vector<Category> all_categories();

/// Geometric part each surface point was generated from.
enum class PartTag : int {
  handle = 0,
  body = 1,
  rim = 2,
  interior = 3,
  blade = 4,
  brim = 5,
  neck = 6,
  dome = 7,
  ring_handle = 8,
};
const char* to_string(PartTag t);

struct ObjectRecord {
  std::string id;
  Category category;
  PointCloud surface;         // centered object frame, with outward normals
  std::vector<PartTag> tags;  // one per surface point
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  PartTag region_of(int point_index) const { return tags.at(point_index); }
};

/// Procedural object with analytic part tags. Deterministic in
/// (category, seed, n_surface_points).
ObjectRecord make_object(Category category, std::uint64_t seed, int n_surface_points);

/// Fixed category -> (label -> part tags) table.
std::map<AffordanceLabel, std::set<PartTag>> affordance_regions(Category category);

/// Antipodal grasp sampling: surface point + opposing point along the inward
/// normal, randomized roll about the closing axis and standoff along the
/// approach axis. May return fewer than n.
std::vector<GraspPose> propose_grasps(const ObjectRecord& object, int n, Rng& rng);

struct OracleReport {
  bool success = false;
  bool collision = false;
  bool left_contact = false;
  bool right_contact = false;
  std::vector<int> contact_indices;  // surface points inside the finger sweep volumes
};

/// Geometric grasp test standing in for a physics simulator: friction-cone
/// antipodal contact in both finger sweep volumes plus a swept-volume
/// collision check against the gripper body.
OracleReport grasp_oracle_report(const ObjectRecord& object, const GraspPose& pose,
                                 double friction_mu = 0.5,
                                 const GripperSpec& spec = GripperSpec::parallel_jaw());
bool grasp_oracle(const ObjectRecord& object, const GraspPose& pose, double friction_mu = 0.5,
                  const GripperSpec& spec = GripperSpec::parallel_jaw());

struct LabeledGrasp {
  GraspPose pose;
  AffordanceLabel label = AffordanceLabel::grasp;
  bool success = false;
  bool sentinel = false;
};

/// Oracle-tests every pose and assigns the label whose region holds the
/// majority of finger contacts (nearest region as fallback, ties by lower
/// label code). Emits one sentinel per region label with zero successes.
std::vector<LabeledGrasp> label_grasps(const ObjectRecord& object,
                                       const std::vector<GraspPose>& poses, double mu = 0.5,
                                       const GripperSpec& spec = GripperSpec::parallel_jaw());

struct DatasetObject {
  ObjectRecord object;
  std::vector<LabeledGrasp> grasps;  // object frame
  std::string split = "existing";    // "existing" or "novel"
};

struct RenderOptions {
  double jitter_sigma = 0.005;
  double jitter_clip = 0.01;
  double dropout_max = 0.2;  // per-view dropout probability drawn from [0, dropout_max]
  int resolution = 64;
  double rot_x_min = 0.0, rot_x_max = 2.0 * M_PI;
  double rot_y_min = -M_PI / 2.0, rot_y_max = M_PI / 2.0;
};

struct ManifestRecord {
  std::string object_id;
  int view_id = 0;
  double rot_x = 0.0, rot_y = 0.0;
  std::string pts_path;
  std::string grasps_path;
  std::string mask_path;
  Vec3 centroid{0, 0, 0};
  double scale = 1.0;
  int n_points = 0;
  std::string pts_hash;
  std::string mask_hash;
};

struct ManifestObject {
  std::string id;
  Category category;
  std::uint64_t seed = 0;
  std::string split;
  std::string object_path;
  int n_success = 0;
  int n_fail = 0;
  int n_sentinel = 0;
};

struct DatasetManifest {
  int n_points = 0;
  int rotations_per_object = 0;
  std::uint64_t seed = 0;
  std::vector<ManifestObject> objects;
  std::vector<ManifestRecord> records;
};

/// Renders per-view blobs + grasp sets + affordance masks under out_dir and
/// writes manifest.json. Byte-identical for identical inputs and seed.
DatasetManifest render_dataset(const std::vector<DatasetObject>& objects,
                               int rotations_per_object, int n_points,
                               const std::filesystem::path& out_dir, std::uint64_t seed,
                               const RenderOptions& options = RenderOptions());

struct TrainingRecord {
  std::string object_id;
  Category category;
  std::string split;
  int view_id = 0;
  PointCloud cloud;  // normalized view frame
  Vec3 centroid{0, 0, 0};
  double scale = 1.0;
  std::vector<LabeledGrasp> grasps;  // view frame, translations in normalized units
  Eigen::MatrixXd masks;             // kNumLabels x N, binary

  /// Successful grasps (optionally including sentinels) grouped by label.
  std::map<AffordanceLabel, std::vector<GraspPose>> successful_by_label(
      bool include_sentinels = true) const;
};

class Dataset {
 public:
  static Dataset load(const std::filesystem::path& manifest_path);

  std::size_t size() const { return manifest_.records.size(); }
  const DatasetManifest& manifest() const { return manifest_; }

  /// Loads and validates one record (hash + shape checked); LoadError names
  /// the record on any mismatch.
  TrainingRecord record(std::size_t index) const;
  std::vector<TrainingRecord> load_all() const;

 private:
  std::filesystem::path root_;
  DatasetManifest manifest_;
  std::map<std::string, ManifestObject> objects_by_id_;
};

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string hash_hex(std::uint64_t h);

}  // namespace affgrasp::synth
