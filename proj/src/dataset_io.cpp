#include <json.hpp>

#include <fstream>
#include <sstream>

#include "affgrasp/synthdata.hpp"

namespace affgrasp::synth {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

// Blobs are little-endian float32, row-major.
static_assert(std::endian::native == std::endian::little, "blob format assumes little-endian");

std::vector<float> to_f32_row_major(const Eigen::MatrixXd& m) {
  std::vector<float> out;
  out.reserve(m.rows() * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(static_cast<float>(m(i, j)));
  return out;
}

std::uint64_t write_blob(const fs::path& path, const std::vector<float>& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw IoError("write failed: " + path.string());
  return fnv1a64(data.data(), data.size() * sizeof(float));
}

std::vector<float> read_blob(const fs::path& path, std::size_t expect_count,
                             const std::string& record_name) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw LoadError("record " + record_name + ": missing blob " + path.string());
  const auto size = static_cast<std::size_t>(f.tellg());
  if (size != expect_count * sizeof(float))
    throw LoadError("record " + record_name + ": blob size mismatch in " + path.string());
  f.seekg(0);
  std::vector<float> data(expect_count);
  f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!f) throw LoadError("record " + record_name + ": short read in " + path.string());
  return data;
}

json pose_to_json(const GraspPose& pose) {
  return json{{"quat", {pose.quat[0], pose.quat[1], pose.quat[2], pose.quat[3]}},
              {"trans", {pose.trans[0], pose.trans[1], pose.trans[2]}}};
}

GraspPose pose_from_json(const json& j) {
  const auto& q = j.at("quat");
  const auto& t = j.at("trans");
  return GraspPose(Vec4(q[0], q[1], q[2], q[3]), Vec3(t[0], t[1], t[2]));
}

json grasps_to_json(const std::vector<LabeledGrasp>& grasps) {
  json arr = json::array();
  for (const auto& g : grasps) {
    json item = pose_to_json(g.pose);
    item["label"] = static_cast<int>(g.label);
    item["success"] = g.success;
    item["sentinel"] = g.sentinel;
    arr.push_back(std::move(item));
  }
  return arr;
}

std::vector<LabeledGrasp> grasps_from_json(const json& arr) {
  std::vector<LabeledGrasp> out;
  for (const auto& item : arr) {
    LabeledGrasp g;
    g.pose = pose_from_json(item);
    g.label = static_cast<AffordanceLabel>(item.at("label").get<int>());
    g.success = item.at("success").get<bool>();
    g.sentinel = item.at("sentinel").get<bool>();
    out.push_back(std::move(g));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

json load_json_file(const fs::path& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw LoadError(what + ": missing file " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw LoadError(what + ": parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_object_json(const fs::path& path, const DatasetObject& obj) {
  const auto& rec = obj.object;
  json j;
  j["id"] = rec.id;
  j["category"] = to_string(rec.category);
  j["seed"] = rec.seed;
  j["split"] = obj.split;
  j["params"] = rec.params;
  j["n_points"] = rec.surface.points.rows();
  json pts = json::array(), nrms = json::array(), tags = json::array();
  for (Eigen::Index i = 0; i < rec.surface.points.rows(); ++i) {
    for (int c = 0; c < 3; ++c) pts.push_back(rec.surface.points(i, c));
    for (int c = 0; c < 3; ++c) nrms.push_back((*rec.surface.normals)(i, c));
    tags.push_back(static_cast<int>(rec.tags[i]));
  }
  j["points"] = std::move(pts);
  j["normals"] = std::move(nrms);
  j["tags"] = std::move(tags);
  j["grasps"] = grasps_to_json(obj.grasps);
  write_text(path, j.dump(1));
}

}  // namespace

DatasetManifest render_dataset(const std::vector<DatasetObject>& objects,
                               int rotations_per_object, int n_points, const fs::path& out_dir,
                               std::uint64_t seed, const RenderOptions& options) {
  if (rotations_per_object < 1) throw InvalidInputError("render_dataset: rotations must be >= 1");
  if (n_points < 64) throw InvalidInputError("render_dataset: n_points must be >= 64");

  std::error_code ec;
  fs::create_directories(out_dir / "objects", ec);
  fs::create_directories(out_dir / "views", ec);
  if (ec) throw IoError("cannot create dataset directories under " + out_dir.string());

  DatasetManifest manifest;
  manifest.n_points = n_points;
  manifest.rotations_per_object = rotations_per_object;
  manifest.seed = seed;

  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    const auto& dso = objects[oi];
    const auto& rec = dso.object;
    const auto regions = affordance_regions(rec.category);

    ManifestObject mo;
    mo.id = rec.id;
    mo.category = rec.category;
    mo.seed = rec.seed;
    mo.split = dso.split;
    mo.object_path = "objects/" + rec.id + ".json";
    for (const auto& g : dso.grasps) {
      if (g.sentinel) ++mo.n_sentinel;
      else if (g.success) ++mo.n_success;
      else ++mo.n_fail;
    }
    write_object_json(out_dir / mo.object_path, dso);
    manifest.objects.push_back(mo);

    for (int view = 0; view < rotations_per_object; ++view) {
      Rng rng(mix_seed(seed, oi * 0x9e3779b1ULL + 1, static_cast<std::uint64_t>(view)));

      // Retry rotations that leave too few visible points for FPS.
      double rx = 0.0, ry = 0.0;
      PartialViewResult visible;
      bool ok = false;
      for (int attempt = 0; attempt < 16 && !ok; ++attempt) {
        rx = rng.uniform(options.rot_x_min, options.rot_x_max);
        ry = rng.uniform(options.rot_y_min, options.rot_y_max);
        visible = partial_view(rec.surface, euler_xy_rotation(rx, ry), options.resolution);
        ok = visible.cloud.size() >= n_points;
      }
      if (!ok)
        throw DegenerateInputError("render_dataset: object " + rec.id +
                                   " never exposes enough visible points");
      const Mat3 rot = euler_xy_rotation(rx, ry);
      const Vec4 rot_quat = quaternion_from_rotation(rot);

      PointCloud jittered =
          jitter_points(visible.cloud, options.jitter_sigma, options.jitter_clip, rng);

      const double p_drop = rng.uniform(0.0, options.dropout_max);
      std::vector<int> kept = dropout_indices(jittered.size(), p_drop, rng);
      if (static_cast<int>(kept.size()) < n_points) {
        kept.resize(jittered.size());
        for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = static_cast<int>(i);
      }
      PointCloud after_drop = select_points(jittered, kept);

      const std::vector<int> fps = farthest_point_sample(after_drop, n_points, 0);
      PointCloud sampled = select_points(after_drop, fps);
      sampled.normals.reset();

      NormalizedCloud norm = normalize_cloud(sampled);

      // Per-point affordance masks through the index chain back to the
      // original surface tags.
      Eigen::MatrixXd masks = Eigen::MatrixXd::Zero(kNumLabels, n_points);
      for (int i = 0; i < n_points; ++i) {
        const int orig = visible.indices[kept[fps[i]]];
        const PartTag tag = rec.tags[orig];
        for (const auto& [label, parts] : regions) {
          if (parts.count(tag)) masks(static_cast<int>(label), i) = 1.0;
        }
      }

      // Grasps co-rotated into the view frame; translations rescaled by the
      // cloud normalization. Sentinels keep the fixed constant pose.
      std::vector<LabeledGrasp> view_grasps;
      view_grasps.reserve(dso.grasps.size());
      for (const auto& g : dso.grasps) {
        LabeledGrasp vg = g;
        if (!g.sentinel) {
          vg.pose = GraspPose(quaternion_multiply(rot_quat, g.pose.quat),
                              (rot * g.pose.trans - norm.centroid) / norm.scale);
        }
        view_grasps.push_back(std::move(vg));
      }

      ManifestRecord mr;
      mr.object_id = rec.id;
      mr.view_id = view;
      mr.rot_x = rx;
      mr.rot_y = ry;
      mr.centroid = norm.centroid;
      mr.scale = norm.scale;
      mr.n_points = n_points;
      const std::string stem = rec.id + "_" + std::to_string(view);
      mr.pts_path = "views/" + stem + ".pts.f32";
      mr.grasps_path = "views/" + stem + ".grasps.json";
      mr.mask_path = "views/" + stem + ".mask.f32";

      mr.pts_hash = hash_hex(write_blob(out_dir / mr.pts_path, to_f32_row_major(norm.cloud.points)));
      mr.mask_hash = hash_hex(write_blob(out_dir / mr.mask_path, to_f32_row_major(masks)));

      json gj;
      gj["object_id"] = rec.id;
      gj["view_id"] = view;
      gj["grasps"] = grasps_to_json(view_grasps);
      write_text(out_dir / mr.grasps_path, gj.dump(1));

      manifest.records.push_back(std::move(mr));
    }
  }

  json j;
  j["format_version"] = 1;
  j["n_points"] = manifest.n_points;
  j["rotations_per_object"] = manifest.rotations_per_object;
  j["seed"] = manifest.seed;
  json jobjs = json::array();
  for (const auto& mo : manifest.objects) {
    jobjs.push_back({{"id", mo.id},
                     {"category", to_string(mo.category)},
                     {"seed", mo.seed},
                     {"split", mo.split},
                     {"path", mo.object_path},
                     {"n_success", mo.n_success},
                     {"n_fail", mo.n_fail},
                     {"n_sentinel", mo.n_sentinel}});
  }
  j["objects"] = std::move(jobjs);
  json jrecs = json::array();
  for (const auto& r : manifest.records) {
    jrecs.push_back({{"object_id", r.object_id},
                     {"view_id", r.view_id},
                     {"rot_x", r.rot_x},
                     {"rot_y", r.rot_y},
                     {"pts_path", r.pts_path},
                     {"grasps_path", r.grasps_path},
                     {"mask_path", r.mask_path},
                     {"centroid", {r.centroid[0], r.centroid[1], r.centroid[2]}},
                     {"scale", r.scale},
                     {"n_points", r.n_points},
                     {"pts_hash", r.pts_hash},
                     {"mask_hash", r.mask_hash}});
  }
  j["records"] = std::move(jrecs);
  write_text(out_dir / "manifest.json", j.dump(1));
  return manifest;
}

Dataset Dataset::load(const fs::path& manifest_path) {
  Dataset ds;
  ds.root_ = manifest_path.parent_path();
  const json j = load_json_file(manifest_path, "manifest");
  try {
    ds.manifest_.n_points = j.at("n_points").get<int>();
    ds.manifest_.rotations_per_object = j.at("rotations_per_object").get<int>();
    ds.manifest_.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jo : j.at("objects")) {
      ManifestObject mo;
      mo.id = jo.at("id").get<std::string>();
      mo.category = category_from_string(jo.at("category").get<std::string>());
      mo.seed = jo.at("seed").get<std::uint64_t>();
      mo.split = jo.at("split").get<std::string>();
      mo.object_path = jo.at("path").get<std::string>();
      mo.n_success = jo.at("n_success").get<int>();
      mo.n_fail = jo.at("n_fail").get<int>();
      mo.n_sentinel = jo.at("n_sentinel").get<int>();
      ds.objects_by_id_[mo.id] = mo;
      ds.manifest_.objects.push_back(std::move(mo));
    }
    for (const auto& jr : j.at("records")) {
      ManifestRecord r;
      r.object_id = jr.at("object_id").get<std::string>();
      r.view_id = jr.at("view_id").get<int>();
      r.rot_x = jr.at("rot_x").get<double>();
      r.rot_y = jr.at("rot_y").get<double>();
      r.pts_path = jr.at("pts_path").get<std::string>();
      r.grasps_path = jr.at("grasps_path").get<std::string>();
      r.mask_path = jr.at("mask_path").get<std::string>();
      const auto& c = jr.at("centroid");
      r.centroid = Vec3(c[0], c[1], c[2]);
      r.scale = jr.at("scale").get<double>();
      r.n_points = jr.at("n_points").get<int>();
      r.pts_hash = jr.at("pts_hash").get<std::string>();
      r.mask_hash = jr.at("mask_hash").get<std::string>();
      ds.manifest_.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("manifest: malformed field: ") + e.what());
  }
  return ds;
}

TrainingRecord Dataset::record(std::size_t index) const {
  if (index >= manifest_.records.size()) throw InvalidInputError("Dataset::record: bad index");
  const ManifestRecord& mr = manifest_.records[index];
  const std::string name = mr.object_id + "_" + std::to_string(mr.view_id);

  TrainingRecord out;
  out.object_id = mr.object_id;
  out.view_id = mr.view_id;
  out.centroid = mr.centroid;
  out.scale = mr.scale;
  const auto it = objects_by_id_.find(mr.object_id);
  if (it == objects_by_id_.end())
    throw LoadError("record " + name + ": unknown object id " + mr.object_id);
  out.category = it->second.category;
  out.split = it->second.split;

  const auto pts = read_blob(root_ / mr.pts_path, static_cast<std::size_t>(mr.n_points) * 3, name);
  if (hash_hex(fnv1a64(pts.data(), pts.size() * sizeof(float))) != mr.pts_hash)
    throw LoadError("record " + name + ": checksum mismatch in " + mr.pts_path);
  out.cloud.points.resize(mr.n_points, 3);
  for (int i = 0; i < mr.n_points; ++i)
    for (int c = 0; c < 3; ++c) out.cloud.points(i, c) = pts[i * 3 + c];

  const auto mask =
      read_blob(root_ / mr.mask_path, static_cast<std::size_t>(kNumLabels) * mr.n_points, name);
  if (hash_hex(fnv1a64(mask.data(), mask.size() * sizeof(float))) != mr.mask_hash)
    throw LoadError("record " + name + ": checksum mismatch in " + mr.mask_path);
  out.masks.resize(kNumLabels, mr.n_points);
  for (int l = 0; l < kNumLabels; ++l)
    for (int i = 0; i < mr.n_points; ++i) out.masks(l, i) = mask[l * mr.n_points + i];

  const json gj = load_json_file(root_ / mr.grasps_path, "record " + name);
  try {
    out.grasps = grasps_from_json(gj.at("grasps"));
  } catch (const json::exception& e) {
    throw LoadError("record " + name + ": malformed grasps: " + e.what());
  }
  return out;
}

std::vector<TrainingRecord> Dataset::load_all() const {
  std::vector<TrainingRecord> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(record(i));
  return out;
}

}  // namespace affgrasp::synth
