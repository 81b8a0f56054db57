#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affgrasp/autodiff.hpp"
#include "affgrasp/geometry.hpp"
#include "affgrasp/synthdata.hpp"

namespace affgrasp::net {

using ag::Graph;
using ag::NodePtr;
using ag::Param;
using ag::ParamStore;

Eigen::VectorXd sample_latent(Rng& rng, int latent_len);

/// k nearest neighbors per point (self excluded, ties by smaller index),
/// flattened row-major N*k. Throws if k >= N.
std::vector<int> knn_graph(const Points& cloud, int k);

struct Dense {
  Param* w = nullptr;
  Param* b = nullptr;
  static Dense create(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
  NodePtr operator()(Graph& g, NodePtr x) const;
};

struct Mlp {
  std::vector<Dense> layers;
  static Mlp create(ParamStore& store, const std::string& name, int in,
                    const std::vector<int>& widths, Rng& rng);
  NodePtr forward(Graph& g, NodePtr x, bool relu_last = true) const;
};

struct SaLevelConfig {
  int centroids = 0;
  double radius = 0.0;
  int cap = 0;              // neighborhood size cap
  std::vector<int> mlp;
};

struct EncoderConfig {
  std::vector<SaLevelConfig> levels;
  std::vector<int> global_mlp;  // last width is the encoder output
};

/// Two set-abstraction levels then a global pooling, PointNet++-style.
/// Defaults follow the 1024-wide feature schedule; the desk variant shrinks
/// every width for CPU-scale training.
EncoderConfig paper_encoder();
EncoderConfig desk_encoder();

struct SetAbstractionEncoder {
  EncoderConfig cfg;
  int feature_channels = 3;
  std::vector<Mlp> level_mlps;
  Mlp global;

  static SetAbstractionEncoder create(ParamStore& store, const std::string& prefix,
                                      const EncoderConfig& cfg, int feature_channels, Rng& rng);
  /// xyz: N x 3 positions driving the grouping; features: [N, feature_channels]
  /// node fed to the MLPs. Returns the pooled [1, out] feature.
  NodePtr forward(Graph& g, const Points& xyz, NodePtr features) const;
  int out_width() const { return cfg.global_mlp.back(); }
};

struct MhsaBlock {
  int heads = 1;
  int dim = 0;
  Dense wq, wk, wv, wo;
  static MhsaBlock create(ParamStore& store, const std::string& name, int dim, int heads,
                          Rng& rng);
  NodePtr forward(Graph& g, NodePtr x) const;
};

struct PoseNodes {
  NodePtr quat;   // [1,4], unit rows
  NodePtr trans;  // [1,3]
};

// ---------------------------------------------------------------------------

struct GeneratorConfig {
  int latent_len = 2;
  EncoderConfig encoder = paper_encoder();
  int head_hidden = 256;
};

/// Implicit multi-stream grasp generator: one set-abstraction stream per task
/// label, latent indicator broadcast-concatenated per point, quaternion +
/// translation heads, quaternion renormalized on output.
class GeneratorNet {
 public:
  GeneratorNet(GeneratorConfig cfg, std::vector<synth::AffordanceLabel> tasks, std::uint64_t seed);

  const GeneratorConfig& config() const { return cfg_; }
  const std::vector<synth::AffordanceLabel>& tasks() const { return tasks_; }
  bool has_task(synth::AffordanceLabel task) const;

  PoseNodes forward_nodes(Graph& g, const Points& cloud, const Eigen::VectorXd& latent,
                          synth::AffordanceLabel task) const;
  GraspPose forward(const Points& cloud, const Eigen::VectorXd& latent,
                    synth::AffordanceLabel task) const;

  ParamStore& params() const { return params_; }
  std::string describe() const;
  std::uint64_t config_hash() const;

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  struct Stream {
    SetAbstractionEncoder encoder;
    Dense quat_hidden, quat_out, trans_hidden, trans_out;
  };
  GeneratorConfig cfg_;
  std::vector<synth::AffordanceLabel> tasks_;
  std::map<synth::AffordanceLabel, Stream> streams_;
  mutable ParamStore params_;
};

// ---------------------------------------------------------------------------

struct EvaluatorConfig {
  EncoderConfig encoder = paper_encoder();
  std::vector<int> fc = {1024, 512, 256};
  int gripper_samples = 20;
};

/// Object + gripper cloud with a binary source flag per row; control points
/// plus interpolated skeleton samples, transformed by the pose.
Eigen::MatrixXd assemble_evaluator_input(const Points& object_cloud, const GraspPose& pose,
                                         const GripperSpec& spec, int gripper_samples);

class EvaluatorNet {
 public:
  EvaluatorNet(EvaluatorConfig cfg, std::uint64_t seed);

  const EvaluatorConfig& config() const { return cfg_; }
  NodePtr forward_nodes(Graph& g, const Eigen::MatrixXd& combined) const;  // [1,1] in (0,1)
  double forward(const Eigen::MatrixXd& combined) const;

  ParamStore& params() const { return params_; }
  std::string describe() const;
  std::uint64_t config_hash() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  EvaluatorConfig cfg_;
  SetAbstractionEncoder encoder_;
  Mlp fc_;
  Dense out_;
  mutable ParamStore params_;
};

// ---------------------------------------------------------------------------

struct AffordanceConfig {
  std::vector<int> point_convs = {64, 128, 256};
  int edge_conv = 64;
  int edge_mlp = 512;
  std::vector<int> attn_widths = {64, 128};
  int attn_heads = 4;
  std::vector<int> decoder = {512, 256, 128};
  int knn_k = 20;
  int n_labels = synth::kNumLabels;
  bool use_point = true;
  bool use_edge = true;
  bool use_attention = true;
};

AffordanceConfig desk_affordance();

/// Attention-aware bilinear affordance network: shared per-point convolutions,
/// one edge convolution over the kNN graph followed by a shared perceptron,
/// a two-stage multi-head self-attention stack, and a per-point decoder with
/// one logistic output per label.
class AffordanceNet {
 public:
  AffordanceNet(AffordanceConfig cfg, std::uint64_t seed);

  const AffordanceConfig& config() const { return cfg_; }
  NodePtr forward_nodes(Graph& g, const Points& cloud) const;  // [N, M]
  Eigen::MatrixXd forward(const Points& cloud) const;          // M x N heatmap

  ParamStore& params() const { return params_; }
  std::string describe() const;
  std::uint64_t config_hash() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  AffordanceConfig cfg_;
  std::vector<Dense> point_convs_;
  Dense edge_conv_;
  Dense edge_mlp_;
  Dense attn_in_, attn_mid_;
  MhsaBlock attn1_, attn2_;
  std::vector<Dense> decoder_;
  Dense decoder_out_;
  mutable ParamStore params_;
};

// ---------------------------------------------------------------------------

struct VaeConfig {
  int latent_len = 2;
  EncoderConfig encoder = paper_encoder();
  int head_hidden = 256;
  double beta = 0.01;
};

/// Conditional VAE baseline: shared cloud encoder, per-task grasp encoder
/// producing a diagonal Gaussian, per-task decoder with the generator's head
/// layout. Reconstruction uses the same control-point L1 as the implicit loss.
class VaeBaselineNet {
 public:
  VaeBaselineNet(VaeConfig cfg, std::vector<synth::AffordanceLabel> tasks, std::uint64_t seed);

  const VaeConfig& config() const { return cfg_; }
  const std::vector<synth::AffordanceLabel>& tasks() const { return tasks_; }
  bool has_task(synth::AffordanceLabel task) const;

  struct TrainNodes {
    PoseNodes pose;
    NodePtr mu;      // [1,L]
    NodePtr logvar;  // [1,L]
  };
  TrainNodes forward_train(Graph& g, const Points& cloud, const GraspPose& gt,
                           const GripperSpec& spec, synth::AffordanceLabel task, Rng& rng) const;
  PoseNodes decode_nodes(Graph& g, const Points& cloud, const Eigen::VectorXd& z,
                         synth::AffordanceLabel task) const;
  GraspPose forward(const Points& cloud, const Eigen::VectorXd& z,
                    synth::AffordanceLabel task) const;

  ParamStore& params() const { return params_; }
  std::string describe() const;
  std::uint64_t config_hash() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  struct Head {
    Mlp pose_enc;    // [feature + 21] -> 2L
    Mlp decode;      // [feature + L] -> hidden
    Dense quat_out, trans_out;
  };
  NodePtr cloud_feature(Graph& g, const Points& cloud) const;
  VaeConfig cfg_;
  std::vector<synth::AffordanceLabel> tasks_;
  SetAbstractionEncoder encoder_;
  std::map<synth::AffordanceLabel, Head> heads_;
  mutable ParamStore params_;
};

// ---------------------------------------------------------------------------

/// Versioned single-file checkpoint: magic, version, kind string, config
/// hash, then named little-endian f64 arrays with a shape table.
void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     std::uint64_t config_hash, const ParamStore& params);
void load_checkpoint(const std::filesystem::path& path, const std::string& expect_kind,
                     std::uint64_t expect_hash, ParamStore& params);

}  // namespace affgrasp::net
