#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cityvl/matrix.hpp"
#include "cityvl/raster.hpp"
#include "cityvl/scene.hpp"
#include "cityvl/spatial.hpp"

namespace cityvl {

enum class TaskCategory : std::uint8_t {
  ObjectCaption,
  ObjectLocalization,
  ObjectAnalysis,
  RelationshipComputation,
  SceneCaption,
  SceneAnalysis,
  ScenePlanning,
};
inline constexpr std::size_t kTaskCategoryCount = 7;

const std::string& task_name(TaskCategory t);
TaskCategory task_from_name(const std::string& name);
bool is_scene_level(TaskCategory t);
bool is_relationship_level(TaskCategory t);

// Desk-scale defaults; the production-scale dims stay reachable through the
// same fields.
struct EncoderConfig {
  std::size_t d = 32;        // feature dim
  std::size_t d_llm = 64;    // language-model embedding dim
  std::size_t l = 16;        // padded sentence length, tokens
  std::size_t c = 4;         // view patch count
  std::size_t k = 4;         // neighbor count
  std::uint64_t seed = 0;
};

struct TextFeature {
  Matrix e_t;  // l x d
};

struct ObjectFeatureBundle {
  Matrix f_v;  // C x d, local view
  Matrix f_s;  // 1 x d, shape
  Matrix f_l;  // 1 x d, landmark; the zero row iff the object has none
};

struct SceneBundle {
  Matrix f_v_sce;  // C x d, global view
  Matrix f_l_sce;  // M x d, one row per landmark-named object
};

struct RelationshipContext {
  std::vector<ObjectId> neighbor_ids;   // K, knn order
  Matrix f_s_neighbors;                 // K x d
  std::vector<RelOffset> offsets;       // K
  Matrix f_l_neighbors;                 // K x d, zero rows when unnamed
  std::vector<double> alpha;            // K, softmax weights
  Matrix f_g;                           // K x d, alpha-scaled shapes
};

// Seeded affine map from offset space to feature space, the learnable
// position encoding used inside the attention logits.
struct PositionEncoder {
  Matrix weight;             // d x 3
  std::vector<double> bias;  // d

  static PositionEncoder seeded(const EncoderConfig& cfg);
  std::vector<double> apply(const RelOffset& dp) const;  // length d
};

enum class ProjectorRole : std::uint8_t { object, relationship, scene };

struct Projector {
  ProjectorRole role = ProjectorRole::object;
  Matrix weight;             // d x D_llm
  std::vector<double> bias;  // D_llm

  static Projector seeded(ProjectorRole role, const EncoderConfig& cfg);
  static Projector identity_for_tests(ProjectorRole role, std::size_t d);
  Matrix apply(const Matrix& in) const;
};

struct Embeddings {
  Matrix e_o;  // (C+2) x D_llm per target, or empty when the branch is off
  Matrix e_r;  // 2K x D_llm, or empty
  Matrix e_s;  // (C+M) x D_llm
};

struct BranchPlan {
  bool object_active = false;
  bool relationship_active = false;
  bool scene_active = true;
  std::vector<ObjectId> targets;
};

// Deterministic stand-in extractors replacing the pretrained view/shape/text
// encoders: every feature is a seeded hash embedding of its input content.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const EncoderConfig& cfg) : cfg_(cfg) {}

  Matrix view_features(const Raster& patch) const;              // C x d
  Matrix shape_feature(const ObjectInstance& obj) const;        // 1 x d
  Matrix landmark_feature(const ObjectInstance& obj) const;     // 1 x d
  Matrix landmark_embedding(const std::string& name) const;     // 1 x d

  ObjectFeatureBundle object_bundle(const CityScene& scene, ObjectId id) const;
  SceneBundle scene_bundle(const CityScene& scene) const;
  RelationshipContext relationship_context(const CityScene& scene,
                                           ObjectId target_id,
                                           const PositionEncoder& phi) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Matrix hash_rows(std::uint64_t content_hash, std::size_t rows,
                   const char* tag) const;
};

TextFeature encode_text(const std::string& query, const EncoderConfig& cfg);

Matrix encode_object(const ObjectFeatureBundle& bundle, const Projector& proj);

// Eq-style attention over neighbor shapes: logit_k = f_s_target . (F_s_k +
// phi(dp_k)), softmax with max subtraction.
std::vector<double> attention_weights(const Matrix& f_s_target,
                                      const Matrix& f_s_neighbors,
                                      const std::vector<RelOffset>& offsets,
                                      const PositionEncoder& phi);

// Row k of the result is alpha_k * row k of f_s_neighbors (scaled, not
// summed).
Matrix context_geometry(const std::vector<double>& alpha,
                        const Matrix& f_s_neighbors);

Matrix encode_relationship(const Matrix& f_g, const Matrix& f_l,
                           const Projector& proj);

Matrix encode_scene(const SceneBundle& bundle, const Projector& proj);

BranchPlan route_instruction(TaskCategory task,
                             const std::vector<ObjectId>& selection);

// Mean over positions of -log softmax(logits_i)[target_i].
double nll_loss(const Matrix& token_logits,
                const std::vector<std::size_t>& targets);

// ---------------------------------------------------------------------------
// Toy trainable model over the full encode -> concat -> loss path. Gradients
// are hand-derived and verified against central finite differences.

struct ToyInputs {
  Matrix f_v;                      // C x d
  Matrix f_s_target;               // 1 x d
  Matrix f_l;                      // 1 x d
  Matrix f_s_neighbors;            // K x d
  std::vector<RelOffset> offsets;  // K
  Matrix f_l_neighbors;            // K x d
  Matrix f_v_sce;                  // C x d
  Matrix f_l_sce;                  // M x d
  std::vector<std::size_t> targets;  // one token per embedding row

  static ToyInputs seeded(const EncoderConfig& cfg, std::size_t m,
                          std::size_t vocab);
};

struct ToyModel {
  Projector proj_o, proj_r, proj_s;
  PositionEncoder phi;
  Matrix head;  // D_llm x V

  static ToyModel seeded(const EncoderConfig& cfg, std::size_t vocab);

  double forward(const ToyInputs& in) const;

  struct Grads {
    Matrix w_o, w_r, w_s;                    // projector weights
    std::vector<double> b_o, b_r, b_s;       // projector biases
    Matrix w_phi;                            // d x 3
    std::vector<double> b_phi;               // d
    Matrix head;                             // D_llm x V
  };
  Grads backward(const ToyInputs& in) const;

  void apply_gradients(const Grads& g, double lr);
};

enum class GradCheckComponent : std::uint8_t { projector, attention, full };

struct GradCheckReport {
  GradCheckComponent component;
  double max_relative_error = 0.0;
  std::size_t checked_parameters = 0;
};

// Central finite differences, step 1e-5, against the analytic gradients.
GradCheckReport gradcheck(GradCheckComponent component,
                          const EncoderConfig& cfg);

}  // namespace cityvl
