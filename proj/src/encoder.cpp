#include "cityvl/encoder.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>

#include "cityvl/bev.hpp"
#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"

namespace cityvl {

namespace {

const std::array<std::string, kTaskCategoryCount> kTaskNames = {
    "ObjectCaption",       "ObjectLocalization", "ObjectAnalysis",
    "RelationshipComputation", "SceneCaption",   "SceneAnalysis",
    "ScenePlanning"};

std::uint64_t double_bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof(u));
  return u;
}

std::uint64_t hash_points(const ObjectInstance& obj) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Point3& p : obj.points()) {
    h = fnv1a64_u64(double_bits(p.x), h);
    h = fnv1a64_u64(double_bits(p.y), h);
    h = fnv1a64_u64(double_bits(p.z), h);
  }
  return h;
}

}  // namespace

const std::string& task_name(TaskCategory t) {
  return kTaskNames[static_cast<std::size_t>(t)];
}

TaskCategory task_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == name) return static_cast<TaskCategory>(i);
  throw Error("unknown task category '" + name + "'");
}

bool is_scene_level(TaskCategory t) {
  return t == TaskCategory::SceneCaption || t == TaskCategory::SceneAnalysis ||
         t == TaskCategory::ScenePlanning;
}

bool is_relationship_level(TaskCategory t) {
  return t == TaskCategory::RelationshipComputation;
}

// --------------------------------------------------------------------------
// Stand-in feature extraction

Matrix FeatureExtractor::hash_rows(std::uint64_t content_hash,
                                   std::size_t rows, const char* tag) const {
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.d));
  Matrix out(rows, cfg_.d);
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint64_t state = fnv1a64(tag, cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
    state = fnv1a64_u64(content_hash, state);
    state = fnv1a64_u64(r, state);
    for (std::size_t c = 0; c < cfg_.d; ++c)
      out.at(r, c) = unit_double(state) * scale;
  }
  return out;
}

Matrix FeatureExtractor::view_features(const Raster& patch) const {
  std::uint64_t h = fnv1a64(std::string_view(
      reinterpret_cast<const char*>(patch.pixels().data()),
      patch.pixels().size()));
  h = fnv1a64_u64(patch.width(), h);
  h = fnv1a64_u64(patch.height(), h);
  return hash_rows(h, cfg_.c, "view");
}

Matrix FeatureExtractor::shape_feature(const ObjectInstance& obj) const {
  return hash_rows(hash_points(obj), 1, "shape");
}

Matrix FeatureExtractor::landmark_embedding(const std::string& name) const {
  return hash_rows(fnv1a64(name), 1, "landmark");
}

Matrix FeatureExtractor::landmark_feature(const ObjectInstance& obj) const {
  if (!obj.landmark()) return Matrix(1, cfg_.d);  // zero row
  return landmark_embedding(*obj.landmark());
}

ObjectFeatureBundle FeatureExtractor::object_bundle(const CityScene& scene,
                                                    ObjectId id) const {
  const ObjectInstance& obj = scene.object(id);
  const Raster crop = render_object_crop(scene, id, 5.0, kCropScale);
  return {view_features(crop), shape_feature(obj), landmark_feature(obj)};
}

SceneBundle FeatureExtractor::scene_bundle(const CityScene& scene) const {
  const Raster global = render_global_bev(scene, kGlobalBevScale);
  std::vector<const ObjectInstance*> named = scene.landmark_objects();
  std::sort(named.begin(), named.end(),
            [](const ObjectInstance* a, const ObjectInstance* b) {
              return a->id() < b->id();
            });
  Matrix f_l_sce(named.size(), cfg_.d);
  for (std::size_t m = 0; m < named.size(); ++m) {
    const Matrix row = landmark_embedding(*named[m]->landmark());
    std::copy(row.data().begin(), row.data().end(),
              f_l_sce.data().begin() + static_cast<std::ptrdiff_t>(m * cfg_.d));
  }
  return {view_features(global), std::move(f_l_sce)};
}

RelationshipContext FeatureExtractor::relationship_context(
    const CityScene& scene, ObjectId target_id,
    const PositionEncoder& phi) const {
  const ObjectInstance& target = scene.object(target_id);
  RelationshipContext ctx;
  ctx.neighbor_ids = knn_neighbors(scene, target_id, cfg_.k);
  const std::size_t k = ctx.neighbor_ids.size();
  if (k == 0) throw Error("relationship context needs at least one neighbor");
  ctx.f_s_neighbors = Matrix(k, cfg_.d);
  ctx.f_l_neighbors = Matrix(k, cfg_.d);
  for (std::size_t i = 0; i < k; ++i) {
    const ObjectInstance& nb = scene.object(ctx.neighbor_ids[i]);
    const Matrix fs = shape_feature(nb);
    const Matrix fl = landmark_feature(nb);
    std::copy(fs.data().begin(), fs.data().end(),
              ctx.f_s_neighbors.data().begin() +
                  static_cast<std::ptrdiff_t>(i * cfg_.d));
    std::copy(fl.data().begin(), fl.data().end(),
              ctx.f_l_neighbors.data().begin() +
                  static_cast<std::ptrdiff_t>(i * cfg_.d));
    ctx.offsets.push_back(relative_position(target, nb));
  }
  ctx.alpha = attention_weights(shape_feature(target), ctx.f_s_neighbors,
                                ctx.offsets, phi);
  ctx.f_g = context_geometry(ctx.alpha, ctx.f_s_neighbors);
  return ctx;
}

// --------------------------------------------------------------------------
// Encoding operations

TextFeature encode_text(const std::string& query, const EncoderConfig& cfg) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < query.size()) {
    while (pos < query.size() && std::isspace(static_cast<unsigned char>(query[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < query.size() && !std::isspace(static_cast<unsigned char>(query[pos]))) ++pos;
    if (pos > start) tokens.push_back(query.substr(start, pos - start));
  }
  if (tokens.empty()) throw EmptyQuery();

  FeatureExtractor fx(cfg);
  Matrix e_t(cfg.l, cfg.d);
  const std::size_t n = std::min(tokens.size(), cfg.l);
  for (std::size_t i = 0; i < n; ++i) {
    // Position-aware token hash embedding.
    const Matrix row = fx.landmark_embedding(tokens[i] + "@" + std::to_string(i));
    std::copy(row.data().begin(), row.data().end(),
              e_t.data().begin() + static_cast<std::ptrdiff_t>(i * cfg.d));
  }
  return {std::move(e_t)};
}

PositionEncoder PositionEncoder::seeded(const EncoderConfig& cfg) {
  PositionEncoder pe;
  pe.weight = Matrix(cfg.d, 3);
  pe.bias.assign(cfg.d, 0.0);
  const double scale = 0.5 / std::sqrt(static_cast<double>(cfg.d));
  std::uint64_t state = cfg.seed ^ 0x706f73656e63ULL;
  for (double& v : pe.weight.data()) v = unit_double(state) * scale;
  for (double& v : pe.bias) v = unit_double(state) * scale;
  return pe;
}

std::vector<double> PositionEncoder::apply(const RelOffset& dp) const {
  const std::size_t d = weight.rows();
  std::vector<double> out(d);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = weight.at(i, 0) * dp.dx + weight.at(i, 1) * dp.dy +
             weight.at(i, 2) * dp.dz + bias[i];
  return out;
}

Projector Projector::seeded(ProjectorRole role, const EncoderConfig& cfg) {
  Projector p;
  p.role = role;
  p.weight = Matrix(cfg.d, cfg.d_llm);
  p.bias.assign(cfg.d_llm, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  std::uint64_t state = cfg.seed ^ (0x70726f6aULL + static_cast<std::uint64_t>(role));
  for (double& v : p.weight.data()) v = unit_double(state) * scale;
  for (double& v : p.bias) v = unit_double(state) * scale * 0.1;
  return p;
}

Projector Projector::identity_for_tests(ProjectorRole role, std::size_t d) {
  Projector p;
  p.role = role;
  p.weight = Matrix::identity(d);
  p.bias.assign(d, 0.0);
  return p;
}

Matrix Projector::apply(const Matrix& in) const {
  return affine_rows(in, weight, bias);
}

Matrix encode_object(const ObjectFeatureBundle& bundle, const Projector& proj) {
  if (proj.role != ProjectorRole::object)
    throw ShapeMismatch("encode_object needs the object projector");
  if (bundle.f_s.rows() != 1 || bundle.f_l.rows() != 1)
    throw ShapeMismatch("object bundle rows");
  if (bundle.f_v.cols() != bundle.f_s.cols() ||
      bundle.f_s.cols() != bundle.f_l.cols())
    throw ShapeMismatch("object bundle feature dims disagree");
  return proj.apply(vstack(vstack(bundle.f_v, bundle.f_s), bundle.f_l));
}

std::vector<double> attention_weights(const Matrix& f_s_target,
                                      const Matrix& f_s_neighbors,
                                      const std::vector<RelOffset>& offsets,
                                      const PositionEncoder& phi) {
  const std::size_t k = f_s_neighbors.rows();
  const std::size_t d = f_s_neighbors.cols();
  if (k == 0) throw ShapeMismatch("attention needs K >= 1");
  if (f_s_target.rows() != 1 || f_s_target.cols() != d)
    throw ShapeMismatch("target shape feature must be 1 x d");
  if (offsets.size() != k)
    throw ShapeMismatch("offsets length must equal K");

  std::vector<double> logits(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::vector<double> ph = phi.apply(offsets[i]);
    double acc = 0.0;
    for (std::size_t t = 0; t < d; ++t)
      acc += f_s_target.at(0, t) * (f_s_neighbors.at(i, t) + ph[t]);
    logits[i] = acc;
  }

  const double m = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(logits[i] - m);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

Matrix context_geometry(const std::vector<double>& alpha,
                        const Matrix& f_s_neighbors) {
  if (alpha.size() != f_s_neighbors.rows())
    throw ShapeMismatch("alpha length must equal neighbor rows");
  Matrix out = f_s_neighbors;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(i, c) *= alpha[i];
  return out;
}

Matrix encode_relationship(const Matrix& f_g, const Matrix& f_l,
                           const Projector& proj) {
  if (proj.role != ProjectorRole::relationship)
    throw ShapeMismatch("encode_relationship needs the relationship projector");
  if (f_g.rows() != f_l.rows() || f_g.cols() != f_l.cols())
    throw ShapeMismatch("F_g and F_l must both be K x d");
  return proj.apply(vstack(f_g, f_l));
}

Matrix encode_scene(const SceneBundle& bundle, const Projector& proj) {
  if (proj.role != ProjectorRole::scene)
    throw ShapeMismatch("encode_scene needs the scene projector");
  if (bundle.f_l_sce.rows() > 0 && bundle.f_l_sce.cols() != bundle.f_v_sce.cols())
    throw ShapeMismatch("scene bundle feature dims disagree");
  return proj.apply(vstack(bundle.f_v_sce, bundle.f_l_sce));
}

BranchPlan route_instruction(TaskCategory task,
                             const std::vector<ObjectId>& selection) {
  BranchPlan plan;
  plan.targets = selection;
  if (is_scene_level(task)) {
    if (!selection.empty()) throw UnexpectedSelection(task_name(task));
    plan.object_active = false;
    plan.relationship_active = false;
    plan.scene_active = true;
  } else {
    if (selection.empty()) throw SelectionRequired(task_name(task));
    plan.object_active = true;
    plan.relationship_active = true;
    plan.scene_active = true;
  }
  return plan;
}

double nll_loss(const Matrix& token_logits,
                const std::vector<std::size_t>& targets) {
  const std::size_t n = token_logits.rows();
  const std::size_t v = token_logits.cols();
  if (n == 0 || targets.size() != n)
    throw ShapeMismatch("one target token per logit row");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= v) throw IndexOutOfVocab(targets[i], v);
    const double* row = token_logits.row_ptr(i);
    const double m = *std::max_element(row, row + v);
    double lse = 0.0;
    for (std::size_t j = 0; j < v; ++j) lse += std::exp(row[j] - m);
    total += -(row[targets[i]] - m - std::log(lse));
  }
  return total / static_cast<double>(n);
}

// --------------------------------------------------------------------------
// Toy model with hand-derived gradients

ToyInputs ToyInputs::seeded(const EncoderConfig& cfg, std::size_t m,
                            std::size_t vocab) {
  auto fill = [&](Matrix& mat, std::uint64_t tag) {
    std::uint64_t state = cfg.seed ^ tag;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (double& v : mat.data()) v = unit_double(state) * scale;
  };
  ToyInputs in;
  in.f_v = Matrix(cfg.c, cfg.d);
  in.f_s_target = Matrix(1, cfg.d);
  in.f_l = Matrix(1, cfg.d);
  in.f_s_neighbors = Matrix(cfg.k, cfg.d);
  in.f_l_neighbors = Matrix(cfg.k, cfg.d);
  in.f_v_sce = Matrix(cfg.c, cfg.d);
  in.f_l_sce = Matrix(m, cfg.d);
  fill(in.f_v, 11);
  fill(in.f_s_target, 22);
  fill(in.f_l, 33);
  fill(in.f_s_neighbors, 44);
  fill(in.f_l_neighbors, 55);
  fill(in.f_v_sce, 66);
  fill(in.f_l_sce, 77);
  std::uint64_t state = cfg.seed ^ 88u;
  for (std::size_t i = 0; i < cfg.k; ++i)
    in.offsets.push_back({unit_double(state) * 2.0, unit_double(state) * 2.0,
                          unit_double(state) * 2.0});
  const std::size_t rows = (cfg.c + 2) + 2 * cfg.k + (cfg.c + m);
  for (std::size_t i = 0; i < rows; ++i)
    in.targets.push_back(splitmix64(state) % vocab);
  return in;
}

ToyModel ToyModel::seeded(const EncoderConfig& cfg, std::size_t vocab) {
  ToyModel m;
  m.proj_o = Projector::seeded(ProjectorRole::object, cfg);
  m.proj_r = Projector::seeded(ProjectorRole::relationship, cfg);
  m.proj_s = Projector::seeded(ProjectorRole::scene, cfg);
  m.phi = PositionEncoder::seeded(cfg);
  m.head = Matrix(cfg.d_llm, vocab);
  std::uint64_t state = cfg.seed ^ 0x68656164ULL;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_llm));
  for (double& v : m.head.data()) v = unit_double(state) * scale;
  return m;
}

namespace {

struct ToyTrace {
  std::vector<double> alpha;
  Matrix f_g;
  Matrix in_o, in_r, in_s;
  Matrix e_o, e_r, e_s;
  Matrix x;       // concatenated embeddings
  Matrix logits;  // x * head
};

ToyTrace toy_forward_trace(const ToyModel& m, const ToyInputs& in) {
  ToyTrace t;
  t.alpha = attention_weights(in.f_s_target, in.f_s_neighbors, in.offsets, m.phi);
  t.f_g = context_geometry(t.alpha, in.f_s_neighbors);
  t.in_o = vstack(vstack(in.f_v, in.f_s_target), in.f_l);
  t.in_r = vstack(t.f_g, in.f_l_neighbors);
  t.in_s = vstack(in.f_v_sce, in.f_l_sce);
  t.e_o = affine_rows_serial(t.in_o, m.proj_o.weight, m.proj_o.bias);
  t.e_r = affine_rows_serial(t.in_r, m.proj_r.weight, m.proj_r.bias);
  t.e_s = affine_rows_serial(t.in_s, m.proj_s.weight, m.proj_s.bias);
  t.x = vstack(vstack(t.e_o, t.e_r), t.e_s);
  t.logits = matmul_serial(t.x, m.head);
  return t;
}

}  // namespace

double ToyModel::forward(const ToyInputs& in) const {
  return nll_loss(toy_forward_trace(*this, in).logits, in.targets);
}

ToyModel::Grads ToyModel::backward(const ToyInputs& in) const {
  const ToyTrace t = toy_forward_trace(*this, in);
  const std::size_t n = t.logits.rows(), v = t.logits.cols();
  const std::size_t d = proj_o.weight.rows(), dl = proj_o.weight.cols();
  const std::size_t k = in.f_s_neighbors.rows();

  // d loss / d logits = (softmax - onehot) / n.
  Matrix dlogits(n, v);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = t.logits.row_ptr(i);
    const double mx = *std::max_element(row, row + v);
    double lse = 0.0;
    for (std::size_t j = 0; j < v; ++j) lse += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < v; ++j)
      dlogits.at(i, j) = std::exp(row[j] - mx) / lse;
    dlogits.at(i, in.targets[i]) -= 1.0;
    for (std::size_t j = 0; j < v; ++j)
      dlogits.at(i, j) /= static_cast<double>(n);
  }

  Grads g;
  g.head = matmul_serial(transpose(t.x), dlogits);
  const Matrix dx = matmul_serial(dlogits, transpose(head));

  auto slice_rows = [](const Matrix& m2, std::size_t r0, std::size_t r1) {
    Matrix out(r1 - r0, m2.cols());
    std::copy(m2.data().begin() + static_cast<std::ptrdiff_t>(r0 * m2.cols()),
              m2.data().begin() + static_cast<std::ptrdiff_t>(r1 * m2.cols()),
              out.data().begin());
    return out;
  };
  const std::size_t no = t.e_o.rows(), nr = t.e_r.rows();
  const Matrix de_o = slice_rows(dx, 0, no);
  const Matrix de_r = slice_rows(dx, no, no + nr);
  const Matrix de_s = slice_rows(dx, no + nr, n);

  auto proj_back = [&](const Matrix& input, const Matrix& dout, Matrix& dw,
                       std::vector<double>& db) {
    dw = matmul_serial(transpose(input), dout);
    db.assign(dl, 0.0);
    for (std::size_t i = 0; i < dout.rows(); ++i)
      for (std::size_t j = 0; j < dl; ++j) db[j] += dout.at(i, j);
  };
  proj_back(t.in_o, de_o, g.w_o, g.b_o);
  proj_back(t.in_r, de_r, g.w_r, g.b_r);
  proj_back(t.in_s, de_s, g.w_s, g.b_s);

  // Into the attention path: only the top K rows of d in_r reach F_g.
  const Matrix din_r = matmul_serial(de_r, transpose(proj_r.weight));
  std::vector<double> dalpha(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < d; ++c)
      dalpha[i] += din_r.at(i, c) * in.f_s_neighbors.at(i, c);

  double dot = 0.0;
  for (std::size_t i = 0; i < k; ++i) dot += t.alpha[i] * dalpha[i];
  std::vector<double> dlogit_att(k);
  for (std::size_t i = 0; i < k; ++i)
    dlogit_att[i] = t.alpha[i] * (dalpha[i] - dot);

  g.w_phi = Matrix(d, 3);
  g.b_phi.assign(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const RelOffset& dp = in.offsets[i];
    for (std::size_t tt = 0; tt < d; ++tt) {
      const double dphi = dlogit_att[i] * in.f_s_target.at(0, tt);
      g.w_phi.at(tt, 0) += dphi * dp.dx;
      g.w_phi.at(tt, 1) += dphi * dp.dy;
      g.w_phi.at(tt, 2) += dphi * dp.dz;
      g.b_phi[tt] += dphi;
    }
  }
  return g;
}

void ToyModel::apply_gradients(const Grads& g, double lr) {
  auto step_m = [lr](Matrix& p, const Matrix& grad) {
    for (std::size_t i = 0; i < p.data().size(); ++i)
      p.data()[i] -= lr * grad.data()[i];
  };
  auto step_v = [lr](std::vector<double>& p, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * grad[i];
  };
  step_m(proj_o.weight, g.w_o);
  step_v(proj_o.bias, g.b_o);
  step_m(proj_r.weight, g.w_r);
  step_v(proj_r.bias, g.b_r);
  step_m(proj_s.weight, g.w_s);
  step_v(proj_s.bias, g.b_s);
  step_m(phi.weight, g.w_phi);
  step_v(phi.bias, g.b_phi);
  step_m(head, g.head);
}

// --------------------------------------------------------------------------
// Finite-difference verification

namespace {

constexpr double kFdStep = 1e-5;

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

template <typename Loss>
void fd_check(std::vector<double>& params, const std::vector<double>& analytic,
              Loss&& loss, double& max_err, std::size_t& count) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + kFdStep;
    const double up = loss();
    params[i] = keep - kFdStep;
    const double down = loss();
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * kFdStep);
    max_err = std::max(max_err, rel_err(analytic[i], numeric));
    ++count;
  }
}

GradCheckReport gradcheck_projector(const EncoderConfig& cfg) {
  Projector proj = Projector::seeded(ProjectorRole::object, cfg);
  std::uint64_t state = cfg.seed ^ 0xabcdULL;
  const std::size_t n = cfg.c + 2;
  Matrix input(n, cfg.d), weights_out(n, cfg.d_llm);
  // Rank-one signed probes: dW = input^T G then has every entry bounded away
  // from zero, so the relative error is not dominated by finite-difference
  // cancellation on near-zero gradients.
  std::vector<double> row_sign(n, 1.0);
  row_sign[n - 2] = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < cfg.d; ++t)
      input.at(i, t) = row_sign[i] * (0.75 + 0.25 * unit_double(state));
    for (std::size_t j = 0; j < cfg.d_llm; ++j)
      weights_out.at(i, j) = row_sign[i] * (0.75 + 0.25 * unit_double(state));
  }

  // L = sum_ij G_ij * out_ij for a fixed random G.
  auto loss = [&]() {
    const Matrix out = proj.apply(input);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data().size(); ++i)
      acc += out.data()[i] * weights_out.data()[i];
    return acc;
  };

  const Matrix dw = matmul_serial(transpose(input), weights_out);
  std::vector<double> db(cfg.d_llm, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cfg.d_llm; ++j)
      db[j] += weights_out.at(i, j);

  GradCheckReport rep{GradCheckComponent::projector, 0.0, 0};
  fd_check(proj.weight.data(), dw.data(), loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(proj.bias, db, loss, rep.max_relative_error,
           rep.checked_parameters);
  return rep;
}

GradCheckReport gradcheck_attention(const EncoderConfig& cfg) {
  PositionEncoder phi = PositionEncoder::seeded(cfg);
  std::uint64_t state = cfg.seed ^ 0xbeefULL;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d));
  Matrix f_t(1, cfg.d), f_s(cfg.k, cfg.d);
  for (double& v : f_t.data()) v = unit_double(state) * scale;
  for (double& v : f_s.data()) v = unit_double(state) * scale;
  std::vector<RelOffset> offsets;
  for (std::size_t i = 0; i < cfg.k; ++i)
    offsets.push_back({unit_double(state) * 2.0, unit_double(state) * 2.0,
                       unit_double(state) * 2.0});
  std::vector<double> coeff(cfg.k);
  for (double& v : coeff) v = unit_double(state);

  // L = sum_k coeff_k * alpha_k.
  auto loss = [&]() {
    const auto alpha = attention_weights(f_t, f_s, offsets, phi);
    double acc = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) acc += coeff[i] * alpha[i];
    return acc;
  };

  const auto alpha = attention_weights(f_t, f_s, offsets, phi);
  double dot = 0.0;
  for (std::size_t i = 0; i < cfg.k; ++i) dot += alpha[i] * coeff[i];
  Matrix dw(cfg.d, 3);
  std::vector<double> db(cfg.d, 0.0);
  for (std::size_t i = 0; i < cfg.k; ++i) {
    const double dlogit = alpha[i] * (coeff[i] - dot);
    for (std::size_t t = 0; t < cfg.d; ++t) {
      const double dphi = dlogit * f_t.at(0, t);
      dw.at(t, 0) += dphi * offsets[i].dx;
      dw.at(t, 1) += dphi * offsets[i].dy;
      dw.at(t, 2) += dphi * offsets[i].dz;
      db[t] += dphi;
    }
  }

  GradCheckReport rep{GradCheckComponent::attention, 0.0, 0};
  fd_check(phi.weight.data(), dw.data(), loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(phi.bias, db, loss, rep.max_relative_error,
           rep.checked_parameters);
  return rep;
}

GradCheckReport gradcheck_full(const EncoderConfig& cfg) {
  const std::size_t vocab = 17, m = 3;
  ToyModel model = ToyModel::seeded(cfg, vocab);
  const ToyInputs in = ToyInputs::seeded(cfg, m, vocab);
  const ToyModel::Grads g = model.backward(in);
  auto loss = [&]() { return model.forward(in); };

  GradCheckReport rep{GradCheckComponent::full, 0.0, 0};
  fd_check(model.proj_o.weight.data(), g.w_o.data(), loss,
           rep.max_relative_error, rep.checked_parameters);
  fd_check(model.proj_o.bias, g.b_o, loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(model.proj_r.weight.data(), g.w_r.data(), loss,
           rep.max_relative_error, rep.checked_parameters);
  fd_check(model.proj_r.bias, g.b_r, loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(model.proj_s.weight.data(), g.w_s.data(), loss,
           rep.max_relative_error, rep.checked_parameters);
  fd_check(model.proj_s.bias, g.b_s, loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(model.phi.weight.data(), g.w_phi.data(), loss,
           rep.max_relative_error, rep.checked_parameters);
  fd_check(model.phi.bias, g.b_phi, loss, rep.max_relative_error,
           rep.checked_parameters);
  fd_check(model.head.data(), g.head.data(), loss, rep.max_relative_error,
           rep.checked_parameters);
  return rep;
}

}  // namespace

GradCheckReport gradcheck(GradCheckComponent component,
                          const EncoderConfig& cfg) {
  switch (component) {
    case GradCheckComponent::projector:
      return gradcheck_projector(cfg);
    case GradCheckComponent::attention:
      return gradcheck_attention(cfg);
    case GradCheckComponent::full:
      return gradcheck_full(cfg);
  }
  throw Error("unknown gradcheck component");
}

}  // namespace cityvl
