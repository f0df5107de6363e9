#include "cityvl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cityvl/bev.hpp"
#include "cityvl/errors.hpp"
#include "cityvl/hashing.hpp"
#include "cityvl/metrics.hpp"
#include "cityvl/scripted.hpp"

namespace cityvl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileMissing(path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const std::string s = read_file(path);
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string persona_slug(const std::string& name) {
  std::string out = name;
  std::replace(out.begin(), out.end(), ' ', '-');
  return out;
}

// Fans items out over `workers` threads; the first exception wins and is
// rethrown after all workers drain.
template <typename Fn>
void fan_out(std::size_t item_count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, item_count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < item_count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= item_count) return;
      {
        std::lock_guard lock(err_mu);
        if (first_error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["fixture_hash"] = fixture_hash;
  j["timestamp"] = timestamp;
  j["seed"] = seed;
  auto& st = j["stages"] = json::object();
  for (const auto& [name, rec] : stages) {
    st[name] = {{"status", rec.status},
                {"files", rec.files},
                {"digest", rec.digest}};
  }
  j["task_counts"] = task_counts;
  j["qc_counts"] = qc_counts;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_hash = j.value("config_hash", "");
  m.fixture_hash = j.value("fixture_hash", "");
  m.timestamp = j.value("timestamp", "");
  m.seed = j.value("seed", 0ULL);
  if (j.contains("stages")) {
    for (const auto& [name, rec] : j["stages"].items()) {
      StageRecord r;
      r.status = rec.value("status", "");
      r.digest = rec.value("digest", "");
      if (rec.contains("files"))
        for (const auto& [path, hash] : rec["files"].items())
          r.files[path] = hash.get<std::string>();
      m.stages[name] = r;
    }
  }
  if (j.contains("task_counts"))
    for (const auto& [k, v] : j["task_counts"].items())
      m.task_counts[k] = v.get<std::size_t>();
  if (j.contains("qc_counts"))
    for (const auto& [k, v] : j["qc_counts"].items())
      m.qc_counts[k] = v.get<std::size_t>();
  return m;
}

std::vector<AttributeText> sample_evidence(const CityScene& scene,
                                           const SceneGraph& graph,
                                           const QASample& sample,
                                           const PipelineConfig& cfg) {
  std::vector<AttributeText> out;
  if (is_scene_level(sample.task)) {
    out.push_back(serialize_scene(scene, graph, cfg.max_relations));
    return out;
  }
  if (sample.target_ids.empty())
    throw Error("object-level sample without targets");
  const ObjectId target = sample.target_ids.front();
  out.push_back(serialize_object(scene.object(target)));
  const auto neighbors = knn_neighbors(scene, target, cfg.encoder.k);
  for (ObjectId nb : neighbors)
    out.push_back(serialize_relation(scene.object(target), scene.object(nb)));
  return out;
}

PipelineRunner::PipelineRunner(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  load_manifest();
}

void PipelineRunner::load_manifest() {
  const fs::path path = fs::path(cfg_.out_dir) / "manifest.json";
  if (fs::exists(path)) {
    manifest_ = RunManifest::from_json(read_file(path));
    if (manifest_.config_hash != cfg_.config_hash()) manifest_ = RunManifest{};
  }
  manifest_.config_hash = cfg_.config_hash();
  manifest_.run_id = manifest_.config_hash.substr(0, 12);
  manifest_.seed = cfg_.seed;
  if (!cfg_.replay_fixture.empty())
    manifest_.fixture_hash = sha256_file_hex(cfg_.replay_fixture);
}

void PipelineRunner::save_manifest() {
  manifest_.timestamp = iso_timestamp();
  write_file(fs::path(cfg_.out_dir) / "manifest.json", manifest_.to_json());
}

bool PipelineRunner::stage_intact(const std::string& name) const {
  auto it = manifest_.stages.find(name);
  if (it == manifest_.stages.end() || it->second.status != "complete")
    return false;
  for (const auto& [rel, hash] : it->second.files) {
    const fs::path p = fs::path(cfg_.out_dir) / rel;
    if (!fs::exists(p) || sha256_file_hex(p.string()) != hash) return false;
  }
  return true;
}

bool PipelineRunner::deps_stable(const std::string& name) const {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"ingest", {}},
      {"graph", {"ingest"}},
      {"render", {"ingest"}},
      {"serialize", {"graph"}},
      {"generate", {"serialize", "render"}},
      {"qc", {"generate"}},
      {"evaluate", {"qc"}},
      {"encode-demo", {"ingest"}}};
  for (const auto& dep : deps.at(name))
    if (std::find(executed_.begin(), executed_.end(), dep) != executed_.end())
      return false;
  return true;
}

void PipelineRunner::finish_stage(const std::string& name,
                                  const std::vector<std::string>& rel_files) {
  StageRecord rec;
  rec.status = "complete";
  std::string digest_input;
  std::vector<std::string> sorted = rel_files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& rel : sorted) {
    const std::string h =
        sha256_file_hex((fs::path(cfg_.out_dir) / rel).string());
    rec.files[rel] = h;
    digest_input += rel + ":" + h + "\n";
  }
  rec.digest = sha256_hex(digest_input);
  manifest_.stages[name] = rec;
  executed_.push_back(name);
  save_manifest();
}

std::shared_ptr<Transport> PipelineRunner::make_transport(
    const GatewaySpec& spec) {
  if (!cfg_.replay_fixture.empty())
    return std::make_shared<ReplayTransport>(cfg_.replay_fixture);
  if (spec.endpoint == "scripted") return std::make_shared<ScriptedTransport>();
  return std::make_shared<HttpTransport>(spec.endpoint, spec.api_key_env);
}

Gateway& PipelineRunner::generator_gateway() {
  if (!generator_) {
    GatewayConfig gc;
    gc.model_id = cfg_.generator.model_id;
    gc.in_flight_limit = cfg_.generator.in_flight;
    gc.max_calls = cfg_.generator.max_calls;
    gc.max_total_tokens = cfg_.generator.max_total_tokens;
    gc.backoff_base_ms = cfg_.generator.backoff_base_ms;
    generator_ = std::make_unique<Gateway>(gc, make_transport(cfg_.generator));
    if (cfg_.record) {
      if (!recorder_) recorder_ = std::make_shared<FixtureRecorder>();
      generator_->attach_recorder(recorder_);
    }
  }
  return *generator_;
}

Gateway& PipelineRunner::judge_gateway(std::size_t i) {
  if (judges_.empty()) {
    for (const auto& spec : cfg_.judges) {
      GatewayConfig gc;
      gc.model_id = spec.model_id;
      gc.in_flight_limit = spec.in_flight;
      gc.max_calls = spec.max_calls;
      gc.max_total_tokens = spec.max_total_tokens;
      gc.backoff_base_ms = spec.backoff_base_ms;
      judges_.push_back(std::make_unique<Gateway>(gc, make_transport(spec)));
      if (cfg_.record) {
        if (!recorder_) recorder_ = std::make_shared<FixtureRecorder>();
        judges_.back()->attach_recorder(recorder_);
      }
    }
  }
  return *judges_.at(i);
}

std::vector<CityScene> PipelineRunner::load_canonical_scenes() const {
  std::vector<CityScene> scenes;
  const fs::path dir = fs::path(cfg_.out_dir) / "scenes";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".scene") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) scenes.push_back(load_scene(f));
  return scenes;
}

void PipelineRunner::stage_ingest() {
  std::vector<std::string> rel_files;
  std::vector<std::string> seen_ids;
  for (const auto& path : cfg_.scene_paths) {
    const CityScene scene = load_scene(path);
    if (std::find(seen_ids.begin(), seen_ids.end(), scene.scene_id()) !=
        seen_ids.end())
      throw Error("duplicate scene id '" + scene.scene_id() + "'");
    seen_ids.push_back(scene.scene_id());
    const std::string rel = "scenes/" + scene.scene_id() + ".scene";
    write_file(fs::path(cfg_.out_dir) / rel, scene_to_string(scene));
    rel_files.push_back(rel);
  }
  finish_stage("ingest", rel_files);
}

void PipelineRunner::stage_graph() {
  std::vector<std::string> rel_files;
  for (const CityScene& scene : load_canonical_scenes()) {
    const SceneGraph graph = build_scene_graph(scene, cfg_.adjacency_radius);
    const std::string rel = "graphs/" + scene.scene_id() + ".json";
    write_file(fs::path(cfg_.out_dir) / rel, scene_graph_to_json(graph));
    rel_files.push_back(rel);
  }
  finish_stage("graph", rel_files);
}

void PipelineRunner::stage_render() {
  std::vector<std::string> rel_files;
  for (const CityScene& scene : load_canonical_scenes()) {
    const Raster global = render_global_bev(scene, kGlobalBevScale);
    const std::string base = "bev/" + scene.scene_id();
    write_file(fs::path(cfg_.out_dir) / (base + "_global.json"),
               bev_metadata_json(scene, global));
    {
      const auto png = encode_png(global);
      write_file(fs::path(cfg_.out_dir) / (base + "_global.png"),
                 std::string(png.begin(), png.end()));
    }
    rel_files.push_back(base + "_global.png");
    rel_files.push_back(base + "_global.json");
    for (const auto& obj : scene.objects()) {
      const Raster crop = render_object_crop(scene, obj.id(), 5.0, kCropScale);
      const std::string rel = base + "_obj" + std::to_string(obj.id()) + ".png";
      const auto png = encode_png(crop);
      write_file(fs::path(cfg_.out_dir) / rel,
                 std::string(png.begin(), png.end()));
      rel_files.push_back(rel);
    }
  }
  finish_stage("render", rel_files);
}

void PipelineRunner::stage_serialize() {
  std::vector<std::string> rel_files;
  for (const CityScene& scene : load_canonical_scenes()) {
    const SceneGraph graph = build_scene_graph(scene, cfg_.adjacency_radius);
    json j;
    j["scene_id"] = scene.scene_id();
    j["scene_text"] = serialize_scene(scene, graph, cfg_.max_relations).text;
    auto& objs = j["objects"] = json::array();
    for (const auto& obj : scene.objects())
      objs.push_back({{"id", obj.id()}, {"text", serialize_object(obj).text}});
    auto& rels = j["relations"] = json::array();
    auto adj = graph.edges_of_kind(RelationKind::adjacency);
    std::sort(adj.begin(), adj.end(),
              [](const SceneEdge* a, const SceneEdge* b) {
                const double da = a->distance.value_or(0);
                const double db = b->distance.value_or(0);
                if (da != db) return da < db;
                if (a->source != b->source) return a->source < b->source;
                return a->target < b->target;
              });
    for (const SceneEdge* e : adj)
      rels.push_back({{"source", e->source},
                      {"target", e->target},
                      {"text", serialize_relation(scene.object(e->source),
                                                  scene.object(e->target))
                                   .text}});
    const std::string rel = "attributes/" + scene.scene_id() + ".json";
    write_file(fs::path(cfg_.out_dir) / rel, j.dump(2) + "\n");
    rel_files.push_back(rel);
  }
  finish_stage("serialize", rel_files);
}

void PipelineRunner::stage_generate() {
  Gateway& gw = generator_gateway();
  const std::vector<CityScene> scenes = load_canonical_scenes();
  std::vector<SceneGraph> graphs;
  for (const CityScene& scene : scenes)
    graphs.push_back(build_scene_graph(scene, cfg_.adjacency_radius));

  struct Job {
    std::size_t scene_idx;
    TaskCategory task;
    std::vector<ObjectId> selection;
    std::string persona;
  };
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const CityScene& scene = scenes[si];
    for (TaskCategory task : cfg_.tasks) {
      std::vector<std::vector<ObjectId>> selections;
      if (is_scene_level(task)) {
        selections.push_back({});
      } else {
        std::vector<ObjectId> ids;
        for (const auto& obj : scene.objects()) ids.push_back(obj.id());
        std::sort(ids.begin(), ids.end());
        const std::size_t count =
            is_relationship_level(task)
                ? 1
                : std::min(cfg_.objects_per_scene, ids.size());
        for (std::size_t i = 0; i < count; ++i) {
          if (is_relationship_level(task)) {
            const auto nn = knn_neighbors(scene, ids[i], 1);
            std::vector<ObjectId> sel = {ids[i]};
            if (!nn.empty()) sel.push_back(nn.front());
            selections.push_back(sel);
          } else {
            selections.push_back({ids[i]});
          }
        }
      }
      for (const auto& selection : selections)
        for (const auto& persona : cfg_.personas)
          jobs.push_back({si, task, selection, persona});
    }
  }

  std::map<std::string, QASample> samples;
  std::mutex samples_mu;
  const fs::path bev_dir = fs::path(cfg_.out_dir) / "bev";

  fan_out(jobs.size(), cfg_.generator.in_flight, [&](std::size_t ji) {
    const Job& job = jobs[ji];
    const CityScene& scene = scenes[job.scene_idx];
    const Persona& persona = cfg_.resolve_persona(job.persona);

    QASample probe;  // evidence derivation needs task + targets
    probe.task = job.task;
    probe.target_ids = job.selection;
    const auto evidence =
        sample_evidence(scene, graphs[job.scene_idx], probe, cfg_);

    std::vector<ContentPart> images;
    if (!job.selection.empty()) {
      const std::string crop_name = scene.scene_id() + "_obj" +
                                    std::to_string(job.selection.front()) +
                                    ".png";
      images.push_back(
          ContentPart::make_image(read_bytes(bev_dir / crop_name), crop_name));
    }
    images.push_back(ContentPart::make_image(
        read_bytes(bev_dir / (scene.scene_id() + "_global.png")),
        scene.scene_id() + "_global.png"));

    const CompletionRequest req = build_generation_prompt(
        job.task, persona, evidence, images, cfg_.n_pairs,
        cfg_.generator.model_id, cfg_.temperature);
    const CompletionResponse resp = gw.complete(req);
    const auto pairs = parse_tagged_qa(resp.text);

    std::string sel_tag;
    for (ObjectId id : job.selection) sel_tag += "t" + std::to_string(id);
    if (sel_tag.empty()) sel_tag = "scene";

    std::vector<QASample> local;
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      QASample s;
      s.sample_id = scene.scene_id() + "/" + task_name(job.task) + "/" +
                    persona_slug(job.persona) + "/" + sel_tag + "/p" +
                    std::to_string(pi);
      s.task = job.task;
      s.question = pairs[pi].first;
      s.answer = pairs[pi].second;
      s.scene_id = scene.scene_id();
      s.target_ids = job.selection;
      s.persona_name = job.persona;
      s.generator_model_id = cfg_.generator.model_id;
      s.qc_status = QcStatus::pending;

      const auto variants = diversify(s.question, cfg_.n_diversify, gw);
      local.push_back(s);
      for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        QASample v = s;
        v.sample_id += "-d" + std::to_string(vi);
        v.question = variants[vi];
        local.push_back(v);
      }
    }

    std::lock_guard lock(samples_mu);
    for (auto& s : local) samples[s.sample_id] = std::move(s);
  });

  std::string out;
  for (const auto& [id, s] : samples) out += qa_sample_to_json(s) + "\n";
  write_file(fs::path(cfg_.out_dir) / "dataset/generated.jsonl", out);
  finish_stage("generate", {"dataset/generated.jsonl"});
}

void PipelineRunner::stage_qc() {
  std::vector<Gateway*> judge_ptrs;
  for (std::size_t i = 0; i < 3; ++i) judge_ptrs.push_back(&judge_gateway(i));

  std::map<std::string, CityScene> scenes;
  std::map<std::string, SceneGraph> graphs;
  for (CityScene& s : load_canonical_scenes()) {
    graphs.emplace(s.scene_id(), build_scene_graph(s, cfg_.adjacency_radius));
    scenes.emplace(s.scene_id(), std::move(s));
  }

  std::vector<QASample> samples;
  std::istringstream in(
      read_file(fs::path(cfg_.out_dir) / "dataset/generated.jsonl"));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) samples.push_back(qa_sample_from_json(line));

  fan_out(samples.size(), judge_ptrs.front()->config().in_flight_limit,
          [&](std::size_t i) {
            QASample& s = samples[i];
            const auto evidence = sample_evidence(
                scenes.at(s.scene_id), graphs.at(s.scene_id), s, cfg_);
            s.defects = quality_check(s, evidence, judge_ptrs);
            s.qc_status = aggregate_verdicts(s.defects, 3);
          });

  manifest_.task_counts.clear();
  manifest_.qc_counts.clear();
  std::map<std::string, QASample> sorted;
  for (QASample& s : samples) {
    ++manifest_.task_counts[task_name(s.task)];
    ++manifest_.qc_counts[qc_status_name(s.qc_status)];
    sorted[s.sample_id] = std::move(s);
  }
  std::string out;
  for (const auto& [id, s] : sorted) out += qa_sample_to_json(s) + "\n";
  write_file(fs::path(cfg_.out_dir) / "dataset/samples.jsonl", out);
  finish_stage("qc", {"dataset/samples.jsonl"});
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  json j;
  j["sample_id"] = report.sample_id;
  j["bleu4"] = report.bleu4;
  j["rouge_l"] = report.rouge_l;
  j["meteor"] = report.meteor;
  auto& judges = j["judges"] = json::array();
  for (const auto& s : report.judges)
    judges.push_back({{"evaluator", s.evaluator_model_id},
                      {"logicality", s.logicality},
                      {"reliability", s.reliability},
                      {"justification", s.justification}});
  j["mean_logicality"] = report.mean_logicality;
  j["mean_reliability"] = report.mean_reliability;
  return j.dump();
}

EvaluationReport evaluation_report_from_json(const std::string& line) {
  const json j = json::parse(line);
  EvaluationReport r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.bleu4 = j.at("bleu4").get<double>();
  r.rouge_l = j.at("rouge_l").get<double>();
  r.meteor = j.at("meteor").get<double>();
  for (const auto& s : j.at("judges")) {
    JudgeScore js;
    js.evaluator_model_id = s.at("evaluator").get<std::string>();
    js.logicality = s.at("logicality").get<double>();
    js.reliability = s.at("reliability").get<double>();
    js.justification = s.at("justification").get<std::string>();
    r.judges.push_back(js);
  }
  r.mean_logicality = j.at("mean_logicality").get<double>();
  r.mean_reliability = j.at("mean_reliability").get<double>();
  return r;
}

void PipelineRunner::stage_evaluate() {
  Gateway& answerer = generator_gateway();
  std::vector<Gateway*> judge_ptrs;
  for (std::size_t i = 0; i < 3; ++i) judge_ptrs.push_back(&judge_gateway(i));

  std::map<std::string, CityScene> scenes;
  std::map<std::string, SceneGraph> graphs;
  for (CityScene& s : load_canonical_scenes()) {
    graphs.emplace(s.scene_id(), build_scene_graph(s, cfg_.adjacency_radius));
    scenes.emplace(s.scene_id(), std::move(s));
  }

  std::vector<QASample> kept;
  std::istringstream in(
      read_file(fs::path(cfg_.out_dir) / "dataset/samples.jsonl"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    QASample s = qa_sample_from_json(line);
    if (s.qc_status == QcStatus::kept) kept.push_back(std::move(s));
  }

  std::map<std::string, EvaluationReport> reports;
  std::mutex reports_mu;

  fan_out(kept.size(), cfg_.generator.in_flight, [&](std::size_t i) {
    const QASample& s = kept[i];
    const auto evidence = sample_evidence(scenes.at(s.scene_id),
                                          graphs.at(s.scene_id), s, cfg_);

    // Candidate answer from the generator model, blind to the ground truth.
    CompletionRequest ask;
    ask.model_id = cfg_.generator.model_id;
    ask.temperature = 0.0;
    ask.system_text =
        "You answer questions about a 3D city scene using the provided "
        "attributes.";
    std::string body = "Scene attributes:\n";
    for (const auto& attr : evidence) body += attr.text + "\n";
    body += "\nQuestion: " + s.question +
            "\nAnswer concisely, grounded only in the attributes above.";
    ask.user_parts.push_back(ContentPart::make_text(body));
    const std::string candidate = answerer.complete(ask).text;

    EvaluationReport rep;
    rep.sample_id = s.sample_id;
    rep.bleu4 = bleu4(candidate, {s.answer});
    rep.rouge_l = rouge_l(candidate, s.answer);
    rep.meteor = meteor_lite(candidate, s.answer);

    for (Gateway* jg : judge_ptrs) {
      const CompletionRequest jreq = build_judge_prompt(
          candidate, s.answer, evidence, jg->config().model_id);
      try {
        JudgeScore score = parse_judge_output(jg->complete(jreq).text);
        score.evaluator_model_id = jg->config().model_id;
        rep.judges.push_back(score);
      } catch (const Error&) {
        // Judge abstains on transport or parse failure.
      }
    }
    if (rep.judges.empty())
      throw Error("no judge produced a score for " + s.sample_id);
    const auto [ml, mr] = aggregate_scores(rep.judges);
    rep.mean_logicality = ml;
    rep.mean_reliability = mr;

    std::lock_guard lock(reports_mu);
    reports[rep.sample_id] = std::move(rep);
  });

  std::string out;
  for (const auto& [id, r] : reports)
    out += evaluation_report_to_json(r) + "\n";
  write_file(fs::path(cfg_.out_dir) / "eval/reports.jsonl", out);
  write_summary();
  finish_stage("evaluate",
               {"eval/reports.jsonl", "eval/summary.json", "eval/summary.txt"});
}

void PipelineRunner::stage_encode_demo() {
  const auto scenes = load_canonical_scenes();
  if (scenes.empty()) throw Error("encode-demo needs an ingested scene");
  const CityScene& scene = scenes.front();
  const TaskCategory task = task_from_name(cfg_.demo_task);
  const std::vector<ObjectId> selection =
      is_scene_level(task) ? std::vector<ObjectId>{} : cfg_.demo_selection;

  const BranchPlan plan = route_instruction(task, selection);
  const FeatureExtractor fx(cfg_.encoder);
  const PositionEncoder phi = PositionEncoder::seeded(cfg_.encoder);
  const Projector proj_o = Projector::seeded(ProjectorRole::object, cfg_.encoder);
  const Projector proj_r =
      Projector::seeded(ProjectorRole::relationship, cfg_.encoder);
  const Projector proj_s = Projector::seeded(ProjectorRole::scene, cfg_.encoder);

  json j;
  j["scene_id"] = scene.scene_id();
  j["task"] = task_name(task);
  j["branches"] = {{"object", plan.object_active},
                   {"relationship", plan.relationship_active},
                   {"scene", plan.scene_active}};
  j["selection"] = selection;

  const TextFeature text =
      encode_text("describe the selected content of this scene", cfg_.encoder);
  j["shapes"]["E_T"] = text.e_t.shape_str();

  const SceneBundle sb = fx.scene_bundle(scene);
  const Matrix e_s = encode_scene(sb, proj_s);
  j["shapes"]["E_s"] = e_s.shape_str();

  if (plan.object_active) {
    Matrix e_o;
    for (ObjectId id : plan.targets) {
      const Matrix block = encode_object(fx.object_bundle(scene, id), proj_o);
      e_o = e_o.empty() ? block : vstack(e_o, block);
    }
    j["shapes"]["E_o"] = e_o.shape_str();
  } else {
    j["shapes"]["E_o"] = "zero";
  }

  if (plan.relationship_active) {
    const RelationshipContext ctx =
        fx.relationship_context(scene, plan.targets.front(), phi);
    const Matrix e_r = encode_relationship(ctx.f_g, ctx.f_l_neighbors, proj_r);
    j["shapes"]["E_r"] = e_r.shape_str();
    j["attention_weights"] = ctx.alpha;
    j["neighbor_ids"] = ctx.neighbor_ids;
  } else {
    j["shapes"]["E_r"] = "zero";
  }

  auto grad_entry = [&](GradCheckComponent comp) {
    const GradCheckReport rep = gradcheck(comp, cfg_.encoder);
    return json{{"max_relative_error", rep.max_relative_error},
                {"checked_parameters", rep.checked_parameters}};
  };
  j["gradcheck"] = {{"projector", grad_entry(GradCheckComponent::projector)},
                    {"attention", grad_entry(GradCheckComponent::attention)},
                    {"full", grad_entry(GradCheckComponent::full)}};

  write_file(fs::path(cfg_.out_dir) / "encode_demo/report.json",
             j.dump(2) + "\n");
  finish_stage("encode-demo", {"encode_demo/report.json"});
}

RunManifest PipelineRunner::run() {
  std::vector<std::string> available;
  for (const auto& [name, rec] : manifest_.stages)
    if (stage_intact(name)) available.push_back(name);
  cfg_.validate(available);

  for (const auto& name : stage_order()) {
    if (!cfg_.stage_requested(name)) continue;
    if (stage_intact(name) && deps_stable(name)) continue;  // resume
    try {
      if (name == "ingest") stage_ingest();
      else if (name == "graph") stage_graph();
      else if (name == "render") stage_render();
      else if (name == "serialize") stage_serialize();
      else if (name == "generate") stage_generate();
      else if (name == "qc") stage_qc();
      else if (name == "evaluate") stage_evaluate();
      else if (name == "encode-demo") stage_encode_demo();
    } catch (const BudgetExceeded&) {
      throw;
    } catch (const ConfigInvalid&) {
      throw;
    } catch (const StageFailed&) {
      throw;
    } catch (const std::exception& e) {
      throw StageFailed(name, e.what());
    }
  }

  if (cfg_.record && recorder_) {
    const std::string path = cfg_.record_path.empty()
                                 ? (fs::path(cfg_.out_dir) / "fixture.jsonl").string()
                                 : cfg_.record_path;
    fs::create_directories(fs::path(path).parent_path());
    recorder_->save(path);
  }
  save_manifest();
  return manifest_;
}

std::string PipelineRunner::report() {
  if (!stage_intact("evaluate")) throw StageMissing("evaluate");
  return write_summary();
}

std::string PipelineRunner::write_summary() {
  // Join reports with the dataset for per-task grouping.
  std::map<std::string, TaskCategory> task_of;
  {
    std::istringstream in(
        read_file(fs::path(cfg_.out_dir) / "dataset/samples.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const QASample s = qa_sample_from_json(line);
      task_of[s.sample_id] = s.task;
    }
  }

  std::vector<EvaluationReport> reports;
  {
    std::istringstream in(
        read_file(fs::path(cfg_.out_dir) / "eval/reports.jsonl"));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) reports.push_back(evaluation_report_from_json(line));
  }
  if (reports.empty()) throw Error("evaluate stage produced no reports");

  struct Acc {
    double b = 0, r = 0, m = 0, log = 0, rel = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> per_task;
  std::map<std::string, std::map<std::string, std::pair<Acc, Acc>>> judge_acc;
  // evaluator -> per-sample score series on fully-judged samples
  std::map<std::string, std::vector<double>> log_series, rel_series;

  for (const auto& rep : reports) {
    const std::string task = task_name(task_of.at(rep.sample_id));
    Acc& a = per_task[task];
    a.b += rep.bleu4;
    a.r += rep.rouge_l;
    a.m += rep.meteor;
    a.log += rep.mean_logicality;
    a.rel += rep.mean_reliability;
    ++a.n;
    for (const auto& js : rep.judges) {
      auto& [la, ra] = judge_acc[task][js.evaluator_model_id];
      la.log += js.logicality;
      ra.rel += js.reliability;
      ++la.n;
      ++ra.n;
    }
    if (rep.judges.size() == 3) {
      for (const auto& js : rep.judges) {
        log_series[js.evaluator_model_id].push_back(js.logicality);
        rel_series[js.evaluator_model_id].push_back(js.reliability);
      }
    }
  }

  json out;
  std::ostringstream text;
  text << "Per-task metrics (text metrics x100 for display):\n";
  text << "task                         n     B-4   ROU.   MET.   Log.  Rel.\n";
  for (const auto& [task, a] : per_task) {
    const double n = static_cast<double>(a.n);
    json row;
    row["samples"] = a.n;
    row["bleu4"] = a.b / n;
    row["rouge_l"] = a.r / n;
    row["meteor"] = a.m / n;
    row["logicality"] = a.log / n;
    row["reliability"] = a.rel / n;
    out["per_task"][task] = row;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%-28s %3zu %7.2f %6.2f %6.2f %6.2f %5.2f\n", task.c_str(),
                  a.n, round_display(a.b / n * 100.0),
                  round_display(a.r / n * 100.0),
                  round_display(a.m / n * 100.0), round_display(a.log / n),
                  round_display(a.rel / n));
    text << buf;
  }

  text << "\nJudge means per task (logicality | reliability):\n";
  for (const auto& [task, per_eval] : judge_acc) {
    text << task << "\n";
    std::vector<JudgeScore> task_means;
    for (const auto& [evaluator, accs] : per_eval) {
      const auto& [la, ra] = accs;
      const double ml = la.log / static_cast<double>(la.n);
      const double mr = ra.rel / static_cast<double>(ra.n);
      out["judges"][task][evaluator] = {{"logicality", ml},
                                        {"reliability", mr}};
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %-24s %5.2f | %5.2f\n",
                    evaluator.c_str(), round_display(ml), round_display(mr));
      text << buf;
      task_means.push_back({evaluator, ml, mr, "-"});
    }
    const auto [ml, mr] = aggregate_scores(task_means);
    out["judges"][task]["average"] = {{"logicality", ml},
                                      {"reliability", mr}};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-24s %5.2f | %5.2f\n", "average",
                  round_display(ml), round_display(mr));
    text << buf;
  }

  // Inter-evaluator correlation over per-sample scores (logicality and
  // reliability concatenated).
  std::vector<std::string> evaluators;
  for (const auto& [ev, v] : log_series) evaluators.push_back(ev);
  if (evaluators.size() >= 2) {
    std::vector<std::vector<double>> series;
    for (const auto& ev : evaluators) {
      std::vector<double> v = log_series[ev];
      v.insert(v.end(), rel_series[ev].begin(), rel_series[ev].end());
      series.push_back(std::move(v));
    }
    const Matrix corr = evaluator_correlation(series);
    out["correlation"]["evaluators"] = evaluators;
    auto& rowsj = out["correlation"]["matrix"] = json::array();
    text << "\nInter-evaluator correlation:\n";
    for (std::size_t i = 0; i < corr.rows(); ++i) {
      json rowj = json::array();
      text << "  ";
      for (std::size_t c = 0; c < corr.cols(); ++c) {
        rowj.push_back(corr.at(i, c));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%6.3f ", corr.at(i, c));
        text << buf;
      }
      rowsj.push_back(rowj);
      text << "\n";
    }
  }

  out["task_counts"] = manifest_.task_counts;
  out["qc_counts"] = manifest_.qc_counts;
  std::size_t total = 0;
  for (const auto& [task, n] : manifest_.task_counts) total += n;
  text << "\nDataset counts per task:\n";
  for (const auto& [task, n] : manifest_.task_counts) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-28s %4zu (%.1f%%)\n", task.c_str(), n,
                  total ? 100.0 * double(n) / double(total) : 0.0);
    text << buf;
  }
  text << "QC outcomes:\n";
  for (const auto& [status, n] : manifest_.qc_counts)
    text << "  " << status << ": " << n << "\n";

  write_file(fs::path(cfg_.out_dir) / "eval/summary.json", out.dump(2) + "\n");
  write_file(fs::path(cfg_.out_dir) / "eval/summary.txt", text.str());
  return text.str();
}

}  // namespace cityvl
