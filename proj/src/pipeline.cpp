#include "mmhand/pipeline.hpp"

#include <numeric>

#include <json.hpp>

#include "mmhand/error.hpp"

namespace mmhand {

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> v(n);
  std::iota(v.begin(), v.end(), size_t{0});
  return v;
}

std::vector<DepthExample> depth_examples(const Dataset& data, const std::vector<size_t>& indices) {
  std::vector<DepthExample> out;
  for (size_t i : indices) {
    const HandSample& s = data.samples.at(i);
    out.push_back({s.pose, s.camera, s.depth ? *s.depth : synthetic_depth_oracle(s.pose, s.camera)});
  }
  return out;
}

Checkpoint depth_checkpoint(DepthGenerator& gen) {
  Checkpoint c;
  c.component = kDepthComponent;
  c.config_json = depth_config_json(gen->config());
  add_module(c, *gen, "");
  return c;
}

DepthGenerator load_depth_generator(const Checkpoint& ck) {
  require(ck.component == kDepthComponent, ErrorKind::Validation,
          "checkpoint: expected a " + std::string(kDepthComponent) + " checkpoint, got '" + ck.component + "'");
  DepthGenerator gen(parse_depth_config(ck.config_json));
  load_module(ck, *gen, "");
  gen->eval();
  return gen;
}

Checkpoint hpm_checkpoint(Hpm& model) {
  Checkpoint c;
  c.component = kHpmComponent;
  c.config_json = hpm_config_json(model->config());
  add_module(c, *model, "");
  return c;
}

Hpm load_hpm(const Checkpoint& ck) {
  require(ck.component == kHpmComponent, ErrorKind::Validation,
          "checkpoint: expected a " + std::string(kHpmComponent) + " checkpoint, got '" + ck.component + "'");
  Hpm m(parse_hpm_config(ck.config_json));
  load_module(ck, *m, "");
  m->eval();
  return m;
}

Checkpoint mmhand_checkpoint(MmHandModel& model) {
  Checkpoint c;
  c.component = kGanComponent;
  auto j = nlohmann::json::parse(generator_config_json(model.generator->config(), model.contour));
  j["depth"] = nlohmann::json::parse(depth_config_json(model.depth->config()));
  c.config_json = j.dump();
  add_module(c, *model.generator, "gen.");
  add_module(c, *model.depth, "depth.");
  return c;
}

MmHandModel load_mmhand(const Checkpoint& ck) {
  require(ck.component == kGanComponent, ErrorKind::Validation,
          "checkpoint: expected a " + std::string(kGanComponent) + " checkpoint, got '" + ck.component + "'");
  const auto j = nlohmann::json::parse(ck.config_json);
  nlohmann::json gen_part = {{"generator", j.at("generator")}, {"contour", j.at("contour")}};
  GeneratorConfig g;
  MmHandModel m;
  parse_generator_config(gen_part.dump(), g, m.contour);
  m.generator = MmHandGenerator(g);
  m.depth = DepthGenerator(parse_depth_config(j.at("depth").dump()));
  load_module(ck, *m.generator, "gen.");
  load_module(ck, *m.depth, "depth.");
  m.generator->eval();
  m.depth->eval();
  return m;
}

Hpm train_estimator(const std::vector<Image>& images, const std::vector<Pose3D>& poses,
                    const std::vector<Camera>& cameras, const HpmRunConfig& config,
                    const std::function<void(int, double)>& on_epoch) {
  require(images.size() == poses.size() && poses.size() == cameras.size(), ErrorKind::ShapeMismatch,
          "train-hpm: images/poses/cameras count mismatch");
  Hpm model(config.model);
  seeded_init(*model, config.train.seed);
  std::vector<torch::Tensor> xs;
  std::vector<HpmTarget> ts;
  for (size_t i = 0; i < images.size(); ++i) {
    require(images[i].channels == config.model.in_channels, ErrorKind::ShapeMismatch,
            "train-hpm: image " + std::to_string(i) + " has the wrong channel count");
    xs.push_back(image_to_tensor(images[i]));
    ts.push_back(make_hpm_target(poses[i], cameras[i], config.model));
  }
  train_hpm(model, xs, ts, config.train, on_epoch);
  return model;
}

Hpm train_estimator(const Dataset& data, const std::vector<size_t>& indices, const HpmRunConfig& config,
                    const std::function<void(int, double)>& on_epoch) {
  std::vector<Image> im;
  std::vector<Pose3D> p;
  std::vector<Camera> c;
  for (size_t i : indices) {
    im.push_back(data.samples.at(i).image);
    p.push_back(data.samples.at(i).pose);
    c.push_back(data.samples.at(i).camera);
  }
  return train_estimator(im, p, c, config, on_epoch);
}

Pose3D predict_pose(Hpm& model, const Image& image, const Pose3D& reference, const Camera& camera) {
  return estimate_pose(model, image_to_tensor(image), camera, camera_depths(reference, camera)[joint::kWrist]);
}

std::vector<GanSample> prepare_gan_samples(const Dataset& data, MmHandModel& model, const GanConfig& gan,
                                           const HpmConfig& hpm) {
  std::vector<GanSample> out;
  out.reserve(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    const HandSample& s = data.samples[i];
    require(s.image.height == gan.generator.image_size && s.image.width == gan.generator.image_size,
            ErrorKind::ShapeMismatch, "train-gan: sample " + std::to_string(i) + " does not match the image size");
    GanSample g;
    g.image = image_to_tensor(s.image);
    PoseEmbedding e = model.embed(s.pose, s.camera);
    g.contour = e.contour;
    g.depth = e.depth;
    g.heatmaps = heatmaps_to_tensor(render_heatmaps(project(s.pose, s.camera), s.camera.image_size, gan.pose_sigma));
    HpmTarget t = make_hpm_target(s.pose, s.camera, hpm);
    g.hpm_heatmaps = t.heatmaps;
    g.hpm_depths = t.depths;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GanStepRecord> train_gan(GanTrainer& trainer, const std::vector<GanSample>& samples,
                                     const std::vector<Pose3D>& poses, const GanRunOptions& options) {
  const GanConfig& cfg = trainer.config();
  require(samples.size() == poses.size() && samples.size() >= 2, ErrorKind::Validation,
          "train-gan: need at least 2 samples");
  const auto ids = identities(poses);
  const size_t per_epoch = cfg.pairs_per_epoch > 0 ? cfg.pairs_per_epoch : samples.size();
  std::vector<GanStepRecord> records;
  for (uint64_t epoch = 0; static_cast<int>(records.size()) < cfg.steps; ++epoch) {
    const CurriculumSchedule sched = build_pairs(ids, per_epoch, cfg.seed + epoch);
    for (const auto& batch : epoch_iter(sched, cfg.batch_size)) {
      if (static_cast<int>(records.size()) >= cfg.steps) break;
      std::vector<std::pair<size_t, size_t>> pairs;
      for (const auto& p : batch) pairs.emplace_back(p.source, p.target);
      records.push_back(trainer.step(make_gan_batch(samples, pairs)));
      if (options.on_step) options.on_step(records.back());
    }
  }
  return records;
}

Image generate_pair(MmHandModel& model, const Dataset& data, size_t source, size_t target) {
  const HandSample& s = data.samples.at(source);
  const HandSample& t = data.samples.at(target);
  require(s.camera.image_size == t.camera.image_size, ErrorKind::ShapeMismatch,
          "generate: source and target image sizes differ");
  return generator_forward(model, s.image, s.pose, t.pose, t.camera);
}

}  // namespace mmhand
