// mmhand command-line tool. Errors go to stderr as one line:
//   mmhand: error[<kind>]: <message>
// with exit code 2 (usage), 3 (validation) or 4 (runtime).

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmhand/error.hpp"
#include "mmhand/metrics.hpp"
#include "mmhand/nn_common.hpp"
#include "mmhand/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mmhand;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io:
    case ErrorKind::NonFinite:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

int report(const std::string& kind, const std::string& msg, int code) {
  std::string line = msg;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "mmhand: error[" << kind << "]: " << line << '\n';
  return code;
}

void need_file(const fs::path& p, const char* what) {
  require(fs::is_regular_file(p), ErrorKind::Validation, std::string(what) + " not found: " + p.string());
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void copy_bytes(const fs::path& from, const fs::path& to) { atomic_write(to, read_file(from)); }

// relative path inside an output directory; falls back to a generated name
std::string local_path(const std::string& rel, const std::string& fallback) {
  const fs::path p(rel);
  if (rel.empty() || p.is_absolute()) return fallback;
  for (const auto& part : p.lexically_normal())
    if (part == "..") return fallback;
  return p.lexically_normal().generic_string();
}

std::string index_name(const char* dir, size_t i, const char* suffix = ".png") {
  std::ostringstream s;
  s << dir << '/' << std::setw(6) << std::setfill('0') << i << suffix;
  return s.str();
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

// ---- make-toy ----

struct MakeToyArgs {
  int n = 0;
  uint64_t seed = 0;
  std::string out;
  int size = 64;
};

void run_make_toy(const MakeToyArgs& a) {
  require(a.n >= 1, ErrorKind::Validation, "make-toy: --n must be >= 1");
  require(a.size >= 16, ErrorKind::Validation, "make-toy: --size must be >= 16");
  make_toy_dataset(a.n, a.seed, a.size, a.out);
  log_line("make-toy: wrote " + std::to_string(a.n) + " samples to " + a.out);
}

// ---- train-depth / train-hpm ----

struct TrainArgs {
  std::string config, data, out;
};

RunConfig read_config(const std::string& path) {
  need_file(path, "config");
  return load_run_config(path);
}

void run_train_depth(const TrainArgs& a) {
  RunConfig cfg = read_config(a.config);
  Dataset data = load_dataset(a.data);
  require(data.size() >= 1, ErrorKind::Validation, "train-depth: dataset is empty");
  std::ostringstream csv;
  csv << "epoch,loss\n";
  auto res = train_depth_generator(depth_examples(data, all_indices(data.size())), cfg.depth, [&](int e, double l) {
    csv << e << ',' << fmt(l) << '\n';
    log_line("train-depth: epoch " + std::to_string(e) + " loss " + fmt(l));
  });
  const fs::path out(a.out);
  save_checkpoint(out / "depth.ckpt", depth_checkpoint(res.generator));
  atomic_write(out / "depth_loss.csv", csv.str());
  atomic_write(out / "config.json", to_json(cfg));
}

void run_train_hpm(const TrainArgs& a) {
  RunConfig cfg = read_config(a.config);
  Dataset data = load_dataset(a.data);
  require(data.size() >= 1, ErrorKind::Validation, "train-hpm: dataset is empty");
  std::ostringstream csv;
  csv << "epoch,loss\n";
  Hpm model = train_estimator(data, all_indices(data.size()), cfg.hpm, [&](int e, double l) {
    csv << e << ',' << fmt(l) << '\n';
    log_line("train-hpm: epoch " + std::to_string(e) + " loss " + fmt(l));
  });
  const fs::path out(a.out);
  save_checkpoint(out / "hpm.ckpt", hpm_checkpoint(model));
  atomic_write(out / "hpm_loss.csv", csv.str());
  atomic_write(out / "config.json", to_json(cfg));
}

// ---- train-gan ----

struct TrainGanArgs {
  std::string config, data, depth_ckpt, hpm_ckpt, out;
};

Hpm read_hpm(const std::string& path) {
  need_file(path, "estimator checkpoint");
  return load_hpm(load_checkpoint(path));
}

void run_train_gan(const TrainGanArgs& a) {
  RunConfig cfg = read_config(a.config);
  need_file(a.depth_ckpt, "depth checkpoint");
  DepthGenerator depth = load_depth_generator(load_checkpoint(a.depth_ckpt));
  Hpm hpm = read_hpm(a.hpm_ckpt);
  require(depth->config().input_size == cfg.gan.generator.image_size, ErrorKind::ShapeMismatch,
          "train-gan: depth checkpoint resolution differs from gan.generator.image_size");
  Dataset data = load_dataset(a.data);
  GanTrainer trainer(cfg.gan, hpm);
  MmHandModel model{trainer.generator, depth, cfg.contour};
  const auto samples = prepare_gan_samples(data, model, cfg.gan, hpm->config());
  std::ostringstream csv;
  write_loss_csv_header(csv);
  GanRunOptions opts;
  opts.on_step = [&](const GanStepRecord& r) {
    write_loss_csv_row(csv, r);
    if (r.step == 1 || r.step % 50 == 0)
      log_line("train-gan: step " + std::to_string(r.step) + " G " + fmt(r.generator.total) + " L1 " +
               fmt(r.generator.l1) + " D " + fmt(r.discriminator));
  };
  train_gan(trainer, samples, data.poses(), opts);
  const fs::path out(a.out);
  model.generator->eval();
  save_checkpoint(out / "mmhand.ckpt", mmhand_checkpoint(model));
  atomic_write(out / "losses.csv", csv.str());
  atomic_write(out / "config.json", to_json(cfg));
}

// ---- generate ----

struct GenerateArgs {
  std::string ckpt, source_image, source_pose, target_pose, out;
};

MmHandModel read_model(const std::string& path) {
  need_file(path, "generator checkpoint");
  return load_mmhand(load_checkpoint(path));
}

void run_generate(const GenerateArgs& a) {
  MmHandModel model = read_model(a.ckpt);
  need_file(a.source_image, "source image");
  need_file(a.source_pose, "source pose");
  need_file(a.target_pose, "target pose");
  Image src = read_png(a.source_image);
  if (src.channels == 1) {
    Image rgb(src.height, src.width, 3);
    for (size_t k = 0; k < src.data.size(); ++k)
      for (int c = 0; c < 3; ++c) rgb.data[k * 3 + c] = src.data[k];
    src = std::move(rgb);
  }
  const PoseFile sp = read_pose_file(a.source_pose);
  const PoseFile tp = read_pose_file(a.target_pose);
  Camera cam = tp.camera;
  if (cam.image_size == ImageSize{0, 0}) cam.image_size = src.size();
  require(src.size() == cam.image_size, ErrorKind::ShapeMismatch, "generate: source image size differs from the camera");
  require(cam.image_size.height == model.generator->config().image_size &&
              cam.image_size.width == model.generator->config().image_size,
          ErrorKind::ShapeMismatch, "generate: image size differs from the generator's");
  write_png(a.out, generator_forward(model, src, sp.pose, tp.pose, cam));
}

// ---- augment ----

struct AugmentArgs {
  std::string ckpt, data, out;
  double fraction = 1.0;
  uint64_t seed = 0;
};

void run_augment(const AugmentArgs& a) {
  SplitSpec spec{a.fraction, a.seed};
  spec.validate();
  MmHandModel model = read_model(a.ckpt);
  Dataset data = load_dataset(a.data);
  AugmentedSet set = build_augmented_set(data.poses(), spec, [&](size_t s, size_t t) {
    return generate_pair(model, data, s, t);
  });
  const fs::path out(a.out);
  Manifest m;
  m.version = data.manifest.version;
  m.joint_order = data.manifest.joint_order;
  std::ostringstream prov;
  prov << "index,synthesized,source_index,distance\n";
  for (const AugmentedRecord& r : set.records) {
    ManifestRecord rec = data.manifest.records[r.index];
    rec.image_path = local_path(rec.image_path, index_name("images", r.index));
    if (r.synthesized) {
      rec.mask_path.reset();
      rec.depth_path.reset();
      write_png(out / rec.image_path, r.image);
    } else {
      const ManifestRecord& src = data.manifest.records[r.index];
      copy_bytes(data.root / src.image_path, out / rec.image_path);
      if (src.mask_path) {
        rec.mask_path = local_path(*src.mask_path, index_name("masks", r.index));
        copy_bytes(data.root / *src.mask_path, out / *rec.mask_path);
      }
      if (src.depth_path) {
        rec.depth_path = local_path(*src.depth_path, index_name("depth", r.index));
        copy_bytes(data.root / *src.depth_path, out / *rec.depth_path);
      }
    }
    prov << r.index << ',' << (r.synthesized ? 1 : 0) << ',' << r.source_index << ',' << fmt(r.distance) << '\n';
    m.records.push_back(std::move(rec));
  }
  atomic_write(out / "provenance.csv", prov.str());
  write_manifest(out / kManifestName, m);
  log_line("augment: " + std::to_string(set.retained_count()) + " retained, " +
           std::to_string(set.synthesized_count()) + " synthesized");
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string pred, gt, out;
};

void run_evaluate(const EvaluateArgs& a) {
  Dataset pred = load_dataset(a.pred);
  Dataset gt = load_dataset(a.gt);
  require(pred.size() == gt.size(), ErrorKind::ShapeMismatch,
          "evaluate: pred has " + std::to_string(pred.size()) + " samples, gt has " + std::to_string(gt.size()));
  require(gt.size() >= 1, ErrorKind::Validation, "evaluate: no samples");
  std::vector<Pose2D> p2, g2;
  std::vector<Image> images, masks;
  double ssim_sum = 0.0, mssim_sum = 0.0;
  bool have_masks = true;
  for (size_t i = 0; i < gt.size(); ++i) {
    const HandSample& g = gt.samples[i];
    const HandSample& p = pred.samples[i];
    p2.push_back(project(p.pose, g.camera));
    g2.push_back(project(g.pose, g.camera));
    require(p.image.same_shape(g.image), ErrorKind::ShapeMismatch,
            "evaluate: sample " + std::to_string(i) + " image shapes differ");
    ssim_sum += ssim(p.image, g.image);
    images.push_back(p.image);
    if (g.mask) {
      mssim_sum += mask_ssim(p.image, g.image, *g.mask);
      masks.push_back(*g.mask);
    } else {
      have_masks = false;
    }
  }
  const PckCurve curve = pck_curve(pred.poses(), gt.poses());
  const Classifier cls = default_classifier();
  const ScoreStats is = inception_score(images, cls);
  const double n = static_cast<double>(gt.size());
  json j;
  j["samples"] = gt.size();
  j["epe_mm"] = epe(pred.poses(), gt.poses());
  j["pckb"] = pckb(p2, g2);
  j["auc_20_50"] = auc_20_50(curve);
  j["ssim"] = ssim_sum / n;
  j["is_mean"] = is.mean;
  j["is_std"] = is.stddev;
  if (have_masks) {
    const ScoreStats mis = mask_inception_score(images, masks, cls);
    j["mask_ssim"] = mssim_sum / n;
    j["mask_is_mean"] = mis.mean;
    j["mask_is_std"] = mis.stddev;
  }
  std::ostringstream csv;
  csv << "threshold_mm,pck\n";
  for (size_t k = 0; k < curve.thresholds.size(); ++k)
    csv << fmt(curve.thresholds[k]) << ',' << fmt(curve.pck[k]) << '\n';
  const fs::path out(a.out);
  fs::path csv_path = out;
  csv_path.replace_extension();
  csv_path += "_pck.csv";
  atomic_write(csv_path, csv.str());
  atomic_write(out, j.dump(2) + "\n");
}

// ---- pair-stats ----

struct PairStatsArgs {
  std::string data, out, ckpt, hpm_ckpt;
  int n = 0;
  uint64_t seed = 0;
};

void run_pair_stats(const PairStatsArgs& a) {
  require(a.n >= 1, ErrorKind::Validation, "pair-stats: --n must be >= 1");
  require(a.ckpt.empty() == a.hpm_ckpt.empty(), ErrorKind::Validation,
          "pair-stats: --ckpt and --hpm-ckpt go together");
  Dataset data = load_dataset(a.data);
  require(data.size() >= 2, ErrorKind::Validation, "pair-stats: need at least 2 samples");
  const auto poses = data.poses();
  const CurriculumSchedule sched = build_pairs(poses, static_cast<size_t>(a.n), a.seed);
  const fs::path out(a.out);

  std::ostringstream pairs;
  pairs << "rank,source,target,distance\n";
  for (size_t k = 0; k < sched.pairs.size(); ++k)
    pairs << k << ',' << sched.pairs[k].source << ',' << sched.pairs[k].target << ','
          << fmt(sched.pairs[k].distance) << '\n';

  // distances live in [0, 0.5]
  const int bins = std::min(a.n, 20);
  std::vector<size_t> counts(bins, 0);
  for (const auto& p : sched.pairs) {
    int b = static_cast<int>(p.distance / 0.5 * bins);
    counts[std::clamp(b, 0, bins - 1)]++;
  }
  std::ostringstream hist;
  hist << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < bins; ++b) hist << fmt(0.5 * b / bins) << ',' << fmt(0.5 * (b + 1) / bins) << ',' << counts[b] << '\n';

  if (!a.ckpt.empty()) {
    MmHandModel model = read_model(a.ckpt);
    Hpm hpm = read_hpm(a.hpm_ckpt);
    const CorrelationReport rep =
        epe_distance_correlation(poses, static_cast<size_t>(a.n), a.seed, [&](size_t s, size_t t) {
          const Image img = generate_pair(model, data, s, t);
          const HandSample& tgt = data.samples[t];
          return epe({predict_pose(hpm, img, tgt.pose, tgt.camera)}, {tgt.pose});
        });
    std::ostringstream sc;
    sc << "source,target,distance,epe_mm\n";
    for (const auto& r : rep.rows) sc << r.source << ',' << r.target << ',' << fmt(r.distance) << ',' << fmt(r.epe) << '\n';
    json fit = {{"a", rep.fit.a}, {"b", rep.fit.b}, {"c", rep.fit.c}, {"spearman", rep.spearman}, {"pairs", rep.rows.size()}};
    atomic_write(out / "scatter.csv", sc.str());
    atomic_write(out / "fit.json", fit.dump(2) + "\n");
  }
  atomic_write(out / "pairs.csv", pairs.str());
  atomic_write(out / "histogram.csv", hist.str());
}

// ---- predict ----

struct PredictArgs {
  std::string hpm_ckpt, data, out;
};

void run_predict(const PredictArgs& a) {
  Hpm hpm = read_hpm(a.hpm_ckpt);
  Dataset data = load_dataset(a.data);
  const fs::path out(a.out);
  Manifest m = data.manifest;
  for (size_t i = 0; i < data.size(); ++i) {
    ManifestRecord& rec = m.records[i];
    const HandSample& s = data.samples[i];
    rec.pose = predict_pose(hpm, s.image, s.pose, s.camera);
    rec.image_path = local_path(rec.image_path, index_name("images", i));
    copy_bytes(data.root / data.manifest.records[i].image_path, out / rec.image_path);
    rec.mask_path.reset();
    rec.depth_path.reset();
  }
  write_manifest(out / kManifestName, m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmhand: pose-guided hand image generation toolkit"};
  app.require_subcommand(1);

  MakeToyArgs toy;
  auto* c_toy = app.add_subcommand("make-toy", "render a procedural toy hand dataset");
  c_toy->add_option("--n", toy.n, "number of samples")->required();
  c_toy->add_option("--seed", toy.seed, "random seed")->required();
  c_toy->add_option("--out", toy.out, "output directory")->required();
  c_toy->add_option("--size", toy.size, "image side in pixels")->required();

  TrainArgs td;
  auto* c_td = app.add_subcommand("train-depth", "train the pose-to-depth generator");
  c_td->add_option("--config", td.config, "run config JSON")->required();
  c_td->add_option("--data", td.data, "dataset directory")->required();
  c_td->add_option("--out", td.out, "output directory")->required();

  TrainArgs th;
  auto* c_th = app.add_subcommand("train-hpm", "train the 3D hand pose estimator");
  c_th->add_option("--config", th.config, "run config JSON")->required();
  c_th->add_option("--data", th.data, "dataset directory")->required();
  c_th->add_option("--out", th.out, "output directory")->required();

  TrainGanArgs tg;
  auto* c_tg = app.add_subcommand("train-gan", "train the MM-Hand generator");
  c_tg->add_option("--config", tg.config, "run config JSON")->required();
  c_tg->add_option("--data", tg.data, "dataset directory")->required();
  c_tg->add_option("--depth-ckpt", tg.depth_ckpt, "depth generator checkpoint")->required();
  c_tg->add_option("--hpm-ckpt", tg.hpm_ckpt, "pose estimator checkpoint")->required();
  c_tg->add_option("--out", tg.out, "output directory")->required();

  GenerateArgs ge;
  auto* c_ge = app.add_subcommand("generate", "render a source image in a target pose");
  c_ge->add_option("--ckpt", ge.ckpt, "generator checkpoint")->required();
  c_ge->add_option("--source-image", ge.source_image, "source PNG")->required();
  c_ge->add_option("--source-pose", ge.source_pose, "source pose JSON")->required();
  c_ge->add_option("--target-pose", ge.target_pose, "target pose JSON")->required();
  c_ge->add_option("--out", ge.out, "output PNG")->required();

  AugmentArgs au;
  auto* c_au = app.add_subcommand("augment", "replace a random part of a dataset by generated images");
  c_au->add_option("--ckpt", au.ckpt, "generator checkpoint")->required();
  c_au->add_option("--data", au.data, "dataset directory")->required();
  c_au->add_option("--fraction", au.fraction, "fraction of real samples kept")->required();
  c_au->add_option("--seed", au.seed, "split seed")->required();
  c_au->add_option("--out", au.out, "output directory")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "pose and image metrics of predictions against ground truth");
  c_ev->add_option("--pred", ev.pred, "prediction dataset directory")->required();
  c_ev->add_option("--gt", ev.gt, "ground-truth dataset directory")->required();
  c_ev->add_option("--out", ev.out, "metrics JSON")->required();

  PairStatsArgs ps;
  auto* c_ps = app.add_subcommand("pair-stats", "pose-distance statistics of random training pairs");
  c_ps->add_option("--data", ps.data, "dataset directory")->required();
  c_ps->add_option("--n", ps.n, "number of pairs")->required();
  c_ps->add_option("--seed", ps.seed, "random seed")->required();
  c_ps->add_option("--out", ps.out, "output directory")->required();
  c_ps->add_option("--ckpt", ps.ckpt, "generator checkpoint (adds the EPE scatter)");
  c_ps->add_option("--hpm-ckpt", ps.hpm_ckpt, "pose estimator checkpoint (with --ckpt)");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "estimate 3D poses for a dataset");
  c_pr->add_option("--hpm-ckpt", pr.hpm_ckpt, "pose estimator checkpoint")->required();
  c_pr->add_option("--data", pr.data, "dataset directory")->required();
  c_pr->add_option("--out", pr.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kExitUsage);
  }

  try {
    configure_threads();
    if (*c_toy) run_make_toy(toy);
    else if (*c_td) run_train_depth(td);
    else if (*c_th) run_train_hpm(th);
    else if (*c_tg) run_train_gan(tg);
    else if (*c_ge) run_generate(ge);
    else if (*c_au) run_augment(au);
    else if (*c_ev) run_evaluate(ev);
    else if (*c_ps) run_pair_stats(ps);
    else if (*c_pr) run_predict(pr);
  } catch (const Error& e) {
    return report(std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report("runtime", e.what(), kExitRuntime);
  }
  return 0;
}
