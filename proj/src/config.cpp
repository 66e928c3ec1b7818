#include "mmhand/config.hpp"

#include <functional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mmhand/error.hpp"
#include "mmhand/image.hpp"

namespace mmhand {

using nlohmann::json;

namespace {

// A flat list of (key, reference) bindings for one JSON object.
class Fields {
 public:
  using Ref = std::variant<int*, double*, bool*, uint64_t*>;
  Fields& add(const char* key, Ref ref) {
    items_.push_back({key, ref, nullptr});
    return *this;
  }
  Fields& sub(const char* key, std::function<Fields()> make) {
    items_.push_back({key, {}, std::move(make)});
    return *this;
  }

  void read(const json& j, const std::string& where) const {
    require(j.is_object(), ErrorKind::Validation, "config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const Item* item = find(it.key());
      const std::string path = where.empty() ? it.key() : where + "." + it.key();
      require(item != nullptr, ErrorKind::Validation, "config: unknown key '" + path + "'");
      if (item->make) {
        item->make().read(it.value(), path);
        continue;
      }
      const json& v = it.value();
      std::visit(
          [&](auto* p) {
            using T = std::remove_pointer_t<decltype(p)>;
            if constexpr (std::is_same_v<T, bool>) {
              require(v.is_boolean(), ErrorKind::Validation, "config: '" + path + "' must be a boolean");
              *p = v.get<bool>();
            } else if constexpr (std::is_same_v<T, double>) {
              require(v.is_number(), ErrorKind::Validation, "config: '" + path + "' must be a number");
              *p = v.get<double>();
            } else if constexpr (std::is_same_v<T, uint64_t>) {
              require(v.is_number_unsigned(), ErrorKind::Validation,
                      "config: '" + path + "' must be a non-negative integer");
              *p = v.get<uint64_t>();
            } else {
              require(v.is_number_integer(), ErrorKind::Validation, "config: '" + path + "' must be an integer");
              *p = v.get<int>();
            }
          },
          item->ref);
    }
  }

  json write() const {
    json j = json::object();
    for (const auto& it : items_) {
      if (it.make) {
        j[it.key] = it.make().write();
        continue;
      }
      std::visit([&](auto* p) { j[it.key] = *p; }, it.ref);
    }
    return j;
  }

 private:
  struct Item {
    std::string key;
    Ref ref;
    std::function<Fields()> make;
  };
  const Item* find(const std::string& k) const {
    for (const auto& it : items_)
      if (it.key == k) return &it;
    return nullptr;
  }
  std::vector<Item> items_;
};

Fields adam_fields(AdamConfig& a) {
  Fields f;
  f.add("lr", &a.lr).add("beta1", &a.beta1).add("beta2", &a.beta2);
  return f;
}

Fields depth_fields(DepthGenConfig& c) {
  Fields f;
  f.add("input_size", &c.input_size)
      .add("base_channels", &c.base_channels)
      .add("levels", &c.levels)
      .add("heatmap_sigma", &c.heatmap_sigma)
      .add("epochs", &c.epochs)
      .add("batch_size", &c.batch_size)
      .sub("adam", [&c] { return adam_fields(c.adam); })
      .add("adv_weight", &c.adv_weight)
      .add("recon_weight", &c.recon_weight)
      .add("kp2d_weight", &c.kp2d_weight)
      .add("kp3d_weight", &c.kp3d_weight)
      .add("regularizer_width", &c.regularizer_width)
      .add("regularizer_epochs", &c.regularizer_epochs)
      .add("seed", &c.seed);
  return f;
}

Fields generator_fields(GeneratorConfig& g) {
  Fields f;
  f.add("num_blocks", &g.num_blocks)
      .add("channels", &g.channels)
      .add("image_size", &g.image_size)
      .add("downsamples", &g.downsamples)
      .add("residual_streams", &g.residual_streams);
  return f;
}

Fields contour_fields(ContourConfig& c) {
  Fields f;
  f.add("minor_axis_fraction", &c.minor_axis_fraction)
      .add("min_minor_axis", &c.min_minor_axis)
      .add("dilate_passes", &c.dilate_passes)
      .add("erode_passes", &c.erode_passes);
  return f;
}

Fields loss_fields(LossWeights& w) {
  Fields f;
  f.add("adv_weight", &w.adv_weight)
      .add("l1_weight", &w.l1_weight)
      .add("perceptual_weight", &w.perceptual_weight)
      .add("heatmap_weight", &w.heatmap_weight)
      .add("depth_weight", &w.depth_weight);
  return f;
}

Fields gan_fields(GanConfig& g) {
  Fields f;
  f.sub("generator", [&g] { return generator_fields(g.generator); })
      .sub("losses", [&g] { return loss_fields(g.weights); })
      .sub("adam", [&g] { return adam_fields(g.adam); })
      .add("steps", &g.steps)
      .add("batch_size", &g.batch_size)
      .add("disc_channels", &g.disc_channels)
      .add("pose_sigma", &g.pose_sigma)
      .add("feature_seed", &g.feature_seed)
      .add("seed", &g.seed)
      .add("pairs_per_epoch", &g.pairs_per_epoch);
  return f;
}

Fields hpm_model_fields(HpmConfig& c) {
  Fields f;
  f.add("in_channels", &c.in_channels)
      .add("stages", &c.stages)
      .add("width", &c.width)
      .add("depth_head", &c.depth_head)
      .add("input_size", &c.input_size)
      .add("heatmap_stride", &c.heatmap_stride)
      .add("heatmap_sigma", &c.heatmap_sigma)
      .add("depth_scale", &c.depth_scale);
  return f;
}

Fields hpm_fields(HpmRunConfig& h) {
  Fields f;
  f.sub("model", [&h] { return hpm_model_fields(h.model); })
      .add("epochs", &h.train.epochs)
      .add("batch_size", &h.train.batch_size)
      .sub("adam", [&h] { return adam_fields(h.train.adam); })
      .add("heatmap_weight", &h.train.heatmap_weight)
      .add("depth_weight", &h.train.depth_weight)
      .add("seed", &h.train.seed);
  return f;
}

Fields run_fields(RunConfig& r) {
  Fields f;
  f.add("seed", &r.seed)
      .sub("contour", [&r] { return contour_fields(r.contour); })
      .sub("depth", [&r] { return depth_fields(r.depth); })
      .sub("gan", [&r] { return gan_fields(r.gan); })
      .sub("hpm", [&r] { return hpm_fields(r.hpm); })
      .sub("split", [&r] {
        Fields s;
        s.add("fraction", &r.split.fraction).add("seed", &r.split.seed);
        return s;
      });
  return f;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, std::string("config: malformed JSON: ") + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  depth.validate();
  gan.validate();
  hpm.model.validate();
  split.validate();
  require(gan.generator.num_blocks >= 1, ErrorKind::Validation, "config: gan.generator.num_blocks must be >= 1");
  require(depth.input_size == gan.generator.image_size && hpm.model.input_size == gan.generator.image_size,
          ErrorKind::Validation, "config: depth.input_size, hpm.model.input_size and generator image_size must agree");
  require(hpm.model.in_channels == 3 && hpm.model.stages == 6 && hpm.model.depth_head, ErrorKind::Validation,
          "config: the downstream estimator must be RGB, 6-stage, with a depth head");
  require(contour.dilate_passes >= contour.erode_passes && contour.erode_passes >= 0, ErrorKind::Validation,
          "config: contour.dilate_passes must be >= erode_passes >= 0");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig r;
  run_fields(r).read(parse(text), "");
  r.validate();
  return r;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

std::string to_json(const RunConfig& config) {
  RunConfig copy = config;
  return run_fields(copy).write().dump(2);
}

std::string depth_config_json(const DepthGenConfig& c) {
  DepthGenConfig copy = c;
  return depth_fields(copy).write().dump();
}

DepthGenConfig parse_depth_config(const std::string& text) {
  DepthGenConfig c;
  depth_fields(c).read(parse(text), "depth");
  c.validate();
  return c;
}

std::string generator_config_json(const GeneratorConfig& g, const ContourConfig& contour) {
  GeneratorConfig gc = g;
  ContourConfig cc = contour;
  json j;
  j["generator"] = generator_fields(gc).write();
  j["contour"] = contour_fields(cc).write();
  return j.dump();
}

void parse_generator_config(const std::string& text, GeneratorConfig& g, ContourConfig& contour) {
  Fields f;
  f.sub("generator", [&g] { return generator_fields(g); }).sub("contour", [&contour] {
    return contour_fields(contour);
  });
  f.read(parse(text), "");
  g.validate();
}

std::string hpm_config_json(const HpmConfig& c) {
  HpmConfig copy = c;
  return hpm_model_fields(copy).write().dump();
}

HpmConfig parse_hpm_config(const std::string& text) {
  HpmConfig c;
  hpm_model_fields(c).read(parse(text), "hpm.model");
  c.validate();
  return c;
}

}  // namespace mmhand
