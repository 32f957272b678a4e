#include "mvgeom/pipeline.hpp"

#include "mvgeom/errors.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mvgeom {

void PipelineConfig::validate(std::size_t frames) const {
  if (t_total < 1) throw ConfigError("t_total must be at least 1");
  if (t_comp < 0 || t_comp > t_rep || t_rep > t_total) {
    throw ConfigError("need 0 <= t_comp <= t_rep <= t_total (got t_comp=" + std::to_string(t_comp) +
                      ", t_rep=" + std::to_string(t_rep) + ", t_total=" + std::to_string(t_total) + ")");
  }
  choose_anchor_frame(*this, frames);
  if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  if (grid_candidates < 1) throw ConfigError("grid_candidates must be at least 1");
  if (!(grid_range >= 0.0 && grid_range < 1.0)) throw ConfigError("grid_range must lie in [0, 1)");
  if (d_med_source == DepthShiftSource::kValue && !(d_med_value > 0.0)) throw ConfigError("d_med must be positive");
}

DiffusionSchedule PipelineConfig::schedule() const {
  return DiffusionSchedule::linear(beta_start, beta_end, train_steps, t_total);
}

PipelineConfig PipelineConfig::from_config(const Config& cfg) {
  PipelineConfig p;
  p.t_total = static_cast<int>(cfg.get_int("t_total", p.t_total));
  p.t_rep = static_cast<int>(cfg.get_int("t_rep", p.t_rep));
  p.t_comp = static_cast<int>(cfg.get_int("t_comp", p.t_comp));
  const long long anchor = cfg.get_int("anchor_index", 0);
  if (anchor < 0) throw ConfigError("anchor_index must be non-negative");
  p.anchor_index = static_cast<std::size_t>(anchor);
  p.zeta = cfg.get_double("zeta", p.zeta);
  p.grid_search = cfg.get_bool("grid_search", p.grid_search);
  p.grid_search_every_step = cfg.get_bool("grid_search_every_step", p.grid_search_every_step);
  p.grid_candidates = static_cast<int>(cfg.get_int("grid_candidates", p.grid_candidates));
  p.grid_range = cfg.get_double("grid_range", p.grid_range);
  const std::string d_med = cfg.get_string("d_med", "provider");
  if (d_med == "provider") {
    p.d_med_source = DepthShiftSource::kProvider;
  } else if (d_med == "field") {
    p.d_med_source = DepthShiftSource::kField;
  } else {
    p.d_med_source = DepthShiftSource::kValue;
    p.d_med_value = parse_double(d_med, "d_med");
  }
  p.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  p.completion_seed = static_cast<std::uint64_t>(cfg.get_int("completion_seed", 1));
  p.denoiser.name = cfg.get_string("denoiser", p.denoiser.name);
  if (p.denoiser.name != "oracle" && p.denoiser.name != "zero" && p.denoiser.name != "gaussian" &&
      p.denoiser.name != "toynet") {
    throw ConfigError("unknown denoiser '" + p.denoiser.name + "' (expected oracle, zero, gaussian or toynet)");
  }
  p.denoiser.prior_mean = cfg.get_double("prior_mean", p.denoiser.prior_mean);
  p.denoiser.prior_std = cfg.get_double("prior_std", p.denoiser.prior_std);
  p.denoiser.toynet.hidden_channels = static_cast<int>(cfg.get_int("toynet.hidden", p.denoiser.toynet.hidden_channels));
  p.denoiser.toynet.field = static_cast<int>(cfg.get_int("toynet.field", p.denoiser.toynet.field));
  p.denoiser.toynet.seed = static_cast<std::uint64_t>(cfg.get_int("toynet.seed", 7));
  p.beta_start = cfg.get_double("beta_start", p.beta_start);
  p.beta_end = cfg.get_double("beta_end", p.beta_end);
  p.train_steps = static_cast<int>(cfg.get_int("train_steps", p.train_steps));
  return p;
}

std::size_t choose_anchor_frame(const PipelineConfig& cfg, std::size_t frames) {
  if (cfg.anchor_index >= frames) {
    throw ConfigError("anchor_index " + std::to_string(cfg.anchor_index) + " is out of range for " +
                      std::to_string(frames) + " frames");
  }
  return cfg.anchor_index;
}

namespace {

void check_mask(const FeatureGrid& mask, int h, int w, const char* what) {
  if (mask.channels() != 1 || mask.height() != h || mask.width() != w) {
    throw DomainError(std::string(what) + ": mask must be single-channel with matching size");
  }
  for (float v : mask.data()) {
    if (v != 0.0f && v != 1.0f) throw DomainError(std::string(what) + ": mask is not binary");
  }
}

}  // namespace

LatentGrid feature_replace(const LatentGrid& features, const LatentGrid& rendered, const FeatureGrid& mask) {
  if (!features.same_shape(rendered)) throw DomainError("feature_replace: feature and rendered shapes differ");
  check_mask(mask, features.height(), features.width(), "feature_replace");
  LatentGrid out = features;
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      const double m = mask.at(r, c);
      for (int ch = 0; ch < out.channels(); ++ch) {
        out.at(r, c, ch) = m * rendered.at(r, c, ch) + (1.0 - m) * features.at(r, c, ch);
      }
    }
  }
  return out;
}

CompletionResult latent_complete(const LatentVideo& x_t, const LatentVideo& eps_hat,
                                 const std::vector<FeatureGrid>& masks, int t, const DiffusionSchedule& sched,
                                 const LatentVideo& fresh, std::size_t anchor) {
  if (!x_t.same_shape(eps_hat) || !x_t.same_shape(fresh)) throw DomainError("latent_complete: shape mismatch");
  if (masks.size() != x_t.size()) throw DomainError("latent_complete: need one mask per frame");
  if (anchor >= x_t.size()) throw DomainError("latent_complete: anchor out of range");
  const LatentVideo x0 = predict_x0(x_t, eps_hat, t, sched);
  const LatentVideo renoised = ddpm_forward(x0, t, fresh, sched);
  CompletionResult out{x_t, eps_hat};
  for (std::size_t n = 0; n < x_t.size(); ++n) {
    if (n == anchor) continue;
    const LatentGrid& x = x_t.frames[n];
    check_mask(masks[n], x.height(), x.width(), "latent_complete");
    for (int r = 0; r < x.height(); ++r) {
      for (int c = 0; c < x.width(); ++c) {
        const double m = masks[n].at(r, c);
        for (int ch = 0; ch < x.channels(); ++ch) {
          out.latents.frames[n].at(r, c, ch) = renoised.frames[n].at(r, c, ch) * (1.0 - m) + x.at(r, c, ch) * m;
          out.noise.frames[n].at(r, c, ch) =
              fresh.frames[n].at(r, c, ch) * (1.0 - m) + eps_hat.frames[n].at(r, c, ch) * m;
        }
      }
    }
  }
  return out;
}

LatentVideo latent_complete(const LatentVideo& x_t, const std::vector<FeatureGrid>& masks, const Denoiser& denoiser,
                            const Conditioning& cond, const DiffusionSchedule& sched, int t, std::uint64_t seed,
                            std::uint64_t stream, std::size_t anchor) {
  const LatentVideo eps = denoiser.predict_noise(x_t, t, cond);
  return latent_complete(x_t, eps, masks, t, sched, gaussian_video(x_t, seed, stream), anchor).latents;
}

DepthEstimate GroundTruthDepthProvider::estimate(const FeatureGrid&, const CameraPose& cam) const {
  const GroundTruthRender gt = render_ground_truth(scene_, cam, cam.intrinsics.height, cam.intrinsics.width);
  double sum = 0.0;
  for (float v : gt.depth.data()) sum += v;
  const double shift = sum / static_cast<double>(gt.depth.size()) - 1.0;
  DepthEstimate out{DepthMap(gt.depth.height(), gt.depth.width(), 1), shift};
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    const double raw = gt.depth.data()[i] - shift;
    if (!(raw > 0.0)) {
      throw DomainError("ground-truth depth: scene depth range too wide for mean-normalized alignment");
    }
    out.raw.data()[i] = static_cast<float>(raw);
  }
  return out;
}

FixedDepthProvider::FixedDepthProvider(DepthMap raw) : raw_(std::move(raw)) {
  if (raw_.channels() != 1 || raw_.size() == 0) throw DomainError("fixed depth: need a non-empty single-channel map");
  for (float v : raw_.data()) {
    if (!(v > 0.0f) || !std::isfinite(v)) throw DomainError("fixed depth: values must be positive and finite");
  }
}

DepthEstimate FixedDepthProvider::estimate(const FeatureGrid&, const CameraPose& cam) const {
  return {resize_bilinear(raw_, cam.intrinsics.height, cam.intrinsics.width), std::nullopt};
}

FeatureGrid decode_rgb(const LatentGrid& latent) {
  if (latent.channels() < 3) throw DomainError("decode_rgb: latent needs at least 3 channels");
  return FeatureGrid::cast_from(slice_channels(latent, 0, 3));
}

LatentVideo initial_noise(const PipelineConfig& cfg, std::size_t frames, int h, int w, int c) {
  LatentVideo like;
  like.frames.assign(frames, LatentGrid(h, w, c));
  return gaussian_video(like, cfg.seed, 0);
}

LatentVideo run_plain_ddim(const PipelineConfig& cfg, const Denoiser& denoiser, const Conditioning& cond, int h,
                           int w, int c) {
  const DiffusionSchedule sched = cfg.schedule();
  LatentVideo x = initial_noise(cfg, cond.poses.size(), h, w, c);
  x.poses = cond.poses;
  for (int s = 1; s <= cfg.t_total; ++s) {
    const int t = sched.timestep_at(s);
    const LatentVideo eps = denoiser.predict_noise(x, t, cond);
    x = ddim_step(x, eps, t, sched.prev_timestep_at(s), sched);
  }
  return x;
}

namespace {

constexpr std::uint64_t kCompletionStreamBase = 1000;

CameraPose at_resolution(const CameraPose& cam, int h, int w) {
  if (cam.intrinsics.width == w && cam.intrinsics.height == h) return cam;
  return {cam.intrinsics.resized(w, h), cam.pose};
}

FeatureGrid pool_to(const FeatureGrid& mask, int h, int w) {
  if (mask.height() == h && mask.width() == w) return mask;
  return min_pool_mask(mask, h, w);
}

struct FieldRenders {
  std::vector<FeatureGrid> alpha;  // per frame, latent resolution
};

// Depth shift from the field's median depth on the anchor's central ray,
// chosen so the aligned depth matches it at the central cell.
double field_shift(const FeatureFieldRender& anchor_render, const DepthMap& raw) {
  double mean_abs = 0.0;
  for (float v : raw.data()) mean_abs += std::abs(static_cast<double>(v));
  mean_abs /= static_cast<double>(raw.size());
  const double center = raw.at(raw.height() / 2, raw.width() / 2) / mean_abs;
  const double shift = central_ray_median_depth(anchor_render) - center;
  if (!(shift > 0.0)) throw DomainError("field depth shift is not positive");
  return shift;
}

}  // namespace

InferenceResult run_inference(const PipelineConfig& cfg, const Conditioning& cond_in, const InferenceInputs& inputs,
                              int h, int w, int c, bool trace) {
  if (inputs.denoiser == nullptr) throw ConfigError("run_inference: no denoiser");
  const std::size_t frames = cond_in.poses.size();
  if (frames == 0) throw ConfigError("run_inference: conditioning has no poses");
  cfg.validate(frames);
  if (cfg.t_rep > 0 && inputs.depth == nullptr) throw ConfigError("run_inference: replacement needs a depth provider");
  const std::size_t anchor = choose_anchor_frame(cfg, frames);
  const DiffusionSchedule sched = cfg.schedule();
  const Denoiser& denoiser = *inputs.denoiser;
  const FieldFunction field = inputs.field ? inputs.field : consistency_field();

  Conditioning cond = cond_in;
  std::optional<FeatureFieldRender> anchor_field;
  std::vector<FeatureGrid> foreground;
  if (inputs.references != nullptr) {
    std::vector<LatentGrid> x_y;
    for (std::size_t n = 0; n < frames; ++n) {
      FeatureFieldRender fr =
          render_feature_map(*inputs.references, at_resolution(cond.poses[n], h, w), field, h, w, inputs.sampling);
      x_y.push_back(LatentGrid::cast_from(fr.features));
      FeatureGrid fg(h, w, 1);
      for (std::size_t i = 0; i < fg.size(); ++i) fg.data()[i] = fr.alpha.data()[i] >= 0.5f ? 1.0f : 0.0f;
      foreground.push_back(std::move(fg));
      if (n == anchor) anchor_field = std::move(fr);
    }
    if (cond.reference_features.empty()) cond.reference_features = std::move(x_y);
  }

  InferenceResult result;
  LatentVideo x = initial_noise(cfg, frames, h, w, c);
  x.poses = cond.poses;
  std::optional<double> cached_shift;

  for (int s = 1; s <= cfg.t_total; ++s) {
    const int t = sched.timestep_at(s);
    const int t_prev = sched.prev_timestep_at(s);
    if (s > cfg.t_rep) {
      const LatentVideo eps = denoiser.predict_noise(x, t, cond);
      x = ddim_step(x, eps, t, t_prev, sched);
      if (trace) result.trace.push_back(StepTrace{s, t, false, false, 0.0, {}, {}});
      continue;
    }

    // Capture pass: anchor features and the current clean estimate.
    LatentGrid anchor_features;
    DenoiserHooks capture;
    capture.feature_tap = [&](std::size_t n, const LatentGrid& f) -> std::optional<LatentGrid> {
      if (n == anchor) anchor_features = f;
      return std::nullopt;
    };
    const LatentVideo eps_capture = denoiser.predict_noise(x, t, cond, capture);
    const LatentVideo x0_hat = predict_x0(x, eps_capture, t, sched);
    const FeatureGrid anchor_rgb = decode_rgb(x0_hat.frames[anchor]);

    const int fh = anchor_features.height();
    const int fw = anchor_features.width();
    DepthEstimate est;
    try {
      est = inputs.depth->estimate(anchor_rgb, at_resolution(cond.poses[anchor], h, w));
    } catch (const std::exception& e) {
      throw std::runtime_error("depth provider failed at step " + std::to_string(s) + ": " + e.what());
    }
    const DepthMap raw = resize_bilinear(est.raw, fh, fw);

    if (!cached_shift || cfg.grid_search_every_step) {
      double base = 0.0;
      switch (cfg.d_med_source) {
        case DepthShiftSource::kValue:
          base = cfg.d_med_value;
          break;
        case DepthShiftSource::kProvider:
          if (!est.shift) throw ConfigError("d_med = provider, but the depth provider reports no shift");
          base = *est.shift;
          break;
        case DepthShiftSource::kField:
          if (!anchor_field) throw ConfigError("d_med = field needs a reference set");
          base = field_shift(*anchor_field, resize_bilinear(est.raw, h, w));
          break;
      }
      cached_shift = base;
      if (cfg.grid_search) {
        const CameraPose rgb_cam = at_resolution(cond.poses[anchor], h, w);
        const DepthMap raw_rgb = resize_bilinear(est.raw, h, w);
        const DepthObjective objective = [&](double d) -> std::optional<double> {
          const AnchorFeatureMesh mesh = build_anchor_mesh(anchor_rgb, align_depth(raw_rgb, d), rgb_cam, cfg.zeta);
          double sum = 0.0;
          std::size_t count = 0;
          for (std::size_t n = 0; n < frames; ++n) {
            if (n == anchor) continue;
            const RenderOutput ro = render(mesh, at_resolution(cond.poses[n], h, w), h, w);
            const FeatureGrid target = decode_rgb(x0_hat.frames[n]);
            for (int r = 0; r < h; ++r) {
              for (int col = 0; col < w; ++col) {
                if (ro.mask.at(r, col) != 1.0f) continue;
                if (!foreground.empty() && foreground[n].at(r, col) != 1.0f) continue;
                for (int ch = 0; ch < 3; ++ch) {
                  const double diff = static_cast<double>(ro.features.at(r, col, ch)) - target.at(r, col, ch);
                  sum += diff * diff;
                  ++count;
                }
              }
            }
          }
          if (count == 0) return std::nullopt;
          return sum / static_cast<double>(count);
        };
        DepthSearchResult found = median_depth_search(base, objective, cfg.grid_candidates, cfg.grid_range);
        cached_shift = found.d_med;
        result.search = std::move(found);
      }
    }
    const double d_med = *cached_shift;

    const CameraPose anchor_cam = at_resolution(cond.poses[anchor], fh, fw);
    const AnchorFeatureMesh mesh =
        build_anchor_mesh(FeatureGrid::cast_from(anchor_features), align_depth(raw, d_med), anchor_cam, cfg.zeta);

    std::vector<FeatureGrid> masks(frames);
    std::vector<LatentGrid> rendered(frames);
    std::vector<FeatureGrid> latent_masks(frames, FeatureGrid(h, w, 1, 1.0f));
    StepTrace st{s, t, true, s <= cfg.t_comp, d_med, {}, {}};
    for (std::size_t n = 0; n < frames; ++n) {
      if (n == anchor) continue;
      RenderOutput ro = render(mesh, at_resolution(cond.poses[n], fh, fw), fh, fw);
      latent_masks[n] = pool_to(ro.mask, h, w);
      rendered[n] = LatentGrid::cast_from(ro.features);
      masks[n] = std::move(ro.mask);
      if (trace) st.rendered.push_back(ro.features);
    }
    if (trace) {
      st.rendered.insert(st.rendered.begin() + static_cast<std::ptrdiff_t>(anchor), FeatureGrid());
      st.masks = masks;
    }

    DenoiserHooks replace;
    replace.feature_tap = [&](std::size_t n, const LatentGrid& f) -> std::optional<LatentGrid> {
      if (n == anchor) return std::nullopt;
      if (f.height() != fh || f.width() != fw) throw DomainError("tap resolution changed between passes");
      return feature_replace(f, rendered[n], masks[n]);
    };
    LatentVideo eps = denoiser.predict_noise(x, t, cond, replace);

    if (s <= cfg.t_comp) {
      LatentVideo fresh;
      fresh.poses = x.poses;
      for (std::size_t n = 0; n < frames; ++n) {
        fresh.frames.push_back(gaussian_grid(h, w, c, cfg.completion_seed, kCompletionStreamBase + static_cast<std::uint64_t>(s), n));
      }
      CompletionResult done = latent_complete(x, eps, latent_masks, t, sched, fresh, anchor);
      x = std::move(done.latents);
      eps = std::move(done.noise);
    }
    x = ddim_step(x, eps, t, t_prev, sched);
    if (trace) result.trace.push_back(std::move(st));
  }
  result.latents = std::move(x);
  return result;
}

SceneSetup SceneSetup::from_config(const Config& cfg) {
  SceneSetup setup;
  setup.scene = SceneSpec::from_config(cfg);
  setup.pipeline = PipelineConfig::from_config(cfg);
  setup.poses = setup.scene.make_poses();
  setup.pipeline.validate(setup.poses.size());
  const int h = setup.scene.intrinsics.height;
  const int w = setup.scene.intrinsics.width;

  for (const auto& cam : setup.poses) {
    setup.targets.frames.push_back(LatentGrid::cast_from(render_ground_truth(setup.scene, cam, h, w).features));
  }
  setup.targets.poses = setup.poses;
  setup.cond.poses = setup.poses;
  if (cfg.has("cond")) {
    std::string text = cfg.get_string("cond");
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream is(text);
    std::string item;
    while (is >> item) setup.cond.vector.push_back(parse_double(item, "cond"));
  }

  std::vector<FeatureGrid> known;
  const std::string known_mode = cfg.get_string("oracle.known", "all");
  if (known_mode == "anchor") {
    for (std::size_t n = 0; n < setup.poses.size(); ++n) {
      known.emplace_back(h, w, 1, n == setup.pipeline.anchor_index ? 1.0f : 0.0f);
    }
  } else if (known_mode != "all") {
    throw ConfigError("oracle.known must be 'all' or 'anchor'");
  }
  setup.pipeline.denoiser.toynet.latent_channels = setup.scene.channels;
  setup.denoiser = make_denoiser(setup.pipeline.denoiser, setup.pipeline.schedule(), &setup.targets, std::move(known));

  const std::string depth = cfg.get_string("depth", "ground_truth");
  if (depth == "ground_truth") {
    setup.depth = std::make_unique<GroundTruthDepthProvider>(setup.scene);
  } else {
    setup.depth = std::make_unique<FixedDepthProvider>(read_grid(cfg.get_path("depth")));
  }

  if (cfg.has("references")) {
    setup.references = read_reference_set(cfg.get_path("references"));
  } else if (cfg.has("references.synthesize")) {
    const long long count = cfg.get_int("references.synthesize");
    if (count < 1 || static_cast<std::size_t>(count) > setup.poses.size()) {
      throw ConfigError("references.synthesize must lie in [1, frames]");
    }
    ReferenceSet refs;
    for (long long i = 0; i < count; ++i) {
      const CameraPose& cam = setup.poses[static_cast<std::size_t>(i) * setup.poses.size() / static_cast<std::size_t>(count)];
      refs.features.push_back(render_ground_truth(setup.scene, cam, h, w).features);
      refs.poses.push_back(cam);
    }
    setup.references = std::move(refs);
  }
  return setup;
}

InferenceResult SceneSetup::run(bool trace) const {
  InferenceInputs inputs;
  inputs.denoiser = denoiser.get();
  inputs.depth = depth.get();
  inputs.references = references ? &*references : nullptr;
  return run_inference(pipeline, cond, inputs, scene.intrinsics.height, scene.intrinsics.width, scene.channels,
                       trace);
}

}  // namespace mvgeom
