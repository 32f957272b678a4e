#pragma once

#include "mvgeom/config.hpp"
#include "mvgeom/denoiser.hpp"
#include "mvgeom/depthmesh.hpp"
#include "mvgeom/featurefield.hpp"
#include "mvgeom/rasterizer.hpp"
#include "mvgeom/scheduler.hpp"
#include "mvgeom/synthscene.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvgeom {

/// Where the depth shift d_med comes from.
enum class DepthShiftSource {
  kValue,     // PipelineConfig::d_med_value
  kProvider,  // the depth provider's own metric shift
  kField,     // feature-field median depth on the anchor's central ray
};

struct PipelineConfig {
  int t_total = 50;
  int t_rep = 35;
  int t_comp = 15;
  std::size_t anchor_index = 0;
  double zeta = kDefaultDiscontinuityThreshold;

  bool grid_search = false;
  bool grid_search_every_step = false;
  int grid_candidates = 21;
  double grid_range = 0.4;

  DepthShiftSource d_med_source = DepthShiftSource::kProvider;
  double d_med_value = 1.0;

  std::uint64_t seed = 0;
  std::uint64_t completion_seed = 1;

  DenoiserSpec denoiser;

  double beta_start = 1e-4;
  double beta_end = 2e-2;
  int train_steps = 1000;

  /// 0 <= t_comp <= t_rep <= t_total and anchor_index < frames.
  void validate(std::size_t frames) const;
  DiffusionSchedule schedule() const;

  /// Keys: t_total t_rep t_comp anchor_index zeta grid_search
  /// grid_search_every_step grid_candidates grid_range d_med seed
  /// completion_seed denoiser prior_mean prior_std toynet.hidden
  /// toynet.field toynet.seed beta_start beta_end train_steps.
  static PipelineConfig from_config(const Config& cfg);
};

/// Returns cfg.anchor_index; ConfigError when it is not below `frames`.
std::size_t choose_anchor_frame(const PipelineConfig& cfg, std::size_t frames);

/// M * rendered + (1 - M) * features, per cell. M is single-channel and binary.
LatentGrid feature_replace(const LatentGrid& features, const LatentGrid& rendered, const FeatureGrid& mask);

struct CompletionResult {
  LatentVideo latents;
  LatentVideo noise;  // matching noise prediction for the blended latents
};

/// Re-noises the clean estimate inside mask-0 cells:
/// x' = ddpm_forward(predict_x0(x_t, eps_hat), t, fresh), x_new = x' (1 - M) + x_t M.
/// The returned noise is `fresh` inside the holes and eps_hat elsewhere.
/// Frame `anchor` passes through unchanged.
CompletionResult latent_complete(const LatentVideo& x_t, const LatentVideo& eps_hat,
                                 const std::vector<FeatureGrid>& masks, int t, const DiffusionSchedule& sched,
                                 const LatentVideo& fresh, std::size_t anchor);

/// Same, with eps_hat from `denoiser` and fresh noise drawn from
/// frame-indexed substreams of (seed, stream).
LatentVideo latent_complete(const LatentVideo& x_t, const std::vector<FeatureGrid>& masks, const Denoiser& denoiser,
                            const Conditioning& cond, const DiffusionSchedule& sched, int t, std::uint64_t seed,
                            std::uint64_t stream, std::size_t anchor);

struct DepthEstimate {
  DepthMap raw;                // strictly positive relative depth
  std::optional<double> shift; // metric shift that aligns raw, when known
};

/// Monocular depth stand-in: relative depth for a decoded RGB frame seen
/// from `cam` (at the RGB resolution).
class DepthProvider {
 public:
  virtual ~DepthProvider() = default;
  virtual DepthEstimate estimate(const FeatureGrid& rgb, const CameraPose& cam) const = 0;
};

/// Exact scene depth written as raw = D - s with s = mean(D) - 1, so
/// align_depth(raw, s) = D. Needs min(D) > mean(D) - 1; throws DomainError
/// otherwise.
class GroundTruthDepthProvider final : public DepthProvider {
 public:
  explicit GroundTruthDepthProvider(SceneSpec scene) : scene_(std::move(scene)) {}
  DepthEstimate estimate(const FeatureGrid& rgb, const CameraPose& cam) const override;

 private:
  SceneSpec scene_;
};

/// Fixed relative depth map, resized to the requested camera.
class FixedDepthProvider final : public DepthProvider {
 public:
  explicit FixedDepthProvider(DepthMap raw);
  DepthEstimate estimate(const FeatureGrid& rgb, const CameraPose& cam) const override;

 private:
  DepthMap raw_;
};

/// Decoder stand-in: latent channels 0..2 as RGB.
FeatureGrid decode_rgb(const LatentGrid& latent);

struct StepTrace {
  int step = 0;  // 1-based sampling iteration
  int timestep = 0;
  bool replaced = false;
  bool completed = false;
  double d_med = 0.0;
  std::vector<FeatureGrid> masks;     // per frame at feature resolution; empty grid for the anchor
  std::vector<FeatureGrid> rendered;  // rendered anchor features per frame; empty grid for the anchor
};

struct InferenceResult {
  LatentVideo latents;
  std::optional<DepthSearchResult> search;
  std::vector<StepTrace> trace;
};

struct InferenceInputs {
  const Denoiser* denoiser = nullptr;
  const DepthProvider* depth = nullptr;
  const ReferenceSet* references = nullptr;  // optional
  FieldFunction field;                       // defaults to consistency_field()
  RaySampling sampling;
};

/// Initial x_T: independent standard normals from (seed, stream 0).
LatentVideo initial_noise(const PipelineConfig& cfg, std::size_t frames, int h, int w, int c);

/// Hook-free DDIM from initial_noise.
LatentVideo run_plain_ddim(const PipelineConfig& cfg, const Denoiser& denoiser, const Conditioning& cond, int h,
                           int w, int c);

/// DDIM with depth-aware feature replacement for s <= t_rep and latent
/// completion for s <= t_comp. cond.poses fixes the frame count. When
/// references are given and cond has no reference features, the feature
/// field supplies them.
InferenceResult run_inference(const PipelineConfig& cfg, const Conditioning& cond, const InferenceInputs& inputs,
                              int h, int w, int c, bool trace = false);

/// Everything needed to run a synthetic scene end to end from one config.
struct SceneSetup {
  SceneSpec scene;
  PipelineConfig pipeline;
  std::vector<CameraPose> poses;
  LatentVideo targets;  // ground-truth renders at latent resolution
  Conditioning cond;
  std::unique_ptr<Denoiser> denoiser;
  std::unique_ptr<DepthProvider> depth;
  std::optional<ReferenceSet> references;

  /// Scene and pipeline keys plus: cond (comma-separated vector),
  /// oracle.known = all | anchor, depth = ground_truth | <fgrid path>,
  /// references = <dir>, references.synthesize = <count>.
  static SceneSetup from_config(const Config& cfg);

  InferenceResult run(bool trace = false) const;
};

}  // namespace mvgeom
