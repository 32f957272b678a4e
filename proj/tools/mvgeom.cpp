// mvgeom command-line tool: run the multi-view sampler on a synthetic scene,
// dump ground truth, and score estimated trajectories.

#include "mvgeom/errors.hpp"
#include "mvgeom/metrics.hpp"
#include "mvgeom/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace mvgeom;

namespace {

std::string numbered(const std::string& stem, std::size_t n, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02zu.%s", stem.c_str(), n, ext);
  return buf;
}

void write_frame_pair(const FeatureGrid& grid, const fs::path& dir, const std::string& stem, std::size_t n) {
  write_grid(grid, (dir / numbered(stem, n, "fgrid")).string());
  write_ppm(grid, (dir / numbered(stem, n, "ppm")).string());
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool trace) {
  const SceneSetup setup = SceneSetup::from_config(Config::load(config_path));
  const InferenceResult result = setup.run(trace);
  const fs::path out(out_dir);
  fs::create_directories(out);
  for (std::size_t n = 0; n < result.latents.size(); ++n) {
    const LatentGrid& latent = result.latents.frames[n];
    write_grid(FeatureGrid::cast_from(latent), (out / numbered("latent", n, "fgrid")).string());
    write_ppm(decode_rgb(latent), (out / numbered("frame", n, "ppm")).string());
  }
  write_trajectory((out / "trajectory.txt").string(), setup.poses);
  if (result.search) {
    std::cout << "grid search: d_med " << result.search->d_med
              << (result.search->status == SearchStatus::kEmptyMaskFallback ? " (empty mask, fallback)" : "") << "\n";
  }
  if (trace) {
    for (const StepTrace& st : result.trace) {
      if (!st.replaced) continue;
      char name[32];
      std::snprintf(name, sizeof(name), "step_%02d", st.step);
      const fs::path dir = out / "trace" / name;
      fs::create_directories(dir);
      for (std::size_t n = 0; n < st.masks.size(); ++n) {
        if (st.masks[n].size() == 0) continue;
        write_frame_pair(st.masks[n], dir, "mask", n);
        write_grid(st.rendered[n], (dir / numbered("rendered", n, "fgrid")).string());
      }
    }
  }
  std::cout << "wrote " << result.latents.size() << " frames to " << out.string() << "\n";
  return 0;
}

int cmd_scene(const std::string& config_path, const std::string& out_dir) {
  const Config cfg = Config::load(config_path);
  const SceneSpec scene = SceneSpec::from_config(cfg);
  const auto poses = scene.make_poses();
  const fs::path out(out_dir);
  fs::create_directories(out);
  for (std::size_t n = 0; n < poses.size(); ++n) {
    const GroundTruthRender gt = render_ground_truth(scene, poses[n], scene.intrinsics.height, scene.intrinsics.width);
    write_frame_pair(gt.features, out, "gt", n);
    write_grid(gt.depth, (out / numbered("depth", n, "fgrid")).string());
  }
  write_trajectory((out / "trajectory.txt").string(), poses);
  std::cout << "wrote " << poses.size() << " ground-truth views to " << out.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& gen_path, const std::string& est_path, bool per_frame) {
  const auto gen = read_trajectory(gen_path);
  const PoseSequencePair pair = make_pose_pair(gen, read_estimated_trajectory(est_path));
  if (per_frame && !pair.reconstruction_failed) {
    const auto scores = per_frame_pose_accuracy(pair);
    for (std::size_t j = 0; j < scores.size(); ++j) std::cout << "frame " << j << " " << scores[j] << "\n";
  }
  std::cout << "CPA " << camera_pose_accuracy(pair) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view consistent sampling on synthetic posed scenes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool trace = false;
  auto* run = app.add_subcommand("run", "Sample frames for the scene and pipeline described by a config");
  run->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--trace", trace, "also write per-step masks and rendered features");

  std::string scene_config;
  std::string scene_out;
  auto* scene = app.add_subcommand("scene", "Dump ground-truth features and depth for every trajectory pose");
  scene->add_option("--config", scene_config, "key=value config file")->required()->check(CLI::ExistingFile);
  scene->add_option("--out", scene_out, "output directory")->required();

  std::string gen_path;
  std::string est_path;
  bool per_frame = false;
  auto* eval = app.add_subcommand("eval", "Camera pose accuracy of an estimated trajectory");
  eval->add_option("--gen", gen_path, "generated trajectory")->required()->check(CLI::ExistingFile);
  eval->add_option("--est", est_path, "estimated trajectory ('missing' lines, or a lone 'failed')")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_flag("--per-frame", per_frame, "print per-frame scores");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, out_dir, trace);
    if (*scene) return cmd_scene(scene_config, scene_out);
    if (*eval) return cmd_eval(gen_path, est_path, per_frame);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
