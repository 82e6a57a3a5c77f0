// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
//
// gpn: dataset generation, training, reconstruction, completion, repair,
// rendering, interpolation, stitching and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "gpn/checkpoint.hpp"
#include "gpn/dataset.hpp"
#include "gpn/finetune.hpp"
#include "gpn/io.hpp"
#include "gpn/mesher.hpp"
#include "gpn/metrics.hpp"
#include "gpn/training.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace gpn;
using namespace gpn::cli;

namespace {

struct Common {
  std::uint64_t seed = 0;
  bool deterministic = false;
  Index grid = 64;
  Index mesh_resolution = 128;
  Index mesh_camera_resolution = 96;
  Real iso = 0.0;  // 0: calibrate per field
};

RenderConfig eval_render(const Common& c) {
  RenderConfig rc;
  rc.grid_resolution = c.grid;
  rc.stratified = false;
  rc.seed = c.seed;
  return rc;
}

MeshingConfig meshing(const Common& c) {
  MeshingConfig m;
  m.resolution = c.mesh_resolution;
  m.camera_resolution = static_cast<int>(c.mesh_camera_resolution);
  if (c.iso > 0.0) m.iso = c.iso;
  return m;
}

std::vector<View> views_of(const Scene& s, const std::vector<Index>& ids) {
  std::vector<View> v;
  for (Index i : ids) v.push_back({s.cameras[static_cast<size_t>(i)], s.images[static_cast<size_t>(i)]});
  return v;
}

// Writes mesh.ply, cloud.ply and renders of `cams` for a field into `out`.
struct FieldOutputs {
  TriangleMesh mesh;
  ColoredPointCloud cloud;
};

FieldOutputs write_field_outputs(const fs::path& out, const RadianceField& field, const std::vector<Camera>& cams,
                                 Index cloud_points, const Common& c) {
  const RenderConfig rc = eval_render(c);
  const OccupancyGrid grid = occupancy_for_field(field, rc, derive_seed(c.seed, 3));
  FieldOutputs r;
  r.mesh = mesh_field(field, meshing(c), grid, rc);
  r.cloud = sample_mesh(r.mesh, cloud_points, derive_seed(c.seed, 4));
  write_mesh_ply(out / "mesh.ply", r.mesh);
  write_point_cloud_ply(out / "cloud.ply", r.cloud);
  if (!cams.empty()) fs::create_directories(out / "renders");
  for (size_t i = 0; i < cams.size(); ++i)
    write_png(out / "renders" / view_filename(static_cast<Index>(i)), render_image(cams[i], field, grid, rc));
  return r;
}

std::string fmt(Real v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

Camera default_camera(int resolution) {
  return Camera::look_at(Vec3(1.0, -0.9, 0.8), Vec3::Zero(), resolution, resolution, 0.75 * resolution);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPN point-cloud radiance field toolkit"};
  // Defaults are captured so the run manifest lists every resolved value.
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key-value configuration file (TOML/INI); flags override it");
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "base random seed");
  app.add_flag("--deterministic", common.deterministic, "fixed seeds and single-threaded math (always single-threaded)");
  app.add_option("--grid", common.grid, "occupancy grid resolution used for rendering")->check(CLI::Range(2, 512));
  app.add_option("--mesh-resolution", common.mesh_resolution, "marching cubes grid resolution")
      ->check(CLI::Range(8, 512));
  app.add_option("--mesh-camera-resolution", common.mesh_camera_resolution, "render size used to color meshes");
  app.add_option("--iso", common.iso, "density iso level for meshing (0 calibrates it per field)")
      ->check(CLI::NonNegativeNumber);

  // dataset make
  auto* dataset = app.add_subcommand("dataset", "synthetic scene generation")->require_subcommand(1);
  auto* make = dataset->add_subcommand("make", "write synthetic scene directories");
  fs::path make_out;
  Index make_count = 3;
  std::string preset = "desk", family = "mixed";
  std::optional<Index> make_points, make_views;
  std::optional<int> make_res;
  make->add_option("--out", make_out, "output directory")->required();
  make->add_option("--count", make_count, "number of scenes")->check(CLI::PositiveNumber);
  make->add_option("--preset", preset, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  make->add_option("--kind", family, "sphere, box, union or mixed")
      ->check(CLI::IsMember({"sphere", "box", "union", "mixed"}));
  make->add_option("--points", make_points, "points per cloud");
  make->add_option("--views", make_views, "views per scene");
  make->add_option("--resolution", make_res, "image size");
  Real train_fraction = 0.9;
  make->add_option("--train-fraction", train_fraction, "share of each shape kind written to train/ (rest to test/)")
      ->check(CLI::Range(0.0, 1.0));

  // train gen|complete
  auto* train = app.add_subcommand("train", "train a generation or completion model")->require_subcommand(1);
  auto* train_gen = train->add_subcommand("gen", "generation framework");
  auto* train_comp = train->add_subcommand("complete", "completion framework");
  std::vector<fs::path> train_data;
  fs::path train_out, train_log;
  TrainConfig tcfg;
  Index latent_dim = 0;
  for (auto* sc : {train_gen, train_comp}) {
    sc->add_option("--data", train_data, "scene directories or parents of scene directories")->required();
    sc->add_option("--out", train_out, "checkpoint path")->required();
    sc->add_option("--log", train_log, "JSONL log path (default: <out>.jsonl)");
    sc->add_option("--iters", tcfg.iterations, "iterations")->check(CLI::NonNegativeNumber);
    sc->add_option("--rays", tcfg.rays, "rays per iteration");
    sc->add_option("--lr", tcfg.lr, "initial learning rate");
    sc->add_option("--lr-final-ratio", tcfg.lr_final_ratio, "final / initial learning rate");
    sc->add_option("--weight-decay", tcfg.weight_decay, "AdamW weight decay");
    sc->add_option("--beta", tcfg.beta, "KL weight");
    sc->add_option("--clip", tcfg.clip_norm, "gradient norm clip");
    sc->add_option("--occupancy-interval", tcfg.occupancy_interval, "steps between occupancy updates");
    sc->add_option("--train-grid", tcfg.render.grid_resolution, "occupancy grid resolution while training");
    sc->add_option("--latent-dim", latent_dim, "latent size per encoder (0: default)");
  }
  train_comp->add_flag("--kl-on-concat", tcfg.kl_on_concat, "regularize the concatenated code instead of z_m");

  // Shared model/scene inputs.
  fs::path ckpt_path, scene_path, cloud_path, out_path, latent_path, cameras_path;
  Index iters = 0, recon_iters = 200, n_points = 16384, views_k = 0, steps = 5;
  std::uint64_t prior_seed = 1;
  std::string plane_text, stitch_plane = "0,0,1,0", mode = "latent";
  Real gap = 0.03;
  fs::path part_a, part_b;
  auto ckpt_opt = [&](CLI::App* sc) { sc->add_option("--ckpt", ckpt_path, "model checkpoint")->required(); };

  auto* reconstruct = app.add_subcommand("reconstruct", "0-view or sparse-view reconstruction of a scene");
  ckpt_opt(reconstruct);
  reconstruct->add_option("--scene", scene_path, "scene directory")->required();
  reconstruct->add_option("--views", views_k, "supervision views (first k; 0 = encoder only)")
      ->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--iters", recon_iters, "fine-tuning iterations when views > 0");
  reconstruct->add_option("--mode", mode, "latent or latent+hypernet")
      ->check(CLI::IsMember({"latent", "latent+hypernet"}));
  reconstruct->add_option("--points", n_points, "points in the output cloud");
  reconstruct->add_option("--out", out_path, "output directory")->required();

  auto* complete = app.add_subcommand("complete", "complete a partial cloud");
  ckpt_opt(complete);
  complete->add_option("--scene", scene_path, "scene directory (cloud is split with --plane; views fine-tune)");
  complete->add_option("--cloud", cloud_path, "existing part as a PLY cloud");
  complete->add_option("--plane", plane_text, "nx,ny,nz,offset; points with n.x >= offset are kept");
  complete->add_option("--prior-seed", prior_seed, "seed of the prior draw for z_m");
  complete->add_option("--iters", iters, "fine-tuning iterations against missing-side views");
  complete->add_option("--points", n_points, "points in the output cloud");
  complete->add_option("--out", out_path, "output directory")->required();

  auto* upsample = app.add_subcommand("upsample", "resample a cloud densely from its field");
  ckpt_opt(upsample);
  upsample->add_option("--cloud", cloud_path, "input PLY cloud or scene directory")->required();
  upsample->add_option("--n", n_points, "output points")->check(CLI::PositiveNumber);
  upsample->add_option("--out", out_path, "output PLY")->required();

  auto* holefill = app.add_subcommand("holefill", "fill holes in a cloud with points from its field");
  ckpt_opt(holefill);
  holefill->add_option("--cloud", cloud_path, "input PLY cloud or scene directory")->required();
  holefill->add_option("--n", n_points, "candidate points drawn from the field");
  holefill->add_option("--gap", gap, "candidates farther than this from the input are added");
  holefill->add_option("--out", out_path, "output PLY")->required();

  auto* render = app.add_subcommand("render", "render a cloud's field");
  ckpt_opt(render);
  render->add_option("--cloud", cloud_path, "PLY cloud or scene directory")->required();
  render->add_option("--cameras", cameras_path, "cameras.json (default: the scene's, or one default view)");
  render->add_option("--latent", latent_path, "latent vector file (default: encoder mean or prior draw)");
  render->add_option("--prior-seed", prior_seed, "prior draw for completion checkpoints");
  render->add_option("--out", out_path, "output directory")->required();

  int image_res = 128;
  bool interp_mesh = false;
  auto* interpolate = app.add_subcommand("interpolate", "walk the latent space between two clouds");
  ckpt_opt(interpolate);
  interpolate->add_option("--a", part_a, "first cloud")->required();
  interpolate->add_option("--b", part_b, "second cloud")->required();
  interpolate->add_option("--steps", steps, "number of codes including endpoints")->check(CLI::Range(2, 1000));
  interpolate->add_option("--resolution", image_res, "image size");
  interpolate->add_flag("--mesh", interp_mesh, "also write a mesh per step");
  interpolate->add_option("--out", out_path, "output directory")->required();

  auto* stitch = app.add_subcommand("stitch", "combine the parts of two clouds at a plane");
  ckpt_opt(stitch);
  stitch->add_option("--a", part_a, "cloud providing the kept side")->required();
  stitch->add_option("--b", part_b, "cloud providing the other side")->required();
  stitch->add_option("--plane", stitch_plane, "nx,ny,nz,offset");
  stitch->add_option("--resolution", image_res, "image size");
  stitch->add_option("--out", out_path, "output directory")->required();

  fs::path eval_pred, eval_ref;
  auto* eval = app.add_subcommand("eval", "compare predicted and reference scene directories");
  eval->add_option("--pred", eval_pred, "prediction directory")->required();
  eval->add_option("--ref", eval_ref, "reference directory")->required();
  eval->add_option("--out", out_path, "report prefix (writes .csv and .json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);
  RunManifest manifest(command, app.config_to_str(true, false), common.seed, common.deterministic);

  try {
    if (make->parsed()) {
      SceneSpec spec = preset == "desk" ? SceneSpec::desk() : SceneSpec::full();
      if (make_points) spec.n_points = *make_points;
      if (make_views) spec.n_views = *make_views;
      if (make_res) spec.resolution = *make_res;
      manifest.write(make_out / "manifest.json");
      const ShapeKind cycle[3] = {ShapeKind::kSphere, ShapeKind::kBox, ShapeKind::kUnion};
      std::vector<ShapeKind> kinds;
      for (Index i = 0; i < make_count; ++i)
        kinds.push_back(family == "mixed" ? cycle[i % 3] : shape_kind_from_string(family));
      // Split uniformly within each kind: the last round((1 - f) n_k) scenes of a kind are held out.
      std::map<ShapeKind, Index> total, seen;
      for (ShapeKind k : kinds) ++total[k];
      for (Index i = 0; i < make_count; ++i) {
        const ShapeKind kind = kinds[static_cast<size_t>(i)];
        const Index n_test = std::llround((1.0 - train_fraction) * static_cast<Real>(total[kind]));
        const bool test = seen[kind]++ >= total[kind] - n_test;
        Rng rng(derive_seed(common.seed, static_cast<std::uint64_t>(i), 1));
        const Scene s = make_scene(AnalyticShape::random(kind, rng), spec,
                                   derive_seed(common.seed, static_cast<std::uint64_t>(i), 2));
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%03d", static_cast<int>(i));
        const fs::path dir = make_out / (test ? "test" : "train") / name;
        save_scene(dir, s);
        std::cout << dir.string() << "  " << to_string(kind) << "\n";
      }
      return kExitOk;
    }

    if (train_gen->parsed() || train_comp->parsed()) {
      const bool gen = train_gen->parsed();
      tcfg.seed = common.seed;
      std::vector<fs::path> dirs;
      for (const auto& d : train_data)
        for (auto& s : scene_dirs(d)) dirs.push_back(s);
      for (const auto& d : dirs) manifest.add_input(d);
      if (train_log.empty()) train_log = train_out.string() + ".jsonl";
      manifest.write(train_out.string() + ".manifest.json");
      std::vector<Scene> scenes;
      for (const auto& d : dirs) scenes.push_back(load_scene(d));
      std::vector<const Scene*> ptrs;
      for (const auto& s : scenes) ptrs.push_back(&s);
      ModelConfig mc = gen ? ModelConfig::generation() : ModelConfig::completion();
      if (latent_dim > 0) mc.encoder.latent_dim = latent_dim;
      std::ofstream log(train_log);
      require(log.good(), ErrorCode::kIo, "cannot open log '" + train_log.string() + "'");
      const Checkpoint ck = gen ? train_generation(ptrs, mc, tcfg, &log) : train_completion(ptrs, mc, tcfg, &log);
      save_checkpoint(train_out, ck);
      std::cout << "checkpoint " << train_out.string() << " after " << ck.state.step << " steps on " << scenes.size()
                << " scenes\n";
      return kExitOk;
    }

    if (reconstruct->parsed()) {
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(scene_path));
      manifest.write(out_path / "manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, ModelKind::kGeneration);
      const Scene s = load_scene(resolve_input(scene_path));
      require(views_k <= s.view_count(), ErrorCode::kInvalidArgument,
              "--views " + std::to_string(views_k) + " exceeds the scene's " + std::to_string(s.view_count()));
      std::vector<Index> sup;
      for (Index i = 0; i < views_k; ++i) sup.push_back(i);
      FinetuneConfig fc;
      fc.iterations = views_k > 0 ? recon_iters : 0;
      fc.seed = common.seed;
      fc.render.grid_resolution = common.grid;
      fc.mode = mode == "latent" ? FinetuneConfig::Mode::kLatent : FinetuneConfig::Mode::kLatentHypernet;
      const FinetuneResult r = finetune_latent(ck.model, s.cloud, views_of(s, sup), fc);
      require_finite(r.weights.flat, "field weights");
      fs::create_directories(out_path);
      write_vector_file(out_path / "latent.txt", r.z);
      const NeuralField field(r.weights, ck.model.feature_volume(s.cloud));
      const FieldOutputs o = write_field_outputs(out_path, field, s.cameras, n_points, common);
      write_cameras_json(out_path / "cameras.json", s.cameras);
      const Real cd = chamfer(o.cloud.positions, s.cloud.positions);
      Real held = 0.0;
      Index n_held = 0;
      for (Index v = views_k; v < s.view_count(); ++v, ++n_held)
        held += psnr(read_png(out_path / "renders" / view_filename(v)), s.images[static_cast<size_t>(v)]);
      std::cout << "mesh " << o.mesh.vertex_count() << " vertices, CD x1e4 " << fmt(cd * MetricReport::kChamferScale);
      if (n_held > 0) std::cout << ", held-out PSNR " << fmt(held / static_cast<Real>(n_held)) << " dB";
      std::cout << "\n";
      return kExitOk;
    }

    if (complete->parsed()) {
      require(!scene_path.empty() || !cloud_path.empty(), ErrorCode::kInvalidArgument, "give --scene or --cloud");
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(scene_path.empty() ? cloud_path : scene_path));
      manifest.write(out_path / "manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, ModelKind::kCompletion);
      std::optional<Scene> s;
      ColoredPointCloud existing;
      std::optional<SplitPlane> plane;
      if (!plane_text.empty()) plane = parse_plane(plane_text);
      if (!scene_path.empty()) s = load_scene(resolve_input(scene_path));
      const ColoredPointCloud input = cloud_path.empty() ? s->cloud : load_cloud(cloud_path);
      existing = plane ? split_by_plane(input, *plane).existing : input;
      std::vector<View> views;
      if (s && iters > 0) {
        for (Index v = 0; v < s->view_count(); ++v) {
          const Camera& cam = s->cameras[static_cast<size_t>(v)];
          if (!plane || plane->signed_distance(cam.center()) < 0.0) views.push_back({cam, s->images[static_cast<size_t>(v)]});
        }
      }
      FinetuneConfig fc;
      fc.iterations = iters;
      fc.seed = common.seed;
      fc.render.grid_resolution = common.grid;
      const FinetuneResult r = finetune_completion(ck.model, existing, views, fc, prior_seed);
      require_finite(r.weights.flat, "field weights");
      fs::create_directories(out_path);
      write_vector_file(out_path / "latent.txt", r.z);
      write_point_cloud_ply(out_path / "existing.ply", existing);
      const NeuralField field(r.weights, ck.model.feature_volume(existing));
      const FieldOutputs o = write_field_outputs(out_path, field, s ? s->cameras : std::vector<Camera>{}, n_points, common);
      std::cout << "completed from " << existing.size() << " points with " << views.size() << " views; mesh "
                << o.mesh.vertex_count() << " vertices\n";
      return kExitOk;
    }

    if (upsample->parsed() || holefill->parsed()) {
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(cloud_path));
      manifest.write(out_path.string() + ".manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, ModelKind::kGeneration);
      const ColoredPointCloud input = load_cloud(cloud_path);
      const FieldWeights w = infer_zero_view(ck.model, input);
      require_finite(w.flat, "field weights");
      const NeuralField field(w, ck.model.feature_volume(input));
      const RenderConfig rc = eval_render(common);
      const OccupancyGrid grid = occupancy_for_field(field, rc, derive_seed(common.seed, 3));
      const ColoredPointCloud dense = resample_cloud(field, n_points, derive_seed(common.seed, 4), meshing(common), grid, rc);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      if (upsample->parsed()) {
        write_point_cloud_ply(out_path, dense);
        std::cout << input.size() << " -> " << dense.size() << " points\n";
        return kExitOk;
      }
      const NearestNeighborGrid nn(input.positions);
      std::vector<Index> add;
      for (Index i = 0; i < dense.size(); ++i)
        if (nn.nearest_squared(dense.positions.col(i)) > gap * gap) add.push_back(i);
      ColoredPointCloud merged;
      merged.positions.resize(3, input.size() + static_cast<Index>(add.size()));
      merged.colors.resize(3, merged.positions.cols());
      merged.positions.leftCols(input.size()) = input.positions;
      merged.colors.leftCols(input.size()) = input.colors;
      for (size_t k = 0; k < add.size(); ++k) {
        merged.positions.col(input.size() + static_cast<Index>(k)) = dense.positions.col(add[k]);
        merged.colors.col(input.size() + static_cast<Index>(k)) = dense.colors.col(add[k]);
      }
      write_point_cloud_ply(out_path, merged);
      std::cout << "added " << add.size() << " points to " << input.size() << "\n";
      return kExitOk;
    }

    if (render->parsed()) {
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(cloud_path));
      if (!latent_path.empty()) manifest.add_input(resolve_input(latent_path));
      manifest.write(out_path / "manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, std::nullopt);
      const ColoredPointCloud cloud = load_cloud(cloud_path);
      VecX z;
      if (!latent_path.empty()) {
        z = read_vector_file(resolve_input(latent_path));
        require(z.size() == ck.model.latent_dim(), ErrorCode::kShapeMismatch,
                "latent has " + std::to_string(z.size()) + " values, model expects " +
                    std::to_string(ck.model.latent_dim()));
      } else {
        z = ck.model.kind() == ModelKind::kGeneration ? ck.model.mean_latent(cloud)
                                                      : prior_completion_latent(ck.model, cloud, prior_seed);
      }
      std::vector<Camera> cams;
      const fs::path in = resolve_input(cloud_path);
      if (!cameras_path.empty()) cams = read_cameras_json(resolve_input(cameras_path));
      else if (fs::is_directory(in) && fs::exists(in / "cameras.json")) cams = read_cameras_json(in / "cameras.json");
      else cams = {default_camera(128)};
      const NeuralField field(ck.model.generate(z), ck.model.feature_volume(cloud));
      const RenderConfig rc = eval_render(common);
      const OccupancyGrid grid = occupancy_for_field(field, rc, derive_seed(common.seed, 3));
      fs::create_directories(out_path / "renders");
      for (size_t i = 0; i < cams.size(); ++i)
        write_png(out_path / "renders" / view_filename(static_cast<Index>(i)), render_image(cams[i], field, grid, rc));
      write_cameras_json(out_path / "cameras.json", cams);
      std::cout << "rendered " << cams.size() << " views\n";
      return kExitOk;
    }

    if (interpolate->parsed()) {
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(part_a));
      manifest.add_input(resolve_input(part_b));
      manifest.write(out_path / "manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, ModelKind::kGeneration);
      const VecX za = ck.model.mean_latent(load_cloud(part_a)), zb = ck.model.mean_latent(load_cloud(part_b));
      const auto codes = interpolate_codes(za, zb, steps);
      const Camera cam = default_camera(image_res);
      const RenderConfig rc = eval_render(common);
      for (size_t i = 0; i < codes.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "step_%03d", static_cast<int>(i));
        const NeuralField field(ck.model.generate(codes[i]));
        const OccupancyGrid grid = occupancy_for_field(field, rc, derive_seed(common.seed, 3));
        write_vector_file(out_path / (std::string(stem) + "_latent.txt"), codes[i]);
        write_png(out_path / (std::string(stem) + ".png"), render_image(cam, field, grid, rc));
        if (interp_mesh) write_mesh_ply(out_path / (std::string(stem) + ".ply"), mesh_field(field, meshing(common), grid, rc));
      }
      std::cout << "wrote " << codes.size() << " steps\n";
      return kExitOk;
    }

    if (stitch->parsed()) {
      manifest.add_input(resolve_input(ckpt_path));
      manifest.add_input(resolve_input(part_a));
      manifest.add_input(resolve_input(part_b));
      manifest.write(out_path / "manifest.json");
      const Checkpoint ck = load_checkpoint_checked(ckpt_path, ModelKind::kCompletion);
      const SplitPlane plane = parse_plane(stitch_plane);
      const ColoredPointCloud a = split_by_plane(load_cloud(part_a), plane).existing;
      const ColoredPointCloud b = split_by_plane(load_cloud(part_b), plane).missing;
      const FieldWeights w = stitch_parts(ck.model, a, b);
      require_finite(w.flat, "field weights");
      const NeuralField field(w, ck.model.feature_volume(a));
      const FieldOutputs o = write_field_outputs(out_path, field, {default_camera(image_res)}, n_points, common);
      std::cout << "stitched " << a.size() << " + " << b.size() << " points; mesh " << o.mesh.vertex_count()
                << " vertices\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      const fs::path pred = resolve_input(eval_pred), ref = resolve_input(eval_ref);
      manifest.add_input(pred);
      manifest.add_input(ref);
      if (!out_path.empty()) manifest.write(out_path.string() + ".manifest.json");
      std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pairs;
      if (fs::exists(ref / "cloud.ply") || fs::exists(ref / "images")) {
        pairs.push_back({ref.filename().string(), {pred, ref}});
      } else {
        for (const auto& e : fs::directory_iterator(ref))
          if (e.is_directory() && fs::is_directory(pred / e.path().filename()))
            pairs.push_back({e.path().filename().string(), {pred / e.path().filename(), e.path()}});
        std::sort(pairs.begin(), pairs.end());
      }
      require(!pairs.empty(), ErrorCode::kEmptySet, "no matching scenes between '" + pred.string() + "' and '" +
                                                        ref.string() + "'");
      MetricReport report;
      std::vector<Mat3X> pred_clouds, ref_clouds;
      for (const auto& [name, dirs] : pairs) {
        const auto& [p, r] = dirs;
        MetricRow row;
        row.scene = name;
        if (fs::exists(p / "cloud.ply") && fs::exists(r / "cloud.ply")) {
          pred_clouds.push_back(read_point_cloud_ply(p / "cloud.ply").positions);
          ref_clouds.push_back(read_point_cloud_ply(r / "cloud.ply").positions);
          row.chamfer = chamfer(pred_clouds.back(), ref_clouds.back());
        }
        if (fs::is_directory(r / "images")) {
          const fs::path pimg = fs::is_directory(p / "renders") ? p / "renders" : p / "images";
          Real ps = 0.0, ss = 0.0;
          int n = 0;
          std::vector<fs::path> refs;
          for (const auto& e : fs::directory_iterator(r / "images"))
            if (e.path().extension() == ".png") refs.push_back(e.path());
          std::sort(refs.begin(), refs.end());
          for (const auto& img : refs) {
            if (!fs::exists(pimg / img.filename())) continue;
            const Image a = read_png(pimg / img.filename()), b = read_png(img);
            ps += psnr(a, b);
            ss += ssim(a, b);
            ++n;
          }
          if (n > 0) {
            row.psnr = ps / n;
            row.ssim = ss / n;
          }
        }
        report.rows.push_back(row);
      }
      if (pred_clouds.size() > 1) report.mmd = mmd(pred_clouds, ref_clouds);
      std::cout << report.to_table();
      if (!out_path.empty()) {
        write_text_file(out_path.string() + ".csv", report.to_csv());
        write_text_file(out_path.string() + ".json", report.to_json());
      }
      return kExitOk;
    }
  } catch (const ExitError& e) {
    std::cerr << "gpn: " << e.what() << "\n";
    return e.code;
  } catch (const Error& e) {
    std::cerr << "gpn: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kIncompatibleCheckpoint ? kExitIncompatibleCheckpoint : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "gpn: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
