#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "trisoup/connect/edge_graph.hpp"
#include "trisoup/core/config.hpp"
#include "trisoup/core/error.hpp"
#include "trisoup/io/checkpoint.hpp"
#include "trisoup/io/colmap.hpp"
#include "trisoup/io/fusion.hpp"
#include "trisoup/io/metrics.hpp"
#include "trisoup/io/ply_io.hpp"
#include "trisoup/io/raster_io.hpp"
#include "trisoup/loss/losses.hpp"
#include "trisoup/render/rasterizer.hpp"
#include "trisoup/synth/fixtures.hpp"
#include "trisoup/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace trisoup;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  int verbosity = 1;
};

TrainConfig resolve_config(const CommonOpts& opts) {
  TrainConfig cfg = opts.config_path.empty() ? TrainConfig{} : load_config(opts.config_path);
  apply_overrides(cfg, opts.overrides);
  if (opts.seed >= 0) cfg.rng_seed = opts.seed;
  cfg.validate();
  return cfg;
}

void echo_config(const TrainConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  save_config(cfg, out_dir + "/config_resolved.cfg");
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "config overrides, key=value")
      ->take_all()
      ->expected(-1);
  cmd->add_option("--seed", opts.seed, "RNG seed override");
  cmd->add_option("-v,--verbosity", opts.verbosity, "0 = quiet, 1 = progress lines");
}

std::string view_base_name(const Camera& cam, int index) {
  std::string name = cam.name;
  if (name.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%04d", index);
    return buf;
  }
  const auto dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

void write_views_manifest(const std::string& path, const std::vector<Camera>& cams) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest: " + path);
  out << "# index width height fx fy cx cy qw qx qy qz tx ty tz name\n";
  out.precision(17);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const Camera& c = cams[i];
    const Quat q(c.rot);
    out << i << " " << c.width << " " << c.height << " " << c.fx << " " << c.fy << " "
        << c.cx << " " << c.cy << " " << q.w() << " " << q.x() << " " << q.y() << " "
        << q.z() << " " << c.trans[0] << " " << c.trans[1] << " " << c.trans[2] << " "
        << view_base_name(c, static_cast<int>(i)) << "\n";
  }
}

std::vector<Camera> read_views_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path);
  std::vector<Camera> cams;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int index;
    Camera c;
    double qw, qx, qy, qz;
    if (!(ss >> index >> c.width >> c.height >> c.fx >> c.fy >> c.cx >> c.cy >> qw >> qx >>
          qy >> qz >> c.trans[0] >> c.trans[1] >> c.trans[2] >> c.name)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed manifest line");
    }
    c.rot = Quat(qw, qx, qy, qz).toRotationMatrix();
    c.validate();
    cams.push_back(c);
  }
  if (cams.empty()) throw ValidationError(path + ": manifest has no views");
  return cams;
}

int cmd_train(const std::string& dataset_path, const std::string& out_dir,
              const CommonOpts& opts) {
  const TrainConfig cfg = resolve_config(opts);
  echo_config(cfg, out_dir);
  const Dataset dataset = load_sfm(dataset_path, cfg.resolution_scale);

  Trainer trainer(dataset, cfg);
  trainer.initialize();

  std::ofstream metrics(out_dir + "/metrics.txt");
  if (!metrics) throw ValidationError("cannot write metrics: " + out_dir + "/metrics.txt");
  metrics.precision(10);

  trainer.run([&](const IterationEvent& ev) {
    const std::int64_t shown = ev.iteration + 1;
    if (shown % cfg.metrics_interval == 0 || shown == cfg.iterations) {
      metrics << "iter=" << shown << " total=" << ev.losses.total
              << " l1=" << ev.losses.l1 << " ssim=" << ev.losses.ssim
              << " normal=" << ev.losses.normal << " smooth=" << ev.losses.smooth
              << " conn=" << ev.losses.connectivity << " tris=" << ev.triangle_count
              << " sh_degree=" << ev.active_sh_degree << "\n";
      metrics.flush();
      if (opts.verbosity > 0) {
        std::printf("iter=%lld total=%.6f tris=%zu\n",
                    static_cast<long long>(shown), ev.losses.total, ev.triangle_count);
      }
    }
    if (ev.densified && opts.verbosity > 0) {
      std::printf("event=densify iter=%lld split=%zu cloned=%zu pruned=%zu tris=%zu\n",
                  static_cast<long long>(ev.iteration + 1), ev.densify_report.split,
                  ev.densify_report.cloned, ev.densify_report.pruned, ev.triangle_count);
    }
    if (ev.opacity_was_reset && opts.verbosity > 0) {
      std::printf("event=opacity_reset iter=%lld\n",
                  static_cast<long long>(ev.iteration + 1));
    }
    if (cfg.checkpoint_interval > 0 && shown % cfg.checkpoint_interval == 0) {
      save_checkpoint(out_dir + "/iter_" + std::to_string(shown) + ".ckpt",
                      trainer.make_checkpoint());
    }
  });

  save_checkpoint(out_dir + "/final.ckpt", trainer.make_checkpoint());
  write_soup_ply(out_dir + "/soup.ply", trainer.soup());

  const double holdout = trainer.holdout_psnr();
  if (holdout >= 0.0) {
    metrics << "holdout_psnr=" << holdout << "\n";
    std::printf("holdout_psnr=%.4f\n", holdout);
  }
  std::printf("done iterations=%lld tris=%zu checkpoint=%s\n",
              static_cast<long long>(trainer.iteration()), trainer.soup().count(),
              (out_dir + "/final.ckpt").c_str());
  return 0;
}

int cmd_render(const std::string& checkpoint_path, const std::string& dataset_path,
               const std::string& views_path, const std::string& out_dir,
               const std::string& depth_mode, const CommonOpts& opts) {
  TrainConfig cfg = resolve_config(opts);
  if (!depth_mode.empty()) cfg.depth_mode = depth_mode;
  cfg.validate();
  echo_config(cfg, out_dir);

  const Checkpoint ck = load_checkpoint(checkpoint_path);
  std::vector<Camera> cams;
  if (!dataset_path.empty()) {
    const Dataset ds = load_sfm(dataset_path, cfg.resolution_scale);
    cams = ds.cameras;
  } else if (!views_path.empty()) {
    cams = read_views_manifest(views_path);
  } else {
    throw ValidationError("render needs --dataset or --views");
  }

  const RenderOptions opt = make_render_options(cfg, cfg.sh_degree);
  write_views_manifest(out_dir + "/views.txt", cams);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const RenderOutput out = render(ck.soup, cams[i], opt);
    const std::string base = out_dir + "/" + view_base_name(cams[i], static_cast<int>(i));
    write_ppm(base + "_color.ppm", out.color);
    write_pfm(base + "_depth.pfm", out.depth);
    write_pfm(base + "_normal.pfm", out.normal);
    if (opts.verbosity > 0) {
      std::printf("rendered view=%zu name=%s\n", i, base.c_str());
    }
  }
  std::printf("done views=%zu out=%s\n", cams.size(), out_dir.c_str());
  return 0;
}

int cmd_fuse(const std::string& renders_dir, const std::string& out_path,
             const CommonOpts& opts, double px_thresh_cli, std::int64_t min_views_cli) {
  TrainConfig cfg = resolve_config(opts);
  if (px_thresh_cli > 0.0) cfg.fusion_px_thresh = px_thresh_cli;
  if (min_views_cli > 0) cfg.fusion_min_views = min_views_cli;

  const std::vector<Camera> cams = read_views_manifest(renders_dir + "/views.txt");
  std::vector<ImageD> depths, colors;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string base = renders_dir + "/" + view_base_name(cams[i], static_cast<int>(i));
    depths.push_back(read_pfm(base + "_depth.pfm"));
    colors.push_back(read_ppm(base + "_color.ppm"));
  }

  FusionParams params;
  params.px_thresh = cfg.fusion_px_thresh;
  params.min_views = static_cast<int>(cfg.fusion_min_views);
  params.depth_rel_thresh = cfg.fusion_depth_rel_thresh;
  const FusedCloud cloud = fuse_depth_maps(depths, colors, cams, params);
  write_point_cloud_ply(out_path, cloud.points, cloud.colors);
  save_config(cfg, out_path + ".cfg");
  std::printf("done points=%zu out=%s\n", cloud.points.size(), out_path.c_str());
  return 0;
}

int cmd_eval(const std::string& renders_dir, const std::string& gt_dir,
             const std::string& cloud_a, const std::string& cloud_b) {
  if (!cloud_a.empty() || !cloud_b.empty()) {
    if (cloud_a.empty() || cloud_b.empty()) {
      throw ValidationError("chamfer evaluation needs both --cloud-a and --cloud-b");
    }
    const PointCloud a = read_point_cloud_ply(cloud_a);
    const PointCloud b = read_point_cloud_ply(cloud_b);
    const ChamferResult res = chamfer(a.points, b.points);
    std::printf("accuracy=%.9f completeness=%.9f chamfer_mean=%.9f\n", res.accuracy,
                res.completeness, res.mean);
    return 0;
  }
  if (renders_dir.empty() || gt_dir.empty()) {
    throw ValidationError("image evaluation needs --renders and --gt");
  }
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int count = 0;
  for (const auto& entry : fs::directory_iterator(renders_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() < 10 || name.substr(name.size() - 10) != "_color.ppm") continue;
    // ground-truth file: same stem without the _color suffix
    const std::string stem = name.substr(0, name.size() - 10);
    std::string gt_path = gt_dir + "/" + stem + ".ppm";
    if (!fs::exists(gt_path)) gt_path = gt_dir + "/" + name;
    if (!fs::exists(gt_path)) {
      throw ValidationError("no ground-truth image for '" + name + "' under " + gt_dir);
    }
    const ImageD img = read_ppm(entry.path().string());
    const ImageD ref = read_ppm(gt_path);
    psnr_sum += psnr(img, ref);
    ssim_sum += ssim(img, ref);
    ++count;
  }
  if (count == 0) throw ValidationError("no *_color.ppm renders found in " + renders_dir);
  std::printf("views=%d psnr=%.6f ssim=%.6f\n", count, psnr_sum / count, ssim_sum / count);
  return 0;
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& graph_out,
                const CommonOpts& opts) {
  const TrainConfig cfg = resolve_config(opts);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const TriangleSoup& soup = ck.soup;
  std::printf("count=%zu sh_degree=%d iteration=%lld split_threshold=%.6g\n", soup.count(),
              soup.sh_degree(), static_cast<long long>(ck.iteration),
              ck.split_size_threshold);
  if (soup.count() == 0) return 0;

  const auto histogram = [](const char* label, std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto q = [&](double f) {
      return values[static_cast<std::size_t>(f * (values.size() - 1))];
    };
    std::printf("%s min=%.5g p25=%.5g median=%.5g p75=%.5g max=%.5g\n", label, q(0.0),
                q(0.25), q(0.5), q(0.75), q(1.0));
  };

  std::vector<double> alphas, sigmas, scales, radii;
  for (std::size_t i = 0; i < soup.count(); ++i) {
    const ActivatedTriangle act = soup.activate(i);
    alphas.push_back(act.alpha);
    sigmas.push_back(act.sigma);
    scales.push_back(act.scale.mean());
    radii.push_back(soup.circumradius(i));
  }
  histogram("alpha", alphas);
  histogram("sigma", sigmas);
  histogram("scale", scales);
  histogram("circumradius", radii);

  GraphBuildParams params;
  params.tau = cfg.conn_tau;
  params.rho = cfg.conn_rho;
  params.search_radius_factor = cfg.conn_search_radius_factor;
  params.use_outward_vectors = cfg.conn_use_outward_vectors;
  const EdgeGraph graph = build_graph(soup, params, ck.iteration);
  std::printf("edges=%zu connections=%zu (%.1f%% of edges)\n", soup.count() * 3,
              graph.connections.size(),
              100.0 * graph.connections.size() / (soup.count() * 3));

  if (!graph_out.empty()) {
    std::vector<std::pair<Vec3, Vec3>> segments;
    segments.reserve(graph.connections.size());
    for (const EdgeConnection& conn : graph.connections) {
      segments.emplace_back(conn.a.midpoint, conn.b.midpoint);
    }
    write_polyline_obj(graph_out, segments);
    std::printf("graph_export=%s segments=%zu\n", graph_out.c_str(), segments.size());
  }
  return 0;
}

int cmd_synth(const std::string& scene_name, const std::string& out_dir, int views,
              int size, std::int64_t seed) {
  SyntheticScene scene;
  if (scene_name == "quad") {
    QuadSceneParams p;
    if (views > 0) p.views = views;
    if (size > 0) p.width = p.height = size;
    if (seed >= 0) p.rng_seed = static_cast<std::uint64_t>(seed);
    scene = make_quad_scene(p);
  } else if (scene_name == "two-plane") {
    TwoPlaneSceneParams p;
    if (views > 0) p.views = views;
    if (size > 0) p.width = p.height = size;
    if (seed >= 0) p.rng_seed = static_cast<std::uint64_t>(seed);
    scene = make_two_plane_scene(p);
  } else {
    throw ValidationError("unknown scene '" + scene_name + "' (quad, two-plane)");
  }
  save_fixture(out_dir, scene);
  std::printf("done scene=%s views=%zu seed_points=%zu extent=%.4f out=%s\n",
              scene_name.c_str(), scene.dataset.cameras.size(),
              scene.dataset.seed.points.size(), scene.scene_extent, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"triangle-soup scene optimization"};
  app.require_subcommand(1);

  CommonOpts train_opts, render_opts, fuse_opts, inspect_opts;
  std::string dataset_path, out_dir, checkpoint_path, views_path, depth_mode;
  std::string renders_dir, gt_dir, cloud_a, cloud_b, fuse_out, scene_name;
  double px_thresh = 0.0;
  std::int64_t min_views = 0, synth_seed = -1;
  int synth_views = 0, synth_size = 0;

  CLI::App* train = app.add_subcommand("train", "optimize a scene from a dataset");
  train->add_option("--dataset", dataset_path, "dataset directory (COLMAP text layout)")
      ->required();
  train->add_option("--out", out_dir, "output directory")->required();
  add_common(train, train_opts);

  CLI::App* render_cmd = app.add_subcommand("render", "render a checkpoint");
  render_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  render_cmd->add_option("--dataset", dataset_path, "dataset with the cameras to render");
  render_cmd->add_option("--views", views_path, "views.txt manifest as camera source");
  render_cmd->add_option("--out", out_dir, "output directory")->required();
  render_cmd->add_option("--depth-mode", depth_mode, "median | mean");
  add_common(render_cmd, render_opts);

  CLI::App* fuse = app.add_subcommand("fuse", "fuse rendered depth maps into a point cloud");
  fuse->add_option("--renders", renders_dir, "directory produced by render")->required();
  fuse->add_option("--out", fuse_out, "output .ply path")->required();
  fuse->add_option("--px-thresh", px_thresh, "reprojection error threshold, pixels");
  fuse->add_option("--min-views", min_views, "required consistent neighbor count");
  add_common(fuse, fuse_opts);

  CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM over images or chamfer over clouds");
  eval_cmd->add_option("--renders", renders_dir, "directory with *_color.ppm renders");
  eval_cmd->add_option("--gt", gt_dir, "directory with ground-truth .ppm images");
  eval_cmd->add_option("--cloud-a", cloud_a, "first point cloud (.ply)");
  eval_cmd->add_option("--cloud-b", cloud_b, "second point cloud (.ply)");

  CLI::App* inspect = app.add_subcommand("inspect", "print checkpoint statistics");
  inspect->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  std::string graph_out;
  inspect->add_option("--export-graph", graph_out,
                      "write edge connections as an OBJ polyline set");
  add_common(inspect, inspect_opts);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic fixture dataset");
  synth->add_option("--scene", scene_name, "quad | two-plane")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--views", synth_views, "view count");
  synth->add_option("--size", synth_size, "image width and height");
  synth->add_option("--seed", synth_seed, "fixture RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(dataset_path, out_dir, train_opts);
    if (render_cmd->parsed()) {
      return cmd_render(checkpoint_path, dataset_path, views_path, out_dir, depth_mode,
                        render_opts);
    }
    if (fuse->parsed()) return cmd_fuse(renders_dir, fuse_out, fuse_opts, px_thresh, min_views);
    if (eval_cmd->parsed()) return cmd_eval(renders_dir, gt_dir, cloud_a, cloud_b);
    if (inspect->parsed()) return cmd_inspect(checkpoint_path, graph_out, inspect_opts);
    if (synth->parsed()) {
      return cmd_synth(scene_name, out_dir, synth_views, synth_size, synth_seed);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 1;
}
