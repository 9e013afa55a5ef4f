// pcs: command-line front end for the simplification library.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
// Failures also print one JSON object on stderr:
//   {"error":{"kind":"data","code":"malformed","message":"..."}}

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcs/gradcheck_suite.hpp"
#include "pcs/patch_io.hpp"
#include "pcs/pcs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code(pcs::ErrorKind kind) {
    switch (kind) {
    case pcs::ErrorKind::usage: return 1;
    case pcs::ErrorKind::data: return 2;
    case pcs::ErrorKind::numerical: return 3;
    }
    return 2;
}

int report_error(std::string_view kind, std::string_view code, std::string_view message, int status) {
    const json j = {{"error", {{"kind", kind}, {"code", code}, {"message", message}}}};
    std::cerr << j.dump() << '\n';
    return status;
}

json read_json_file(const fs::path& path) {
    try {
        return json::parse(pcs::io_detail::read_file(path));
    } catch (const json::exception& e) {
        pcs::fail(pcs::ErrorKind::usage, "bad-config", path.string() + ": " + e.what());
    }
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
    fs::path out = p;
    out.replace_extension(suffix);
    return out;
}

void write_text(const fs::path& path, const std::string& text) { pcs::io_detail::write_file(path, text); }

/// Saliency is a length: it follows the coordinate scale.
std::optional<std::vector<double>> scaled_saliency(const pcs::PointCloud& c, double factor) {
    if (!c.has_saliency()) return std::nullopt;
    std::vector<double> s = *c.saliency();
    for (auto& v : s) v *= factor;
    return s;
}

pcs::TriangleMesh transformed(pcs::TriangleMesh mesh, const pcs::Point3& center, double radius) {
    for (auto& v : mesh.vertices) v = (v - center) / radius;
    return mesh;
}

std::vector<pcs::Point3> transformed(std::vector<pcs::Point3> pts, const pcs::Point3& center, double radius) {
    for (auto& v : pts) v = (v - center) / radius;
    return pts;
}

struct Options {
    std::size_t threads = 0;

    // shared
    std::string in, out;
    std::uint64_t seed = 0;
    std::size_t target = 0;

    std::size_t count = 0;                          // sample-mesh
    std::size_t k = 20;                             // saliency
    double h = 0.01;
    bool smooth = false;
    std::size_t patches = 120;                      // patch
    std::string patch_mode = "uniform";
    std::size_t n = 1024;
    std::string clean;
    std::string patch_dir, config, log, resume;     // train
    std::size_t checkpoint_every = 0;
    std::string data_dir;                           // train-saliency
    std::string ckpt, saliency_ckpt, mode = "uniform"; // simplify
    std::optional<double> temperature;
    std::size_t simplify_n = 0;
    std::string method = "fps";                     // baseline
    double amplitude = 0.0;                         // noise
    std::string gt_mesh, gt_cloud, points, recon_mesh; // metrics
    std::size_t w = 10000;
    bool normalize = false;
    bool full = false;                              // gradcheck
};

// ---------------------------------------------------------------- subcommands

int cmd_sample_mesh(const Options& o) {
    pcs::Rng rng(o.seed);
    const auto mesh = pcs::read_mesh(o.in);
    pcs::write_cloud(pcs::sample_mesh_surface(mesh, o.count, rng), o.out);
    return 0;
}

int cmd_saliency(const Options& o) {
    const auto cloud = pcs::read_cloud(o.in);
    const auto norm = pcs::normalize_to_unit_sphere(cloud);
    auto field = pcs::raw_saliency(norm.cloud, o.k);
    if (field.degenerate_neighborhoods)
        std::cerr << "warning: " << field.degenerate_neighborhoods << " collinear neighborhoods set to 0\n";
    if (o.smooth) field = pcs::smooth_saliency(norm.cloud, field, o.k, o.h);
    for (auto& v : field.values) v *= norm.radius;
    pcs::write_cloud(pcs::PointCloud(cloud.points(), std::move(field.values)), o.out);
    return 0;
}

int cmd_patch(const Options& o) {
    const auto cloud = pcs::read_cloud(o.in);
    const auto norm = pcs::normalize_to_unit_sphere(cloud);
    pcs::PointCloud work(norm.cloud.points(), scaled_saliency(cloud, 1.0 / norm.radius));
    std::optional<std::vector<pcs::Point3>> clean;
    if (!o.clean.empty()) {
        const auto c = pcs::read_cloud(o.clean);
        if (c.size() != cloud.size())
            pcs::fail(pcs::ErrorKind::usage, "clean-mismatch", "--clean cloud must align with --in point by point");
        clean = transformed(c.points(), norm.center, norm.radius);
    }
    pcs::Rng rng(o.seed);
    const auto mode = pcs::parse_patch_mode(o.patch_mode);
    const auto part = pcs::make_partition(work, o.patches, mode, rng);
    pcs::PatchSet set{mode, o.n, norm.center, norm.radius, {}};
    for (std::size_t id = 0; id < part.num_cells(); ++id) {
        pcs::Patch p = pcs::extract_patch_input(work, part, id, o.n, rng);
        if (clean) {
            p.target_points.emplace();
            for (const auto i : p.parent_indices) p.target_points->push_back((*clean)[i]);
        }
        set.patches.push_back(std::move(p));
    }
    pcs::write_patch_set(set, o.out);
    std::cout << set.patches.size() << " patches written to " << o.out << '\n';
    return 0;
}

int cmd_train(const Options& o) {
    const auto set = pcs::read_patch_set(o.patch_dir);
    const json cfg_json = o.config.empty() ? json::object() : read_json_file(o.config);
    const auto cfg = pcs::parse_train_config(cfg_json);
    const fs::path log_path = o.log.empty() ? with_suffix(o.out, ".csv") : fs::path(o.log);
    auto trainer = o.resume.empty() ? pcs::PcsTrainer(cfg, set.patches)
                                    : pcs::PcsTrainer::resume(cfg, set.patches, pcs::load_checkpoint(o.resume));
    while (!trainer.done()) {
        const auto e = trainer.run_epoch();
        std::printf("epoch %zu  L=%.6g  L_r=%.6g  L_cov=%.6g  L_rep=%.6g  t=%.4g\n", e.epoch, e.total, e.reconstruction,
                    e.coverage, e.repulsion, e.temperature);
        if (o.checkpoint_every && trainer.epoch() % o.checkpoint_every == 0 && !trainer.done()) {
            pcs::save_checkpoint(trainer.checkpoint(), o.out);
            write_text(log_path, pcs::format_train_log(trainer.log()));
        }
    }
    pcs::save_checkpoint(trainer.checkpoint(), o.out);
    write_text(log_path, pcs::format_train_log(trainer.log()));
    return 0;
}

int cmd_train_saliency(const Options& o) {
    const auto set = pcs::read_patch_set(o.data_dir);
    const json cfg_json = o.config.empty() ? json::object() : read_json_file(o.config);
    const auto cfg = pcs::parse_saliency_train_config(cfg_json);
    const fs::path log_path = o.log.empty() ? with_suffix(o.out, ".csv") : fs::path(o.log);
    pcs::SaliencyTrainer trainer(cfg, set.patches);
    while (!trainer.done()) {
        const auto e = trainer.run_epoch();
        std::printf("epoch %zu  mse=%.6g\n", e.epoch, e.total);
    }
    pcs::save_checkpoint(trainer.checkpoint(), o.out);
    write_text(log_path, pcs::format_saliency_log(trainer.log()));
    return 0;
}

int cmd_simplify(const Options& o) {
    const auto cloud = pcs::read_cloud(o.in);
    const auto ckpt = pcs::load_checkpoint(o.ckpt);
    const auto params = pcs::pcs_params_from_checkpoint(pcs::train_detail::params_only(ckpt));
    pcs::SimplifyOptions opt;
    opt.threads = o.threads;
    opt.patch_size = o.simplify_n;
    opt.temperature = o.temperature.value_or(pcs::TrainConfig{}.t_end);
    if (!o.temperature && ckpt.metadata.contains("training"))
        opt.temperature = ckpt.metadata["training"]["config"].value("t_end", opt.temperature);
    std::optional<pcs::SaliencyNetParams> sal;
    if (!o.saliency_ckpt.empty()) {
        sal = pcs::saliency_params_from_checkpoint(pcs::train_detail::params_only(pcs::load_checkpoint(o.saliency_ckpt)));
        opt.saliency_net = &*sal;
    }
    pcs::Rng rng(o.seed);
    const auto out = pcs::simplify_cloud(cloud, params, pcs::parse_simplify_mode(o.mode), o.target, opt, rng);
    pcs::write_cloud(out, o.out);
    return 0;
}

int cmd_baseline(const Options& o) {
    pcs::Rng rng(o.seed);
    const auto cloud = pcs::read_cloud(o.in);
    pcs::write_cloud(pcs::baseline_select(cloud, o.target, pcs::parse_baseline_method(o.method), rng), o.out);
    return 0;
}

int cmd_noise(const Options& o) {
    pcs::Rng rng(o.seed);
    pcs::write_cloud(pcs::add_gaussian_noise(pcs::read_cloud(o.in), o.amplitude, rng), o.out);
    return 0;
}

int cmd_metrics(const Options& o) {
    pcs::Rng rng(o.seed);
    std::optional<pcs::TriangleMesh> gt_mesh, recon;
    std::vector<pcs::Point3> gt;
    if (!o.gt_mesh.empty()) {
        gt_mesh = pcs::read_mesh(o.gt_mesh);
        gt = pcs::sample_mesh_surface(*gt_mesh, o.w, rng).points();
    } else {
        gt = pcs::read_cloud(o.gt_cloud).points();
    }
    std::vector<pcs::Point3> candidate = pcs::read_cloud(o.points).points();
    if (!o.recon_mesh.empty()) recon = pcs::read_mesh(o.recon_mesh);

    if (o.normalize) {
        const auto c = pcs::centroid(gt);
        const double r = pcs::bounding_radius(gt, c);
        if (!(r > 0.0)) pcs::fail(pcs::ErrorKind::data, "degenerate-extent", "ground truth has zero extent");
        gt = transformed(std::move(gt), c, r);
        candidate = transformed(std::move(candidate), c, r);
        if (gt_mesh) gt_mesh = transformed(std::move(*gt_mesh), c, r);
        if (recon) recon = transformed(std::move(*recon), c, r);
    }

    // Fidelity compares dense samples of the two surfaces; without a
    // reconstruction the candidate points stand in for it.
    std::vector<pcs::Point3> other = candidate;
    if (recon) {
        pcs::Rng recon_rng = rng.split(1);
        other = pcs::sample_mesh_surface(*recon, o.w, recon_rng).points();
    }
    pcs::MetricsReport report;
    report.d_c = pcs::chamfer(gt, other, o.threads);
    report.d_h = pcs::hausdorff(gt, other, o.threads);
    if (gt_mesh) report.p2f = pcs::point_to_face(candidate, *gt_mesh, o.threads);
    if (recon) report.quality = pcs::triangle_quality(*recon);

    std::cout << pcs::format_metrics_table(report);
    if (!o.out.empty()) write_text(o.out, pcs::to_json(report).dump(2) + "\n");
    return 0;
}

int cmd_gradcheck(const Options& o) {
    pcs::Rng rng(o.seed);
    bool ok = true;
    auto line = [&](const std::string& name, const pcs::GradCheckReport& r) {
        std::printf("%-34s %s  max_rel_error=%.3e  entries=%zu\n", name.c_str(), r.passed ? "ok  " : "FAIL",
                    r.max_rel_error, r.entries_checked);
        ok = ok && r.passed;
    };
    for (const auto& c : pcs::check_primitives(rng)) line("primitive " + c.name, c.report);
    for (const auto& c : pcs::check_losses(rng)) line("loss " + c.name, c.report);
    if (o.full) {
        const auto p = pcs::check_pipeline(o.seed);
        line("pipeline n=16 m=4 k=8", p.report);
        if (p.failing)
            std::printf("  %zu entries over tolerance: %zu at activation kinks, %zu at the double-precision floor\n",
                        p.failing, p.kink, p.floor);
    }
    if (!ok) return report_error("numerical", "gradcheck-failed", "at least one gradient check exceeded tolerance", 3);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point cloud simplification with a learned sampling matrix"};
    app.set_help_flag("--help", "print this help and exit"); // no -h: saliency takes --h
    app.require_subcommand(1);
    app.fallthrough();
    Options o;

    auto in_out = [&](CLI::App* s) {
        s->add_option("--in", o.in, "input file")->required();
        s->add_option("--out", o.out, "output file")->required();
    };
    auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "random seed")->capture_default_str(); };

    auto* sample = app.add_subcommand("sample-mesh", "area-weighted uniform samples on a mesh surface");
    in_out(sample);
    sample->add_option("--count", o.count, "number of samples")->required();
    seed(sample);

    auto* sal = app.add_subcommand("saliency", "per-point geometric saliency as a 4th column");
    in_out(sal);
    sal->add_option("--k", o.k, "neighbors for plane fit and smoothing")->capture_default_str();
    sal->add_option("--h", o.h, "Gaussian bandwidth in unit-sphere coordinates")->capture_default_str();
    sal->add_flag("--smooth", o.smooth, "apply Gaussian smoothing");

    auto* patch = app.add_subcommand("patch", "cut a cloud into fixed-size training patches");
    patch->add_option("--in", o.in, "input cloud")->required();
    patch->add_option("--out-dir", o.out, "output directory")->required();
    patch->add_option("--patches", o.patches, "number of patches")->capture_default_str();
    patch->add_option("--mode", o.patch_mode, "uniform | adaptive")->capture_default_str();
    patch->add_option("--n", o.n, "points per patch")->capture_default_str();
    patch->add_option("--clean", o.clean, "noise-free cloud aligned with --in, stored as loss targets");
    seed(patch);

    auto* train = app.add_subcommand("train", "train the simplification network");
    train->add_option("--patch-dir", o.patch_dir, "directory written by `patch`")->required();
    train->add_option("--config", o.config, "JSON training config");
    train->add_option("--out", o.out, "checkpoint path")->required();
    train->add_option("--log", o.log, "CSV log path (default: checkpoint path with .csv)");
    train->add_option("--resume", o.resume, "continue from this checkpoint");
    train->add_option("--checkpoint-every", o.checkpoint_every, "also save every N epochs (0 = only at the end)")
        ->capture_default_str();

    auto* train_sal = app.add_subcommand("train-saliency", "train the saliency regressor");
    train_sal->add_option("--data-dir", o.data_dir, "patch directory whose patches carry saliency")->required();
    train_sal->add_option("--config", o.config, "JSON training config");
    train_sal->add_option("--out", o.out, "checkpoint path")->required();
    train_sal->add_option("--log", o.log, "CSV log path (default: checkpoint path with .csv)");

    auto* simp = app.add_subcommand("simplify", "simplify a cloud with a trained network");
    in_out(simp);
    simp->add_option("--ckpt", o.ckpt, "network checkpoint")->required();
    simp->add_option("--target", o.target, "output point count")->required();
    simp->add_option("--mode", o.mode, "uniform | adaptive | baseline")->capture_default_str();
    simp->add_option("--saliency-ckpt", o.saliency_ckpt, "saliency network for adaptive mode");
    simp->add_option("--temperature", o.temperature, "selection temperature (default: the training schedule's final value)");
    simp->add_option("--n", o.simplify_n, "points per patch (default: training patch size)");
    seed(simp);

    auto* base = app.add_subcommand("baseline", "FPS or random subset");
    in_out(base);
    base->add_option("--method", o.method, "fps | random")->capture_default_str();
    base->add_option("--target", o.target, "output point count")->required();
    seed(base);

    auto* noise = app.add_subcommand("noise", "add isotropic Gaussian noise");
    in_out(noise);
    noise->add_option("--amplitude-pct", o.amplitude, "sigma as a percentage of the bounding-sphere radius")->required();
    seed(noise);

    auto* met = app.add_subcommand("metrics", "fidelity and mesh-quality report");
    auto* gm = met->add_option("--gt-mesh", o.gt_mesh, "ground-truth mesh (sampled with --w points)");
    auto* gc = met->add_option("--gt-cloud", o.gt_cloud, "ground-truth dense cloud, used as is");
    gm->excludes(gc);
    met->add_option("--points", o.points, "candidate (simplified) cloud")->required();
    met->add_option("--recon-mesh", o.recon_mesh, "mesh reconstructed from the candidate");
    met->add_option("--w", o.w, "dense sample count per surface")->capture_default_str();
    met->add_flag("--normalize", o.normalize, "evaluate in the ground truth's unit-sphere frame");
    met->add_option("--out", o.out, "JSON report path");
    seed(met);

    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    grad->add_flag("--full", o.full, "also check the full patch pipeline");
    seed(grad);

    for (auto* s : app.get_subcommands({}))
        s->add_option("--threads", o.threads, "worker threads; 0 = all cores, 1 = bit-reproducible across machines")
            ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", "bad-arguments", e.what(), 1);
    }
    if (*met && o.gt_mesh.empty() && o.gt_cloud.empty())
        return report_error("usage", "bad-arguments", "metrics needs --gt-mesh or --gt-cloud", 1);

    try {
        if (*sample) return cmd_sample_mesh(o);
        if (*sal) return cmd_saliency(o);
        if (*patch) return cmd_patch(o);
        if (*train) return cmd_train(o);
        if (*train_sal) return cmd_train_saliency(o);
        if (*simp) return cmd_simplify(o);
        if (*base) return cmd_baseline(o);
        if (*noise) return cmd_noise(o);
        if (*met) return cmd_metrics(o);
        if (*grad) return cmd_gradcheck(o);
    } catch (const pcs::Error& e) {
        return report_error(pcs::to_string(e.kind()), e.code(), e.what(), exit_code(e.kind()));
    } catch (const std::exception& e) {
        return report_error("data", "internal", e.what(), 2);
    }
    return 1;
}
