// Command-line driver for the multiscale plate pipeline.
//
//   platems cell    --config run.cfg        cell functions + homogenized tensor
//   platems macro   --config run.cfg        homogenized solve + derivative recovery
//   platems run     --config run.cfg        full pipeline (DNS unless --no-dns)
//   platems dns     --config run.cfg        heterogeneous reference solve only
//   platems compare --config run.cfg        pipeline with DNS + error table, always
//   platems sweep   --config run.cfg        epsilon sweep from the sweep_eps list
//
// Common flags: --config <path> (required), --out <dir> (overrides out_dir),
// --threads <n>, --no-dns, --export-vtk.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "platems/config.hpp"
#include "platems/macro.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"
#include "platems/multiscale.hpp"
#include "platems/pipeline.hpp"
#include "platems/vtk.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;  // empty = keep the config's out_dir
  int threads = 1;
  bool no_dns = false;
  bool export_vtk = false;
};

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--threads", args.threads, "worker threads (stages run sequentially)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-dns", args.no_dns, "skip the DNS reference and error table");
  cmd->add_flag("--export-vtk", args.export_vtk, "write field data as legacy ASCII VTK");
}

platems::RunConfig load_config(const CliArgs& args) {
  platems::RunConfig cfg = platems::parse_config_file(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_tensor(const platems::HomogenizedTensor& hom) {
  std::fputs(platems::format_tensor_record(hom).c_str(), stdout);
}

int cmd_cell(const CliArgs& args) {
  platems::RunConfig cfg = load_config(args);
  const auto t0 = std::chrono::steady_clock::now();
  platems::TriMesh mesh =
      platems::build_structured_mesh(cfg.cell_n(), cfg.cell_n(), 0.0, 0.0, 1.0, 1.0);
  platems::assign_materials(mesh, cfg.raster);
  platems::MorleySpace space(mesh);
  bool hit = false;
  const platems::CellStage stage = platems::cell_stage_cached(cfg, space, "", &hit);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string tensor_path = cfg.out_dir + "/homogenized_tensor.txt";
  platems::detail::write_text_file(tensor_path, platems::format_tensor_record(stage.hom));
  print_tensor(stage.hom);
  std::printf("cell mesh %dx%d, %d dofs, %s, %.3f s\n", cfg.cell_n(), cfg.cell_n(),
              space.n_dofs(), hit ? "cache hit" : "solved", seconds_since(t0));
  std::printf("wrote %s\n", tensor_path.c_str());
  return 0;
}

int cmd_macro(const CliArgs& args) {
  platems::RunConfig cfg = load_config(args);
  const auto t0 = std::chrono::steady_clock::now();
  platems::TriMesh cell_mesh =
      platems::build_structured_mesh(cfg.cell_n(), cfg.cell_n(), 0.0, 0.0, 1.0, 1.0);
  platems::assign_materials(cell_mesh, cfg.raster);
  platems::MorleySpace cell_space(cell_mesh);
  bool hit = false;
  const platems::CellStage stage = platems::cell_stage_cached(cfg, cell_space, "", &hit);

  platems::TriMesh mesh =
      platems::build_structured_mesh(cfg.macro_n, cfg.macro_n, 0.0, 0.0, 1.0, 1.0);
  platems::MorleySpace space(mesh);
  const platems::MacroSolution sol =
      platems::solve_macro(space, stage.hom.D, cfg.load, cfg.solver_tol);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string tensor_path = cfg.out_dir + "/homogenized_tensor.txt";
  platems::detail::write_text_file(tensor_path, platems::format_tensor_record(stage.hom));
  print_tensor(stage.hom);
  const Eigen::Vector2d center(0.5, 0.5);
  std::printf("macro mesh %dx%d, %d dofs, center deflection %.6e, %.3f s\n", cfg.macro_n,
              cfg.macro_n, space.n_dofs(), platems::eval_value(space, sol.dofs, center),
              seconds_since(t0));
  if (args.export_vtk) {
    const int nv = mesh.n_vertices();
    Eigen::VectorXd w0(nv), gm(nv);
    for (int v = 0; v < nv; ++v) {
      w0[v] = sol.dofs[v];
      gm[v] = platems::eval_gradient(space, sol.dofs, mesh.vertices[v]).norm();
    }
    const std::string path = cfg.out_dir + "/macro.vtk";
    platems::write_vtk(path, mesh, {{"w0", std::move(w0)}, {"w0_grad_mag", std::move(gm)}});
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_dns(const CliArgs& args) {
  platems::RunConfig cfg = load_config(args);
  const auto t0 = std::chrono::steady_clock::now();
  platems::TriMesh mesh =
      platems::build_structured_mesh(cfg.dns_n(), cfg.dns_n(), 0.0, 0.0, 1.0, 1.0);
  platems::assign_materials(mesh, cfg.raster, cfg.epsilon());
  platems::MorleySpace space(mesh);
  const Eigen::VectorXd dofs = platems::solve_dns(
      space, platems::CoefficientField{cfg.materials}, cfg.load, cfg.solver_tol);
  std::printf("dns mesh %dx%d, %d dofs, center deflection %.6e, %.3f s\n", cfg.dns_n(),
              cfg.dns_n(), space.n_dofs(),
              platems::eval_value(space, dofs, Eigen::Vector2d(0.5, 0.5)),
              seconds_since(t0));
  if (args.export_vtk) {
    std::filesystem::create_directories(cfg.out_dir);
    const int nv = mesh.n_vertices();
    Eigen::VectorXd w(nv), gm(nv);
    for (int v = 0; v < nv; ++v) {
      w[v] = dofs[v];
      gm[v] = platems::eval_gradient(space, dofs, mesh.vertices[v]).norm();
    }
    const std::string path = cfg.out_dir + "/dns.vtk";
    platems::write_vtk(path, mesh, {{"dns", std::move(w)}, {"dns_grad_mag", std::move(gm)}});
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_run(const CliArgs& args, bool force_dns) {
  platems::RunConfig cfg = load_config(args);
  platems::RunOptions opt;
  opt.with_dns = force_dns || !args.no_dns;
  opt.export_vtk = args.export_vtk;
  opt.threads = args.threads;
  const platems::PipelineResult res = platems::run_pipeline(cfg, opt);
  print_tensor(res.hom);
  std::fputs(platems::format_report_csv(res.rows).c_str(), stdout);
  std::printf("cell %.3f s (%s), foms total %.3f s", res.cell_seconds,
              res.cell_cache_hit ? "cache hit" : "solved", res.foms_seconds);
  if (opt.with_dns)
    std::printf(", dns %.3f s, foms/dns %.2f", res.dns_seconds,
                res.foms_seconds / res.dns_seconds);
  std::printf("\nwrote %s\n", res.report_path.c_str());
  if (!res.vtk_path.empty()) std::printf("wrote %s\n", res.vtk_path.c_str());
  return 0;
}

int cmd_sweep(const CliArgs& args) {
  platems::RunConfig cfg = load_config(args);
  platems::RunOptions opt;
  opt.export_vtk = args.export_vtk;
  opt.threads = args.threads;
  const platems::SweepResult sw = platems::sweep_epsilon(cfg, opt);
  std::fputs(platems::format_sweep_csv(sw.rows).c_str(), stdout);
  std::printf("wrote %s\n", sw.table_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiscale solver for bending of plates with periodic microstructure"};
  app.require_subcommand(1);
  CliArgs args;

  CLI::App* cell = app.add_subcommand("cell", "solve the unit-cell problems");
  CLI::App* macro = app.add_subcommand("macro", "homogenized solve + derivative recovery");
  CLI::App* run = app.add_subcommand("run", "full pipeline");
  CLI::App* dns = app.add_subcommand("dns", "direct heterogeneous reference solve");
  CLI::App* compare = app.add_subcommand("compare", "pipeline + DNS error table");
  CLI::App* sweep = app.add_subcommand("sweep", "pipeline per epsilon in sweep_eps");
  for (CLI::App* cmd : {cell, macro, run, dns, compare, sweep}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cell->parsed()) return cmd_cell(args);
    if (macro->parsed()) return cmd_macro(args);
    if (run->parsed()) return cmd_run(args, false);
    if (dns->parsed()) return cmd_dns(args);
    if (compare->parsed()) return cmd_run(args, true);
    if (sweep->parsed()) return cmd_sweep(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
