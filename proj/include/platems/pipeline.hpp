#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "platems/cell.hpp"
#include "platems/config.hpp"
#include "platems/macro.hpp"
#include "platems/material.hpp"
#include "platems/mesh.hpp"
#include "platems/morley.hpp"
#include "platems/multiscale.hpp"
#include "platems/vtk.hpp"

namespace platems {

// Any failure inside the orchestrator carries the stage it happened in.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

template <class F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

struct RunOptions {
  bool with_dns = true;
  bool export_vtk = false;
  int threads = 1;  // accepted for interface stability; stages run single-threaded
  std::string cache_dir;  // cell-cache location; empty = the run's out_dir
};

struct ReportRow {
  std::string kind;
  double rel_l2 = -1.0;  // negative = not computed (no DNS reference)
  double rel_h1 = -1.0;
  long dofs = 0;
  double seconds = 0.0;
};

struct PipelineResult {
  HomogenizedTensor hom;
  std::vector<ReportRow> rows;  // e0, e2, e3, e4 and, with DNS, a dns row
  double broken_h2_e4 = -1.0;   // relative, vs DNS
  double cell_seconds = 0.0;
  double foms_seconds = 0.0;  // cell + homogenized solve + recovery + reconstruction
  double dns_seconds = 0.0;
  bool cell_cache_hit = false;
  std::string report_path;
  std::string tensor_path;
  std::string vtk_path;
};

// ---------------------------------------------------------------------------
// Cell-stage cache. Key: FNV-1a of the canonical cell fingerprint. The
// blob stores every cell DOF vector plus the homogenization record, so a
// cache hit reproduces the solve bitwise.

namespace detail {

constexpr char kCellCacheMagic[8] = {'P', 'L', 'M', 'S', 'C', 'E', 'L', '1'};

inline void write_vec(std::ofstream& out, const Eigen::VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double)) * v.size());
}

inline bool read_vec(std::ifstream& in, Eigen::VectorXd& v, int64_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double)) * n);
  return static_cast<bool>(in);
}

inline std::string cell_cache_path(const RunConfig& cfg, const std::string& cache_dir) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cell_stage_fingerprint(cfg))));
  return (cache_dir.empty() ? cfg.out_dir : cache_dir) + "/cell_" + hex + ".bin";
}

inline bool load_cell_cache(const std::string& path, int64_t n_dofs, CellStage& stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kCellCacheMagic)) return false;
  int64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n != n_dofs) return false;
  for (auto& v : stage.fn.n2)
    if (!read_vec(in, v, n)) return false;
  for (auto& v : stage.fn.n3)
    if (!read_vec(in, v, n)) return false;
  for (auto& v : stage.fn.n4)
    if (!read_vec(in, v, n)) return false;
  in.read(reinterpret_cast<char*>(stage.hom.raw.data()), sizeof(double) * 16);
  in.read(reinterpret_cast<char*>(&stage.hom.asymmetry), sizeof(double));
  in.read(reinterpret_cast<char*>(stage.hom.D.c.data()), sizeof(double) * 6);
  return static_cast<bool>(in);
}

inline void store_cell_cache(const std::string& path, const CellStage& stage) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cell cache '" + path + "'");
  out.write(kCellCacheMagic, 8);
  const int64_t n = stage.fn.n2[0].size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const auto& v : stage.fn.n2) write_vec(out, v);
  for (const auto& v : stage.fn.n3) write_vec(out, v);
  for (const auto& v : stage.fn.n4) write_vec(out, v);
  out.write(reinterpret_cast<const char*>(stage.hom.raw.data()), sizeof(double) * 16);
  out.write(reinterpret_cast<const char*>(&stage.hom.asymmetry), sizeof(double));
  out.write(reinterpret_cast<const char*>(stage.hom.D.c.data()), sizeof(double) * 6);
  if (!out) throw std::runtime_error("write to cell cache '" + path + "' failed");
}

}  // namespace detail

// Solve (or reload) the cell stage for a pre-built unit-cell space.
inline CellStage cell_stage_cached(const RunConfig& cfg, const MorleySpace& space,
                                   const std::string& cache_dir = std::string(),
                                   bool* cache_hit = nullptr) {
  const std::string path = detail::cell_cache_path(cfg, cache_dir);
  CellStage stage;
  if (detail::load_cell_cache(path, space.n_dofs(), stage)) {
    if (cache_hit) *cache_hit = true;
    return stage;
  }
  if (cache_hit) *cache_hit = false;
  stage = solve_cell_stage(space, CoefficientField{cfg.materials}, cfg.solver_tol);
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  detail::store_cell_cache(path, stage);
  return stage;
}

// ---------------------------------------------------------------------------
// Artifact writers.

inline std::string format_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "kind,rel_L2,rel_H1semi,dofs,seconds\n";
  for (const ReportRow& r : rows) {
    os << r.kind << ',';
    if (r.rel_l2 < 0.0) {
      os << "n/a,n/a,";
    } else {
      char buf[80];
      std::snprintf(buf, sizeof buf, "%.12e,%.12e,", r.rel_l2, r.rel_h1);
      os << buf;
    }
    char tail[64];
    std::snprintf(tail, sizeof tail, "%ld,%.3f\n", r.dofs, r.seconds);
    os << tail;
  }
  return os.str();
}

inline std::string format_tensor_record(const HomogenizedTensor& hom) {
  const char* names[6] = {"D1111", "D1122", "D1112", "D2212", "D1212", "D2222"};
  std::ostringstream os;
  for (int i = 0; i < 6; ++i) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%s %.17e\n", names[i], hom.D.c[static_cast<size_t>(i)]);
    os << buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "asymmetry %.3e\n", hom.asymmetry);
  os << buf;
  return os.str();
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full pipeline: cell functions and homogenized tensor, homogenized solve
// with derivative recovery, optional DNS plus error table, artifact export.

inline PipelineResult run_pipeline(const RunConfig& cfg, const RunOptions& opt = {}) {
  PipelineResult res;
  detail::run_stage("setup", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    return 0;
  });

  // Cell stage: unit-cell mesh through the fourth-order cell functions.
  auto t0 = std::chrono::steady_clock::now();
  TriMesh cell_mesh = build_structured_mesh(cfg.cell_n(), cfg.cell_n(), 0.0, 0.0, 1.0, 1.0);
  detail::run_stage("cell", [&] {
    assign_materials(cell_mesh, cfg.raster);
    return 0;
  });
  MorleySpace cell_space(cell_mesh);
  CellStage stage = detail::run_stage("cell", [&] {
    return cell_stage_cached(cfg, cell_space, opt.cache_dir, &res.cell_cache_hit);
  });
  res.hom = stage.hom;
  res.cell_seconds = detail::seconds_since(t0);

  // Macro stage: homogenized solve plus derivative recovery.
  auto t1 = std::chrono::steady_clock::now();
  TriMesh macro_mesh = build_structured_mesh(cfg.macro_n, cfg.macro_n, 0.0, 0.0, 1.0, 1.0);
  MorleySpace macro_space(macro_mesh);
  std::function<double(const Eigen::Vector2d&)> g1_fn;
  std::function<double(const Eigen::Vector2d&, const Eigen::Vector2d&)> g2_fn;
  if (cfg.g1 != 0.0) g1_fn = [v = cfg.g1](const Eigen::Vector2d&) { return v; };
  if (cfg.g2 != 0.0)
    g2_fn = [v = cfg.g2](const Eigen::Vector2d&, const Eigen::Vector2d&) { return v; };
  MacroSolution macro = detail::run_stage("macro", [&] {
    MacroSolution sol;
    sol.dofs = solve_clamped_plate(
        macro_space, constant_coefficient(stage.hom.D),
        [q = cfg.load](const Eigen::Vector2d&, int) { return q; }, g1_fn, g2_fn,
        cfg.solver_tol);
    sol.deriv = recover_derivatives(macro_space, sol.dofs);
    return sol;
  });
  const double macro_seconds = detail::seconds_since(t1);

  res.tensor_path = cfg.out_dir + "/homogenized_tensor.txt";
  detail::run_stage("export", [&] {
    detail::write_text_file(res.tensor_path, format_tensor_record(res.hom));
    return 0;
  });

  // Reconstruction fields at orders 0, 2, 3, 4.
  std::vector<MultiscaleField> fields;
  fields.reserve(4);
  detail::run_stage("reconstruct", [&] {
    fields.emplace_back(macro_space, macro.dofs, macro.deriv, 0);
    for (int k = 2; k <= 4; ++k)
      fields.emplace_back(macro_space, macro.dofs, macro.deriv, cell_space, stage.fn,
                          cfg.epsilon(), k);
    return 0;
  });

  const char* kinds[4] = {"e0", "e2", "e3", "e4"};
  res.rows.resize(4);
  for (size_t i = 0; i < 4; ++i) {
    res.rows[i].kind = kinds[i];
    res.rows[i].dofs = macro_space.n_dofs();
  }
  res.rows[0].seconds = macro_seconds;
  double sample_seconds = 0.0;  // field evaluation during error integration

  // DNS reference and error norms.
  if (opt.with_dns) {
    auto t2 = std::chrono::steady_clock::now();
    TriMesh dns_mesh = build_structured_mesh(cfg.dns_n(), cfg.dns_n(), 0.0, 0.0, 1.0, 1.0);
    detail::run_stage("dns", [&] {
      assign_materials(dns_mesh, cfg.raster, cfg.epsilon());
      return 0;
    });
    MorleySpace dns_space(dns_mesh);
    const Eigen::VectorXd dns = detail::run_stage("dns", [&] {
      return solve_clamped_plate(
          dns_space, CoefficientField{cfg.materials},
          [q = cfg.load](const Eigen::Vector2d&, int) { return q; }, g1_fn, g2_fn,
          cfg.solver_tol);
    });
    res.dns_seconds = detail::seconds_since(t2);

    detail::run_stage("errors", [&] {
      for (size_t i = 0; i < 4; ++i) {
        auto te = std::chrono::steady_clock::now();
        const ErrorPair e = error_vs_reference(fields[i], dns_space, dns);
        res.rows[i].rel_l2 = e.rel_l2;
        res.rows[i].rel_h1 = e.rel_h1;
        const double dt = detail::seconds_since(te);
        res.rows[i].seconds += dt;
        if (i > 0) sample_seconds += dt;
      }
      res.broken_h2_e4 = broken_h2_vs_reference(fields[3], dns_space, dns);
      return 0;
    });

    ReportRow dns_row;
    dns_row.kind = "dns";
    dns_row.rel_l2 = 0.0;
    dns_row.rel_h1 = 0.0;
    dns_row.dofs = dns_space.n_dofs();
    dns_row.seconds = res.dns_seconds;
    res.rows.push_back(dns_row);

    if (opt.export_vtk) {
      res.vtk_path = cfg.out_dir + "/fields.vtk";
      detail::run_stage("export", [&] {
        const TriMesh& m = dns_space.mesh();
        const int nv = m.n_vertices();
        const char* names[4] = {"w0", "w2eps", "w3eps", "w4eps"};
        std::vector<std::pair<std::string, Eigen::VectorXd>> pf;
        for (size_t f = 0; f < 4; ++f) {
          Eigen::VectorXd val(nv), gm(nv);
          for (int v = 0; v < nv; ++v) {
            const FieldSample s = sample(fields[f], m.vertices[static_cast<size_t>(v)]);
            val[v] = s.value;
            gm[v] = s.gradient.norm();
          }
          pf.emplace_back(names[f], std::move(val));
          pf.emplace_back(std::string(names[f]) + "_grad_mag", std::move(gm));
        }
        Eigen::VectorXd dval(nv), dgm(nv);
        for (int v = 0; v < nv; ++v) {
          dval[v] = dns[v];  // vertex DOFs lead the numbering
          dgm[v] = eval_gradient(dns_space, dns, m.vertices[static_cast<size_t>(v)]).norm();
        }
        pf.emplace_back("dns", std::move(dval));
        pf.emplace_back("dns_grad_mag", std::move(dgm));
        write_vtk(res.vtk_path, m, pf);
        return 0;
      });
    }
  } else if (opt.export_vtk) {
    res.vtk_path = cfg.out_dir + "/fields.vtk";
    detail::run_stage("export", [&] {
      const TriMesh& m = macro_space.mesh();
      const int nv = m.n_vertices();
      Eigen::VectorXd val(nv), gm(nv);
      for (int v = 0; v < nv; ++v) {
        const FieldSample s = sample(fields[3], m.vertices[static_cast<size_t>(v)]);
        val[v] = s.value;
        gm[v] = s.gradient.norm();
      }
      write_vtk(res.vtk_path, m,
                {{"w4eps", std::move(val)}, {"w4eps_grad_mag", std::move(gm)}});
      return 0;
    });
  }

  res.foms_seconds = res.cell_seconds + macro_seconds + sample_seconds;

  res.report_path = cfg.out_dir + "/report.csv";
  detail::run_stage("export", [&] {
    detail::write_text_file(res.report_path, format_report_csv(res.rows));
    return 0;
  });
  return res;
}

// ---------------------------------------------------------------------------
// Epsilon sweep: same raster, materials, and macro/DNS meshes; one full
// pipeline run per epsilon, plus log2 slopes between consecutive rows.
// The cell stage does not depend on epsilon, so all runs share one cache
// entry in the sweep's root output directory.

struct SweepRow {
  int eps_den = 0;
  double rel_l2 = 0.0;
  double rel_h1 = 0.0;
  double rel_h2 = 0.0;  // broken, element-wise Hessian difference
  bool has_slope = false;
  double slope_l2 = 0.0;
  double slope_h1 = 0.0;
  double slope_h2 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string table_path;
};

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "eps,rel_L2,rel_H1semi,rel_brokenH2,slope_L2,slope_H1semi,slope_brokenH2\n";
  for (const SweepRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "1/%d,%.12e,%.12e,%.12e", r.eps_den, r.rel_l2, r.rel_h1,
                  r.rel_h2);
    os << buf;
    if (!r.has_slope) {
      os << ",n/a,n/a,n/a\n";
    } else {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f\n", r.slope_l2, r.slope_h1,
                    r.slope_h2);
      os << buf;
    }
  }
  return os.str();
}

inline SweepResult sweep_epsilon(const RunConfig& cfg, const RunOptions& opt = {}) {
  if (cfg.sweep_eps.empty()) throw StageError("sweep", "config has no sweep_eps list");
  SweepResult sw;
  for (int den : cfg.sweep_eps) {
    RunConfig run_cfg = cfg;
    run_cfg.eps_den = den;
    run_cfg.out_dir = cfg.out_dir + "/eps_1_over_" + std::to_string(den);
    RunOptions run_opt = opt;
    run_opt.with_dns = true;  // the sweep is meaningless without the reference
    run_opt.cache_dir = opt.cache_dir.empty() ? cfg.out_dir : opt.cache_dir;
    const PipelineResult r = run_pipeline(run_cfg, run_opt);
    SweepRow row;
    row.eps_den = den;
    row.rel_l2 = r.rows[3].rel_l2;
    row.rel_h1 = r.rows[3].rel_h1;
    row.rel_h2 = r.broken_h2_e4;
    sw.rows.push_back(row);
  }
  // Slope of error vs epsilon between consecutive rows; errors at the
  // solver floor carry no rate information.
  for (size_t i = 1; i < sw.rows.size(); ++i) {
    SweepRow& cur = sw.rows[i];
    const SweepRow& prev = sw.rows[i - 1];
    const double deps = std::log2(static_cast<double>(cur.eps_den) / prev.eps_den);
    auto slope = [&](double ep, double ec) { return std::log2(ep / ec) / deps; };
    if (prev.rel_h2 > 1e-8 && cur.rel_h2 > 1e-8 && deps != 0.0) {
      cur.has_slope = true;
      cur.slope_l2 = slope(prev.rel_l2, cur.rel_l2);
      cur.slope_h1 = slope(prev.rel_h1, cur.rel_h1);
      cur.slope_h2 = slope(prev.rel_h2, cur.rel_h2);
    }
  }
  sw.table_path = cfg.out_dir + "/sweep.csv";
  detail::run_stage("export", [&] {
    std::filesystem::create_directories(cfg.out_dir);
    detail::write_text_file(sw.table_path, format_sweep_csv(sw.rows));
    return 0;
  });
  return sw;
}

}  // namespace platems
