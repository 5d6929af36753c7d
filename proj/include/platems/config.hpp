#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "platems/material.hpp"
#include "platems/mesh.hpp"

namespace platems {

// Run description parsed from the line-oriented text format:
//
//   # comment
//   epsilon 1/8            cell size as a reciprocal integer
//   cell_refine 8          cell mesh elements per raster cell per direction
//   macro 32               macro mesh elements per direction
//   dns_refine 4           DNS mesh = macro * dns_refine per direction
//   load 1500              constant transverse load q
//   g1 0                   constant boundary deflection
//   g2 0                   constant boundary normal slope
//   solver_tol 1e-10
//   out_dir out
//   sweep_eps 2 4 8        epsilon denominators for the sweep command
//   raster 2               k, followed by k rows of k material ids,
//     0 1                  written top row first as drawn
//     1 0
//   material 0 isotropic 5e6 0.2 1.0      E nu thickness
//   material 1 tensor 1 0.2 0 0 0.4 1     D1111 D1122 D1112 D2212 D1212 D2222
//
// The macro resolution must be divisible by k/epsilon so that every DNS
// element lies inside one raster cell and one macro element.
struct RunConfig {
  int eps_den = 0;  // epsilon = 1/eps_den
  int cell_refine = 8;
  int macro_n = 0;
  int dns_refine = 4;
  double load = 1.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double solver_tol = 1e-10;
  std::string out_dir = "out";
  std::vector<int> sweep_eps;  // denominators
  MaterialRaster raster;
  std::vector<BendingTensor> materials;  // indexed by material id

  double epsilon() const { return 1.0 / eps_den; }
  int cell_n() const { return raster.k * cell_refine; }
  int dns_n() const { return macro_n * dns_refine; }
};

namespace detail {

inline int parse_int(const std::string& tok, const std::string& key) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size())
    throw std::invalid_argument("config: " + key + ": expected integer, got '" + tok + "'");
  return v;
}

inline double parse_double(const std::string& tok, const std::string& key) {
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != tok.size())
    throw std::invalid_argument("config: " + key + ": expected number, got '" + tok + "'");
  return v;
}

// epsilon is written "1/n" so the unit-cell tiling is exact by construction.
inline int parse_eps_den(const std::string& tok) {
  const size_t slash = tok.find('/');
  if (slash == std::string::npos || tok.substr(0, slash) != "1")
    throw std::invalid_argument("config: epsilon: expected the form 1/n, got '" + tok + "'");
  const int den = parse_int(tok.substr(slash + 1), "epsilon");
  if (den < 1) throw std::invalid_argument("config: epsilon: denominator must be >= 1");
  return den;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) {
    if (t[0] == '#') break;
    toks.push_back(t);
  }
  return toks;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::map<std::string, bool> seen;
  std::map<int, BendingTensor> materials;
  int raster_rows_pending = 0;
  std::vector<std::vector<int>> raster_rows;  // as written, top row first
  std::string line;
  int lineno = 0;

  auto once = [&seen](const std::string& key) {
    if (seen[key]) throw std::invalid_argument("config: duplicate key '" + key + "'");
    seen[key] = true;
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> t = detail::tokenize(line);
    if (t.empty()) continue;

    if (raster_rows_pending > 0) {
      if (static_cast<int>(t.size()) != cfg.raster.k)
        throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                    ": raster row needs " + std::to_string(cfg.raster.k) +
                                    " entries");
      std::vector<int> row;
      for (const std::string& tok : t) {
        const int id = detail::parse_int(tok, "raster");
        if (id < 0) throw std::invalid_argument("config: raster: negative material id");
        row.push_back(id);
      }
      raster_rows.push_back(std::move(row));
      --raster_rows_pending;
      continue;
    }

    const std::string& key = t[0];
    auto need = [&](size_t n) {
      if (t.size() != n + 1)
        throw std::invalid_argument("config: line " + std::to_string(lineno) + ": '" + key +
                                    "' takes " + std::to_string(n) + " value(s)");
    };

    if (key == "epsilon") {
      need(1);
      once(key);
      cfg.eps_den = detail::parse_eps_den(t[1]);
    } else if (key == "cell_refine") {
      need(1);
      once(key);
      cfg.cell_refine = detail::parse_int(t[1], key);
      if (cfg.cell_refine < 1) throw std::invalid_argument("config: cell_refine must be >= 1");
    } else if (key == "macro") {
      need(1);
      once(key);
      cfg.macro_n = detail::parse_int(t[1], key);
      if (cfg.macro_n < 1) throw std::invalid_argument("config: macro must be >= 1");
    } else if (key == "dns_refine") {
      need(1);
      once(key);
      cfg.dns_refine = detail::parse_int(t[1], key);
      if (cfg.dns_refine < 1) throw std::invalid_argument("config: dns_refine must be >= 1");
    } else if (key == "load") {
      need(1);
      once(key);
      cfg.load = detail::parse_double(t[1], key);
    } else if (key == "g1") {
      need(1);
      once(key);
      cfg.g1 = detail::parse_double(t[1], key);
    } else if (key == "g2") {
      need(1);
      once(key);
      cfg.g2 = detail::parse_double(t[1], key);
    } else if (key == "solver_tol") {
      need(1);
      once(key);
      cfg.solver_tol = detail::parse_double(t[1], key);
      if (!(cfg.solver_tol > 0.0))
        throw std::invalid_argument("config: solver_tol must be positive");
    } else if (key == "out_dir") {
      need(1);
      once(key);
      cfg.out_dir = t[1];
    } else if (key == "sweep_eps") {
      if (t.size() < 2) throw std::invalid_argument("config: sweep_eps needs at least one value");
      once(key);
      for (size_t i = 1; i < t.size(); ++i) {
        const int den = detail::parse_int(t[i], key);
        if (den < 1) throw std::invalid_argument("config: sweep_eps: denominators must be >= 1");
        cfg.sweep_eps.push_back(den);
      }
    } else if (key == "raster") {
      need(1);
      once(key);
      cfg.raster.k = detail::parse_int(t[1], key);
      if (cfg.raster.k < 1) throw std::invalid_argument("config: raster k must be >= 1");
      raster_rows_pending = cfg.raster.k;
    } else if (key == "material") {
      if (t.size() < 3)
        throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                    ": material needs an id and a kind");
      const int id = detail::parse_int(t[1], "material id");
      if (id < 0) throw std::invalid_argument("config: material id must be >= 0");
      if (materials.count(id))
        throw std::invalid_argument("config: duplicate material id " + std::to_string(id));
      const std::string& kind = t[2];
      if (kind == "isotropic") {
        if (t.size() != 6)
          throw std::invalid_argument("config: material isotropic takes E nu thickness");
        materials[id] = isotropic_bending(detail::parse_double(t[3], "material E"),
                                          detail::parse_double(t[4], "material nu"),
                                          detail::parse_double(t[5], "material thickness"));
      } else if (kind == "tensor") {
        if (t.size() != 9)
          throw std::invalid_argument("config: material tensor takes 6 components");
        BendingTensor D;
        for (int i = 0; i < 6; ++i)
          D.c[static_cast<size_t>(i)] = detail::parse_double(t[3 + i], "material tensor");
        require_elliptic(D, ("material " + std::to_string(id)).c_str());
        materials[id] = D;
      } else {
        throw std::invalid_argument("config: unknown material kind '" + kind + "'");
      }
    } else {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
  }

  if (raster_rows_pending > 0)
    throw std::invalid_argument("config: raster block ended early");
  if (cfg.eps_den == 0) throw std::invalid_argument("config: missing epsilon");
  if (cfg.macro_n == 0) throw std::invalid_argument("config: missing macro");
  if (raster_rows.empty()) throw std::invalid_argument("config: missing raster");
  if (materials.empty()) throw std::invalid_argument("config: missing material table");

  // Rows are written as drawn (top first); storage runs bottom-up.
  const int k = cfg.raster.k;
  cfg.raster.cells.assign(static_cast<size_t>(k) * k, 0);
  for (int r = 0; r < k; ++r)
    for (int i = 0; i < k; ++i)
      cfg.raster.cells[static_cast<size_t>(k - 1 - r) * k + i] = raster_rows[r][i];

  int max_id = -1;
  for (const auto& [id, D] : materials) max_id = std::max(max_id, id);
  cfg.materials.assign(static_cast<size_t>(max_id) + 1, BendingTensor{});
  std::vector<bool> defined(static_cast<size_t>(max_id) + 1, false);
  for (const auto& [id, D] : materials) {
    cfg.materials[static_cast<size_t>(id)] = D;
    defined[static_cast<size_t>(id)] = true;
  }
  for (int id : cfg.raster.cells) {
    if (id > max_id || !defined[static_cast<size_t>(id)])
      throw std::invalid_argument("config: raster uses material " + std::to_string(id) +
                                  " which is not in the material table");
  }

  // Every raster interface must land on a macro mesh line, so DNS
  // elements nest in macro elements and in raster cells.
  const int period = cfg.eps_den * cfg.raster.k;
  if (cfg.macro_n % period != 0)
    throw std::invalid_argument(
        "config: macro resolution " + std::to_string(cfg.macro_n) +
        " is not divisible by raster k * epsilon denominator = " + std::to_string(period));
  for (int den : cfg.sweep_eps) {
    if (cfg.macro_n % (den * cfg.raster.k) != 0)
      throw std::invalid_argument("config: sweep_eps 1/" + std::to_string(den) +
                                  " violates the macro divisibility constraint");
  }

  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  return parse_config(in);
}

// Canonical text of everything the cell stage depends on; the cache key
// is the FNV-1a 64-bit hash of this string.
inline std::string cell_stage_fingerprint(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "k " << cfg.raster.k << "\ncells";
  for (int id : cfg.raster.cells) os << ' ' << id;
  os << "\ncell_refine " << cfg.cell_refine << "\nsolver_tol " << cfg.solver_tol << '\n';
  for (size_t i = 0; i < cfg.materials.size(); ++i) {
    os << "material " << i;
    for (double c : cfg.materials[i].c) os << ' ' << c;
    os << '\n';
  }
  return os.str();
}

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace platems
