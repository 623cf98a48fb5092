#include "advtex/scene/mesh.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace advtex::scene {

using Eigen::Vector2d;
using Eigen::Vector3d;

double TriMesh::triangle_area(std::size_t f) const {
  const auto& t = faces.at(f);
  const Vector3d e1 = vertices[t[1]] - vertices[t[0]];
  const Vector3d e2 = vertices[t[2]] - vertices[t[0]];
  return 0.5 * e1.cross(e2).norm();
}

void TriMesh::validate() const {
  if (uv.size() != faces.size()) throw std::invalid_argument("mesh: uv count differs from face count");
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int i : faces[f]) {
      if (i < 0 || i >= n) throw std::invalid_argument("mesh: face " + std::to_string(f) + " has invalid index");
    }
    for (const Vector2d& t : uv[f]) {
      if (!(t.x() >= 0.0 && t.x() <= 1.0 && t.y() >= 0.0 && t.y() <= 1.0)) {
        throw std::invalid_argument("mesh: face " + std::to_string(f) + " has UV outside [0,1]^2");
      }
    }
    if (!(triangle_area(f) > 1e-12)) throw std::invalid_argument("mesh: face " + std::to_string(f) + " is degenerate");
  }
}

Vector3d TriMesh::bbox_min() const {
  Vector3d m = vertices.at(0);
  for (const auto& v : vertices) m = m.cwiseMin(v);
  return m;
}

Vector3d TriMesh::bbox_max() const {
  Vector3d m = vertices.at(0);
  for (const auto& v : vertices) m = m.cwiseMax(v);
  return m;
}

namespace {

struct UvRect {
  double u0, v0, u1, v1;
};

void add_quad(TriMesh& m, std::array<int, 4> c, const UvRect& r) {
  const std::array<Vector2d, 4> t{Vector2d(r.u0, r.v0), Vector2d(r.u1, r.v0), Vector2d(r.u1, r.v1),
                                  Vector2d(r.u0, r.v1)};
  m.faces.push_back({c[0], c[1], c[2]});
  m.uv.push_back({t[0], t[1], t[2]});
  m.faces.push_back({c[0], c[2], c[3]});
  m.uv.push_back({t[0], t[2], t[3]});
}

UvRect atlas_cell(int col, int row) {
  constexpr double margin = 0.01;
  return {col / 3.0 + margin, row / 2.0 + margin, (col + 1) / 3.0 - margin, (row + 1) / 2.0 - margin};
}

TriMesh make_box(double sx, double sy, double sz, UvScheme scheme) {
  TriMesh m;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i)
        m.vertices.emplace_back((i ? 0.5 : -0.5) * sx, (j ? 0.5 : -0.5) * sy, (k ? 0.5 : -0.5) * sz);
  auto v = [](int i, int j, int k) { return i + 2 * j + 4 * k; };
  const UvRect full{0.0, 0.0, 1.0, 1.0};
  const UvRect border{0.0, 0.0, 0.0, 0.0};
  const bool top_only = scheme == UvScheme::top_only;
  // Outward-facing quads, corners counter-clockwise from outside.
  add_quad(m, {v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)}, top_only ? border : atlas_cell(0, 0));  // +x
  add_quad(m, {v(1, 1, 0), v(0, 1, 0), v(0, 1, 1), v(1, 1, 1)}, top_only ? border : atlas_cell(1, 0));  // +y
  add_quad(m, {v(0, 1, 0), v(0, 0, 0), v(0, 0, 1), v(0, 1, 1)}, top_only ? border : atlas_cell(2, 0));  // -x
  add_quad(m, {v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)}, top_only ? border : atlas_cell(0, 1));  // -y
  add_quad(m, {v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)}, top_only ? full : atlas_cell(1, 1));    // +z
  add_quad(m, {v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)}, top_only ? border : atlas_cell(2, 1));  // -z
  return m;
}

TriMesh make_cylinder(double radius, double height, int segments, UvScheme scheme) {
  if (segments < 3) throw std::invalid_argument("cylinder needs at least 3 segments");
  TriMesh m;
  const double h = 0.5 * height;
  for (int s = 0; s < segments; ++s) {
    const double a = 2.0 * std::numbers::pi * s / segments;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
  }
  const int bottom_c = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, -h);
  const int top_c = bottom_c + 1;
  m.vertices.emplace_back(0.0, 0.0, h);
  const bool top_only = scheme == UvScheme::top_only;
  const Vector2d zero(0.0, 0.0);
  for (int s = 0; s < segments; ++s) {
    const int n = (s + 1) % segments;
    const int b0 = 2 * s, t0 = 2 * s + 1, b1 = 2 * n, t1 = 2 * n + 1;
    const double u0 = static_cast<double>(s) / segments, u1 = static_cast<double>(s + 1) / segments;
    if (top_only) {
      m.faces.push_back({b0, b1, t1});
      m.uv.push_back({zero, zero, zero});
      m.faces.push_back({b0, t1, t0});
      m.uv.push_back({zero, zero, zero});
    } else {
      add_quad(m, {b0, b1, t1, t0}, {u0, 0.0, u1, 0.49});
    }
    const double a0 = 2.0 * std::numbers::pi * s / segments, a1 = 2.0 * std::numbers::pi * (s + 1) / segments;
    auto disc = [](double cu, double cv, double rad, double a) {
      return Vector2d(cu + rad * std::cos(a), cv + rad * std::sin(a));
    };
    // Top cap (viewed from +z, CCW is increasing angle).
    m.faces.push_back({top_c, t0, t1});
    if (top_only) {
      m.uv.push_back({Vector2d(0.5, 0.5), disc(0.5, 0.5, 0.5, a0), disc(0.5, 0.5, 0.5, a1)});
    } else {
      m.uv.push_back({Vector2d(0.25, 0.75), disc(0.25, 0.75, 0.24, a0), disc(0.25, 0.75, 0.24, a1)});
    }
    m.faces.push_back({bottom_c, b1, b0});
    if (top_only) {
      m.uv.push_back({zero, zero, zero});
    } else {
      m.uv.push_back({Vector2d(0.75, 0.75), disc(0.75, 0.75, 0.24, a1), disc(0.75, 0.75, 0.24, a0)});
    }
  }
  return m;
}

TriMesh make_icosphere(double radius, int subdiv) {
  if (subdiv < 0 || subdiv > 6) throw std::invalid_argument("icosphere subdivision must be in [0,6]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vector3d> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                          {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriMesh m;
  for (const auto& p : v) m.vertices.push_back(p * radius);
  m.faces = f;
  for (const auto& tri : f) {
    std::array<Vector2d, 3> uv;
    for (int k = 0; k < 3; ++k) {
      const Vector3d& p = v[tri[k]];
      const double u = std::atan2(p.y(), p.x()) / (2.0 * std::numbers::pi) + 0.5;
      const double w = std::acos(std::clamp(p.z(), -1.0, 1.0)) / std::numbers::pi;
      uv[k] = Vector2d(std::clamp(u, 0.0, 1.0), std::clamp(w, 0.0, 1.0));
    }
    m.uv.push_back(uv);
  }
  return m;
}

}  // namespace

TriMesh gen_assets(AssetKind kind, const AssetDims& d, UvScheme uv) {
  TriMesh m;
  switch (kind) {
    case AssetKind::cuboid:
      if (!(d.size_x > 0 && d.size_y > 0 && d.size_z > 0)) throw std::invalid_argument("cuboid dims must be positive");
      m = make_box(d.size_x, d.size_y, d.size_z, uv);
      break;
    case AssetKind::thin_patch:
      if (!(d.size_x > 0 && d.size_y > 0 && d.size_z > 0)) {
        throw std::invalid_argument("thin_patch dims must be positive");
      }
      m = make_box(d.size_x, d.size_y, d.size_z, UvScheme::top_only);
      break;
    case AssetKind::cylinder:
      if (!(d.size_x > 0 && d.size_z > 0)) throw std::invalid_argument("cylinder dims must be positive");
      m = make_cylinder(0.5 * d.size_x, d.size_z, d.detail, uv);
      break;
    case AssetKind::icosphere:
      if (!(d.size_x > 0)) throw std::invalid_argument("icosphere radius must be positive");
      m = make_icosphere(d.size_x, d.detail);
      break;
  }
  m.validate();
  return m;
}

AssetKind parse_asset_kind(const std::string& name) {
  if (name == "cuboid") return AssetKind::cuboid;
  if (name == "cylinder") return AssetKind::cylinder;
  if (name == "icosphere") return AssetKind::icosphere;
  if (name == "thin_patch") return AssetKind::thin_patch;
  throw std::invalid_argument("unknown asset kind '" + name + "'");
}

std::string to_string(AssetKind kind) {
  switch (kind) {
    case AssetKind::cuboid: return "cuboid";
    case AssetKind::cylinder: return "cylinder";
    case AssetKind::icosphere: return "icosphere";
    case AssetKind::thin_patch: return "thin_patch";
  }
  return "unknown";
}

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& tri : mesh.uv)
    for (const auto& t : tri) out << "vt " << t.x() << ' ' << t.y() << '\n';
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    out << 'f';
    for (int k = 0; k < 3; ++k) out << ' ' << mesh.faces[f][k] + 1 << '/' << 3 * f + k + 1;
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TriMesh m;
  std::vector<Vector2d> vts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw std::runtime_error("bad v record at line " + std::to_string(lineno));
      m.vertices.push_back(p);
    } else if (tag == "vt") {
      Vector2d t;
      if (!(ls >> t.x() >> t.y())) throw std::runtime_error("bad vt record at line " + std::to_string(lineno));
      vts.push_back(t);
    } else if (tag == "f") {
      std::array<int, 3> vi{};
      std::array<Vector2d, 3> ti;
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        if (!(ls >> tok)) throw std::runtime_error("face with fewer than 3 corners at line " + std::to_string(lineno));
        const auto slash = tok.find('/');
        if (slash == std::string::npos) throw std::runtime_error("face corner without vt at line " + std::to_string(lineno));
        vi[k] = std::stoi(tok.substr(0, slash)) - 1;
        const int t = std::stoi(tok.substr(slash + 1)) - 1;
        if (t < 0 || t >= static_cast<int>(vts.size())) {
          throw std::runtime_error("vt index out of range at line " + std::to_string(lineno));
        }
        ti[k] = vts[t];
      }
      m.faces.push_back(vi);
      m.uv.push_back(ti);
    }
  }
  m.validate();
  return m;
}

}  // namespace advtex::scene
