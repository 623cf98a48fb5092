#include "advtex/render/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace advtex::render {

using scene::Mat3;
using scene::Vec3;

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be positive");
  if (!(focal > 0.0)) throw std::invalid_argument("camera: focal length must be positive");
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height)) {
    throw std::invalid_argument("camera: principal point outside the image");
  }
}

std::size_t RenderOutput::mask_area(std::size_t object) const {
  std::size_t n = 0;
  for (double m : masks.at(object).values()) n += m > 0.5;
  return n;
}

std::array<TexelTap, 4> bilinear_taps(double u, double v, int width, int height) {
  const double x = std::clamp(u, 0.0, 1.0) * (width - 1);
  const double y = std::clamp(v, 0.0, 1.0) * (height - 1);
  const int x0 = std::min(static_cast<int>(std::floor(x)), width - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), height - 1);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0, fy = y - y0;
  auto tex = [width](int xx, int yy) { return static_cast<std::uint32_t>(yy * width + xx); };
  return {TexelTap{tex(x0, y0), (1.0 - fx) * (1.0 - fy)}, TexelTap{tex(x1, y0), fx * (1.0 - fy)},
          TexelTap{tex(x0, y1), (1.0 - fx) * fy}, TexelTap{tex(x1, y1), fx * fy}};
}

namespace {

struct ClipVertex {
  Vec3 cam;  // camera-space position
  double u, v;
};

struct Surface {
  const scene::TriMesh* mesh;
  Mat3 rot;
  Vec3 pos;
  int id;
};

class FragmentBuffer {
 public:
  FragmentBuffer(const CameraIntrinsics& intr, const RenderSettings& settings, const scene::EEState& ee)
      : intr_(intr), settings_(settings), ee_(ee),
        frags_(static_cast<std::size_t>(intr.width) * intr.height),
        depth_(frags_.size(), std::numeric_limits<double>::infinity()),
        light_(settings.light_dir.normalized()),
        rt_(ee.R.transpose()) {}

  void draw(const Surface& s) {
    const auto& m = *s.mesh;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      std::array<Vec3, 3> w;
      for (int k = 0; k < 3; ++k) w[k] = s.rot * m.vertices[m.faces[f][k]] + s.pos;
      const Vec3 n = (w[1] - w[0]).cross(w[2] - w[0]);
      if (n.dot(w[0] - ee_.p) >= 0.0) continue;  // back-facing
      const double shade =
          settings_.unit_shade ? 1.0 : settings_.ambient + (1.0 - settings_.ambient) * std::max(0.0, n.normalized().dot(light_));
      std::array<ClipVertex, 3> tri;
      for (int k = 0; k < 3; ++k) tri[k] = {rt_ * (w[k] - ee_.p), m.uv[f][k].x(), m.uv[f][k].y()};
      draw_clipped(tri, s.id, shade);
    }
  }

  std::vector<Fragment> take_fragments() { return std::move(frags_); }
  std::vector<double> take_depth() { return std::move(depth_); }

 private:
  void draw_clipped(const std::array<ClipVertex, 3>& tri, int id, double shade) {
    const double zn = -settings_.near_plane;
    // Sutherland-Hodgman against z <= -near.
    std::array<ClipVertex, 4> poly;
    int count = 0;
    for (int i = 0; i < 3; ++i) {
      const ClipVertex& a = tri[i];
      const ClipVertex& b = tri[(i + 1) % 3];
      const bool ain = a.cam.z() <= zn, bin = b.cam.z() <= zn;
      if (ain) poly[count++] = a;
      if (ain != bin) {
        const double t = (zn - a.cam.z()) / (b.cam.z() - a.cam.z());
        poly[count++] = {a.cam + t * (b.cam - a.cam), a.u + t * (b.u - a.u), a.v + t * (b.v - a.v)};
      }
    }
    for (int i = 1; i + 1 < count; ++i) raster(poly[0], poly[i], poly[i + 1], id, shade);
  }

  void raster(const ClipVertex& a, const ClipVertex& b, const ClipVertex& c, int id, double shade) {
    const std::array<const ClipVertex*, 3> v{&a, &b, &c};
    std::array<double, 3> sx, sy, d;
    for (int k = 0; k < 3; ++k) {
      d[k] = -v[k]->cam.z();
      sx[k] = intr_.cx + intr_.focal * v[k]->cam.x() / d[k];
      sy[k] = intr_.cy - intr_.focal * v[k]->cam.y() / d[k];
    }
    const double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0]);
    if (std::abs(area) < 1e-12) return;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sx[0], sx[1], sx[2]}))));
    const int x1 = std::min(intr_.width - 1, static_cast<int>(std::ceil(std::max({sx[0], sx[1], sx[2]}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sy[0], sy[1], sy[2]}))));
    const int y1 = std::min(intr_.height - 1, static_cast<int>(std::ceil(std::max({sy[0], sy[1], sy[2]}))));
    const double inv_area = 1.0 / area;
    for (int py = y0; py <= y1; ++py) {
      const double qy = py + 0.5;
      for (int px = x0; px <= x1; ++px) {
        const double qx = px + 0.5;
        const double e0 = ((sx[2] - sx[1]) * (qy - sy[1]) - (qx - sx[1]) * (sy[2] - sy[1])) * inv_area;
        const double e1 = ((sx[0] - sx[2]) * (qy - sy[2]) - (qx - sx[2]) * (sy[0] - sy[2])) * inv_area;
        const double e2 = 1.0 - e0 - e1;
        if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
        const double q0 = e0 / d[0], q1 = e1 / d[1], q2 = e2 / d[2];
        const double inv_q = 1.0 / (q0 + q1 + q2);
        const std::size_t pix = static_cast<std::size_t>(py) * intr_.width + px;
        if (!(inv_q < depth_[pix])) continue;
        depth_[pix] = inv_q;
        Fragment& fr = frags_[pix];
        fr.object = id;
        fr.depth = inv_q;
        fr.u = std::clamp((q0 * a.u + q1 * b.u + q2 * c.u) * inv_q, 0.0, 1.0);
        fr.v = std::clamp((q0 * a.v + q1 * b.v + q2 * c.v) * inv_q, 0.0, 1.0);
        fr.shade = shade;
      }
    }
  }

  const CameraIntrinsics& intr_;
  const RenderSettings& settings_;
  const scene::EEState& ee_;
  std::vector<Fragment> frags_;
  std::vector<double> depth_;
  Vec3 light_;
  Mat3 rt_;
};

const scene::TriMesh& table_mesh(double half) {
  thread_local scene::TriMesh mesh;
  thread_local double cached = -1.0;
  if (cached != half) {
    mesh = scene::TriMesh{};
    mesh.vertices = {Vec3(-half, -half, 0.0), Vec3(half, -half, 0.0), Vec3(half, half, 0.0), Vec3(-half, half, 0.0)};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}};
    const Eigen::Vector2d z(0.0, 0.0);
    mesh.uv = {{z, z, z}, {z, z, z}};
    cached = half;
  }
  return mesh;
}

// Shared by the plain and differentiable paths so both produce identical bits.
inline double shade_sample(const std::array<TexelTap, 4>& taps, double shade, const double* texels, int channel) {
  double s = 0.0;
  for (const TexelTap& t : taps) s += (t.weight * shade) * texels[t.texel * 3 + channel];
  return s;
}

RenderOutput finish(FragmentBuffer& buf, std::size_t n_objects, const CameraIntrinsics& intr) {
  RenderOutput out;
  out.width = intr.width;
  out.height = intr.height;
  out.fragments = buf.take_fragments();
  out.depth = buf.take_depth();
  const std::size_t hw = out.fragments.size();
  out.masks.assign(n_objects, diff::Tensor({static_cast<std::size_t>(intr.height), static_cast<std::size_t>(intr.width)}));
  for (std::size_t i = 0; i < hw; ++i) {
    const int obj = out.fragments[i].object;
    if (obj >= 0) out.masks[obj][i] = 1.0;
  }
  return out;
}

}  // namespace

RenderOutput rasterize(std::span<const RenderObject> objects, const scene::EEState& ee,
                       const CameraIntrinsics& intr, const RenderSettings& settings) {
  intr.validate();
  FragmentBuffer buf(intr, settings, ee);
  if (settings.draw_table) {
    buf.draw({&table_mesh(settings.table_half_extent), Mat3::Identity(), Vec3::Zero(), Fragment::kTable});
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const RenderObject& o = objects[i];
    if (!o.mesh || !o.texture) throw std::invalid_argument("rasterize: render object without mesh or texture");
    buf.draw({o.mesh, o.pose.rotation(), o.pose.position, static_cast<int>(i)});
  }
  RenderOutput out = finish(buf, objects.size(), intr);
  out.image = diff::Tensor({static_cast<std::size_t>(intr.height), static_cast<std::size_t>(intr.width), 3});
  const double table_texel[3] = {settings.table_color[0], settings.table_color[1], settings.table_color[2]};
  for (std::size_t i = 0; i < out.fragments.size(); ++i) {
    const Fragment& fr = out.fragments[i];
    double* px = out.image.data() + 3 * i;
    if (fr.object == Fragment::kBackground) {
      for (int c = 0; c < 3; ++c) px[c] = settings.background[c];
    } else if (fr.object == Fragment::kTable) {
      const auto taps = bilinear_taps(0.0, 0.0, 1, 1);
      for (int c = 0; c < 3; ++c) px[c] = shade_sample(taps, fr.shade, table_texel, c);
    } else {
      const scene::TextureMap& tex = *objects[fr.object].texture;
      const auto taps = bilinear_taps(fr.u, fr.v, tex.width(), tex.height());
      for (int c = 0; c < 3; ++c) px[c] = shade_sample(taps, fr.shade, tex.values().data(), c);
    }
  }
  return out;
}

DiffRender rasterize_diff(const scene::TriMesh& mesh, const scene::ObjectPose& pose,
                          diff::Var texture, const scene::EEState& ee, const CameraIntrinsics& intr,
                          const RenderSettings& settings) {
  intr.validate();
  const diff::Shape& ts = texture.shape();
  if (ts.size() != 3 || ts[2] != 3) throw diff::ShapeError("rasterize_diff: texture must be [H,W,3]");
  const int th = static_cast<int>(ts[0]), tw = static_cast<int>(ts[1]);
  FragmentBuffer buf(intr, settings, ee);
  buf.draw({&mesh, pose.rotation(), pose.position, 0});
  DiffRender r;
  r.geometry = finish(buf, 1, intr);
  diff::GatherTaps taps;
  taps.out_shape = {static_cast<std::size_t>(intr.height), static_cast<std::size_t>(intr.width), 3};
  for (const Fragment& fr : r.geometry.fragments) {
    if (fr.object == 0) {
      const auto tt = bilinear_taps(fr.u, fr.v, tw, th);
      for (int c = 0; c < 3; ++c) {
        for (const TexelTap& t : tt) taps.add_tap(t.texel * 3 + c, t.weight * fr.shade);
        taps.end_row();
      }
    } else {
      for (int c = 0; c < 3; ++c) taps.end_row();
    }
  }
  r.image = diff::gather(texture, std::move(taps));
  r.geometry.image = r.image.value();
  return r;
}

namespace {

void check_composite_shapes(const diff::Tensor& sim, const diff::Shape& diff_shape, const diff::Tensor& mask) {
  if (sim.shape() != diff_shape || sim.rank() != 3 || sim.dim(2) != 3 ||
      mask.shape() != diff::Shape{sim.dim(0), sim.dim(1)}) {
    throw diff::ShapeError("composite: shape mismatch sim=" + diff::shape_str(sim.shape()) +
                           " diff=" + diff::shape_str(diff_shape) + " mask=" + diff::shape_str(mask.shape()));
  }
}

}  // namespace

diff::Tensor composite(const diff::Tensor& sim, const diff::Tensor& diff_image, const diff::Tensor& mask) {
  check_composite_shapes(sim, diff_image.shape(), mask);
  diff::Tensor out(sim.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = mask[i / 3];
    out[i] = (1.0 - m) * sim[i] + m * diff_image[i];
  }
  return out;
}

diff::Var composite(diff::Tape& tape, const diff::Tensor& sim, diff::Var diff_image, const diff::Tensor& mask) {
  check_composite_shapes(sim, diff_image.shape(), mask);
  diff::Tensor keep(sim.shape()), m3(sim.shape());
  for (std::size_t i = 0; i < sim.size(); ++i) {
    const double m = mask[i / 3];
    keep[i] = (1.0 - m) * sim[i];
    m3[i] = m;
  }
  return diff::add(tape.constant(std::move(keep)), diff::mul(tape.constant(std::move(m3)), diff_image));
}

}  // namespace advtex::render
