#include "advtex/policy/gradcam.hpp"

#include <array>

namespace advtex::policy {

using diff::Tensor;
using diff::Var;

SaliencyGraph saliency_graph(diff::Tape& tape, const PolicyNet::Graph& forward, std::size_t out_h, std::size_t out_w) {
  const Var A = forward.features;
  const std::size_t C = A.shape()[0];
  SaliencyGraph out;
  out.channel_weights = Tensor({C}, 0.0);
  const Var norm = diff::l2norm(forward.action);
  if (norm.item() == 0.0) {
    out.degenerate = true;
    out.map = tape.constant(Tensor({out_h, out_w}, 0.0));
    return out;
  }
  const std::array<Var, 1> wrt{A};
  const Tensor dA = tape.gradient(norm, wrt)[0];
  const std::size_t hw = dA.size() / C;
  for (std::size_t k = 0; k < C; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += dA[k * hw + i];
    out.channel_weights[k] = s / static_cast<double>(hw);
  }
  out.map = saliency_graph_fixed(tape, forward, out.channel_weights, out_h, out_w).map;
  return out;
}

SaliencyGraph saliency_graph_fixed(diff::Tape& tape, const PolicyNet::Graph& forward, const Tensor& weights,
                                   std::size_t out_h, std::size_t out_w) {
  const Var A = forward.features;
  const std::size_t C = A.shape()[0];
  if (weights.size() != C) throw diff::ShapeError("saliency weights do not match the feature channels");
  SaliencyGraph out;
  out.channel_weights = weights;
  Tensor w({1, C, 1, 1}, std::vector<double>(weights.values().begin(), weights.values().end()));
  const Var cam = diff::relu(diff::conv2d(A, tape.constant(std::move(w)), tape.constant(Tensor({1}, 0.0)), 1));
  out.map = diff::reshape(diff::upsample_bilinear(cam, out_h, out_w), {out_h, out_w});
  return out;
}

SaliencyMap gradcam(const PolicyNet& net, const Tensor& image) {
  diff::Tape tape;
  const PolicyNet::Graph g = net.forward(tape, tape.view(image));
  SaliencyGraph s = saliency_graph(tape, g, image.dim(0), image.dim(1));
  return {s.map.value(), std::move(s.channel_weights)};
}

}  // namespace advtex::policy
