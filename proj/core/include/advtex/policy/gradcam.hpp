#pragma once

#include "advtex/policy/policy.hpp"

namespace advtex::policy {

struct SaliencyMap {
  diff::Tensor values;  ///< [H,W], non-negative
  diff::Tensor channel_weights;  ///< [C]
};

struct SaliencyGraph {
  diff::Var map;  ///< [H,W]
  /// w_k = spatial mean of d||a||/dA_k. Enters the graph as a constant, so no
  /// second-order terms flow through it.
  diff::Tensor channel_weights;
  /// ||a|| was zero; the map is then identically zero.
  bool degenerate = false;
};

/// Grad-CAM on the action norm: S = upsample(ReLU(sum_k w_k A_k)) at out_h x
/// out_w, differentiable w.r.t. whatever fed `forward` (with w held fixed).
SaliencyGraph saliency_graph(diff::Tape& tape, const PolicyNet::Graph& forward, std::size_t out_h, std::size_t out_w);

/// Same map with caller-supplied channel weights ([C]), as used when the
/// weights must stay fixed across several evaluations.
SaliencyGraph saliency_graph_fixed(diff::Tape& tape, const PolicyNet::Graph& forward, const diff::Tensor& weights,
                                   std::size_t out_h, std::size_t out_w);

/// Saliency map of an [H,W,3] image at image resolution.
SaliencyMap gradcam(const PolicyNet& net, const diff::Tensor& image);

}  // namespace advtex::policy
