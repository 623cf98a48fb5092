#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "advtex/diff/tape.hpp"

namespace advtex::diff {

// Elementwise ops require identical shapes; there is no broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var a);
/// Clamp to [lo, hi]; gradient is zero where the clamp is active.
Var clip(Var a, double lo, double hi);

Var sum(Var a);
Var mean(Var a);
/// Euclidean norm of all elements. Gradient at the origin is defined as zero.
Var l2norm(Var a);
/// Inner product of two same-sized tensors (shapes may differ).
Var dot(Var a, Var b);

/// [m,k] x [k,n] -> [m,n]
Var matmul(Var a, Var b);
Var reshape(Var a, Shape shape);
/// [H,W,C] -> [C,H,W]
Var hwc_to_chw(Var a);

/// Valid (unpadded) 2-D convolution. x: [C,H,W], w: [O,C,k,k], b: [O].
Var conv2d(Var x, Var w, Var b, std::size_t stride);
/// x: [C,H,W], square window, no padding.
Var maxpool2d(Var x, std::size_t kernel, std::size_t stride);
/// Half-pixel-centred bilinear resize of x: [C,h,w] to [C,H,W].
Var upsample_bilinear(Var x, std::size_t out_h, std::size_t out_w);

/// Sparse linear map out[i] = sum_k coef[k] * src[index[k]] over the taps of
/// row i. Rows are stored CSR-style: row i owns taps [offsets[i], offsets[i+1]).
struct GatherTaps {
  Shape out_shape;
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> index;
  std::vector<double> coef;

  void add_tap(std::uint32_t src, double c) {
    index.push_back(src);
    coef.push_back(c);
  }
  void end_row() { offsets.push_back(index.size()); }
  std::size_t rows() const { return offsets.size() - 1; }
};
Var gather(Var src, GatherTaps taps);

/// Node whose scalar value and gradient w.r.t. `x` were computed outside the
/// tape (for example by forward-mode differentiation of a closed-form map).
Var scalar_function(Var x, double value, Tensor dvalue_dx);

}  // namespace advtex::diff
