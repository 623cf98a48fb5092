#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advtex/diff/ops.hpp"
#include "advtex/scene/kinematics.hpp"

namespace advtex::policy {

using scene::Action6;

struct ConvLayer {
  int in_channels;
  int out_channels;
  int kernel;
  int stride;

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Network topology: ReLU conv stack (its last output is the saliency feature
/// map A), flatten, ReLU hidden layers, linear head to six outputs scaled by
/// `action_scale`.
struct Architecture {
  std::uint32_t id = 1;
  int input_height = 64;
  int input_width = 64;
  std::vector<ConvLayer> convs;
  std::vector<int> hidden;
  std::array<double, 6> action_scale{1, 1, 1, 1, 1, 1};

  /// conv(3->8,5x5,s2)-conv(8->16,5x5,s2)-MLP(64), A = 16x13x13 at 64x64.
  static Architecture standard(const scene::ActionLimits& limits = {}, int input_size = 64);
  /// conv(3->12,3x3,s2)-conv(12->12,3x3,s2)-MLP(64); used as a black-box target.
  static Architecture compact(const scene::ActionLimits& limits = {}, int input_size = 64);
  static Architecture by_name(const std::string& name, const scene::ActionLimits& limits = {}, int input_size = 64);

  /// [C,H',W'] of the last conv output.
  diff::Shape feature_shape() const;
  void validate() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

class PolicyNet {
 public:
  struct Graph {
    diff::Var features;  ///< A: [C,H',W']
    diff::Var action;    ///< [1,6]
    std::vector<diff::Var> params;
  };

  /// He-initialized parameters drawn from `seed`.
  PolicyNet(Architecture arch, std::uint64_t seed);
  PolicyNet(Architecture arch, std::vector<diff::Tensor> params);

  /// Builds the forward graph for an [H,W,3] image node. Parameters enter the
  /// tape as non-owning views, so the net must outlive the tape.
  Graph forward(diff::Tape& tape, diff::Var image, bool params_require_grad = false) const;
  /// Deterministic action for an [H,W,3] image; throws on resolution mismatch.
  Action6 act(const diff::Tensor& image) const;

  const Architecture& arch() const noexcept { return arch_; }
  const std::vector<diff::Tensor>& params() const noexcept { return params_; }
  std::vector<diff::Tensor>& params() noexcept { return params_; }
  std::size_t parameter_count() const;

  void save(const std::filesystem::path& path) const;
  static PolicyNet load(const std::filesystem::path& path);

  friend bool operator==(const PolicyNet&, const PolicyNet&) = default;

 private:
  void check_params() const;

  Architecture arch_;
  std::vector<diff::Tensor> params_;
};

Action6 to_action(const diff::Tensor& a);
diff::Tensor from_action(const Action6& a);

}  // namespace advtex::policy
