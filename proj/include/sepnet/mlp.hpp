#pragma once

#include <vector>

#include "sepnet/tensor.hpp"

namespace sepnet {

enum class Activation { Tanh, Sine };

// W is [out x in]; a layer maps x -> x W^T + b.
struct DenseLayer {
  Tensor W;
  Tensor b;
};

// Affine layers with the activation applied between them (not after the
// last). A single layer is a plain affine map.
struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation act = Activation::Tanh;
};

int64_t mlp_input_dim(const MlpParams& p);
int64_t mlp_output_dim(const MlpParams& p);
// Throws ContractError unless every layer's input width matches the previous
// layer's output width.
void check_mlp_shapes(const MlpParams& p);

}  // namespace sepnet
