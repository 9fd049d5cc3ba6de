#pragma once

#include <string>
#include <vector>

#include "dbc/matrix.hpp"
#include "dbc/rng.hpp"

namespace dbc {

enum class Activation { kRelu, kTanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Fully-connected network with a flat parameter vector. Layer l owns a
/// row-major weight block (in x out) followed by a bias block; hidden layers
/// apply their activation tag, the output layer is linear.
struct MlpModel {
  std::vector<int> layer_dims;               // input, hidden..., output
  std::vector<Activation> hidden_activations;  // one per hidden layer
  Vector params;
  Vector grads;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int layer_count() const { return static_cast<int>(layer_dims.size()) - 1; }
  void zero_grads() { grads.setZero(); }
};

long mlp_param_count(const std::vector<int>& layer_dims);

/// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
MlpModel make_mlp(std::vector<int> layer_dims, Activation activation, Rng& rng);
MlpModel make_mlp(std::vector<int> layer_dims, std::vector<Activation> activations, Rng& rng);

/// Per-call activation cache; owning it outside the model keeps trained
/// models const and shareable across concurrent evaluators.
struct MlpTape {
  std::vector<Matrix> layer_out;  // [0] = input, then post-activation output per layer
  bool empty() const { return layer_out.empty(); }
};

/// Batched forward pass (rows = batch). Records activations for backward.
Matrix mlp_forward(const MlpModel& model, const Matrix& input, MlpTape& tape);

/// Forward pass without a tape, for inference paths.
Matrix mlp_apply(const MlpModel& model, const Matrix& input);

/// Backpropagates loss_grad_wrt_output through the taped forward pass.
/// Accumulates parameter gradients into *param_grads when non-null and
/// returns the gradient with respect to the input batch.
Matrix mlp_backward(const MlpModel& model, const MlpTape& tape,
                    const Matrix& loss_grad_wrt_output, Vector* param_grads);

/// Accumulates into model.grads.
Matrix mlp_backward(MlpModel& model, const MlpTape& tape, const Matrix& loss_grad_wrt_output);

}  // namespace dbc
