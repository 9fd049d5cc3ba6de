#include "dbc/mlp.hpp"

#include <cmath>
#include <utility>

namespace dbc {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation tag: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

long mlp_param_count(const std::vector<int>& layer_dims) {
  long n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += static_cast<long>(layer_dims[l]) * layer_dims[l + 1] + layer_dims[l + 1];
  }
  return n;
}

MlpModel make_mlp(std::vector<int> layer_dims, Activation activation, Rng& rng) {
  std::vector<Activation> acts(layer_dims.size() >= 2 ? layer_dims.size() - 2 : 0, activation);
  return make_mlp(std::move(layer_dims), std::move(acts), rng);
}

MlpModel make_mlp(std::vector<int> layer_dims, std::vector<Activation> activations, Rng& rng) {
  if (layer_dims.size() < 2) {
    throw ConfigError("MLP needs at least input and output dims");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw ConfigError("MLP layer dims must be positive");
  }
  if (activations.size() != layer_dims.size() - 2) {
    throw ConfigError("need one activation tag per hidden layer");
  }
  MlpModel m;
  m.layer_dims = std::move(layer_dims);
  m.hidden_activations = std::move(activations);
  m.params.resize(mlp_param_count(m.layer_dims));
  m.grads = Vector::Zero(m.params.size());

  long off = 0;
  for (int l = 0; l < m.layer_count(); ++l) {
    const int in = m.layer_dims[l];
    const int out = m.layer_dims[l + 1];
    const double lim = std::sqrt(6.0 / (in + out));
    for (long i = 0; i < static_cast<long>(in) * out; ++i) {
      m.params[off + i] = rng.uniform(-lim, lim);
    }
    off += static_cast<long>(in) * out;
    m.params.segment(off, out).setZero();
    off += out;
  }
  return m;
}

namespace {

using ConstWeightMap = Eigen::Map<const Matrix>;
using WeightMap = Eigen::Map<Matrix>;

void apply_activation(Matrix& x, Activation a) {
  if (a == Activation::kTanh) {
    x = x.array().tanh();
  } else {
    x = x.cwiseMax(0.0);
  }
}

// derivative expressed through the post-activation value
Matrix activation_grad(const Matrix& post, const Matrix& upstream, Activation a) {
  if (a == Activation::kTanh) {
    return upstream.array() * (1.0 - post.array().square());
  }
  return (post.array() > 0.0).select(upstream, 0.0);
}

}  // namespace

Matrix mlp_forward(const MlpModel& model, const Matrix& input, MlpTape& tape) {
  require_cols(input, model.input_dim(), "mlp_forward input");
  tape.layer_out.clear();
  tape.layer_out.reserve(model.layer_count() + 1);
  tape.layer_out.push_back(input);

  long off = 0;
  Matrix x = input;
  for (int l = 0; l < model.layer_count(); ++l) {
    const int in = model.layer_dims[l];
    const int out = model.layer_dims[l + 1];
    ConstWeightMap w(model.params.data() + off, in, out);
    off += static_cast<long>(in) * out;
    auto b = model.params.segment(off, out);
    off += out;
    x = (x * w).rowwise() + b.transpose();
    if (l + 1 < model.layer_count()) {
      apply_activation(x, model.hidden_activations[l]);
    }
    tape.layer_out.push_back(x);
  }
  return x;
}

Matrix mlp_apply(const MlpModel& model, const Matrix& input) {
  require_cols(input, model.input_dim(), "mlp_apply input");
  long off = 0;
  Matrix x = input;
  for (int l = 0; l < model.layer_count(); ++l) {
    const int in = model.layer_dims[l];
    const int out = model.layer_dims[l + 1];
    ConstWeightMap w(model.params.data() + off, in, out);
    off += static_cast<long>(in) * out;
    auto b = model.params.segment(off, out);
    off += out;
    x = (x * w).rowwise() + b.transpose();
    if (l + 1 < model.layer_count()) {
      apply_activation(x, model.hidden_activations[l]);
    }
  }
  return x;
}

Matrix mlp_backward(const MlpModel& model, const MlpTape& tape,
                    const Matrix& loss_grad_wrt_output, Vector* param_grads) {
  if (tape.empty()) {
    throw StateError("mlp_backward called before mlp_forward");
  }
  if (static_cast<int>(tape.layer_out.size()) != model.layer_count() + 1) {
    throw StateError("tape does not match model depth");
  }
  require_same_shape(loss_grad_wrt_output, tape.layer_out.back(), "mlp_backward grad");
  if (param_grads != nullptr && param_grads->size() != model.params.size()) {
    throw ShapeError("gradient buffer length does not match params");
  }

  // offsets of each layer's weight block
  std::vector<long> offsets(model.layer_count());
  long off = 0;
  for (int l = 0; l < model.layer_count(); ++l) {
    offsets[l] = off;
    off += static_cast<long>(model.layer_dims[l]) * model.layer_dims[l + 1] +
           model.layer_dims[l + 1];
  }

  Matrix d = loss_grad_wrt_output;
  for (int l = model.layer_count() - 1; l >= 0; --l) {
    const int in = model.layer_dims[l];
    const int out = model.layer_dims[l + 1];
    if (l + 1 < model.layer_count()) {
      d = activation_grad(tape.layer_out[l + 1], d, model.hidden_activations[l]);
    }
    const Matrix& x = tape.layer_out[l];
    if (param_grads != nullptr) {
      WeightMap gw(param_grads->data() + offsets[l], in, out);
      gw.noalias() += x.transpose() * d;
      param_grads->segment(offsets[l] + static_cast<long>(in) * out, out) +=
          d.colwise().sum().transpose();
    }
    ConstWeightMap w(model.params.data() + offsets[l], in, out);
    d = d * w.transpose();
  }
  return d;
}

Matrix mlp_backward(MlpModel& model, const MlpTape& tape, const Matrix& loss_grad_wrt_output) {
  return mlp_backward(model, tape, loss_grad_wrt_output, &model.grads);
}

}  // namespace dbc
