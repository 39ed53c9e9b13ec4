#pragma once

// Kolmogorov-Arnold network layers and models.
//
// A layer maps x in R^d to y in R^m as
//     y = W_base * phi(x) + sum_j W_spline^(j) * b_j(x_j) + c
// where b_j is the clamped B-spline expansion of feature j and c an optional
// bias. In batch form the spline blocks sit side by side in one m x (d*K)
// matrix, so
//     Y = Phi(X) W_base^T + B(X) W_spline^T + 1 c^T.

#include "kanfs/spline.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace kanfs {

enum class Activation { identity, silu };

inline double activate(Activation a, double x) {
  if (a == Activation::identity) return x;
  return x / (1.0 + std::exp(-x));
}

inline double activate_derivative(Activation a, double x) {
  if (a == Activation::identity) return 1.0;
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

inline std::string_view to_string(Activation a) { return a == Activation::silu ? "silu" : "identity"; }

inline Activation activation_from_string(std::string_view s) {
  if (s == "silu") return Activation::silu;
  if (s == "identity") return Activation::identity;
  throw Error(ErrorCode::config, "unknown activation '" + std::string(s) + "'");
}

struct KanLayer {
  Matrix base;    // m x d
  Matrix spline;  // m x (d*K); feature j owns columns [j*K, (j+1)*K)
  Vector bias;    // m, or empty for none; not penalized
  std::vector<KnotVector> knots;
  Activation activation = Activation::silu;

  [[nodiscard]] Index in_dim() const noexcept { return base.cols(); }
  [[nodiscard]] Index out_dim() const noexcept { return base.rows(); }
  [[nodiscard]] int basis_size() const { return knots.empty() ? 0 : knots.front().num_basis(); }

  [[nodiscard]] auto spline_block(Index j) { return spline.middleCols(j * basis_size(), basis_size()); }
  [[nodiscard]] auto spline_block(Index j) const { return spline.middleCols(j * basis_size(), basis_size()); }

  void validate() const {
    if (static_cast<Index>(knots.size()) != base.cols())
      throw Error(ErrorCode::dimension_mismatch, "layer has " + std::to_string(knots.size()) +
                                                     " knot vectors for " + std::to_string(base.cols()) + " inputs");
    const int K = common_basis_size(knots);
    if (spline.rows() != base.rows() || spline.cols() != base.cols() * K)
      throw Error(ErrorCode::dimension_mismatch, "spline weight shape does not match base and K");
    if (bias.size() != 0 && bias.size() != base.rows())
      throw Error(ErrorCode::dimension_mismatch, "bias length does not match layer outputs");
  }

  friend bool operator==(const KanLayer& a, const KanLayer& b) {
    return a.activation == b.activation && a.knots == b.knots && a.base.rows() == b.base.rows() &&
           a.base.cols() == b.base.cols() && a.spline.cols() == b.spline.cols() && a.base == b.base &&
           a.spline == b.spline && a.bias == b.bias;
  }
};

struct KanModel {
  std::vector<KanLayer> layers;
  Task task;

  [[nodiscard]] Index in_dim() const { return layers.front().in_dim(); }
  [[nodiscard]] Index out_dim() const { return layers.back().out_dim(); }

  void validate() const {
    if (layers.empty()) throw Error(ErrorCode::dimension_mismatch, "model has no layers");
    for (std::size_t t = 0; t < layers.size(); ++t) {
      layers[t].validate();
      if (t > 0 && layers[t].in_dim() != layers[t - 1].out_dim())
        throw Error(ErrorCode::dimension_mismatch, "layer " + std::to_string(t) + " input does not match previous output");
    }
    if (out_dim() != task.output_dim())
      throw Error(ErrorCode::dimension_mismatch, "model output width does not match task");
  }

  friend bool operator==(const KanModel&, const KanModel&) = default;
};

/// Per-layer quantities recorded by the forward pass; `pre` holds the layer outputs t_j.
struct LayerTrace {
  Matrix input;
  Matrix phi;
  Matrix phi_derivative;
  BatchBasis basis;
  Matrix pre;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

namespace detail {

inline LayerTrace expand_layer_input(const KanLayer& layer, const Matrix& X) {
  LayerTrace tr;
  tr.input = X;
  tr.phi = X.unaryExpr([a = layer.activation](double v) { return activate(a, v); });
  tr.phi_derivative = X.unaryExpr([a = layer.activation](double v) { return activate_derivative(a, v); });
  tr.basis = expand_batch_with_derivatives(layer.knots, X);
  return tr;
}

inline void apply_layer(const KanLayer& layer, LayerTrace& tr) {
  tr.pre.noalias() = tr.phi * layer.base.transpose();
  tr.pre.noalias() += tr.basis.values * layer.spline.transpose();
  if (layer.bias.size() != 0) tr.pre.rowwise() += layer.bias.transpose();
}

// Given dL/dY for a layer, accumulate parameter gradients and return dL/dX.
inline Matrix backprop_layer(const KanLayer& layer, const LayerTrace& tr, const Matrix& grad_out, Matrix* grad_base,
                             Matrix* grad_spline, Vector* grad_bias = nullptr) {
  if (grad_bias) *grad_bias = grad_out.colwise().sum().transpose();
  if (grad_base) grad_base->noalias() = grad_out.transpose() * tr.phi;
  if (grad_spline) grad_spline->noalias() = grad_out.transpose() * tr.basis.values;
  const Index d = layer.in_dim();
  const int K = layer.basis_size();
  Matrix grad_in = (grad_out * layer.base).cwiseProduct(tr.phi_derivative);
  const Matrix through_spline = (grad_out * layer.spline).cwiseProduct(tr.basis.derivatives);
  for (Index j = 0; j < d; ++j) grad_in.col(j) += through_spline.middleCols(j * K, K).rowwise().sum();
  return grad_in;
}

}  // namespace detail

inline ForwardResult forward(const KanModel& model, const Matrix& X) {
  if (X.cols() != model.in_dim())
    throw Error(ErrorCode::dimension_mismatch, "input has " + std::to_string(X.cols()) + " columns, model expects " +
                                                   std::to_string(model.in_dim()));
  ForwardResult out;
  Matrix current = X;
  for (const auto& layer : model.layers) {
    auto tr = detail::expand_layer_input(layer, current);
    detail::apply_layer(layer, tr);
    current = tr.pre;
    out.trace.layers.push_back(std::move(tr));
  }
  out.output = std::move(current);
  return out;
}

/// Raw outputs (logits for classification).
inline Matrix predict(const KanModel& model, const Matrix& X) { return forward(model, X).output; }

inline double squared_weight_sum(const KanModel& model) {
  double s = 0.0;
  for (const auto& l : model.layers) s += l.base.squaredNorm() + l.spline.squaredNorm();
  return s;
}

namespace detail {

// Mean task loss of outputs `Y` against targets; optionally writes dL/dY.
inline double task_loss(const Task& task, const Matrix& Y, const Vector& y, Matrix* grad) {
  const Index n = Y.rows();
  if (y.size() != n) throw Error(ErrorCode::dimension_mismatch, "target length does not match outputs");
  if (n == 0) throw Error(ErrorCode::empty_evaluation_set, "loss over zero samples");
  const double inv_n = 1.0 / static_cast<double>(n);
  if (!task.is_classification()) {
    const Vector r = Y.col(0) - y;
    if (grad) *grad = (2.0 * inv_n) * r;
    return r.squaredNorm() * inv_n;
  }
  check_labels(y, task);
  double total = 0.0;
  if (grad) grad->resize(n, Y.cols());
  for (Index i = 0; i < n; ++i) {
    const auto row = Y.row(i);
    const double mx = row.maxCoeff();
    const Eigen::RowVectorXd e = (row.array() - mx).exp();
    const double z = e.sum();
    const auto label = static_cast<Index>(y[i]);
    total += std::log(z) + mx - row[label];
    if (grad) {
      grad->row(i) = e * (inv_n / z);
      (*grad)(i, label) -= inv_n;
    }
  }
  return total * inv_n;
}

}  // namespace detail

/// Mean squared error or mean softmax cross-entropy, plus `l2_penalty` times the squared weight sum.
inline double loss(const KanModel& model, const Matrix& X, const Vector& y, double l2_penalty = 0.0) {
  const Matrix Y = predict(model, X);
  double value = detail::task_loss(model.task, Y, y, nullptr);
  if (l2_penalty > 0.0) value += l2_penalty * squared_weight_sum(model);
  return value;
}

struct Gradients {
  std::vector<Matrix> base;
  std::vector<Matrix> spline;
  std::vector<Vector> bias;
};

namespace detail {

inline double loss_and_gradients(const KanModel& model, const ForwardTrace& trace, const Matrix& Y, const Vector& y,
                                  double l2_penalty, Gradients& g) {
  Matrix grad;
  double value = task_loss(model.task, Y, y, &grad);
  const auto L = model.layers.size();
  g.base.resize(L);
  g.spline.resize(L);
  g.bias.resize(L);
  for (std::size_t t = L; t-- > 0;) {
    Matrix next = backprop_layer(model.layers[t], trace.layers[t], grad, &g.base[t], &g.spline[t], &g.bias[t]);
    if (t > 0) grad = std::move(next);
  }
  if (l2_penalty > 0.0) {
    value += l2_penalty * squared_weight_sum(model);
    for (std::size_t t = 0; t < L; ++t) {
      g.base[t] += 2.0 * l2_penalty * model.layers[t].base;
      g.spline[t] += 2.0 * l2_penalty * model.layers[t].spline;
    }
  }
  return value;
}

}  // namespace detail

/// Analytic gradients of `loss` with respect to every base and spline weight and every bias.
inline Gradients backward(const KanModel& model, const Matrix& X, const Vector& y, double l2_penalty = 0.0) {
  auto fw = forward(model, X);
  Gradients g;
  detail::loss_and_gradients(model, fw.trace, fw.output, y, l2_penalty, g);
  return g;
}

/**
 * Per-sample gradients of the scalar model output with respect to the inputs (n x d).
 *
 * For classification the scalar is the largest logit of each sample.
 */
inline Matrix input_gradients(const KanModel& model, const Matrix& X) {
  auto fw = forward(model, X);
  const Index n = X.rows();
  Matrix grad = Matrix::Zero(n, model.out_dim());
  for (Index i = 0; i < n; ++i) {
    Index arg = 0;
    if (model.task.is_classification()) fw.output.row(i).maxCoeff(&arg);
    grad(i, arg) = 1.0;
  }
  for (std::size_t t = model.layers.size(); t-- > 0;)
    grad = detail::backprop_layer(model.layers[t], fw.trace.layers[t], grad, nullptr, nullptr);
  return grad;
}

// ---------------------------------------------------------------------------
// Construction and training

struct ModelSpec {
  int hidden = 0;  // 0: single layer d -> m_out; >0: d -> hidden -> m_out
  int degree = 3;
  int grid_size = 5;
  Activation activation = Activation::silu;
  double hidden_range = 3.0;  // knot domain [-r, r] for the second layer's inputs
};

/// Randomly initialized model; first-layer knots span each column's range in `X_train`.
inline KanModel make_model(const ModelSpec& spec, const Matrix& X_train, const Task& task, std::uint64_t seed) {
  if (X_train.rows() == 0 || X_train.cols() == 0) throw Error(ErrorCode::invalid_size, "empty training matrix");
  if (task.is_classification() && task.n_classes < 2)
    throw Error(ErrorCode::invalid_size, "classification needs at least 2 classes");
  Rng rng(seed);
  const Index d = X_train.cols();
  std::vector<Index> widths{d};
  if (spec.hidden > 0) widths.push_back(spec.hidden);
  widths.push_back(task.output_dim());

  KanModel model;
  model.task = task;
  for (std::size_t t = 0; t + 1 < widths.size(); ++t) {
    KanLayer layer;
    layer.activation = spec.activation;
    const Index in = widths[t];
    const Index out = widths[t + 1];
    for (Index j = 0; j < in; ++j) {
      if (t == 0) {
        std::vector<double> col(X_train.col(j).data(), X_train.col(j).data() + X_train.rows());
        layer.knots.push_back(knots_for_values(col, spec.grid_size, spec.degree));
      } else {
        layer.knots.push_back(build_knots(-spec.hidden_range, spec.hidden_range, spec.grid_size, spec.degree));
      }
    }
    const int K = layer.basis_size();
    const double base_bound = 1.0 / std::sqrt(static_cast<double>(in));
    const double spline_bound = 0.1 / std::sqrt(static_cast<double>(K));
    std::uniform_real_distribution<double> ub(-base_bound, base_bound);
    std::uniform_real_distribution<double> us(-spline_bound, spline_bound);
    layer.base.resize(out, in);
    layer.spline.resize(out, in * K);
    layer.bias = Vector::Zero(out);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.base(r, c) = ub(rng);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in * K; ++c) layer.spline(r, c) = us(rng);
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 0.05;
  int batch_size = 0;  // 0 = full batch
  double l2_penalty = 0.0;
  double momentum = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw Error(ErrorCode::precondition, "epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::precondition, "learning_rate must be > 0");
    if (batch_size < 0) throw Error(ErrorCode::precondition, "batch_size must be >= 0");
    if (!(l2_penalty >= 0.0)) throw Error(ErrorCode::precondition, "l2_penalty must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::precondition, "momentum must be in [0, 1)");
  }
};

struct TrainResult {
  KanModel model;
  std::vector<double> loss_history;  // full-data objective before training and after every epoch
};

/**
 * Gradient descent (optionally with heavy-ball momentum) on the mean task loss.
 *
 * The returned model is the iterate with the lowest full-data objective seen,
 * so the final loss never exceeds the initial one.
 */
inline TrainResult train(KanModel model, const Matrix& X, const Vector& y, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  if (X.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "X and y row counts differ");
  check_labels(y, model.task);

  for (auto& layer : model.layers)
    if (layer.bias.size() == 0) layer.bias = Vector::Zero(layer.out_dim());

  const Index n = X.rows();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  const auto L = model.layers.size();

  // First-layer expansion depends only on X; computed once.
  const LayerTrace input_cache = detail::expand_layer_input(model.layers[0], X);

  auto evaluate = [&](const KanModel& m, const LayerTrace& first, const Vector& targets, Gradients* g) {
    ForwardTrace trace;
    trace.layers.push_back(first);
    detail::apply_layer(m.layers[0], trace.layers[0]);
    Matrix current = trace.layers[0].pre;
    for (std::size_t t = 1; t < L; ++t) {
      auto tr = detail::expand_layer_input(m.layers[t], current);
      detail::apply_layer(m.layers[t], tr);
      current = tr.pre;
      trace.layers.push_back(std::move(tr));
    }
    if (g) return detail::loss_and_gradients(m, trace, current, targets, cfg.l2_penalty, *g);
    return detail::task_loss(m.task, current, targets, nullptr) + cfg.l2_penalty * squared_weight_sum(m);
  };

  TrainResult result;
  Gradients grads;
  std::vector<Matrix> vel_base(L), vel_spline(L);
  std::vector<Vector> vel_bias(L);
  for (std::size_t t = 0; t < L; ++t) {
    vel_bias[t] = Vector::Zero(model.layers[t].out_dim());
    vel_base[t] = Matrix::Zero(model.layers[t].base.rows(), model.layers[t].base.cols());
    vel_spline[t] = Matrix::Zero(model.layers[t].spline.rows(), model.layers[t].spline.cols());
  }

  auto step = [&](const Gradients& g) {
    for (std::size_t t = 0; t < L; ++t) {
      vel_base[t] = cfg.momentum * vel_base[t] - cfg.learning_rate * g.base[t];
      vel_spline[t] = cfg.momentum * vel_spline[t] - cfg.learning_rate * g.spline[t];
      model.layers[t].base += vel_base[t];
      model.layers[t].spline += vel_spline[t];
      vel_bias[t] = cfg.momentum * vel_bias[t] - cfg.learning_rate * g.bias[t];
      model.layers[t].bias += vel_bias[t];
    }
  };

  auto check_finite = [](double v, int epoch) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::non_finite_loss, "training diverged at epoch " + std::to_string(epoch) +
                                                  "; lower the learning rate");
  };

  Rng rng(cfg.seed);
  std::vector<Index> order = iota_indices(n);
  double current_loss = full_batch ? evaluate(model, input_cache, y, &grads) : evaluate(model, input_cache, y, nullptr);
  check_finite(current_loss, 0);
  result.loss_history.push_back(current_loss);
  KanModel best = model;
  double best_loss = current_loss;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (full_batch) {
      step(grads);
      current_loss = evaluate(model, input_cache, y, &grads);
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      for (Index start = 0; start < n; start += cfg.batch_size) {
        const Index stop = std::min<Index>(n, start + cfg.batch_size);
        std::vector<Index> rows(order.begin() + start, order.begin() + stop);
        LayerTrace batch_cache;
        batch_cache.input = take_rows(input_cache.input, rows);
        batch_cache.phi = take_rows(input_cache.phi, rows);
        batch_cache.phi_derivative = take_rows(input_cache.phi_derivative, rows);
        batch_cache.basis.values = take_rows(input_cache.basis.values, rows);
        batch_cache.basis.derivatives = take_rows(input_cache.basis.derivatives, rows);
        const Vector yb = take_rows(y, rows);
        check_finite(evaluate(model, batch_cache, yb, &grads), epoch);
        step(grads);
      }
      current_loss = evaluate(model, input_cache, y, nullptr);
    }
    check_finite(current_loss, epoch);
    result.loss_history.push_back(current_loss);
    if (current_loss < best_loss) {
      best_loss = current_loss;
      best = model;
    }
  }
  result.model = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw Error(ErrorCode::config, "weight array has wrong row count");
  Matrix M(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw Error(ErrorCode::config, "weight array has wrong column count");
    for (Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

inline nlohmann::json to_json(const KanModel& model) {
  nlohmann::json j;
  j["format"] = "kanfs-model/1";
  j["task"] = std::string(to_string(model.task.kind));
  j["n_classes"] = model.task.n_classes;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : model.layers) {
    nlohmann::json lj;
    lj["in_dim"] = layer.in_dim();
    lj["out_dim"] = layer.out_dim();
    lj["degree"] = layer.knots.front().degree();
    lj["basis_size"] = layer.basis_size();
    lj["activation"] = std::string(to_string(layer.activation));
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& kv : layer.knots) knots.push_back(std::vector<double>(kv.knots().begin(), kv.knots().end()));
    lj["knots"] = std::move(knots);
    lj["base"] = matrix_to_json(layer.base);
    lj["spline"] = matrix_to_json(layer.spline);
    lj["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

inline KanModel model_from_json(const nlohmann::json& j) {
  try {
    KanModel model;
    const auto task = j.at("task").get<std::string>();
    if (task == "classification")
      model.task = Task::classification(j.at("n_classes").get<int>());
    else if (task == "regression")
      model.task = Task::regression();
    else
      throw Error(ErrorCode::config, "unknown task '" + task + "'");
    for (const auto& lj : j.at("layers")) {
      KanLayer layer;
      const auto in = lj.at("in_dim").get<Index>();
      const auto out = lj.at("out_dim").get<Index>();
      const auto degree = lj.at("degree").get<int>();
      layer.activation = activation_from_string(lj.at("activation").get<std::string>());
      for (const auto& kj : lj.at("knots")) layer.knots.emplace_back(kj.get<std::vector<double>>(), degree);
      const int K = lj.at("basis_size").get<int>();
      layer.base = matrix_from_json(lj.at("base"), out, in);
      layer.spline = matrix_from_json(lj.at("spline"), out, in * K);
      if (lj.contains("bias")) {
        const auto b = lj.at("bias").get<std::vector<double>>();
        layer.bias = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace kanfs
