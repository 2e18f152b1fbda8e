#pragma once

#include "msf/core.hpp"
#include "msf/random.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msf {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr std::array<int, 5> kHiddenCandidates{2, 4, 6, 8, 10};

struct NetworkShape {
  Index n_in = 1;
  Index n_hidden = 2;
  Index n_out = 1;

  Index hidden_parameter_count() const { return n_hidden * (n_in + 1); }
  Index parameter_count() const { return hidden_parameter_count() + n_out * (n_hidden + 1); }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Three-layer network y = W_o sigma(W_r x + b_r) + b_o with logistic hidden units and a
/// linear output layer.
///
/// Flat parameter order: for each hidden unit j the block (W_r(j, 0..n_in-1), b_r(j)),
/// then for each output h the block (W_o(h, 0..n_hidden-1), b_o(h)).
template <typename Scalar>
struct FnnParams {
  MatrixX<Scalar> hidden_weights;  // n_hidden x n_in
  VectorX<Scalar> hidden_biases;   // n_hidden
  MatrixX<Scalar> output_weights;  // n_out x n_hidden
  VectorX<Scalar> output_biases;   // n_out

  NetworkShape shape() const { return {hidden_weights.cols(), hidden_weights.rows(), output_weights.rows()}; }

  static FnnParams zeros(const NetworkShape& s) {
    return {MatrixX<Scalar>::Zero(s.n_hidden, s.n_in), VectorX<Scalar>::Zero(s.n_hidden),
            MatrixX<Scalar>::Zero(s.n_out, s.n_hidden), VectorX<Scalar>::Zero(s.n_out)};
  }

  /// Every parameter uniform in [-half_width, half_width].
  static FnnParams random(const NetworkShape& s, Rng& rng, double half_width = 0.5) {
    VectorX<Scalar> flat(s.parameter_count());
    for (Index p = 0; p < flat.size(); ++p) flat(p) = static_cast<Scalar>(uniform(rng, -half_width, half_width));
    return unflatten(s, flat);
  }

  VectorX<Scalar> flatten() const {
    const NetworkShape s = shape();
    VectorX<Scalar> flat(s.parameter_count());
    Index p = 0;
    for (Index j = 0; j < s.n_hidden; ++j) {
      for (Index i = 0; i < s.n_in; ++i) flat(p++) = hidden_weights(j, i);
      flat(p++) = hidden_biases(j);
    }
    for (Index h = 0; h < s.n_out; ++h) {
      for (Index j = 0; j < s.n_hidden; ++j) flat(p++) = output_weights(h, j);
      flat(p++) = output_biases(h);
    }
    return flat;
  }

  static FnnParams unflatten(const NetworkShape& s, const Eigen::Ref<const VectorX<Scalar>>& flat) {
    if (flat.size() != s.parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
    FnnParams out = zeros(s);
    Index p = 0;
    for (Index j = 0; j < s.n_hidden; ++j) {
      for (Index i = 0; i < s.n_in; ++i) out.hidden_weights(j, i) = flat(p++);
      out.hidden_biases(j) = flat(p++);
    }
    for (Index h = 0; h < s.n_out; ++h) {
      for (Index j = 0; j < s.n_hidden; ++j) out.output_weights(h, j) = flat(p++);
      out.output_biases(h) = flat(p++);
    }
    return out;
  }
};

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return Scalar(1) / (Scalar(1) + std::exp(-z));
}

template <typename Scalar>
void check_shape(const FnnParams<Scalar>& params) {
  const auto s = params.shape();
  if (params.hidden_biases.size() != s.n_hidden || params.output_weights.cols() != s.n_hidden ||
      params.output_biases.size() != s.n_out)
    throw std::invalid_argument("inconsistent network parameter shapes");
}

/// Hidden activations for a batch of inputs (rows).
template <typename Scalar>
MatrixX<Scalar> hidden_activations(const FnnParams<Scalar>& params, const Eigen::Ref<const MatrixX<Scalar>>& inputs) {
  MatrixX<Scalar> net = inputs * params.hidden_weights.transpose();
  net.rowwise() += params.hidden_biases.transpose();
  return net.unaryExpr([](Scalar z) { return sigmoid(z); });
}

template <typename Scalar>
MatrixX<Scalar> forward_batch(const FnnParams<Scalar>& params, const Eigen::Ref<const MatrixX<Scalar>>& inputs) {
  check_shape(params);
  if (inputs.cols() != params.shape().n_in) throw std::invalid_argument("input width does not match the network");
  MatrixX<Scalar> out = hidden_activations<Scalar>(params, inputs) * params.output_weights.transpose();
  out.rowwise() += params.output_biases.transpose();
  return out;
}

template <typename Scalar>
VectorX<Scalar> forward(const FnnParams<Scalar>& params, const Eigen::Ref<const VectorX<Scalar>>& x) {
  check_shape(params);
  if (x.size() != params.shape().n_in) throw std::invalid_argument("input length does not match the network");
  const VectorX<Scalar> hidden =
      (params.hidden_weights * x + params.hidden_biases).unaryExpr([](Scalar z) { return sigmoid(z); });
  return params.output_weights * hidden + params.output_biases;
}

template <typename Scalar>
Scalar mse(const Eigen::Ref<const VectorX<Scalar>>& pred, const Eigen::Ref<const VectorX<Scalar>>& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("mse: length mismatch");
  if (pred.size() == 0) throw std::invalid_argument("mse: empty input");
  return (pred - target).squaredNorm() / static_cast<Scalar>(pred.size());
}

/// dy_h / dtheta_p for one input, in the flat parameter order.
template <typename Scalar>
MatrixX<Scalar> jacobian(const FnnParams<Scalar>& params, const Eigen::Ref<const VectorX<Scalar>>& x) {
  check_shape(params);
  const NetworkShape s = params.shape();
  if (x.size() != s.n_in) throw std::invalid_argument("input length does not match the network");
  const VectorX<Scalar> a =
      (params.hidden_weights * x + params.hidden_biases).unaryExpr([](Scalar z) { return sigmoid(z); });
  MatrixX<Scalar> jac = MatrixX<Scalar>::Zero(s.n_out, s.parameter_count());
  const Index ph = s.hidden_parameter_count();
  for (Index h = 0; h < s.n_out; ++h) {
    for (Index j = 0; j < s.n_hidden; ++j) {
      const Scalar back = params.output_weights(h, j) * a(j) * (Scalar(1) - a(j));
      const Index base = j * (s.n_in + 1);
      for (Index i = 0; i < s.n_in; ++i) jac(h, base + i) = back * x(i);
      jac(h, base + s.n_in) = back;
    }
    const Index base = ph + h * (s.n_hidden + 1);
    jac.block(h, base, 1, s.n_hidden) = a.transpose();
    jac(h, base + s.n_hidden) = Scalar(1);
  }
  return jac;
}

struct TrainConfig {
  int max_epochs = 1000;
  double lambda_init = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double lambda_max = 1e10;
  double gradient_tol = 1e-8;
  double mse_goal = 0.0;
  double init_half_width = 0.5;
  std::uint64_t seed = 0;
};

struct TrainReport {
  int epochs_run = 0;
  double final_mse = 0.0;
  std::vector<double> mse_trace;  // initial MSE, then one entry per accepted step
  std::string converged_reason;   // max_epochs | gradient | mse_goal | lambda_overflow
  double final_lambda = 0.0;
};

template <typename Scalar>
struct TrainedNetwork {
  FnnParams<Scalar> params;
  TrainReport report;
};

namespace detail {

/// Pieces of J^T J and J^T e for a batch, exploiting the network structure:
/// the output block is block diagonal with one shared (k+1)x(k+1) block and the hidden block
/// factors as (Z^T Z) .* (W_o^T W_o (x) 1 1^T).
template <typename Scalar>
struct NormalEquations {
  MatrixX<Scalar> zz;        // Ph x Ph
  MatrixX<Scalar> coupling;  // Ph x Ph, W_o^T W_o expanded over each hidden unit's inputs
  MatrixX<Scalar> g;         // Ph x (k+1), Z^T [A 1]
  MatrixX<Scalar> b;         // (k+1) x (k+1), [A 1]^T [A 1]
  MatrixX<Scalar> expand;    // Ph x s, W_o(h, j) for hidden parameter (j, .)
  VectorX<Scalar> grad_hidden;
  MatrixX<Scalar> grad_output;  // (k+1) x s
};

template <typename Scalar>
NormalEquations<Scalar> normal_equations(const FnnParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                                         const MatrixX<Scalar>& errors) {
  const NetworkShape s = params.shape();
  const Index m = inputs.rows();
  const Index n1 = s.n_in + 1;
  const Index k = s.n_hidden;
  const Index ph = s.hidden_parameter_count();

  const MatrixX<Scalar> a = hidden_activations<Scalar>(params, inputs);
  const MatrixX<Scalar> slope = a.array() * (Scalar(1) - a.array());

  MatrixX<Scalar> a1(m, k + 1);
  a1.leftCols(k) = a;
  a1.col(k).setOnes();

  MatrixX<Scalar> z(m, ph);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < s.n_in; ++i) z.col(j * n1 + i) = slope.col(j).cwiseProduct(inputs.col(i));
    z.col(j * n1 + s.n_in) = slope.col(j);
  }

  NormalEquations<Scalar> eq;
  eq.zz = MatrixX<Scalar>::Zero(ph, ph);
  eq.zz.template selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  eq.zz.template triangularView<Eigen::StrictlyUpper>() = eq.zz.transpose();
  eq.g = z.transpose() * a1;
  eq.b = a1.transpose() * a1;

  const MatrixX<Scalar> wtw = params.output_weights.transpose() * params.output_weights;
  eq.coupling.resize(ph, ph);
  eq.expand.resize(ph, s.n_out);
  for (Index j = 0; j < k; ++j) {
    for (Index jj = 0; jj < k; ++jj) eq.coupling.block(j * n1, jj * n1, n1, n1).setConstant(wtw(j, jj));
    for (Index h = 0; h < s.n_out; ++h) eq.expand.block(j * n1, h, n1, 1).setConstant(params.output_weights(h, j));
  }

  const MatrixX<Scalar> q = (errors * params.output_weights).cwiseProduct(slope);  // M x k
  eq.grad_hidden.resize(ph);
  for (Index j = 0; j < k; ++j) {
    eq.grad_hidden.segment(j * n1, s.n_in) = inputs.transpose() * q.col(j);
    eq.grad_hidden(j * n1 + s.n_in) = q.col(j).sum();
  }
  eq.grad_output = a1.transpose() * errors;
  return eq;
}

template <typename Scalar>
VectorX<Scalar> flat_gradient(const NetworkShape& s, const NormalEquations<Scalar>& eq) {
  VectorX<Scalar> g(s.parameter_count());
  g.head(s.hidden_parameter_count()) = eq.grad_hidden;
  for (Index h = 0; h < s.n_out; ++h)
    g.segment(s.hidden_parameter_count() + h * (s.n_hidden + 1), s.n_hidden + 1) = eq.grad_output.col(h);
  return g;
}

/// Solves (J^T J + lambda I) delta = J^T e through the Schur complement of the output
/// block. Returns false when the damped system is not positive definite.
template <typename Scalar>
bool solve_damped(const NetworkShape& s, const NormalEquations<Scalar>& eq, Scalar lambda, VectorX<Scalar>& delta) {
  const Index k1 = s.n_hidden + 1;
  const Index ph = s.hidden_parameter_count();

  const MatrixX<Scalar> damped_b = eq.b + lambda * MatrixX<Scalar>::Identity(k1, k1);
  const Eigen::LLT<MatrixX<Scalar>> b_llt(damped_b);
  if (b_llt.info() != Eigen::Success) return false;

  const MatrixX<Scalar> binv_gt = b_llt.solve(eq.g.transpose());  // (k+1) x Ph
  MatrixX<Scalar> schur = (eq.zz - eq.g * binv_gt).cwiseProduct(eq.coupling);
  schur.diagonal().array() += lambda;

  const MatrixX<Scalar> u = b_llt.solve(eq.grad_output);  // (k+1) x s
  const VectorX<Scalar> rhs = eq.grad_hidden - (eq.expand.cwiseProduct(eq.g * u)).rowwise().sum();

  const Eigen::LLT<MatrixX<Scalar>> s_llt(schur);
  if (s_llt.info() != Eigen::Success) return false;
  const VectorX<Scalar> d_hidden = s_llt.solve(rhs);

  const MatrixX<Scalar> r = eq.expand.array().colwise() * d_hidden.array();
  const MatrixX<Scalar> d_output = b_llt.solve(eq.grad_output - eq.g.transpose() * r);

  delta.resize(s.parameter_count());
  delta.head(ph) = d_hidden;
  for (Index h = 0; h < s.n_out; ++h) delta.segment(ph + h * k1, k1) = d_output.col(h);
  return delta.allFinite();
}

template <typename Scalar>
Scalar sum_squared_error(const FnnParams<Scalar>& params, const MatrixX<Scalar>& inputs, const MatrixX<Scalar>& targets,
                         MatrixX<Scalar>* errors = nullptr) {
  MatrixX<Scalar> e = targets - forward_batch<Scalar>(params, inputs);
  const Scalar sse = e.squaredNorm();
  if (errors) *errors = std::move(e);
  return sse;
}

}  // namespace detail

/// One Levenberg-Marquardt step: the solution of (J^T J + lambda I) delta = J^T e over the
/// whole batch, in the flat parameter order. Throws if the damped system is singular.
template <typename Scalar>
VectorX<Scalar> lm_step(const FnnParams<Scalar>& params, const MatrixX<Scalar>& inputs, const MatrixX<Scalar>& targets,
                        Scalar lambda) {
  MatrixX<Scalar> errors;
  detail::sum_squared_error(params, inputs, targets, &errors);
  const auto eq = detail::normal_equations(params, inputs, errors);
  VectorX<Scalar> delta;
  if (!detail::solve_damped(params.shape(), eq, lambda, delta))
    throw std::runtime_error("damped normal matrix is not positive definite");
  return delta;
}

/// Levenberg-Marquardt training on a batch (rows are samples). A step is kept only when it
/// lowers the training error; otherwise the damping grows and the step is retried.
template <typename Scalar>
TrainedNetwork<Scalar> train_lm(const MatrixX<Scalar>& inputs, const MatrixX<Scalar>& targets,
                                const NetworkShape& shape, const TrainConfig& cfg) {
  if (inputs.rows() < 1) throw std::invalid_argument("training set is empty");
  if (inputs.rows() != targets.rows()) throw std::invalid_argument("inputs and targets differ in row count");
  if (shape.n_in != inputs.cols() || shape.n_out != targets.cols())
    throw std::invalid_argument("network shape does not match the training data");
  if (shape.n_hidden < 1) throw std::invalid_argument("network needs at least one hidden unit");
  if (cfg.max_epochs < 1 || !(cfg.lambda_up > 1.0) || !(cfg.lambda_down > 1.0) || !(cfg.lambda_init > 0.0))
    throw std::invalid_argument("invalid training configuration");

  Rng rng(cfg.seed);
  TrainedNetwork<Scalar> out{FnnParams<Scalar>::random(shape, rng, cfg.init_half_width), {}};
  auto& rep = out.report;
  const auto count = static_cast<Scalar>(targets.size());

  MatrixX<Scalar> errors;
  Scalar sse = detail::sum_squared_error(out.params, inputs, targets, &errors);
  rep.mse_trace.push_back(static_cast<double>(sse / count));
  Scalar lambda = static_cast<Scalar>(cfg.lambda_init);
  rep.converged_reason = "max_epochs";

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (sse / count <= static_cast<Scalar>(cfg.mse_goal)) {
      rep.converged_reason = "mse_goal";
      break;
    }
    const auto eq = detail::normal_equations(out.params, inputs, errors);
    const VectorX<Scalar> grad = detail::flat_gradient(shape, eq);
    if (grad.cwiseAbs().maxCoeff() < static_cast<Scalar>(cfg.gradient_tol)) {
      rep.converged_reason = "gradient";
      break;
    }
    rep.epochs_run = epoch;
    bool accepted = false;
    const VectorX<Scalar> theta = out.params.flatten();
    while (!accepted) {
      VectorX<Scalar> delta;
      if (detail::solve_damped(shape, eq, lambda, delta)) {
        auto candidate = FnnParams<Scalar>::unflatten(shape, theta + delta);
        MatrixX<Scalar> cand_errors;
        const Scalar cand_sse = detail::sum_squared_error(candidate, inputs, targets, &cand_errors);
        if (cand_sse < sse) {
          out.params = std::move(candidate);
          errors = std::move(cand_errors);
          sse = cand_sse;
          rep.mse_trace.push_back(static_cast<double>(sse / count));
          lambda = std::max(lambda / static_cast<Scalar>(cfg.lambda_down), Scalar(1e-20));
          accepted = true;
          continue;
        }
      }
      lambda *= static_cast<Scalar>(cfg.lambda_up);
      if (lambda > static_cast<Scalar>(cfg.lambda_max)) break;
    }
    if (!accepted) {
      rep.converged_reason = "lambda_overflow";
      break;
    }
  }
  rep.final_mse = static_cast<double>(sse / count);
  rep.final_lambda = static_cast<double>(lambda);
  return out;
}

inline TrainedNetwork<double> train_lm(const LagWindowDataset& ds, const NetworkShape& shape, const TrainConfig& cfg) {
  return train_lm<double>(ds.inputs, ds.targets, shape, cfg);
}

/// Akaike criterion for a least-squares network fit: rows * outputs * ln(MSE) + 2P.
inline double network_aic(double mse_value, Index rows, Index outputs, Index parameters) {
  const double floor = std::max(mse_value, std::numeric_limits<double>::min());
  return static_cast<double>(rows * outputs) * std::log(floor) + 2.0 * static_cast<double>(parameters);
}

struct HiddenSelection {
  NetworkShape shape;
  TrainedNetwork<double> network;  // the winning candidate's fit
  std::vector<std::pair<int, double>> scores;  // (hidden units, AIC); failed candidates omitted
};

/// Trains one network per hidden-unit count and keeps the lowest AIC (smaller count on ties).
/// Candidate c is trained with seed derive_seed(cfg.seed, "hidden", c).
HiddenSelection select_hidden_aic(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                  std::span<const int> candidates, const TrainConfig& cfg);

/// Half-open row ranges of k contiguous folds; the first (rows mod k) folds get one extra row.
std::vector<std::pair<Index, Index>> fold_ranges(Index rows, int k);

/// Mean validation MSE over k contiguous folds (fold f trained with derive_seed(cfg.seed, "fold", f)).
double kfold_cv(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, int k, const NetworkShape& shape,
                const TrainConfig& cfg);

/// Picks the hidden-unit count with the lowest k-fold validation MSE, then fits it on all rows.
HiddenSelection select_hidden_cv(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                 std::span<const int> candidates, int folds, const TrainConfig& cfg);

}  // namespace msf
