#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// Per-column standardization fitted on the training set only.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 1/std, with a floor on std

  static Scaler fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
};

// Highest validation F1 wins; ties go to the earliest epoch. -1 when empty.
int select_checkpoint(const std::vector<EpochRecord>& epochs);

struct ModelRun {
  std::string model_id;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int selected_epoch = -1;
  std::vector<double> parameters;  // flattened snapshot of the selected epoch
};

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.1;
  double l2 = 1e-4;           // loss += 0.5 * l2 * ||W||^2 (biases excluded)
  double init_scale = 0.01;   // weights ~ N(0, init_scale^2), biases zero
  int batch_size = 0;         // 0 = full batch (MLP only)
  std::vector<int> hidden;    // hidden layer widths (MLP only)
  bool standardize = true;
  std::uint64_t seed = 0;
};

// Fully-connected softmax classifier; empty hidden list = plain linear
// softmax. tanh nonlinearity between layers.
struct SoftmaxNet {
  std::vector<Matrix> weights;          // per layer, out x in
  std::vector<Eigen::VectorXd> biases;  // per layer

  int n_classes() const;
  Matrix logits(const Matrix& x) const;           // n x k
  std::vector<int> predict(const Matrix& x) const;  // argmax, lowest index wins ties

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
  static SoftmaxNet init(int input_dim, const std::vector<int>& hidden, int n_classes,
                         double init_scale, std::uint64_t seed);
};

struct TrainResult {
  SoftmaxNet model;  // parameters of the selected epoch
  Scaler scaler;
  ModelRun run;
};

// Multinomial logistic regression via full-batch gradient descent with L2.
// Throws SingleClassTrainSet, NonFiniteLoss.
TrainResult train_linear_softmax(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 int n_classes, const TrainConfig& config);

// Fully-connected net trained with mini-batch gradient descent; backprop
// implemented from scratch. Throws SingleClassTrainSet, NonFiniteLoss.
TrainResult train_mlp(const Matrix& x_train, const std::vector<int>& y_train,
                      const Matrix& x_val, const std::vector<int>& y_val, int n_classes,
                      const TrainConfig& config);

// Mean softmax cross-entropy (plus the L2 term) and its analytic gradient at
// the given flat parameter vector. Shared by the trainer and the
// finite-difference gradient check.
double mlp_loss_and_gradient(const SoftmaxNet& architecture, const std::vector<double>& flat,
                             const Matrix& x, const std::vector<int>& y, double l2,
                             std::vector<double>* gradient);

}  // namespace emobench
