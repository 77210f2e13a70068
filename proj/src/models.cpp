#include "emobench/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "emobench/metrics.hpp"
#include "emobench/rng.hpp"

namespace emobench {

Scaler Scaler::fit(const Matrix& x) {
  Scaler s;
  s.mean = x.colwise().mean();
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var =
        (x.col(c).array() - s.mean(c)).square().sum() / static_cast<double>(x.rows());
    s.scale(c) = 1.0 / std::max(std::sqrt(var), 1e-8);
  }
  return s;
}

Matrix Scaler::apply(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() * scale.transpose().array();
}

int select_checkpoint(const std::vector<EpochRecord>& epochs) {
  int best = -1;
  double best_f1 = -1.0;
  for (const EpochRecord& e : epochs) {
    if (e.val_macro_f1 > best_f1) {  // strict: earliest epoch wins ties
      best_f1 = e.val_macro_f1;
      best = e.epoch;
    }
  }
  return best;
}

int SoftmaxNet::n_classes() const {
  return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
}

Matrix SoftmaxNet::logits(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t layer = 0; layer < weights.size(); ++layer) {
    Matrix z = h * weights[layer].transpose();
    z.rowwise() += biases[layer].transpose();
    if (layer + 1 < weights.size()) {
      h = z.array().tanh().matrix();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

std::vector<int> SoftmaxNet::predict(const Matrix& x) const {
  const Matrix z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<double> SoftmaxNet::flatten() const {
  std::vector<double> flat;
  for (std::size_t layer = 0; layer < weights.size(); ++layer) {
    const Matrix& w = weights[layer];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    for (Eigen::Index r = 0; r < biases[layer].size(); ++r) flat.push_back(biases[layer](r));
  }
  return flat;
}

void SoftmaxNet::unflatten(const std::vector<double>& flat) {
  std::size_t at = 0;
  for (std::size_t layer = 0; layer < weights.size(); ++layer) {
    Matrix& w = weights[layer];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[at++];
    }
    for (Eigen::Index r = 0; r < biases[layer].size(); ++r) biases[layer](r) = flat[at++];
  }
}

SoftmaxNet SoftmaxNet::init(int input_dim, const std::vector<int>& hidden, int n_classes,
                            double init_scale, std::uint64_t seed) {
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_classes);

  Rng rng(derive_seed(seed, {0x1417}));
  SoftmaxNet net;
  for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
    Matrix w(sizes[layer + 1], sizes[layer]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = init_scale * rng.normal();
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(sizes[layer + 1]));
  }
  return net;
}

namespace {

// Row-wise softmax with the usual max shift.
Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double zmax = z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      p(i, c) = std::exp(z(i, c) - zmax);
      sum += p(i, c);
    }
    p.row(i) /= sum;
  }
  return p;
}

double weight_penalty(const SoftmaxNet& net, double l2) {
  double sq = 0.0;
  for (const Matrix& w : net.weights) sq += w.squaredNorm();
  return 0.5 * l2 * sq;
}

void require_two_classes(const std::vector<int>& y) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) {
    throw Error(ErrorCode::SingleClassTrainSet,
                "training set contains " + std::to_string(classes.size()) + " class(es)");
  }
}

void require_finite_loss(double loss, int epoch, const std::string& model_id) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::NonFiniteLoss,
                model_id + " diverged at epoch " + std::to_string(epoch) + " (loss=" +
                    std::to_string(loss) + "); reduce the learning rate");
  }
}

EpochRecord eval_epoch(const SoftmaxNet& net, const Matrix& x_val,
                       const std::vector<int>& y_val, int n_classes, int epoch,
                       double train_loss) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = train_loss;
  if (y_val.empty()) return rec;
  const std::vector<int> pred = net.predict(x_val);
  const ConfusionResult r = confusion_metrics(pred, y_val, n_classes);
  rec.val_accuracy = r.metrics.accuracy;
  rec.val_macro_f1 = r.metrics.macro_f1;
  return rec;
}

}  // namespace

double mlp_loss_and_gradient(const SoftmaxNet& architecture, const std::vector<double>& flat,
                             const Matrix& x, const std::vector<int>& y, double l2,
                             std::vector<double>* gradient) {
  SoftmaxNet net = architecture;
  net.unflatten(flat);

  const auto n = static_cast<double>(x.rows());
  const std::size_t n_layers = net.weights.size();

  // Forward pass, keeping post-activation values per layer.
  std::vector<Matrix> activations;  // activations[0] = input
  activations.reserve(n_layers + 1);
  activations.push_back(x);
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    Matrix z = activations.back() * net.weights[layer].transpose();
    z.rowwise() += net.biases[layer].transpose();
    if (layer + 1 < n_layers) {
      activations.push_back(z.array().tanh().matrix());
    } else {
      activations.push_back(std::move(z));
    }
  }

  const Matrix probs = softmax_rows(activations.back());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    loss -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss = loss / n + weight_penalty(net, l2);

  if (gradient != nullptr) {
    std::vector<Matrix> grad_w(n_layers);
    std::vector<Eigen::VectorXd> grad_b(n_layers);

    // dL/dz at the output.
    Matrix delta = probs;
    for (Eigen::Index i = 0; i < x.rows(); ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= n;

    for (std::size_t layer = n_layers; layer-- > 0;) {
      grad_w[layer] = delta.transpose() * activations[layer] + l2 * net.weights[layer];
      grad_b[layer] = delta.colwise().sum().transpose();
      if (layer > 0) {
        // Back through tanh: a = tanh(z) -> da/dz = 1 - a^2.
        Matrix back = delta * net.weights[layer];
        delta = back.array() * (1.0 - activations[layer].array().square());
      }
    }

    gradient->clear();
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
      for (Eigen::Index r = 0; r < grad_w[layer].rows(); ++r) {
        for (Eigen::Index c = 0; c < grad_w[layer].cols(); ++c) {
          gradient->push_back(grad_w[layer](r, c));
        }
      }
      for (Eigen::Index r = 0; r < grad_b[layer].size(); ++r) {
        gradient->push_back(grad_b[layer](r));
      }
    }
  }
  return loss;
}

TrainResult train_linear_softmax(const Matrix& x_train, const std::vector<int>& y_train,
                                 const Matrix& x_val, const std::vector<int>& y_val,
                                 int n_classes, const TrainConfig& config) {
  require_two_classes(y_train);

  TrainResult result;
  result.scaler = config.standardize ? Scaler::fit(x_train)
                                     : Scaler{Eigen::VectorXd::Zero(x_train.cols()),
                                              Eigen::VectorXd::Ones(x_train.cols())};
  const Matrix xt = result.scaler.apply(x_train);
  const Matrix xv = x_val.rows() > 0 ? result.scaler.apply(x_val) : x_val;

  SoftmaxNet net = SoftmaxNet::init(static_cast<int>(xt.cols()), {}, n_classes,
                                    config.init_scale, config.seed);
  Matrix& w = net.weights[0];
  Eigen::VectorXd& b = net.biases[0];

  result.run.model_id = "linear_softmax";
  result.run.seed = config.seed;

  const auto n = static_cast<double>(xt.rows());
  double best_f1 = -1.0;
  std::vector<double> best_params = net.flatten();
  int best_epoch = -1;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Matrix z = xt * w.transpose();
    z.rowwise() += b.transpose();
    const Matrix probs = softmax_rows(z);

    double loss = 0.0;
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
      loss -= std::log(std::max(probs(i, y_train[static_cast<std::size_t>(i)]), 1e-300));
    }
    loss = loss / n + weight_penalty(net, config.l2);
    require_finite_loss(loss, epoch, result.run.model_id);

    Matrix delta = probs;
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
      delta(i, y_train[static_cast<std::size_t>(i)]) -= 1.0;
    }
    delta /= n;
    w -= config.learning_rate * (delta.transpose() * xt + config.l2 * w);
    b -= config.learning_rate * delta.colwise().sum().transpose();

    EpochRecord rec = eval_epoch(net, xv, y_val, n_classes, epoch, loss);
    result.run.epochs.push_back(rec);
    if (rec.val_macro_f1 > best_f1) {
      best_f1 = rec.val_macro_f1;
      best_epoch = epoch;
      best_params = net.flatten();
    }
  }

  result.run.selected_epoch = y_val.empty() ? config.epochs - 1 : best_epoch;
  if (!y_val.empty()) {
    net.unflatten(best_params);
  }
  result.run.parameters = net.flatten();
  result.model = std::move(net);
  return result;
}

TrainResult train_mlp(const Matrix& x_train, const std::vector<int>& y_train,
                      const Matrix& x_val, const std::vector<int>& y_val, int n_classes,
                      const TrainConfig& config) {
  require_two_classes(y_train);

  TrainResult result;
  result.scaler = config.standardize ? Scaler::fit(x_train)
                                     : Scaler{Eigen::VectorXd::Zero(x_train.cols()),
                                              Eigen::VectorXd::Ones(x_train.cols())};
  const Matrix xt = result.scaler.apply(x_train);
  const Matrix xv = x_val.rows() > 0 ? result.scaler.apply(x_val) : x_val;

  SoftmaxNet net = SoftmaxNet::init(static_cast<int>(xt.cols()), config.hidden, n_classes,
                                    config.init_scale, config.seed);

  result.run.model_id = "mlp";
  result.run.seed = config.seed;

  const auto n = static_cast<Eigen::Index>(xt.rows());
  const Eigen::Index batch =
      config.batch_size > 0 ? std::min<Eigen::Index>(config.batch_size, n) : n;

  Rng shuffle_rng(derive_seed(config.seed, {0x3a11}));
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_f1 = -1.0;
  std::vector<double> best_params = net.flatten();
  int best_epoch = -1;

  std::vector<double> flat = net.flatten();
  std::vector<double> grad;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    Eigen::Index done = 0;
    while (done < n) {
      const Eigen::Index size = std::min(batch, n - done);
      Matrix xb(size, xt.cols());
      std::vector<int> yb(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) {
        xb.row(i) = xt.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(done + i)]));
        yb[static_cast<std::size_t>(i)] = y_train[order[static_cast<std::size_t>(done + i)]];
      }
      const double loss = mlp_loss_and_gradient(net, flat, xb, yb, config.l2, &grad);
      require_finite_loss(loss, epoch, result.run.model_id);
      for (std::size_t p = 0; p < flat.size(); ++p) {
        flat[p] -= config.learning_rate * grad[p];
      }
      epoch_loss += loss * static_cast<double>(size);
      done += size;
    }
    epoch_loss /= static_cast<double>(n);
    net.unflatten(flat);

    EpochRecord rec = eval_epoch(net, xv, y_val, n_classes, epoch, epoch_loss);
    result.run.epochs.push_back(rec);
    if (rec.val_macro_f1 > best_f1) {
      best_f1 = rec.val_macro_f1;
      best_epoch = epoch;
      best_params = flat;
    }
  }

  result.run.selected_epoch = y_val.empty() ? config.epochs - 1 : best_epoch;
  if (!y_val.empty()) {
    net.unflatten(best_params);
  }
  result.run.parameters = net.flatten();
  result.model = std::move(net);
  return result;
}

}  // namespace emobench
