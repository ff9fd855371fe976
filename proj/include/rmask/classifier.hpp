#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask {

enum class Activation { none, relu };

struct DenseLayer {
  Eigen::MatrixXd weight;  // in_dim x out_dim
  Eigen::RowVectorXd bias;  // out_dim
};

// Per-column affine map fitted on training rows: (x - mean) / scale.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const FeatureMatrix& x, std::span<const NodeId> rows);
  FeatureMatrix apply(const FeatureMatrix& x) const;
};

struct ModelParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::relu;  // between layers, never after the last
  std::optional<Standardizer> standardizer;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows()); }
  std::size_t num_classes() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols()); }
  std::size_t parameter_count() const;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.0;
  std::size_t max_epochs = 300;
  std::size_t patience = 100;
  std::uint64_t seed = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 1;  // 1 = multinomial logistic regression
  bool standardize = true;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  ModelParams model;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = initial parameters
  double best_val_acc = 0.0;
  double initial_train_loss = 0.0;  // before the first update, no dropout
  double final_train_loss = 0.0;    // returned parameters, no dropout
};

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ModelParams init_model(std::size_t input_dim, std::size_t num_classes, const TrainConfig& cfg);

// Full-batch Adam on mean softmax cross-entropy over the training rows plus
// (weight_decay / 2) * sum |W|^2, with early stopping on validation accuracy.
TrainResult train(const FeatureMatrix& x, const LabeledSplit& split, const TrainConfig& cfg);

// Raw logits; applies the model's standardizer first when present.
Eigen::MatrixXd logits(const ModelParams& m, const FeatureMatrix& x);
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);
// Row-wise argmax; ties resolve to the smaller class index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);
std::vector<int> predict(const ModelParams& m, const FeatureMatrix& x);
double accuracy(std::span<const int> predicted, std::span<const int> labels, std::span<const NodeId> rows);

struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::RowVectorXd> bias;
};

// Loss of the model on (x, labels) without dropout or standardization, and
// optionally its gradient.
double loss_and_gradient(const ModelParams& m, const Eigen::MatrixXd& x, std::span<const int> labels,
                         double weight_decay, Gradients* grad);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-7)
// with central differences of step epsilon_fd.
double grad_check(const ModelParams& m, const Eigen::MatrixXd& x, std::span<const int> labels, double epsilon_fd,
                  double weight_decay = 0.0);

// Adam with bias-corrected moments (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ModelParams& m, const Gradients& g);
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  Gradients m_, v_;
};

void write_checkpoint(const ModelParams& m, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace rmask
