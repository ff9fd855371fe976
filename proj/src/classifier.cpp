#include "rmask/classifier.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rmask/binary_io.hpp"
#include "rmask/error.hpp"
#include "rmask/rng.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "classifier";

struct DropoutPlan {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::span<const NodeId> row_ids;  // node id of each row, keys the mask stream
};

// Mask for the input of `layer`; one stream per (epoch, layer, node) so the
// mask a node receives does not depend on its row position.
Eigen::MatrixXd dropout_mask(const DropoutPlan& plan, std::size_t layer, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - plan.rate);
  for (Eigen::Index i = 0; i < rows; ++i) {
    CounterRng rng(plan.seed, StreamTag::dropout, static_cast<std::uint32_t>(plan.epoch),
                   static_cast<std::uint32_t>(layer), plan.row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform() < plan.rate ? 0.0 : keep_scale;
  }
  return mask;
}

// Mean cross-entropy plus L2 penalty; fills grad when non-null.
double forward_backward(const ModelParams& m, const Eigen::MatrixXd& x, std::span<const int> labels, double wd,
                        Gradients* grad, const DropoutPlan* drop) {
  const std::size_t depth = m.layers.size();
  const auto n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError(kModule, "row count and label count differ");
  if (depth == 0) throw ContractViolation(kModule, "model has no layers");
  if (x.cols() != m.layers.front().weight.rows())
    throw ShapeError(kModule, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                  std::to_string(m.layers.front().weight.rows()));

  std::vector<Eigen::MatrixXd> inputs(depth), pre(depth), masks(depth);
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < depth; ++l) {
    if (drop && drop->rate > 0.0) {
      masks[l] = dropout_mask(*drop, l, a.rows(), a.cols());
      a = a.cwiseProduct(masks[l]);
    }
    inputs[l] = a;
    pre[l] = (a * m.layers[l].weight).rowwise() + m.layers[l].bias;
    if (l + 1 < depth)
      a = m.activation == Activation::relu ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }

  const Eigen::MatrixXd probs = softmax_rows(pre.back());
  const auto classes = probs.cols();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= classes) throw RangeError(kModule, "label outside the model's classes");
    // log-softmax from the logits keeps the loss finite for saturated rows.
    const auto row = pre.back().row(i);
    const double top = row.maxCoeff();
    const double lse = top + std::log((row.array() - top).exp().sum());
    loss -= row(y) - lse;
  }
  loss /= static_cast<double>(std::max<Eigen::Index>(1, n));
  for (const auto& layer : m.layers) loss += 0.5 * wd * layer.weight.squaredNorm();

  if (grad) {
    grad->weight.resize(depth);
    grad->bias.resize(depth);
    Eigen::MatrixXd g = probs;
    for (Eigen::Index i = 0; i < n; ++i) g(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    g /= static_cast<double>(std::max<Eigen::Index>(1, n));
    for (std::size_t l = depth; l-- > 0;) {
      grad->weight[l] = inputs[l].transpose() * g + wd * m.layers[l].weight;
      grad->bias[l] = g.colwise().sum();
      if (l == 0) break;
      Eigen::MatrixXd back = g * m.layers[l].weight.transpose();
      if (masks[l].size() != 0) back = back.cwiseProduct(masks[l]);
      if (m.activation == Activation::relu) back = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      g = std::move(back);
    }
  }
  return loss;
}

Eigen::MatrixXd gather_rows(const FeatureMatrix& x, std::span<const NodeId> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, std::span<const NodeId> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (NodeId v : rows) out.push_back(labels[v]);
  return out;
}

Eigen::MatrixXd forward(const ModelParams& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    a = (a * m.layers[l].weight).rowwise() + m.layers[l].bias;
    if (l + 1 < m.layers.size() && m.activation == Activation::relu) a = a.cwiseMax(0.0);
  }
  return a;
}
}  // namespace

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const FeatureMatrix& x, std::span<const NodeId> rows) {
  if (rows.empty()) throw ParameterError(kModule, "cannot fit a standardizer on zero rows");
  const Eigen::MatrixXd sample = gather_rows(x, rows);
  Standardizer s;
  s.mean = sample.colwise().mean();
  const Eigen::MatrixXd centered = sample.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(rows.size())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  if (x.cols() != mean.size()) throw ShapeError(kModule, "standardizer width differs from the features");
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers) total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return total;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
    throw ParameterError(kModule, "learning_rate must be a non-negative number");
  if (!(cfg.weight_decay >= 0.0)) throw ParameterError(kModule, "weight_decay must be non-negative");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ParameterError(kModule, "dropout must lie in [0, 1)");
  if (cfg.patience > cfg.max_epochs) throw ParameterError(kModule, "patience must not exceed max_epochs");
  if (cfg.num_layers < 1) throw ParameterError(kModule, "num_layers must be at least 1");
  if (cfg.num_layers > 1 && cfg.hidden_dim < 1) throw ParameterError(kModule, "hidden_dim must be positive");
}

ModelParams init_model(std::size_t input_dim, std::size_t num_classes, const TrainConfig& cfg) {
  validate(cfg);
  if (input_dim == 0 || num_classes == 0) throw ParameterError(kModule, "model dimensions must be positive");
  ModelParams m;
  m.activation = Activation::relu;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::size_t out = l + 1 == cfg.num_layers ? num_classes : cfg.hidden_dim;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      CounterRng rng(cfg.seed, StreamTag::model_init, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(i));
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
    }
    layer.bias = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(out));
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    out.row(i) = (z.row(i).array() - top).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Eigen::MatrixXd logits(const ModelParams& m, const FeatureMatrix& x) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim())
    throw ShapeError(kModule, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                  std::to_string(m.input_dim()));
  if (m.standardizer) return forward(m, m.standardizer->apply(x));
  return forward(m, x);
}

std::vector<int> predict(const ModelParams& m, const FeatureMatrix& x) { return argmax_rows(logits(m, x)); }

double accuracy(std::span<const int> predicted, std::span<const int> labels, std::span<const NodeId> rows) {
  if (predicted.size() != labels.size()) throw ShapeError(kModule, "prediction and label counts differ");
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (NodeId v : rows) {
    if (v >= predicted.size()) throw RangeError(kModule, "evaluation index outside the predictions");
    correct += predicted[v] == labels[v] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double loss_and_gradient(const ModelParams& m, const Eigen::MatrixXd& x, std::span<const int> labels,
                         double weight_decay, Gradients* grad) {
  return forward_backward(m, x, labels, weight_decay, grad, nullptr);
}

double grad_check(const ModelParams& m, const Eigen::MatrixXd& x, std::span<const int> labels, double epsilon_fd,
                  double weight_decay) {
  Gradients analytic;
  loss_and_gradient(m, x, labels, weight_decay, &analytic);
  ModelParams probe = m;
  double worst = 0.0;
  auto compare = [&](double& param, double exact) {
    const double saved = param;
    param = saved + epsilon_fd;
    const double up = loss_and_gradient(probe, x, labels, weight_decay, nullptr);
    param = saved - epsilon_fd;
    const double down = loss_and_gradient(probe, x, labels, weight_decay, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon_fd);
    const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(exact - numeric) / scale);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) compare(layer.weight(i, j), analytic.weight[l](i, j));
    for (Eigen::Index j = 0; j < layer.bias.size(); ++j) compare(layer.bias(j), analytic.bias[l](j));
  }
  return worst;
}

void Adam::step(ModelParams& params, const Gradients& g) {
  const std::size_t depth = params.layers.size();
  if (m_.weight.size() != depth) {
    m_.weight.clear();
    m_.bias.clear();
    for (const auto& l : params.layers) {
      m_.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      m_.bias.push_back(Eigen::RowVectorXd::Zero(l.bias.size()));
    }
    v_ = m_;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < depth; ++l) {
    update(params.layers[l].weight, m_.weight[l], v_.weight[l], g.weight[l]);
    update(params.layers[l].bias, m_.bias[l], v_.bias[l], g.bias[l]);
  }
}

TrainResult train(const FeatureMatrix& x, const LabeledSplit& split, const TrainConfig& cfg) {
  validate(cfg);
  if (split.train.empty()) throw ParameterError(kModule, "training set is empty");
  if (split.labels.size() != static_cast<std::size_t>(x.rows()))
    throw ShapeError(kModule, "labels cover " + std::to_string(split.labels.size()) + " nodes, features " +
                                  std::to_string(x.rows()));
  const int classes = split.num_classes > 0 ? split.num_classes
                                            : 1 + *std::max_element(split.labels.begin(), split.labels.end());

  TrainResult result;
  result.model = init_model(static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(classes), cfg);
  std::optional<Standardizer> standardizer;
  FeatureMatrix prepared;
  const FeatureMatrix* features = &x;
  if (cfg.standardize) {
    standardizer = Standardizer::fit(x, split.train);
    prepared = standardizer->apply(x);
    features = &prepared;
  }
  const Eigen::MatrixXd train_x = gather_rows(*features, split.train);
  const std::vector<int> train_y = gather_labels(split.labels, split.train);
  const Eigen::MatrixXd val_x = gather_rows(*features, split.val);
  const std::vector<int> val_y = gather_labels(split.labels, split.val);

  auto val_accuracy = [&](const ModelParams& m) {
    if (split.val.empty()) return 0.0;
    const auto pred = argmax_rows(forward(m, val_x));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_y[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
  };

  ModelParams current = result.model;
  result.initial_train_loss = loss_and_gradient(current, train_x, train_y, cfg.weight_decay, nullptr);
  result.best_val_acc = val_accuracy(current);
  result.best_epoch = 0;

  Adam adam(cfg.learning_rate);
  Gradients grad;
  DropoutPlan plan{cfg.dropout, cfg.seed, 0, split.train};
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    plan.epoch = epoch;
    const double loss = forward_backward(current, train_x, train_y, cfg.weight_decay, &grad,
                                         cfg.dropout > 0.0 ? &plan : nullptr);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss at epoch " << epoch << " (learning_rate " << cfg.learning_rate
          << ", weight_decay " << cfg.weight_decay << ", last finite loss "
          << (result.history.empty() ? result.initial_train_loss : result.history.back().train_loss) << ")";
      throw NumericError(kModule, msg.str());
    }
    adam.step(current, grad);
    const double acc = val_accuracy(current);
    result.history.push_back({epoch, loss, acc});
    if (acc > result.best_val_acc || (split.val.empty() && epoch == cfg.max_epochs)) {
      result.best_val_acc = acc;
      result.best_epoch = epoch;
      result.model = current;
      since_best = 0;
    } else if (++since_best >= cfg.patience && !split.val.empty()) {
      break;
    }
  }
  result.final_train_loss = loss_and_gradient(result.model, train_x, train_y, cfg.weight_decay, nullptr);
  result.model.standardizer = std::move(standardizer);
  return result;
}

// ---------------------------------------------------------------------------

void write_checkpoint(const ModelParams& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(kModule, "cannot write " + path.string());
  binary::write_magic(out, "RMC1");
  binary::write_le<std::uint64_t>(out, m.layers.size());
  binary::write_le<std::uint64_t>(out, m.activation == Activation::relu ? 1 : 0);
  for (const auto& l : m.layers) {
    binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(l.weight.rows()));
    binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) binary::write_le<double>(out, l.weight(i, j));
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) binary::write_le<double>(out, l.bias(j));
  }
  binary::write_le<std::uint64_t>(out, m.standardizer ? 1 : 0);
  if (m.standardizer) {
    binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.standardizer->mean.size()));
    for (Eigen::Index j = 0; j < m.standardizer->mean.size(); ++j) binary::write_le<double>(out, m.standardizer->mean(j));
    for (Eigen::Index j = 0; j < m.standardizer->scale.size(); ++j)
      binary::write_le<double>(out, m.standardizer->scale(j));
  }
  if (!out) throw DataError(kModule, "failed writing " + path.string());
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, "cannot open " + path.string());
  binary::expect_magic(in, "RMC1", path.string());
  ModelParams m;
  const auto depth = binary::read_le<std::uint64_t>(in, "layer count");
  m.activation = binary::read_le<std::uint64_t>(in, "activation") == 1 ? Activation::relu : Activation::none;
  for (std::uint64_t l = 0; l < depth; ++l) {
    const auto rows = static_cast<Eigen::Index>(binary::read_le<std::uint64_t>(in, "layer rows"));
    const auto cols = static_cast<Eigen::Index>(binary::read_le<std::uint64_t>(in, "layer cols"));
    if (!m.layers.empty() && m.layers.back().weight.cols() != rows)
      throw DataError(kModule, path.string() + ": layer dimensions do not chain");
    DenseLayer layer;
    layer.weight.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) layer.weight(i, j) = binary::read_le<double>(in, "weight");
    layer.bias.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j) layer.bias(j) = binary::read_le<double>(in, "bias");
    m.layers.push_back(std::move(layer));
  }
  if (binary::read_le<std::uint64_t>(in, "standardizer flag") == 1) {
    const auto dim = static_cast<Eigen::Index>(binary::read_le<std::uint64_t>(in, "standardizer width"));
    Standardizer s;
    s.mean.resize(dim);
    s.scale.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) s.mean(j) = binary::read_le<double>(in, "mean");
    for (Eigen::Index j = 0; j < dim; ++j) s.scale(j) = binary::read_le<double>(in, "scale");
    m.standardizer = std::move(s);
  }
  return m;
}

}  // namespace rmask
