#include <doctest.h>

#include "fixtures.hpp"
#include "rmask/classifier.hpp"
#include "rmask/error.hpp"

using namespace rmask;
using namespace rmask::testing;

namespace {
// Two Gaussian blobs separated along the first axis.
struct Toy {
  FeatureMatrix x;
  LabeledSplit split;
};

Toy separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Toy t;
  t.x.resize(static_cast<Eigen::Index>(n), 3);
  t.split.labels.resize(n);
  t.split.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    t.split.labels[i] = y;
    t.x(static_cast<Eigen::Index>(i), 0) = (y == 0 ? -2.0 : 2.0) + noise(gen);
    t.x(static_cast<Eigen::Index>(i), 1) = noise(gen);
    t.x(static_cast<Eigen::Index>(i), 2) = noise(gen);
    (i < n / 2 ? t.split.train : (i < 3 * n / 4 ? t.split.val : t.split.test)).push_back(static_cast<NodeId>(i));
  }
  return t;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double offset = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen) + offset;
  return m;
}
}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("separable toy set reaches full accuracy") {
    Toy t = separable(20, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    TrainResult r = train(t.x, t.split, cfg);
    auto pred = predict(r.model, t.x);
    CHECK(accuracy(pred, t.split.labels, t.split.train) == 1.0);
    CHECK(accuracy(pred, t.split.labels, t.split.test) == 1.0);
    CHECK(r.final_train_loss < r.initial_train_loss);
  }

  TEST_CASE("learning rate zero leaves the parameters unchanged") {
    Toy t = separable(40, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    cfg.num_layers = 2;
    cfg.hidden_dim = 5;
    TrainResult r = train(t.x, t.split, cfg);
    ModelParams init = init_model(3, 2, cfg);
    REQUIRE(r.model.layers.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(r.model.layers[l].weight == init.layers[l].weight);
      CHECK(r.model.layers[l].bias == init.layers[l].bias);
    }
  }

  TEST_CASE("argmax, ties and accuracy") {
    Eigen::MatrixXd scores(3, 2);
    scores << 0.2, 0.9, 0.5, 0.5, 1.0, -1.0;
    CHECK(argmax_rows(scores) == std::vector<int>{1, 0, 0});
    std::vector<int> pred{1, 0, 0}, labels{1, 0, 0};
    std::vector<NodeId> rows{0, 1, 2};
    CHECK(accuracy(pred, labels, rows) == 1.0);
    std::vector<int> short_labels{1};
    CHECK_THROWS_AS(accuracy(pred, short_labels, rows), ShapeError);
  }

  TEST_CASE("softmax rows sum to one and cross-entropy is non-negative") {
    Eigen::MatrixXd z = random_matrix(50, 7, 3) * 30.0;
    Eigen::MatrixXd p = softmax_rows(z);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    TrainConfig cfg;
    ModelParams m = init_model(4, 3, cfg);
    std::vector<int> labels{0, 1, 2, 0, 1};
    CHECK(loss_and_gradient(m, random_matrix(5, 4, 1), labels, 0.0, nullptr) >= 0.0);
  }

  TEST_CASE("gradient check: one and two layers") {
    std::vector<int> labels{0, 1, 2, 1, 0, 2, 2, 1};
    Eigen::MatrixXd x = random_matrix(8, 4, 11);
    for (std::size_t layers : {1u, 2u}) {
      TrainConfig cfg;
      cfg.num_layers = layers;
      cfg.hidden_dim = 5;
      cfg.seed = 3;
      ModelParams m = init_model(4, 3, cfg);
      for (auto& l : m.layers) l.bias.setRandom();
      CHECK(m.parameter_count() <= 100);
      CHECK(grad_check(m, x, labels, 1e-5, 0.0) < 1e-5);
      CHECK(grad_check(m, x, labels, 1e-6, 5e-3) < 1e-5);
    }
  }

  TEST_CASE("gradient check: logistic layer reaches 1e-6") {
    std::vector<int> labels{0, 1, 1, 0, 1, 0};
    TrainConfig cfg;
    ModelParams m = init_model(3, 2, cfg);
    CHECK(grad_check(m, random_matrix(6, 3, 5), labels, 1e-5) < 1e-6);
  }

  TEST_CASE("gradient check: relu network away from the kink") {
    std::vector<int> labels{0, 1, 2, 0, 1, 2};
    TrainConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 4;
    ModelParams m = init_model(3, 3, cfg);
    // Positive inputs and weights keep every hidden unit strictly active.
    m.layers[0].weight = m.layers[0].weight.cwiseAbs();
    m.layers[0].bias.setConstant(0.5);
    CHECK(grad_check(m, random_matrix(6, 3, 9).cwiseAbs().array() + 1.0, labels, 1e-5) < 1e-6);
  }

  TEST_CASE("bias gradient at the origin is the softmax minus the label mean") {
    TrainConfig cfg;
    ModelParams m = init_model(2, 2, cfg);
    m.layers[0].weight.setZero();
    std::vector<int> labels{0, 1, 0, 1};
    Gradients g;
    loss_and_gradient(m, random_matrix(4, 2, 1), labels, 0.0, &g);
    CHECK(g.bias[0](0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(g.bias[0](1) == doctest::Approx(0.0).epsilon(1e-15));
    std::vector<int> skewed{0, 0, 0, 1};
    loss_and_gradient(m, random_matrix(4, 2, 1), skewed, 0.0, &g);
    CHECK(g.bias[0](0) == doctest::Approx(0.5 - 0.75).epsilon(1e-15));
    CHECK(g.bias[0](1) == doctest::Approx(0.5 - 0.25).epsilon(1e-15));
  }

  TEST_CASE("adam with zero gradient changes nothing") {
    TrainConfig cfg;
    cfg.num_layers = 2;
    ModelParams m = init_model(5, 3, cfg);
    ModelParams before = m;
    Gradients zero;
    for (const auto& l : m.layers) {
      zero.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      zero.bias.push_back(Eigen::RowVectorXd::Zero(l.bias.size()));
    }
    Adam adam(0.1);
    for (int i = 0; i < 5; ++i) adam.step(m, zero);
    for (std::size_t l = 0; l < m.layers.size(); ++l) CHECK(m.layers[l].weight == before.layers[l].weight);
  }

  TEST_CASE("glorot init bounds and determinism") {
    TrainConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 16;
    cfg.seed = 5;
    ModelParams a = init_model(30, 4, cfg), b = init_model(30, 4, cfg);
    CHECK(a.layers[0].weight == b.layers[0].weight);
    CHECK(a.layers[0].weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 46.0));
    CHECK(a.layers[1].weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 20.0));
    CHECK(a.layers[0].bias.isZero(0.0));
    cfg.seed = 6;
    CHECK(init_model(30, 4, cfg).layers[0].weight != a.layers[0].weight);
  }

  TEST_CASE("training is deterministic and permutation equivariant") {
    Toy t = separable(60, 4);
    TrainConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 6;
    cfg.dropout = 0.3;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    TrainResult a = train(t.x, t.split, cfg), b = train(t.x, t.split, cfg);
    CHECK(a.model.layers[0].weight == b.model.layers[0].weight);
    CHECK(a.history.size() == b.history.size());

    LabeledSplit shuffled = t.split;
    std::reverse(shuffled.train.begin(), shuffled.train.end());
    TrainResult c = train(t.x, shuffled, cfg);
    CHECK(c.best_epoch == a.best_epoch);
    for (std::size_t l = 0; l < 2; ++l)
      CHECK((c.model.layers[l].weight - a.model.layers[l].weight).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("early stopping and best-epoch parameters") {
    Toy t = separable(40, 6);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 300;
    cfg.patience = 5;
    TrainResult r = train(t.x, t.split, cfg);
    CHECK(r.history.size() < 300);
    CHECK(r.history.size() == r.best_epoch + cfg.patience);
    auto pred = predict(r.model, t.x);
    CHECK(accuracy(pred, t.split.labels, t.split.val) == r.best_val_acc);
  }

  TEST_CASE("standardizer fitted on training rows") {
    FeatureMatrix x(4, 2);
    x << 1, 5, 3, 5, 100, 5, -7, 5;
    std::vector<NodeId> rows{0, 1};
    Standardizer s = Standardizer::fit(x, rows);
    CHECK(s.mean(0) == 2.0);
    CHECK(s.scale(0) == 1.0);
    CHECK(s.scale(1) == 1.0);  // constant column
    FeatureMatrix z = s.apply(x);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(2, 1) == 0.0);
  }

  TEST_CASE("configuration errors") {
    Toy t = separable(10, 1);
    TrainConfig cfg;
    cfg.patience = cfg.max_epochs + 1;
    CHECK_THROWS_AS(train(t.x, t.split, cfg), ParameterError);
    cfg = TrainConfig{};
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(validate(cfg), ParameterError);
    LabeledSplit empty = t.split;
    empty.train.clear();
    CHECK_THROWS_AS(train(t.x, empty, TrainConfig{}), ParameterError);
    TrainConfig huge;
    huge.learning_rate = 1e300;
    huge.standardize = false;
    Toy big = t;
    big.x *= 1e200;
    CHECK_THROWS_AS(train(big.x, big.split, huge), NumericError);
  }

  TEST_CASE("checkpoint round trip") {
    Toy t = separable(30, 8);
    TrainConfig cfg;
    cfg.num_layers = 2;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    TrainResult r = train(t.x, t.split, cfg);
    auto dir = scratch_dir("ckpt");
    write_checkpoint(r.model, dir / "m.rmc");
    ModelParams back = read_checkpoint(dir / "m.rmc");
    CHECK(logits(back, t.x) == logits(r.model, t.x));
    CHECK(back.parameter_count() == r.model.parameter_count());
  }
}
