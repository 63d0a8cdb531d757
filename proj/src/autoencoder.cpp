#include <cmath>
#include <numeric>
#include <sstream>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "auditod/rng.hpp"

namespace auditod {

namespace {

struct Layer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::RowVectorXd bias;
  // Adam moments
  Eigen::MatrixXd m_w, v_w;
  Eigen::RowVectorXd m_b, v_b;
};

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
};

Layer make_layer(Eigen::Index in, Eigen::Index out, Rng& rng) {
  Layer l;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  l.weight.resize(in, out);
  for (Eigen::Index j = 0; j < out; ++j)
    for (Eigen::Index i = 0; i < in; ++i) l.weight(i, j) = rng.uniform(-bound, bound);
  l.bias.resize(out);
  for (Eigen::Index j = 0; j < out; ++j) l.bias(j) = rng.uniform(-bound, bound);
  l.m_w = Eigen::MatrixXd::Zero(in, out);
  l.v_w = Eigen::MatrixXd::Zero(in, out);
  l.m_b = Eigen::RowVectorXd::Zero(out);
  l.v_b = Eigen::RowVectorXd::Zero(out);
  return l;
}

class Network {
 public:
  Network(Eigen::Index inputs, const std::vector<int>& hidden, Rng& rng) {
    Eigen::Index prev = inputs;
    for (int width : hidden) {
      layers_.push_back(make_layer(prev, width, rng));
      prev = width;
    }
    layers_.push_back(make_layer(prev, inputs, rng));
  }

  // Runs the forward pass, keeping activations for backprop. Returns the output.
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& x) {
    acts_.resize(layers_.size() + 1);
    acts_[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Eigen::MatrixXd z = acts_[l] * layers_[l].weight;
      z.rowwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) {
        acts_[l + 1] = z.cwiseMax(0.0);
      } else {
        acts_[l + 1] = (1.0 + (-z.array()).exp()).inverse().matrix();
      }
    }
    return acts_.back();
  }

  // One Adam step on the batch; returns the batch's summed squared error.
  double train_step(const Eigen::MatrixXd& x, Adam& adam) {
    const Eigen::MatrixXd& y = forward(x);
    const Eigen::MatrixXd diff = y - x;
    const double sse = diff.squaredNorm();
    const double scale = 2.0 / static_cast<double>(x.rows() * x.cols());
    // dL/dz for the sigmoid output layer.
    Eigen::MatrixXd delta = (scale * diff.array() * y.array() * (1.0 - y.array())).matrix();

    ++adam.step;
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    for (std::size_t l = layers_.size(); l-- > 0;) {
      Layer& layer = layers_[l];
      const Eigen::MatrixXd grad_w = acts_[l].transpose() * delta;
      const Eigen::RowVectorXd grad_b = delta.colwise().sum();
      if (l > 0) {
        delta = ((delta * layer.weight.transpose()).array() * (acts_[l].array() > 0.0).cast<double>()).matrix();
      }
      layer.m_w = adam.beta1 * layer.m_w + (1.0 - adam.beta1) * grad_w;
      layer.v_w = adam.beta2 * layer.v_w + (1.0 - adam.beta2) * grad_w.cwiseAbs2();
      layer.m_b = adam.beta1 * layer.m_b + (1.0 - adam.beta1) * grad_b;
      layer.v_b = adam.beta2 * layer.v_b + (1.0 - adam.beta2) * grad_b.cwiseAbs2();
      layer.weight.array() -=
          adam.lr * (layer.m_w.array() / c1) / ((layer.v_w.array() / c2).sqrt() + adam.eps);
      layer.bias.array() -=
          adam.lr * (layer.m_b.array() / c1) / ((layer.v_b.array() / c2).sqrt() + adam.eps);
    }
    return sse;
  }

 private:
  std::vector<Layer> layers_;
  std::vector<Eigen::MatrixXd> acts_;
};

void validate(const AutoencoderOptions& o) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "AE " + m); };
  if (o.hidden_neurons.empty()) fail("hidden_neurons must not be empty");
  for (int w : o.hidden_neurons)
    if (w < 1) fail("hidden_neurons entries must be positive");
  if (!std::equal(o.hidden_neurons.begin(), o.hidden_neurons.end(), o.hidden_neurons.rbegin())) {
    fail("hidden_neurons must mirror encoder and decoder (symmetric list)");
  }
  if (o.epochs < 1) fail("epochs must be >= 1");
  if (o.batch_size < 1) fail("batch_size must be >= 1");
  if (!(o.learning_rate > 0.0) || !std::isfinite(o.learning_rate)) fail("learning_rate must be positive");
}

}  // namespace

AutoencoderResult train_autoencoder(const FeatureFrame& frame, const AutoencoderOptions& options) {
  validate(options);
  const Eigen::MatrixXd x = frame.values();
  const auto n = static_cast<std::size_t>(x.rows());
  Rng rng(options.seed);
  Network net(x.cols(), options.hidden_neurons, rng);
  Adam adam{options.learning_rate};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(options.batch_size);

  AutoencoderResult result;
  Eigen::MatrixXd xb;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double sse = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(len), x.cols());
      for (std::size_t r = 0; r < len; ++r) xb.row(r) = x.row(order[start + r]);
      sse += net.train_step(xb, adam);
    }
    const double loss = sse / static_cast<double>(n * x.cols());
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "training loss became non-finite at epoch " << epoch + 1 << " with learning_rate "
          << options.learning_rate << "; try a smaller learning_rate (e.g. 1e-4)";
      throw Error(ErrorCode::NonFiniteLoss, msg.str());
    }
    result.epoch_loss.push_back(loss);
  }

  const Eigen::MatrixXd recon = net.forward(x);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = (recon.row(i) - x.row(i)).squaredNorm() / static_cast<double>(x.cols());
  }
  result.scores = {"AE", frame.ids(), std::move(scores), false};
  return result;
}

ScoreVector score_autoencoder(const FeatureFrame& frame, const AutoencoderOptions& options) {
  return train_autoencoder(frame, options).scores;
}

}  // namespace auditod
