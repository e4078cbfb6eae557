#include "boostdens/learner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace boostdens {
namespace {

constexpr double kSeluLambda = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double activate(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::SELU: return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z);
    case Activation::Softplus: return softplus(z);
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::SELU: return z > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(z);
    case Activation::Softplus: return sigmoid(z);
    case Activation::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// Pre-activations of every layer for a batch; the last entry is the raw output.
struct ForwardPass {
  std::vector<Matrix> pre;   // n x width_l
  std::vector<Matrix> post;  // post[0] is the input
};

ForwardPass forward(const MlpClassifier& c, const Matrix& x) {
  ForwardPass fp;
  const auto& layers = c.layers();
  fp.pre.reserve(layers.size());
  fp.post.reserve(layers.size() + 1);
  fp.post.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = fp.post.back() * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    if (l + 1 < layers.size()) {
      fp.post.push_back(z.unaryExpr([a = c.activation()](double v) { return activate(a, v); }));
    }
    fp.pre.push_back(std::move(z));
  }
  return fp;
}

// Gradient of sum_i w_i * out_i with respect to all parameters, where out is
// the unscaled network output and dout = w.
Vec backward(const MlpClassifier& c, const ForwardPass& fp, const Vec& dout) {
  const auto& layers = c.layers();
  Vec grad(c.parameter_count());
  std::vector<Eigen::Index> offset(layers.size());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = off;
    off += layers[l].weights.size() + layers[l].bias.size();
  }
  Matrix delta = dout;  // n x 1
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Matrix& input = fp.post[li];
    const Matrix gw = delta.transpose() * input;  // out x in
    const Vec gb = delta.colwise().sum().transpose();
    Eigen::Index k = offset[li];
    for (Eigen::Index r = 0; r < gw.rows(); ++r)
      for (Eigen::Index col = 0; col < gw.cols(); ++col) grad[k++] = gw(r, col);
    for (Eigen::Index r = 0; r < gb.size(); ++r) grad[k++] = gb[r];
    if (li > 0) {
      Matrix back = delta * layers[li].weights;  // n x in
      const Matrix& z = fp.pre[li - 1];
      for (Eigen::Index i = 0; i < back.rows(); ++i)
        for (Eigen::Index j = 0; j < back.cols(); ++j)
          back(i, j) *= activate_derivative(c.activation(), z(i, j));
      delta = std::move(back);
    }
  }
  return grad;
}

double mean_cross_entropy(const Vec& out, const Vec& labels) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    s += labels[i] > 0.5 ? softplus(-out[i]) : softplus(out[i]);
  return s / static_cast<double>(out.size());
}

double labelled_accuracy(const Vec& out, const Vec& labels) {
  double pos = 0.0, neg = 0.0, pos_ok = 0.0, neg_ok = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (labels[i] > 0.5) {
      pos += 1.0;
      pos_ok += out[i] > 0.0 ? 1.0 : 0.0;
    } else {
      neg += 1.0;
      neg_ok += out[i] <= 0.0 ? 1.0 : 0.0;
    }
  }
  const double a = pos > 0 ? pos_ok / pos : 0.0;
  const double b = neg > 0 ? neg_ok / neg : 0.0;
  if (pos == 0) return b;
  if (neg == 0) return a;
  return 0.5 * (a + b);
}

Matrix take_rows(const Matrix& m, std::span<const Eigen::Index> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::SELU: return "selu";
    case Activation::Softplus: return "softplus";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (Activation a : kAllActivations)
    if (to_string(a) == lower) return a;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void MlpClassifier::check_topology() const {
  if (topology_.size() < 2) throw DimensionError("topology needs at least input and output widths");
  if (topology_.back() != 1) throw DimensionError("output layer width must be 1");
  for (int w : topology_)
    if (w < 1) throw DimensionError("layer widths must be positive");
}

MlpClassifier MlpClassifier::zeros(std::vector<int> topology, Activation activation) {
  MlpClassifier c;
  c.topology_ = std::move(topology);
  c.activation_ = activation;
  c.check_topology();
  for (std::size_t l = 0; l + 1 < c.topology_.size(); ++l) {
    c.layers_.push_back({Matrix::Zero(c.topology_[l + 1], c.topology_[l]),
                         Vec::Zero(c.topology_[l + 1])});
  }
  return c;
}

MlpClassifier MlpClassifier::random(std::vector<int> topology, Activation activation, Rng& rng) {
  MlpClassifier c = zeros(std::move(topology), activation);
  for (auto& layer : c.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index k = 0; k < layer.weights.cols(); ++k) layer.weights(r, k) = u(rng);
  }
  return c;
}

MlpClassifier MlpClassifier::linear(const Vec& w, double b) {
  MlpClassifier c = zeros({static_cast<int>(w.size()), 1}, Activation::ReLU);
  c.layers_[0].weights.row(0) = w.transpose();
  c.layers_[0].bias[0] = b;
  return c;
}

MlpClassifier MlpClassifier::with_scale(double scale) const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw RangeError("classifier scale must be positive");
  MlpClassifier c = *this;
  c.scale_ = scale;
  return c;
}

std::size_t MlpClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Vec MlpClassifier::parameters() const {
  Vec flat(parameter_count());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index col = 0; col < l.weights.cols(); ++col) flat[k++] = l.weights(r, col);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat[k++] = l.bias[r];
  }
  return flat;
}

void MlpClassifier::set_parameters(const Vec& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count())
    throw DimensionError("parameter vector has wrong length");
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index col = 0; col < l.weights.cols(); ++col) l.weights(r, col) = flat[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
  }
}

double MlpClassifier::operator()(const Eigen::Ref<const Vec>& x) const {
  if (x.size() != input_dim()) throw DimensionError("classifier input has wrong dimension");
  Vec a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vec z = layers_[l].weights * a + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activate(activation_, z[i]);
    }
    a = std::move(z);
  }
  return scale_ * a[0];
}

Vec MlpClassifier::evaluate(const Matrix& points) const {
  if (points.cols() != input_dim()) throw DimensionError("classifier input has wrong dimension");
  ForwardPass fp = forward(*this, points);
  return scale_ * fp.pre.back().col(0);
}

nlohmann::json to_json(const MlpClassifier& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : c.layers()) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      std::vector<double> row(l.weights.cols());
      for (Eigen::Index k = 0; k < l.weights.cols(); ++k) row[k] = l.weights(r, k);
      w.push_back(row);
    }
    layers.push_back({{"weights", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"topology", c.topology()},
          {"activation", std::string(to_string(c.activation()))},
          {"scale", c.scale()},
          {"layers", layers}};
}

MlpClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    auto topology = j.at("topology").get<std::vector<int>>();
    MlpClassifier c = MlpClassifier::zeros(topology, activation_from_string(j.at("activation").get<std::string>()));
    const auto& layers = j.at("layers");
    if (layers.size() != c.layers().size()) throw ParseError("classifier: layer count does not match topology");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& dst = c.mutable_layers()[l];
      const auto w = layers[l].at("weights").get<std::vector<std::vector<double>>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != dst.weights.rows() ||
          static_cast<Eigen::Index>(b.size()) != dst.bias.size())
        throw ParseError("classifier: layer shape does not match topology");
      for (std::size_t r = 0; r < w.size(); ++r) {
        if (static_cast<Eigen::Index>(w[r].size()) != dst.weights.cols())
          throw ParseError("classifier: layer shape does not match topology");
        for (std::size_t k = 0; k < w[r].size(); ++k) dst.weights(r, k) = w[r][k];
      }
      for (std::size_t r = 0; r < b.size(); ++r) dst.bias[r] = b[r];
    }
    return c.with_scale(j.value("scale", 1.0));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classifier: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string("classifier: ") + e.what());
  }
}

double cross_entropy(const MlpClassifier& c, const Matrix& points, const Vec& labels) {
  return mean_cross_entropy(c.evaluate(points), labels);
}

Vec cross_entropy_gradient(const MlpClassifier& c, const Matrix& points, const Vec& labels) {
  if (points.rows() == 0) throw EmptySampleError("gradient of an empty batch");
  ForwardPass fp = forward(c, points);
  const Vec out = c.scale() * fp.pre.back().col(0);
  Vec dout(out.size());
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) dout[i] = c.scale() * (sigmoid(out[i]) - labels[i]) * inv_n;
  return backward(c, fp, dout);
}

double gradient_check(const MlpClassifier& c, const LabelledBatch& batch) {
  constexpr double h = 1e-5;
  const Vec analytic = cross_entropy_gradient(c, batch.points, batch.labels);
  const Vec theta = c.parameters();
  MlpClassifier probe = c;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vec t = theta;
    t[k] = theta[k] + h;
    probe.set_parameters(t);
    const double up = cross_entropy(probe, batch.points, batch.labels);
    t[k] = theta[k] - h;
    probe.set_parameters(t);
    const double down = cross_entropy(probe, batch.points, batch.labels);
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("train: test_fraction must be in (0, 1)");
  if (early_stop_gap && !(*early_stop_gap > 0.0 && *early_stop_gap < 1.0))
    throw ConfigError("train: early_stop_gap must be in (0, 1)");
  if (!(adam.eta > 0.0) || !(adam.eps > 0.0) || adam.beta1 < 0.0 || adam.beta1 >= 1.0 ||
      adam.beta2 < 0.0 || adam.beta2 >= 1.0)
    throw ConfigError("train: invalid Adam settings");
}

TrainResult train_classifier(const Matrix& p_samples, const Matrix& q_samples,
                             const std::vector<int>& hidden, Activation activation,
                             const TrainConfig& config) {
  config.validate();
  if (p_samples.rows() < 2 || q_samples.rows() < 2)
    throw EmptySampleError("training needs at least 2 samples per class");
  if (p_samples.cols() != q_samples.cols() || p_samples.cols() == 0)
    throw DimensionError("P and Q samples must share a positive dimension");

  Rng rng = make_rng(config.seed, 0x7472);
  const auto dim = p_samples.cols();
  std::vector<int> topology{static_cast<int>(dim)};
  topology.insert(topology.end(), hidden.begin(), hidden.end());
  topology.push_back(1);
  MlpClassifier net = MlpClassifier::random(topology, activation, rng);

  // Per-class train/test split.
  auto split = [&](const Matrix& s, Matrix& train, Matrix& test) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(s.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(s.rows())));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    test = take_rows(s, std::span(idx).first(n_test));
    train = take_rows(s, std::span(idx).subspan(n_test));
  };
  Matrix p_train, p_test, q_train, q_test;
  split(p_samples, p_train, p_test);
  split(q_samples, q_train, q_test);

  auto stack = [](const Matrix& a, const Matrix& b, Matrix& x, Vec& y) {
    x.resize(a.rows() + b.rows(), a.cols());
    x << a, b;
    y.resize(x.rows());
    y.head(a.rows()).setOnes();
    y.tail(b.rows()).setZero();
  };
  Matrix x_train, x_test;
  Vec y_train, y_test;
  stack(p_train, q_train, x_train, y_train);
  stack(p_test, q_test, x_test, y_test);

  const auto n_train = x_train.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Vec theta = net.parameters();
  Vec m = Vec::Zero(theta.size());
  Vec v = Vec::Zero(theta.size());
  const auto& adam = config.adam;
  double beta1_pow = 1.0, beta2_pow = 1.0;

  TrainRecord record;
  Matrix xb;
  Vec yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(config.batch_size, n_train - start);
      xb.resize(len, dim);
      yb.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const auto src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x_train.row(src);
        yb[i] = y_train[src];
      }
      const Vec g = cross_entropy_gradient(net, xb, yb);
      beta1_pow *= adam.beta1;
      beta2_pow *= adam.beta2;
      m = adam.beta1 * m + (1.0 - adam.beta1) * g;
      v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
      const double lr = adam.eta * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      theta.array() -= lr * m.array() / (v.array().sqrt() + adam.eps);
      net.set_parameters(theta);
    }
    const Vec out_train = net.evaluate(x_train);
    const Vec out_test = net.evaluate(x_test);
    EpochRecord rec{mean_cross_entropy(out_train, y_train), mean_cross_entropy(out_test, y_test),
                    labelled_accuracy(out_train, y_train), labelled_accuracy(out_test, y_test)};
    record.epochs.push_back(rec);
    if (config.early_stop_gap && rec.test_loss > rec.train_loss * (1.0 + *config.early_stop_gap)) {
      record.early_stopped = true;
      break;
    }
  }
  return {std::move(net), std::move(record)};
}

EdgeEstimates estimate_edges(const Vec& c_on_p, const Vec& c_on_q) {
  if (c_on_p.size() == 0 || c_on_q.size() == 0) throw EmptySampleError("edges need nonempty samples");
  const double c_sup = std::max(c_on_p.cwiseAbs().maxCoeff(), c_on_q.cwiseAbs().maxCoeff());
  if (!(c_sup > 0.0)) throw DegenerateClassifier("classifier is identically zero on the samples");
  EdgeEstimates e;
  e.c_sup_hat = c_sup;
  e.mu_p_hat = c_on_p.mean() / c_sup;
  e.mu_q_hat = -c_on_q.mean() / c_sup;
  e.m_p = static_cast<std::size_t>(c_on_p.size());
  e.m_q = static_cast<std::size_t>(c_on_q.size());
  return e;
}

EdgeEstimates estimate_edges(const MlpClassifier& c, const Matrix& p_samples, const Matrix& q_samples) {
  if (p_samples.rows() == 0 || q_samples.rows() == 0) throw EmptySampleError("edges need nonempty samples");
  return estimate_edges(c.evaluate(p_samples), c.evaluate(q_samples));
}

MlpClassifier properly_scale(const MlpClassifier& c, const EdgeEstimates& edges) {
  if (!(edges.c_sup_hat > 0.0)) throw DegenerateClassifier("cannot scale a classifier with zero confidence");
  const double eta = std::min(1.0, kProperScaleBound / edges.c_sup_hat);
  return c.with_scale(c.scale() * eta);
}

double accuracy(const Vec& c_on_p, const Vec& c_on_q) {
  if (c_on_p.size() == 0 || c_on_q.size() == 0) throw EmptySampleError("accuracy needs nonempty samples");
  const double p_ok = (c_on_p.array() > 0.0).cast<double>().mean();
  const double q_ok = (c_on_q.array() <= 0.0).cast<double>().mean();
  return 0.5 * (p_ok + q_ok);
}

}  // namespace boostdens
