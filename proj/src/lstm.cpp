#include "socta/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include "socta/error.hpp"

namespace socta {
namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

NetworkSpec NetworkSpec::parse(const std::string& text) {
  static const std::regex grammar(R"(^\s*L\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)\s*N\(\s*(\d+)\s*\)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, grammar)) {
    throw ValidationError("network config '" + text + "' does not match L(n1[,n2...])N(m)");
  }
  NetworkSpec spec;
  std::stringstream cells(m[1].str());
  std::string item;
  while (std::getline(cells, item, ',')) {
    int n = std::stoi(item);
    if (n < 1) throw ValidationError("LSTM layers need at least one cell");
    spec.lstm_cells.push_back(n);
  }
  spec.dense_nodes = std::stoi(m[2].str());
  return spec;
}

std::string NetworkSpec::to_string() const {
  std::string s = "L(";
  for (std::size_t i = 0; i < lstm_cells.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(lstm_cells[i]);
  }
  return s + ")N(" + std::to_string(dense_nodes) + ")";
}

// ---------------------------------------------------------------------------
// Parameter layout

void LstmNetwork::reset_layout(int input_dim, NetworkSpec spec) {
  if (input_dim < 1) throw ValidationError("network input width must be >= 1");
  if (spec.dense_nodes < 0) throw ValidationError("dense node count must be >= 0");
  input_dim_ = input_dim;
  spec_ = std::move(spec);
  offsets_ = {};
  std::size_t pos = 0;
  int d_in = input_dim_;
  for (int h : spec_.lstm_cells) {
    const auto g = static_cast<std::size_t>(4 * h);
    offsets_.w.push_back(pos);
    pos += g * static_cast<std::size_t>(d_in);
    offsets_.u.push_back(pos);
    pos += g * static_cast<std::size_t>(h);
    offsets_.b.push_back(pos);
    pos += g;
    d_in = h;
  }
  if (spec_.dense_nodes > 0) {
    offsets_.dense_w = pos;
    pos += static_cast<std::size_t>(spec_.dense_nodes) * static_cast<std::size_t>(d_in);
    offsets_.dense_b = pos;
    pos += static_cast<std::size_t>(spec_.dense_nodes);
  }
  offsets_.head_w = pos;
  pos += static_cast<std::size_t>(head_inputs());
  offsets_.head_b = pos;
  pos += 1;
  offsets_.total = pos;
  params_ = Vector::Zero(static_cast<Eigen::Index>(pos));
  input_mean.resize(0);
  input_inv_std.resize(0);
  target_offset = 0.0;
  target_scale = 1.0;
}

int LstmNetwork::head_inputs() const {
  if (spec_.dense_nodes > 0) return spec_.dense_nodes;
  if (!spec_.lstm_cells.empty()) return spec_.lstm_cells.back();
  return input_dim_;
}

LstmNetwork::LstmNetwork(int input_dim, NetworkSpec spec, std::uint64_t seed) : seed_(seed) {
  reset_layout(input_dim, std::move(spec));
  std::mt19937_64 rng(seed);
  auto fill = [&](double* data, std::size_t count, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) data[i] = dist(rng);
  };
  int d_in = input_dim_;
  for (std::size_t l = 0; l < spec_.lstm_cells.size(); ++l) {
    auto v = lstm_layer(l);
    const int h = spec_.lstm_cells[l];
    fill(v.w.data(), static_cast<std::size_t>(v.w.size()), d_in);
    fill(v.u.data(), static_cast<std::size_t>(v.u.size()), h);
    v.b.setZero();
    v.b.segment(h, h).setOnes();
    d_in = h;
  }
  if (spec_.dense_nodes > 0) {
    auto d = dense_layer();
    fill(d.w.data(), static_cast<std::size_t>(d.w.size()), d_in);
    d.b.setZero();
    d_in = spec_.dense_nodes;
  }
  auto o = head();
  fill(o.w.data(), static_cast<std::size_t>(o.w.size()), d_in);
  o.b.setZero();
}

LstmNetwork::LayerView LstmNetwork::lstm_layer(std::size_t index) {
  const int h = spec_.lstm_cells.at(index);
  const int d_in = index == 0 ? input_dim_ : spec_.lstm_cells[index - 1];
  double* p = params_.data();
  return {Eigen::Map<Matrix>(p + offsets_.w[index], 4 * h, d_in),
          Eigen::Map<Matrix>(p + offsets_.u[index], 4 * h, h),
          Eigen::Map<Vector>(p + offsets_.b[index], 4 * h)};
}

LstmNetwork::ConstLayerView LstmNetwork::lstm_layer(std::size_t index) const {
  const int h = spec_.lstm_cells.at(index);
  const int d_in = index == 0 ? input_dim_ : spec_.lstm_cells[index - 1];
  const double* p = params_.data();
  return {Eigen::Map<const Matrix>(p + offsets_.w[index], 4 * h, d_in),
          Eigen::Map<const Matrix>(p + offsets_.u[index], 4 * h, h),
          Eigen::Map<const Vector>(p + offsets_.b[index], 4 * h)};
}

LstmNetwork::DenseView LstmNetwork::dense_layer() {
  if (spec_.dense_nodes == 0) throw ValidationError("network has no fully-connected layer");
  const int d_in = spec_.lstm_cells.empty() ? input_dim_ : spec_.lstm_cells.back();
  double* p = params_.data();
  return {Eigen::Map<Matrix>(p + offsets_.dense_w, spec_.dense_nodes, d_in),
          Eigen::Map<Vector>(p + offsets_.dense_b, spec_.dense_nodes)};
}

LstmNetwork::ConstDenseView LstmNetwork::dense_layer() const {
  if (spec_.dense_nodes == 0) throw ValidationError("network has no fully-connected layer");
  const int d_in = spec_.lstm_cells.empty() ? input_dim_ : spec_.lstm_cells.back();
  const double* p = params_.data();
  return {Eigen::Map<const Matrix>(p + offsets_.dense_w, spec_.dense_nodes, d_in),
          Eigen::Map<const Vector>(p + offsets_.dense_b, spec_.dense_nodes)};
}

LstmNetwork::DenseView LstmNetwork::head() {
  double* p = params_.data();
  return {Eigen::Map<Matrix>(p + offsets_.head_w, 1, head_inputs()),
          Eigen::Map<Vector>(p + offsets_.head_b, 1)};
}

LstmNetwork::ConstDenseView LstmNetwork::head() const {
  const double* p = params_.data();
  return {Eigen::Map<const Matrix>(p + offsets_.head_w, 1, head_inputs()),
          Eigen::Map<const Vector>(p + offsets_.head_b, 1)};
}

std::vector<bool> LstmNetwork::weight_mask() const {
  std::vector<bool> mask(offsets_.total, true);
  for (std::size_t l = 0; l < spec_.lstm_cells.size(); ++l) {
    const auto g = static_cast<std::size_t>(4 * spec_.lstm_cells[l]);
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(offsets_.b[l]), g, false);
  }
  if (spec_.dense_nodes > 0) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(offsets_.dense_b),
                spec_.dense_nodes, false);
  }
  mask[offsets_.head_b] = false;
  return mask;
}

// ---------------------------------------------------------------------------
// Batched forward/backward through time

namespace {

Matrix scale_inputs(const LstmNetwork& net, const Matrix& inputs) {
  if (inputs.cols() != net.input_dim()) {
    throw ValidationError("input width " + std::to_string(inputs.cols()) + " does not match network (" +
                          std::to_string(net.input_dim()) + ")");
  }
  if (net.input_mean.size() == 0) return inputs;
  return (inputs.rowwise() - net.input_mean.transpose()).array().rowwise() *
         net.input_inv_std.transpose().array();
}

struct StepCache {
  Matrix x, h_prev, c_prev, i, f, g, o, c, tc, h;
};

/// One batch of equal-length chunks. `xs[t]` is D x B; `ys[t]` is 1 x B (scaled targets).
class BatchPass {
 public:
  BatchPass(const LstmNetwork& net, double dropout, std::mt19937_64* rng)
      : net_(net), dropout_(dropout), rng_(rng) {}

  /// Returns the per-step outputs (1 x B each).
  const std::vector<Matrix>& forward(const std::vector<Matrix>& xs) {
    const auto T = xs.size();
    const auto& spec = net_.spec();
    caches_.assign(spec.lstm_cells.size(), std::vector<StepCache>(T));
    std::vector<Matrix> layer_in = xs;
    for (std::size_t l = 0; l < spec.lstm_cells.size(); ++l) {
      const Eigen::Index H = spec.lstm_cells[l];
      const Eigen::Index B = xs.front().cols();
      auto p = net_.lstm_layer(l);
      Matrix h = Matrix::Zero(H, B);
      Matrix c = Matrix::Zero(H, B);
      for (std::size_t t = 0; t < T; ++t) {
        auto& s = caches_[l][t];
        s.x = layer_in[t];
        s.h_prev = h;
        s.c_prev = c;
        Matrix z = p.w * s.x + p.u * h;
        z.colwise() += p.b;
        s.i = sigmoid(z.topRows(H));
        s.f = sigmoid(z.middleRows(H, H));
        s.g = z.middleRows(2 * H, H).array().tanh().matrix();
        s.o = sigmoid(z.bottomRows(H));
        c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
        s.c = c;
        s.tc = c.array().tanh().matrix();
        h = s.o.cwiseProduct(s.tc);
        s.h = h;
        layer_in[t] = h;
      }
    }
    top_ = std::move(layer_in);

    dense_pre_.clear();
    dense_out_.clear();
    masks_.clear();
    outputs_.assign(T, Matrix());
    auto head = net_.head();
    for (std::size_t t = 0; t < T; ++t) {
      const Matrix* feed = &top_[t];
      if (spec.dense_nodes > 0) {
        auto d = net_.dense_layer();
        Matrix a = d.w * top_[t];
        a.colwise() += d.b;
        Matrix r = a.cwiseMax(0.0);
        Matrix mask;
        if (dropout_ > 0.0 && rng_ != nullptr) {
          std::bernoulli_distribution keep(1.0 - dropout_);
          mask.resize(r.rows(), r.cols());
          for (Eigen::Index k = 0; k < mask.size(); ++k) {
            mask.data()[k] = keep(*rng_) ? 1.0 / (1.0 - dropout_) : 0.0;
          }
          r = r.cwiseProduct(mask);
        }
        dense_pre_.push_back(std::move(a));
        dense_out_.push_back(std::move(r));
        masks_.push_back(std::move(mask));
        feed = &dense_out_.back();
      }
      Matrix out = head.w * *feed;
      out.array() += head.b(0);
      outputs_[t] = std::move(out);
    }
    return outputs_;
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) per step.
  void backward(const std::vector<Matrix>& d_out, Vector& grad) {
    const auto T = d_out.size();
    const auto& spec = net_.spec();
    LstmNetwork grad_net;  // layout-only view into `grad`
    grad_net.reset_layout(net_.input_dim(), spec);
    grad_net.parameters().swap(grad);

    auto head = net_.head();
    auto g_head = grad_net.head();
    std::vector<Matrix> d_top(T);
    for (std::size_t t = 0; t < T; ++t) {
      const Matrix& feed = spec.dense_nodes > 0 ? dense_out_[t] : top_[t];
      g_head.w += d_out[t] * feed.transpose();
      g_head.b(0) += d_out[t].sum();
      Matrix d_feed = head.w.transpose() * d_out[t];
      if (spec.dense_nodes > 0) {
        auto d = net_.dense_layer();
        auto g_d = grad_net.dense_layer();
        if (masks_[t].size() > 0) d_feed = d_feed.cwiseProduct(masks_[t]);
        Matrix da = (dense_pre_[t].array() > 0.0).select(d_feed.array(), 0.0).matrix();
        g_d.w += da * top_[t].transpose();
        g_d.b += da.rowwise().sum();
        d_top[t] = d.w.transpose() * da;
      } else {
        d_top[t] = std::move(d_feed);
      }
    }

    for (std::size_t li = spec.lstm_cells.size(); li-- > 0;) {
      const Eigen::Index H = spec.lstm_cells[li];
      auto p = net_.lstm_layer(li);
      auto gp = grad_net.lstm_layer(li);
      const Eigen::Index B = d_top.front().cols();
      Matrix dh_next = Matrix::Zero(H, B);
      Matrix dc_next = Matrix::Zero(H, B);
      std::vector<Matrix> d_below(T);
      Matrix dz(4 * H, B);
      for (std::size_t t = T; t-- > 0;) {
        const auto& s = caches_[li][t];
        Matrix dh = d_top[t] + dh_next;
        Matrix dc = dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tc.array().square()).matrix()) + dc_next;
        dz.topRows(H) = dc.cwiseProduct(s.g).cwiseProduct((s.i.array() * (1.0 - s.i.array())).matrix());
        dz.middleRows(H, H) =
            dc.cwiseProduct(s.c_prev).cwiseProduct((s.f.array() * (1.0 - s.f.array())).matrix());
        dz.middleRows(2 * H, H) = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
        dz.bottomRows(H) =
            dh.cwiseProduct(s.tc).cwiseProduct((s.o.array() * (1.0 - s.o.array())).matrix());
        gp.w.noalias() += dz * s.x.transpose();
        gp.u.noalias() += dz * s.h_prev.transpose();
        gp.b += dz.rowwise().sum();
        if (li > 0) d_below[t] = p.w.transpose() * dz;
        dh_next = p.u.transpose() * dz;
        dc_next = dc.cwiseProduct(s.f);
      }
      if (li > 0) d_top = std::move(d_below);
    }
    grad_net.parameters().swap(grad);
  }

 private:
  const LstmNetwork& net_;
  double dropout_;
  std::mt19937_64* rng_;
  std::vector<std::vector<StepCache>> caches_;
  std::vector<Matrix> top_;
  std::vector<Matrix> dense_pre_, dense_out_, masks_;
  std::vector<Matrix> outputs_;
};

double scaled_target(const LstmNetwork& net, double y) {
  return (y - net.target_offset) / net.target_scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// Inference

LstmStepper::LstmStepper(const LstmNetwork& net) : net_(&net) { reset(); }

void LstmStepper::reset() {
  h_.clear();
  c_.clear();
  for (int cells : net_->spec().lstm_cells) {
    h_.push_back(Vector::Zero(cells));
    c_.push_back(Vector::Zero(cells));
  }
}

double LstmStepper::step(const Vector& input) {
  const auto& net = *net_;
  if (input.size() != net.input_dim()) {
    throw ValidationError("input width " + std::to_string(input.size()) + " does not match network (" +
                          std::to_string(net.input_dim()) + ")");
  }
  Vector x = input;
  if (net.input_mean.size() != 0) x = (input - net.input_mean).cwiseProduct(net.input_inv_std);
  for (std::size_t l = 0; l < h_.size(); ++l) {
    const Eigen::Index H = net.spec().lstm_cells[l];
    auto p = net.lstm_layer(l);
    Vector z = p.w * x + p.u * h_[l] + p.b;
    Vector i = sigmoid(z.head(H));
    Vector f = sigmoid(z.segment(H, H));
    Vector g = z.segment(2 * H, H).array().tanh().matrix();
    Vector o = sigmoid(z.tail(H));
    c_[l] = f.cwiseProduct(c_[l]) + i.cwiseProduct(g);
    h_[l] = o.cwiseProduct(c_[l].array().tanh().matrix());
    x = h_[l];
  }
  if (net.spec().dense_nodes > 0) {
    auto d = net.dense_layer();
    x = (d.w * x + d.b).cwiseMax(0.0);
  }
  auto head = net.head();
  const double out = (head.w * x)(0) + head.b(0);
  return net.target_offset + net.target_scale * out;
}

Vector predict(const LstmNetwork& net, const Matrix& inputs) {
  if (inputs.cols() != net.input_dim()) {
    throw ValidationError("input width " + std::to_string(inputs.cols()) + " does not match network (" +
                          std::to_string(net.input_dim()) + ")");
  }
  if (!net.parameters().allFinite()) throw ValidationError("network has non-finite weights");
  LstmStepper stepper(net);
  Vector out(inputs.rows());
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) out(t) = stepper.step(inputs.row(t).transpose());
  return out;
}

// ---------------------------------------------------------------------------
// Loss, gradient and gradient check

LossAndGradient loss_gradient(const LstmNetwork& net, const Sequence& seq, double l2_lambda) {
  if (seq.inputs.rows() != seq.targets.size()) throw ValidationError("inputs/targets length mismatch");
  const Matrix x = scale_inputs(net, seq.inputs);
  const auto T = static_cast<std::size_t>(x.rows());
  std::vector<Matrix> xs(T);
  for (std::size_t t = 0; t < T; ++t) xs[t] = x.row(static_cast<Eigen::Index>(t)).transpose();

  BatchPass pass(net, 0.0, nullptr);
  const auto& out = pass.forward(xs);
  const double s2 = net.target_scale * net.target_scale;
  LossAndGradient r;
  std::vector<Matrix> d_out(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double err = out[t](0, 0) - scaled_target(net, seq.targets(static_cast<Eigen::Index>(t)));
    r.loss += s2 * err * err;
    d_out[t] = Matrix::Constant(1, 1, 2.0 * s2 * err);
  }
  r.gradient = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  pass.backward(d_out, r.gradient);
  if (l2_lambda > 0.0) {
    const auto mask = net.weight_mask();
    for (Eigen::Index k = 0; k < r.gradient.size(); ++k) {
      if (mask[static_cast<std::size_t>(k)]) {
        const double w = net.parameters()(k);
        r.loss += l2_lambda * w * w;
        r.gradient(k) += 2.0 * l2_lambda * w;
      }
    }
  }
  return r;
}

GradientCheck gradient_check(const LstmNetwork& net, const Sequence& seq, double epsilon,
                             double l2_lambda) {
  GradientCheck gc;
  gc.analytic = loss_gradient(net, seq, l2_lambda).gradient;
  gc.numeric.resize(gc.analytic.size());
  LstmNetwork probe = net;
  for (Eigen::Index k = 0; k < gc.analytic.size(); ++k) {
    const double orig = probe.parameters()(k);
    probe.parameters()(k) = orig + epsilon;
    const double up = loss_gradient(probe, seq, l2_lambda).loss;
    probe.parameters()(k) = orig - epsilon;
    const double down = loss_gradient(probe, seq, l2_lambda).loss;
    probe.parameters()(k) = orig;
    gc.numeric(k) = (up - down) / (2.0 * epsilon);
    const double a = gc.analytic(k);
    const double n = gc.numeric(k);
    const double abs_err = std::abs(a - n);
    gc.max_absolute_error = std::max(gc.max_absolute_error, abs_err);
    gc.max_relative_error =
        std::max(gc.max_relative_error, abs_err / std::max(std::abs(a) + std::abs(n), 1e-6));
  }
  return gc;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must lie in [0,1)");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (max_epochs < 0) throw ValidationError("max_epochs must be >= 0");
  if (seq_len < 1) throw ValidationError("seq_len must be >= 1");
  if (l2_lambda < 0.0) throw ValidationError("l2_lambda must be >= 0");
  if (early_stop_patience < 1) throw ValidationError("early_stop_patience must be >= 1");
}

namespace {

struct Chunk {
  std::size_t sequence;
  Eigen::Index start;
  Eigen::Index length;
};

std::vector<Chunk> make_chunks(const std::vector<Sequence>& data, int seq_len, std::mt19937_64& rng) {
  std::vector<Chunk> chunks;
  std::uniform_int_distribution<int> phase_dist(0, seq_len - 1);
  const Eigen::Index s = seq_len;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::Index T = data[i].inputs.rows();
    if (T <= s) {
      chunks.push_back({i, 0, T});
      continue;
    }
    const Eigen::Index phase = phase_dist(rng);
    chunks.push_back({i, 0, s});
    for (Eigen::Index start = phase == 0 ? s : phase; start + s <= T; start += s) {
      chunks.push_back({i, start, s});
    }
    if (chunks.back().start + s < T) chunks.push_back({i, T - s, s});
  }
  return chunks;
}

double validation_mse(const LstmNetwork& net, const std::vector<Sequence>& validation) {
  double se = 0.0;
  Eigen::Index count = 0;
  for (const auto& seq : validation) {
    Vector pred = predict(net, seq.inputs);
    se += (pred - seq.targets).squaredNorm();
    count += seq.targets.size();
  }
  return se / static_cast<double>(count);
}

}  // namespace

TrainResult train(LstmNetwork& net, const std::vector<Sequence>& data, const TrainConfig& cfg,
                  const std::vector<Sequence>& validation) {
  cfg.validate();
  if (data.empty()) throw ValidationError("training needs at least one sequence");
  for (const auto& seq : data) {
    if (seq.inputs.rows() != seq.targets.size() || seq.inputs.rows() == 0) {
      throw ValidationError("training sequence has mismatched or empty inputs/targets");
    }
    if (seq.inputs.cols() != net.input_dim()) throw ValidationError("training input width mismatch");
    if (!seq.targets.allFinite() || !seq.inputs.allFinite()) {
      throw ValidationError("training data contains non-finite values");
    }
  }

  if (cfg.fit_scalers) {
    Eigen::Index rows = 0;
    for (const auto& seq : data) rows += seq.inputs.rows();
    Matrix all(rows, net.input_dim());
    Vector ys(rows);
    Eigen::Index r = 0;
    for (const auto& seq : data) {
      all.middleRows(r, seq.inputs.rows()) = seq.inputs;
      ys.segment(r, seq.targets.size()) = seq.targets;
      r += seq.inputs.rows();
    }
    net.input_mean = all.colwise().mean().transpose();
    net.input_inv_std.resize(net.input_dim());
    for (Eigen::Index j = 0; j < all.cols(); ++j) {
      const double sd = rows > 1 ? std::sqrt((all.col(j).array() - net.input_mean(j)).square().sum() /
                                             static_cast<double>(rows - 1))
                                 : 0.0;
      net.input_inv_std(j) = sd > 1e-12 ? 1.0 / sd : 0.0;
    }
    net.target_offset = ys.mean();
    const double sd = rows > 1 ? std::sqrt((ys.array() - net.target_offset).square().sum() /
                                           static_cast<double>(rows - 1))
                               : 0.0;
    net.target_scale = sd > 1e-12 ? sd : 1.0;
  }

  // Scaled copies of the data so batches can be sliced directly.
  std::vector<Sequence> scaled;
  scaled.reserve(data.size());
  for (const auto& seq : data) {
    Sequence s;
    s.inputs = scale_inputs(net, seq.inputs);
    s.targets = (seq.targets.array() - net.target_offset) / net.target_scale;
    scaled.push_back(std::move(s));
  }

  std::mt19937_64 rng(cfg.seed);
  const auto mask = net.weight_mask();
  const Eigen::Index P = net.parameters().size();
  Vector m = Vector::Zero(P);
  Vector v = Vector::Zero(P);
  Vector grad(P);
  long step = 0;
  const double s2 = net.target_scale * net.target_scale;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  Vector best_params = net.parameters();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto chunks = make_chunks(scaled, cfg.seq_len, rng);
    std::shuffle(chunks.begin(), chunks.end(), rng);
    std::map<Eigen::Index, std::vector<Chunk>> by_length;
    for (const auto& c : chunks) by_length[c.length].push_back(c);

    double epoch_se = 0.0;
    Eigen::Index epoch_count = 0;
    for (auto& [length, group] : by_length) {
      for (std::size_t first = 0; first < group.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
        const auto last = std::min(group.size(), first + static_cast<std::size_t>(cfg.batch_size));
        const auto B = static_cast<Eigen::Index>(last - first);
        std::vector<Matrix> xs(static_cast<std::size_t>(length), Matrix(net.input_dim(), B));
        Matrix ys(length, B);
        for (Eigen::Index b = 0; b < B; ++b) {
          const auto& c = group[first + static_cast<std::size_t>(b)];
          const auto& seq = scaled[c.sequence];
          for (Eigen::Index t = 0; t < length; ++t) {
            xs[static_cast<std::size_t>(t)].col(b) = seq.inputs.row(c.start + t).transpose();
          }
          ys.col(b) = seq.targets.segment(c.start, length);
        }

        BatchPass pass(net, cfg.dropout_rate, &rng);
        const auto& out = pass.forward(xs);
        const double inv_count = 1.0 / static_cast<double>(length * B);
        std::vector<Matrix> d_out(static_cast<std::size_t>(length));
        double batch_se = 0.0;
        for (Eigen::Index t = 0; t < length; ++t) {
          Matrix err = out[static_cast<std::size_t>(t)] - ys.row(t);
          batch_se += err.squaredNorm();
          d_out[static_cast<std::size_t>(t)] = 2.0 * inv_count * err;
        }
        if (!std::isfinite(batch_se)) {
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                               " (non-finite loss); lower the learning rate");
        }
        epoch_se += batch_se;
        epoch_count += length * B;

        grad.setZero();
        pass.backward(d_out, grad);
        if (cfg.l2_lambda > 0.0) {
          for (Eigen::Index k = 0; k < P; ++k) {
            if (mask[static_cast<std::size_t>(k)]) grad(k) += 2.0 * cfg.l2_lambda * net.parameters()(k);
          }
        }

        ++step;
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        net.parameters().array() -=
            cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
        if (!net.parameters().allFinite()) {
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                               " (non-finite weights)");
        }
      }
    }
    result.train_loss.push_back(s2 * epoch_se / static_cast<double>(epoch_count));
    result.epochs_run = epoch + 1;

    if (!validation.empty()) {
      const double val = validation_mse(net, validation);
      if (!std::isfinite(val)) {
        throw NumericalError("validation loss became non-finite at epoch " + std::to_string(epoch));
      }
      result.validation_loss.push_back(val);
      if (val < best_val) {
        best_val = val;
        best_params = net.parameters();
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.early_stop_patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (!validation.empty() && result.best_epoch >= 0) net.parameters() = best_params;
  return result;
}

}  // namespace socta
