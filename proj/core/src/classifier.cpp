#include "aglae/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "aglae/error.hpp"

namespace aglae {

namespace {

using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const FloatRows> view(const FeatureMatrix& m) {
  return {m.values().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

void check_dim(const HeadParams& params, const FeatureMatrix& features) {
  if (features.cols() != params.dim() && !features.empty()) {
    throw Error(ErrorCode::dimension_mismatch, "features have dim " +
                                                   std::to_string(features.cols()) +
                                                   ", head expects " +
                                                   std::to_string(params.dim()));
  }
}

void softmax_rows(RowMatrix& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    const double shift = row.maxCoeff();
    row = (row.array() - shift).exp();
    row /= row.sum();
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_config, what); };
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) fail("warmup_fraction must be in [0,1]");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (minibatch_size < 1) fail("minibatch_size must be >= 1");
  if (!(numeric_epsilon > 0.0)) fail("numeric_epsilon must be > 0");
}

TrainConfig short_training() {
  TrainConfig c;
  c.epochs = 5;
  return c;
}

TrainConfig long_training() { return TrainConfig{}; }

TrainConfig long_plus_training() {
  TrainConfig c;
  c.epochs = 20;
  c.warmup_fraction = 0.1;
  c.learning_rate = 4e-3;
  return c;
}

double schedule_multiplier(std::size_t step, std::size_t total, double warmup_fraction) {
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total)));
  if (step < warmup) return static_cast<double>(step + 1) / static_cast<double>(warmup);
  return static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

HeadParams init_params(std::size_t dim, std::size_t num_classes, Rng& rng) {
  if (dim < 1 || num_classes < 1) {
    throw Error(ErrorCode::invalid_config, "init_params needs dim, classes >= 1");
  }
  HeadParams p;
  p.weights.resize(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(dim));
  p.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
    p.weights.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

RowMatrix logits(const HeadParams& params, const FeatureMatrix& features) {
  check_dim(params, features);
  RowMatrix z = view(features).cast<double>() * params.weights.transpose();
  z.rowwise() += params.bias.transpose();
  return z;
}

ProbMatrix predict_proba(const HeadParams& params, const FeatureMatrix& features) {
  RowMatrix z = logits(params, features);
  softmax_rows(z);
  return z;
}

std::vector<std::uint32_t> argmax_rows(const ProbMatrix& probs) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(r, c) > probs(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

double mean_loss(const HeadParams& params, const FeatureMatrix& features,
                 std::span<const std::uint32_t> labels, double epsilon) {
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::dimension_mismatch, "features/labels row count differ");
  }
  if (labels.empty()) throw Error(ErrorCode::cannot_train, "loss of an empty set");
  const ProbMatrix p = predict_proba(params, features);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(p(static_cast<Eigen::Index>(i), labels[i]), epsilon));
  }
  return total / static_cast<double>(labels.size());
}

RowMatrix grad_embedding(const HeadParams& params, const FeatureMatrix& features) {
  const ProbMatrix p = predict_proba(params, features);
  const auto pseudo = argmax_rows(p);
  const auto c = static_cast<Eigen::Index>(params.num_classes());
  const auto d = static_cast<Eigen::Index>(params.dim());
  RowMatrix g(p.rows(), c * (d + 1));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const auto x = features.row(static_cast<std::size_t>(r));
    for (Eigen::Index k = 0; k < c; ++k) {
      const double residual = p(r, k) - (k == pseudo[static_cast<std::size_t>(r)] ? 1.0 : 0.0);
      const Eigen::Index base = k * (d + 1);
      for (Eigen::Index j = 0; j < d; ++j) g(r, base + j) = residual * x[static_cast<std::size_t>(j)];
      g(r, base + d) = residual;
    }
  }
  return g;
}

TrainResult train(const HeadParams& start, const FeatureMatrix& features,
                  std::span<const std::uint32_t> labels, const TrainConfig& cfg,
                  Rng& shuffle_rng) {
  cfg.validate();
  const std::size_t n = labels.size();
  if (n == 0 || features.rows() == 0) {
    throw Error(ErrorCode::cannot_train, "no labeled instances to train on");
  }
  if (features.rows() != n) {
    throw Error(ErrorCode::dimension_mismatch, "features/labels row count differ");
  }
  check_dim(start, features);
  for (auto y : labels) {
    if (y >= start.num_classes()) {
      throw Error(ErrorCode::label_range, "label " + std::to_string(y) + " >= head classes " +
                                              std::to_string(start.num_classes()));
    }
  }

  const auto x_all = view(features).cast<double>().eval();
  const auto c = static_cast<Eigen::Index>(start.num_classes());
  const auto d = static_cast<Eigen::Index>(start.dim());

  TrainResult result;
  result.params = start;
  result.initial_loss = mean_loss(start, features, labels, cfg.numeric_epsilon);

  HeadParams& theta = result.params;
  RowMatrix m_w = RowMatrix::Zero(c, d), v_w = RowMatrix::Zero(c, d);
  Eigen::VectorXd m_b = Eigen::VectorXd::Zero(c), v_b = Eigen::VectorXd::Zero(c);

  const std::size_t batches = (n + cfg.minibatch_size - 1) / cfg.minibatch_size;
  const std::size_t total_steps = cfg.epochs * batches;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  double beta1_pow = 1.0, beta2_pow = 1.0;
  std::size_t step = 0;
  RowMatrix grad_w(c, d);
  Eigen::VectorXd grad_b(c);
  Eigen::VectorXd z(c);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t batch = 0; batch < batches; ++batch, ++step) {
      const std::size_t lo = batch * cfg.minibatch_size;
      const std::size_t hi = std::min(n, lo + cfg.minibatch_size);
      const double inv_m = 1.0 / static_cast<double>(hi - lo);

      grad_w.setZero();
      grad_b.setZero();
      double batch_loss = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        z.noalias() = theta.weights * x_all.row(i).transpose();
        z += theta.bias;
        const double shift = z.maxCoeff();
        z = (z.array() - shift).exp();
        z /= z.sum();
        const auto y = static_cast<Eigen::Index>(labels[order[k]]);
        batch_loss -= std::log(std::max(z(y), cfg.numeric_epsilon));
        z(y) -= 1.0;
        grad_w.noalias() += z * x_all.row(i);
        grad_b += z;
      }
      batch_loss *= inv_m;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::divergence, "non-finite loss at step " + std::to_string(step));
      }
      grad_w *= inv_m;
      grad_b *= inv_m;

      const double lr = cfg.learning_rate * schedule_multiplier(step, total_steps, cfg.warmup_fraction);
      beta1_pow *= cfg.beta1;
      beta2_pow *= cfg.beta2;
      const double bc1 = 1.0 - beta1_pow;
      const double bc2 = 1.0 - beta2_pow;

      // Decoupled decay on weights only; biases are not decayed.
      theta.weights *= (1.0 - lr * cfg.weight_decay);

      m_w = cfg.beta1 * m_w + (1.0 - cfg.beta1) * grad_w;
      v_w = cfg.beta2 * v_w + (1.0 - cfg.beta2) * grad_w.cwiseProduct(grad_w);
      m_b = cfg.beta1 * m_b + (1.0 - cfg.beta1) * grad_b;
      v_b = cfg.beta2 * v_b + (1.0 - cfg.beta2) * grad_b.cwiseProduct(grad_b);

      theta.weights.array() -=
          lr * (m_w.array() / bc1) / ((v_w.array() / bc2).sqrt() + cfg.adam_epsilon);
      theta.bias.array() -=
          lr * (m_b.array() / bc1) / ((v_b.array() / bc2).sqrt() + cfg.adam_epsilon);

      if (!theta.weights.allFinite() || !theta.bias.allFinite()) {
        throw Error(ErrorCode::divergence, "non-finite parameters after step " + std::to_string(step));
      }
    }
  }
  result.steps = step;
  result.final_loss = mean_loss(theta, features, labels, cfg.numeric_epsilon);
  if (!std::isfinite(result.final_loss)) {
    throw Error(ErrorCode::divergence, "non-finite loss after step " + std::to_string(step));
  }
  return result;
}

TrainResult train_from_scratch(std::size_t num_classes, const FeatureMatrix& features,
                               std::span<const std::uint32_t> labels, const TrainConfig& cfg,
                               Rng& init_rng, Rng& shuffle_rng) {
  if (labels.empty()) throw Error(ErrorCode::cannot_train, "no labeled instances to train on");
  return train(init_params(features.cols(), num_classes, init_rng), features, labels, cfg,
               shuffle_rng);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}
std::uint64_t get_le(const std::string& in, std::size_t& pos, int width) {
  if (pos + static_cast<std::size_t>(width) > in.size()) {
    throw Error(ErrorCode::format, "AGLH at offset " + std::to_string(pos) + ": truncated");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += static_cast<std::size_t>(width);
  return v;
}

}  // namespace

// "AGLH" u16 version, u32 c, u32 d, c*d f64 weights row-major, c f64 bias.
void write_params(const HeadParams& params, const std::filesystem::path& path) {
  std::string out = "AGLH";
  out.push_back(static_cast<char>(kFormatVersion & 0xFF));
  out.push_back(static_cast<char>(kFormatVersion >> 8));
  put_u32(out, static_cast<std::uint32_t>(params.num_classes()));
  put_u32(out, static_cast<std::uint32_t>(params.dim()));
  for (Eigen::Index i = 0; i < params.weights.size(); ++i) put_f64(out, params.weights.data()[i]);
  for (Eigen::Index i = 0; i < params.bias.size(); ++i) put_f64(out, params.bias[i]);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

HeadParams read_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string());
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < 4 || in.compare(0, 4, "AGLH") != 0) {
    throw Error(ErrorCode::format, "AGLH at offset 0: bad magic");
  }
  std::size_t pos = 4;
  const auto version = get_le(in, pos, 2);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::format, "AGLH at offset 4: unsupported version " + std::to_string(version));
  }
  const auto c = static_cast<Eigen::Index>(get_le(in, pos, 4));
  const auto d = static_cast<Eigen::Index>(get_le(in, pos, 4));
  HeadParams p;
  p.weights.resize(c, d);
  p.bias.resize(c);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
    p.weights.data()[i] = std::bit_cast<double>(get_le(in, pos, 8));
  }
  for (Eigen::Index i = 0; i < c; ++i) p.bias[i] = std::bit_cast<double>(get_le(in, pos, 8));
  if (pos != in.size()) {
    throw Error(ErrorCode::format, "AGLH at offset " + std::to_string(pos) + ": trailing bytes");
  }
  return p;
}

}  // namespace aglae
