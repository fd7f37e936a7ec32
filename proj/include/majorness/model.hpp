/*
 * Copyright 2026 The Majorness Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "majorness/errors.hpp"
#include "majorness/features.hpp"
#include "majorness/random.hpp"
#include "majorness/types.hpp"

namespace majorness {

// One Inception-style block over a log-mel spectrogram: the input (mel bands
// as channels) is standardized per band, average-pooled in time, then fed to
// parallel temporal convolutions of different widths whose kernels span all
// mel bands. Each branch is ReLU'd and globally average-pooled over time; the
// concatenated channels feed an affine head producing one scalar.
struct ArchConfig {
  Eigen::Index n_mels = 299;
  Eigen::Index time_pool = 4;
  std::vector<Eigen::Index> kernel_widths = {1, 3, 5};
  Eigen::Index channels = 16;

  void validate() const {
    if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
    if (time_pool < 1) throw ConfigError("time_pool must be >= 1");
    if (channels < 1) throw ConfigError("branch channel count must be >= 1");
    if (kernel_widths.empty()) throw ConfigError("need at least one branch");
    for (auto w : kernel_widths) {
      if (w < 1) throw ConfigError("kernel width " + std::to_string(w) + " is not positive");
    }
  }
  Eigen::Index max_width() const {
    return *std::max_element(kernel_widths.begin(), kernel_widths.end());
  }
  // Fewest input frames that still leave one output position in every branch.
  Eigen::Index min_frames() const { return time_pool * max_width(); }
  Eigen::Index feature_count() const {
    return channels * static_cast<Eigen::Index>(kernel_widths.size());
  }
};

// Offsets into the flat trainable-weight vector.
struct ParamLayout {
  struct Branch {
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
    Eigen::Index width;
  };
  std::vector<Branch> branches;
  Eigen::Index head_weight_offset = 0;
  Eigen::Index head_bias_offset = 0;
  Eigen::Index total = 0;

  explicit ParamLayout(const ArchConfig& arch) {
    arch.validate();
    Eigen::Index offset = 0;
    for (auto w : arch.kernel_widths) {
      branches.push_back({offset, offset + arch.channels * arch.n_mels * w, w});
      offset += arch.channels * arch.n_mels * w + arch.channels;
    }
    head_weight_offset = offset;
    offset += arch.feature_count();
    head_bias_offset = offset;
    total = offset + 1;
  }
};

template <typename Scalar>
struct ModelParams {
  ArchConfig arch;
  // All trainable weights, laid out by ParamLayout.
  Vector<Scalar> weights;
  // Fixed per-band standardization: z = (x - input_mean) * input_scale.
  Vector<Scalar> input_mean;
  Vector<Scalar> input_scale;
  std::uint64_t seed = 0;

  ParamLayout layout() const { return ParamLayout(arch); }

  // channels x (width * n_mels); column k * n_mels + m multiplies band m at
  // time offset k.
  auto branch_weight(std::size_t b) {
    const auto br = layout().branches.at(b);
    return Eigen::Map<RowMatrix<Scalar>>(weights.data() + br.weight_offset, arch.channels, br.width * arch.n_mels);
  }
  auto branch_weight(std::size_t b) const {
    const auto br = layout().branches.at(b);
    return Eigen::Map<const RowMatrix<Scalar>>(weights.data() + br.weight_offset, arch.channels, br.width * arch.n_mels);
  }
  auto branch_bias(std::size_t b) { return weights.segment(layout().branches.at(b).bias_offset, arch.channels); }
  auto branch_bias(std::size_t b) const { return weights.segment(layout().branches.at(b).bias_offset, arch.channels); }
  auto head_weight() { return weights.segment(layout().head_weight_offset, arch.feature_count()); }
  auto head_weight() const { return weights.segment(layout().head_weight_offset, arch.feature_count()); }
  Scalar& head_bias() { return weights(layout().head_bias_offset); }
  Scalar head_bias() const { return weights(layout().head_bias_offset); }

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    out.arch = arch;
    out.weights = weights.template cast<Other>();
    out.input_mean = input_mean.template cast<Other>();
    out.input_scale = input_scale.template cast<Other>();
    out.seed = seed;
    return out;
  }

  bool operator==(const ModelParams& o) const {
    return arch.n_mels == o.arch.n_mels && arch.time_pool == o.arch.time_pool &&
           arch.kernel_widths == o.arch.kernel_widths && arch.channels == o.arch.channels &&
           weights == o.weights && input_mean == o.input_mean && input_scale == o.input_scale &&
           seed == o.seed;
  }
};

// He-uniform branch kernels, small uniform head; deterministic in `seed`.
// The head bias starts at `target_mean` when given (e.g. the mean training
// rating), else zero.
template <typename Scalar = double>
ModelParams<Scalar> init_model(const ArchConfig& arch, std::uint64_t seed,
                               std::optional<double> target_mean = std::nullopt) {
  ModelParams<Scalar> p;
  p.arch = arch;
  const ParamLayout layout(arch);
  p.seed = seed;
  p.weights = Vector<Scalar>::Zero(layout.total);
  p.input_mean = Vector<Scalar>::Zero(arch.n_mels);
  p.input_scale = Vector<Scalar>::Ones(arch.n_mels);
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < layout.branches.size(); ++b) {
    const double bound = std::sqrt(6.0 / static_cast<double>(arch.n_mels * layout.branches[b].width));
    auto w = p.branch_weight(b);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = static_cast<Scalar>(bound * (2.0 * detail::unit_uniform(rng) - 1.0));
    }
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(arch.feature_count()));
  auto head = p.head_weight();
  for (Eigen::Index i = 0; i < head.size(); ++i) {
    head(i) = static_cast<Scalar>(head_bound * (2.0 * detail::unit_uniform(rng) - 1.0));
  }
  p.head_bias() = static_cast<Scalar>(target_mean.value_or(0.0));
  return p;
}

// Sets the per-band standardization from the frames of a training set.
template <typename Scalar>
void fit_input_normalization(ModelParams<Scalar>& params, std::span<const MelSpectrogram* const> mels) {
  const auto n_mels = params.arch.n_mels;
  VectorXd sum = VectorXd::Zero(n_mels), sum_sq = VectorXd::Zero(n_mels);
  double count = 0.0;
  for (const auto* mel : mels) {
    if (mel->n_mels() != n_mels) throw ShapeError("spectrogram band count does not match the model");
    const MatrixXd v = mel->values.template cast<double>();
    sum += v.colwise().sum().transpose();
    sum_sq += v.array().square().colwise().sum().matrix().transpose();
    count += static_cast<double>(v.rows());
  }
  if (count == 0.0) throw InsufficientDataError("no frames to fit the input normalization");
  const VectorXd mean = sum / count;
  const VectorXd var = (sum_sq / count - mean.cwiseProduct(mean)).cwiseMax(0.0);
  params.input_mean = mean.cast<Scalar>();
  params.input_scale = (var.array().sqrt() + 1e-3).inverse().matrix().template cast<Scalar>();
}

// Standardized, time-pooled input: pooled_frames x n_mels, row-major.
template <typename Scalar>
RowMatrix<Scalar> prepare_input(const ModelParams<Scalar>& params, const MelSpectrogram& mel) {
  const auto& arch = params.arch;
  if (mel.n_mels() != arch.n_mels) {
    throw ShapeError("spectrogram has " + std::to_string(mel.n_mels()) + " mel bands, model expects " +
                     std::to_string(arch.n_mels));
  }
  if (mel.frames() < arch.min_frames()) {
    throw ShapeError("spectrogram has " + std::to_string(mel.frames()) + " frames, model needs at least " +
                     std::to_string(arch.min_frames()));
  }
  const Eigen::Index pooled = mel.frames() / arch.time_pool;
  RowMatrix<Scalar> z(pooled, arch.n_mels);
  for (Eigen::Index t = 0; t < pooled; ++t) {
    z.row(t) = mel.values.middleRows(t * arch.time_pool, arch.time_pool).template cast<Scalar>().colwise().mean();
  }
  z.rowwise() -= params.input_mean.transpose();
  z.array().rowwise() *= params.input_scale.transpose().array();
  return z;
}

template <typename Scalar>
struct ForwardTrace {
  // Pre-activation of each branch, output_positions x channels.
  std::vector<RowMatrix<Scalar>> pre_activation;
  Vector<Scalar> pooled;
  Scalar output = 0;
};

namespace detail {

// Overlapping view: row t is the flattened window z[t .. t + width).
template <typename Scalar>
auto patches(const RowMatrix<Scalar>& z, Eigen::Index width) {
  const Eigen::Index positions = z.rows() - width + 1;
  return Eigen::Map<const RowMatrix<Scalar>, 0, Eigen::OuterStride<>>(
      z.data(), positions, width * z.cols(), Eigen::OuterStride<>(z.cols()));
}

}  // namespace detail

template <typename Scalar>
ForwardTrace<Scalar> forward_prepared(const ModelParams<Scalar>& params, const RowMatrix<Scalar>& z) {
  const auto& arch = params.arch;
  ForwardTrace<Scalar> trace;
  trace.pooled.resize(arch.feature_count());
  for (std::size_t b = 0; b < arch.kernel_widths.size(); ++b) {
    const auto width = arch.kernel_widths[b];
    if (z.rows() < width) throw ShapeError("input too short for kernel width " + std::to_string(width));
    RowMatrix<Scalar> h = detail::patches(z, width) * params.branch_weight(b).transpose();
    h.rowwise() += params.branch_bias(b).transpose();
    trace.pooled.segment(static_cast<Eigen::Index>(b) * arch.channels, arch.channels) =
        h.cwiseMax(Scalar(0)).colwise().mean().transpose();
    trace.pre_activation.push_back(std::move(h));
  }
  trace.output = params.head_weight().dot(trace.pooled) + params.head_bias();
  return trace;
}

// Predicted majorness for one spectrogram of any length >= arch.min_frames().
template <typename Scalar>
Scalar forward(const ModelParams<Scalar>& params, const MelSpectrogram& mel) {
  return forward_prepared(params, prepare_input(params, mel)).output;
}

// Accumulates d(output)/d(weights) * upstream into `grad`.
template <typename Scalar>
void backward_prepared(const ModelParams<Scalar>& params, const RowMatrix<Scalar>& z,
                       const ForwardTrace<Scalar>& trace, Scalar upstream, Vector<Scalar>& grad) {
  const auto& arch = params.arch;
  const ParamLayout layout(arch);
  grad.segment(layout.head_weight_offset, arch.feature_count()) += upstream * trace.pooled;
  grad(layout.head_bias_offset) += upstream;
  const auto head = params.head_weight();
  for (std::size_t b = 0; b < arch.kernel_widths.size(); ++b) {
    const auto& h = trace.pre_activation[b];
    const Scalar inv_positions = Scalar(1) / static_cast<Scalar>(h.rows());
    const Vector<Scalar> d_pooled =
        upstream * inv_positions * head.segment(static_cast<Eigen::Index>(b) * arch.channels, arch.channels);
    RowMatrix<Scalar> d_h = (h.array() > Scalar(0)).template cast<Scalar>();
    d_h.array().rowwise() *= d_pooled.transpose().array();
    const auto& br = layout.branches[b];
    Eigen::Map<RowMatrix<Scalar>> d_w(grad.data() + br.weight_offset, arch.channels, br.width * arch.n_mels);
    d_w.noalias() += d_h.transpose() * detail::patches(z, br.width);
    grad.segment(br.bias_offset, arch.channels) += d_h.colwise().sum().transpose();
  }
}

template <typename Scalar>
struct PreparedSample {
  RowMatrix<Scalar> input;
  Scalar target = 0;
};

template <typename Scalar>
PreparedSample<Scalar> prepare_sample(const ModelParams<Scalar>& params, const MelSpectrogram& mel, double target) {
  return {prepare_input(params, mel), static_cast<Scalar>(target)};
}

// Mean squared error over `indices` (all samples when empty) and, if `grad`
// is non-null, its gradient with respect to params.weights.
template <typename Scalar>
Scalar mse_loss(const ModelParams<Scalar>& params, const std::vector<PreparedSample<Scalar>>& samples,
                std::span<const std::size_t> indices, std::type_identity_t<Vector<Scalar>>* grad) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = all;
  }
  if (grad) grad->setZero(params.weights.size());
  const Scalar n = static_cast<Scalar>(indices.size());
  Scalar loss = 0;
  for (auto i : indices) {
    const auto& s = samples.at(i);
    const auto trace = forward_prepared(params, s.input);
    const Scalar err = trace.output - s.target;
    loss += err * err / n;
    if (grad) backward_prepared(params, s.input, trace, Scalar(2) * err / n, *grad);
  }
  return loss;
}

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Stop after this many optimizer steps in total (0 = no limit).
  std::size_t max_steps = 0;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be finite and >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
  }
};

struct TrainingSample {
  const MelSpectrogram* mel = nullptr;
  double target = 0.0;
};

template <typename Scalar>
struct TrainResult {
  ModelParams<Scalar> params;
  // Full-dataset MSE after each epoch.
  std::vector<double> loss_trace;
  std::size_t steps = 0;
};

// Minibatch training on MSE with a seeded shuffle per epoch. Targets must lie
// in [1, 10]. Throws TrainingError if the loss becomes non-finite.
template <typename Scalar>
TrainResult<Scalar> train(ModelParams<Scalar> params, std::span<const TrainingSample> dataset,
                          const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw InsufficientDataError("training set is empty");
  std::vector<PreparedSample<Scalar>> samples;
  samples.reserve(dataset.size());
  for (const auto& s : dataset) {
    if (!(s.target >= 1.0 && s.target <= 10.0)) {
      throw ParameterError("training target " + std::to_string(s.target) + " outside [1, 10]");
    }
    samples.push_back(prepare_sample(params, *s.mel, s.target));
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector<Scalar> grad, m = Vector<Scalar>::Zero(params.weights.size()), v = m;
  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto b1 = static_cast<Scalar>(config.beta1), b2 = static_cast<Scalar>(config.beta2);

  TrainResult<Scalar> result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own uniform draw keeps the order portable.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps && result.steps >= config.max_steps) break;
      const auto count = std::min(config.batch_size, order.size() - start);
      const Scalar batch_loss = mse_loss(params, samples, std::span(order).subspan(start, count), &grad);
      if (!std::isfinite(static_cast<double>(batch_loss))) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                            " (learning_rate=" + std::to_string(config.learning_rate) + ")");
      }
      ++result.steps;
      if (config.optimizer == Optimizer::kSgd) {
        params.weights -= lr * grad;
      } else {
        m = b1 * m + (Scalar(1) - b1) * grad;
        v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
        const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(result.steps));
        const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(result.steps));
        params.weights.array() -= lr * (m.array() / c1) /
                                  ((v.array() / c2).sqrt() + static_cast<Scalar>(config.adam_epsilon));
      }
    }
    const double epoch_loss = static_cast<double>(mse_loss(params, samples, {}, nullptr));
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                          " (learning_rate=" + std::to_string(config.learning_rate) + ")");
    }
    result.loss_trace.push_back(epoch_loss);
    if (config.max_steps && result.steps >= config.max_steps) break;
  }
  result.params = std::move(params);
  return result;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Index into ModelParams::weights of the worst weight.
  Eigen::Index worst_index = -1;
};

// Compares the analytic MSE gradient of a single sample against central
// finite differences on `count` randomly chosen weights (all weights when the
// model has fewer).
template <typename Scalar>
GradCheckResult grad_check(const ModelParams<Scalar>& params, const MelSpectrogram& mel, double target,
                           double epsilon = 1e-4, std::size_t count = 128, std::uint64_t seed = 0) {
  if (!(epsilon > 0.0)) throw ParameterError("grad_check epsilon must be positive");
  std::vector<PreparedSample<Scalar>> sample{prepare_sample(params, mel, target)};
  Vector<Scalar> analytic;
  mse_loss(params, sample, {}, &analytic);

  const auto total = static_cast<std::size_t>(params.weights.size());
  std::vector<std::size_t> picks(total);
  std::iota(picks.begin(), picks.end(), std::size_t{0});
  if (count < total) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      const auto j = i + static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(total - i));
      std::swap(picks[i], picks[std::min(j, total - 1)]);
    }
    picks.resize(count);
  }

  GradCheckResult result;
  ModelParams<Scalar> probe = params;
  for (auto idx : picks) {
    const auto i = static_cast<Eigen::Index>(idx);
    const Scalar original = probe.weights(i);
    probe.weights(i) = original + static_cast<Scalar>(epsilon);
    const double up = static_cast<double>(mse_loss(probe, sample, {}, nullptr));
    probe.weights(i) = original - static_cast<Scalar>(epsilon);
    const double down = static_cast<double>(mse_loss(probe, sample, {}, nullptr));
    probe.weights(i) = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double exact = static_cast<double>(analytic(i));
    const double scale = std::max(std::abs(numeric), std::abs(exact));
    const double rel = scale < 1e-10 ? 0.0 : std::abs(numeric - exact) / scale;
    if (rel > result.max_relative_error || result.worst_index < 0) {
      result.max_relative_error = std::max(rel, result.max_relative_error);
      result.worst_index = i;
    }
    ++result.checked;
  }
  return result;
}

// On-disk checkpoint: "MJRN", u32 version, u32 config length, JSON config
// block, u32 weight count, u32 band count, little-endian float32 blob
// (weights, input_mean, input_scale), CRC-32 of all preceding bytes.
struct Checkpoint {
  ArchConfig arch;
  std::uint64_t seed = 0;
  std::vector<float> weights;
  std::vector<float> input_mean;
  std::vector<float> input_scale;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
// Throws UnsupportedFormatError on a bad magic, version, size, or checksum.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
Checkpoint to_checkpoint(const ModelParams<Scalar>& params) {
  auto to_vec = [](const Vector<Scalar>& v) {
    std::vector<float> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v(i));
    return out;
  };
  return {params.arch, params.seed, to_vec(params.weights), to_vec(params.input_mean), to_vec(params.input_scale)};
}

template <typename Scalar = double>
ModelParams<Scalar> from_checkpoint(const Checkpoint& c) {
  auto from_vec = [](const std::vector<float>& v) {
    return Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size())).cast<Scalar>().eval();
  };
  ModelParams<Scalar> p;
  p.arch = c.arch;
  p.seed = c.seed;
  p.weights = from_vec(c.weights);
  p.input_mean = from_vec(c.input_mean);
  p.input_scale = from_vec(c.input_scale);
  if (p.weights.size() != ParamLayout(p.arch).total || p.input_mean.size() != p.arch.n_mels ||
      p.input_scale.size() != p.arch.n_mels) {
    throw UnsupportedFormatError("checkpoint sizes do not match its architecture");
  }
  return p;
}

}  // namespace majorness
