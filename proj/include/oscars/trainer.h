// Copyright 2026 The OSCARS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OSCARS_TRAINER_H_
#define OSCARS_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscars/core_data.h"
#include "oscars/sampler.h"

namespace oscars {

// Weights of the two hinge terms and their margins.
struct LossConfig {
  double lambda = 0.05;
  double margin_intra = 1.0;
  double margin_inter = 2.0;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 7;  // shuffling order
  double momentum = 0.0;
  int hidden_dim = 256;
  int embedding_dim = 128;

  void validate() const;
};

// x -> W2 max(W1 x + b1, 0) + b2, from input features (D) through a hidden
// layer (H) to the retrieval embedding (E).
struct ProjectionHead {
  Eigen::MatrixXd w1;  // H x D
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // E x H
  Eigen::VectorXd b2;  // E

  ProjectionHead() = default;
  // All-zero parameters.
  ProjectionHead(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
  static ProjectionHead initialize(std::size_t input_dim, std::size_t hidden_dim,
                                   std::size_t output_dim, std::uint64_t seed);

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(w2.rows()); }
  std::size_t parameter_count() const;

  bool all_finite() const;
  friend bool operator==(const ProjectionHead& a, const ProjectionHead& b);
};

Eigen::VectorXd forward(const ProjectionHead& head, std::span<const double> x);

struct LossTerms {
  double intra_hinge = 0.0;  // max{d(a,p) - d(a,n_intra) + M_intra, 0}
  double inter_hinge = 0.0;  // max{d(a,n_intra) - d(a,n_inter) + M_inter, 0}
  double loss = 0.0;
};

LossTerms quadruplet_loss_terms(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                                const Eigen::VectorXd& intra_negative,
                                const Eigen::VectorXd& inter_negative, const LossConfig& cfg);

double quadruplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                       const Eigen::VectorXd& intra_negative,
                       const Eigen::VectorXd& inter_negative, const LossConfig& cfg);

// Gradient of the loss with respect to each parameter block.
struct HeadGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static HeadGradients zeros_like(const ProjectionHead& head);
};

struct LossAndGradients {
  double loss = 0.0;
  HeadGradients gradients;
};

// Exact gradients of quadruplet_loss(forward(x_a), ..., forward(x_nn)).
// Subgradient conventions: inactive hinge (argument <= 0), zero distance
// and ramp input 0 all contribute 0.
LossAndGradients loss_gradients(const ProjectionHead& head, std::span<const double> x_anchor,
                                std::span<const double> x_positive,
                                std::span<const double> x_intra_negative,
                                std::span<const double> x_inter_negative,
                                const LossConfig& cfg);

// Batched form. `inputs` holds 4n columns laid out as n anchors, n
// positives, n intra negatives, n inter negatives. Returns the summed loss
// and adds summed gradients into `grads`.
double accumulate_batch(const ProjectionHead& head, const Eigen::MatrixXd& inputs,
                        const LossConfig& cfg, HeadGradients& grads);

struct TrainResult {
  ProjectionHead head;
  std::vector<double> epoch_loss;  // mean quadruplet loss per epoch
};

// Called before epochs 2..N when set; returns that epoch's quadruplets.
using QuadrupletResampler = std::function<std::vector<Quadruplet>(int epoch)>;

// Mini-batch SGD over seeded-shuffled quadruplets, batch loss = mean
// quadruplet loss. Throws NumericError if an epoch mean becomes non-finite.
TrainResult train(const Dataset& store, const std::vector<Quadruplet>& quadruplets,
                  std::uint64_t head_init_seed, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, const QuadrupletResampler& resample = {});

struct Checkpoint {
  ProjectionHead head;
  LossConfig loss;
};

// Checkpoint file (magic OSCH): dims, loss config and parameters as 64-bit
// little-endian floats, checksum trailer.
std::string encode_head(const ProjectionHead& head, const LossConfig& loss);
Checkpoint decode_head(std::string_view bytes, const std::string& what = "checkpoint");
void save_head(const ProjectionHead& head, const LossConfig& loss, const std::string& path);
Checkpoint load_head(const std::string& path);

// `epoch, mean_loss` lines, epochs numbered from 1.
std::string format_loss_history(const std::vector<double>& epoch_loss);

}  // namespace oscars

#endif  // OSCARS_TRAINER_H_
