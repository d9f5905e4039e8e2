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

#include "oscars/trainer.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <unordered_map>

#include "binary_io.h"
#include "oscars/errors.h"

namespace oscars {

namespace {

constexpr std::string_view kHeadMagic = "OSCH";
constexpr std::uint32_t kHeadVersion = 1;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

// d(u, v) and its gradient direction (u - v) / d, zero when d = 0.
struct Distance {
  double value;
  Eigen::VectorXd unit;
};

template <typename A, typename B>
Distance distance(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  Eigen::VectorXd diff = u - v;
  const double d = diff.norm();
  if (d > 0.0) {
    diff /= d;
  } else {
    diff.setZero();
  }
  return {d, std::move(diff)};
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ValidationError("lambda must lie in [0, 1]");
  if (!(margin_intra > 0.0) || !(margin_inter > 0.0))
    throw ValidationError("margins must be positive");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning rate must be finite and non-negative");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
  if (hidden_dim < 1 || embedding_dim < 1)
    throw ValidationError("hidden and embedding dimensions must be positive");
}

// ---------------------------------------------------------------------------
// Head

ProjectionHead::ProjectionHead(std::size_t input_dim, std::size_t hidden_dim,
                               std::size_t output_dim)
    : w1(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hidden_dim),
                               static_cast<Eigen::Index>(input_dim))),
      b1(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden_dim))),
      w2(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(output_dim),
                               static_cast<Eigen::Index>(hidden_dim))),
      b2(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(output_dim))) {}

ProjectionHead ProjectionHead::initialize(std::size_t input_dim, std::size_t hidden_dim,
                                          std::size_t output_dim, std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0)
    throw ValidationError("projection head dimensions must be positive");
  ProjectionHead head(input_dim, hidden_dim, output_dim);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = (2.0 * unit_uniform(rng) - 1.0) * bound;
  };
  fill(head.w1);
  fill(head.w2);
  return head;
}

std::size_t ProjectionHead::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

bool ProjectionHead::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

bool operator==(const ProjectionHead& a, const ProjectionHead& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return same(a.w1, b.w1) && same(a.b1, b.b1) && same(a.w2, b.w2) && same(a.b2, b.b2);
}

Eigen::VectorXd forward(const ProjectionHead& head, std::span<const double> x) {
  if (x.size() != head.input_dim())
    throw ValidationError("forward: input dimension " + std::to_string(x.size()) +
                          " does not match head input " + std::to_string(head.input_dim()));
  const Eigen::VectorXd hidden = (head.w1 * as_vector(x) + head.b1).cwiseMax(0.0);
  return head.w2 * hidden + head.b2;
}

// ---------------------------------------------------------------------------
// Loss

LossTerms quadruplet_loss_terms(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                                const Eigen::VectorXd& intra_negative,
                                const Eigen::VectorXd& inter_negative, const LossConfig& cfg) {
  const auto n = anchor.size();
  if (positive.size() != n || intra_negative.size() != n || inter_negative.size() != n)
    throw ValidationError("quadruplet_loss: embedding lengths differ");
  const double d_ap = (anchor - positive).norm();
  const double d_an = (anchor - intra_negative).norm();
  const double d_ae = (anchor - inter_negative).norm();
  LossTerms t;
  t.intra_hinge = std::max(d_ap - d_an + cfg.margin_intra, 0.0);
  t.inter_hinge = std::max(d_an - d_ae + cfg.margin_inter, 0.0);
  t.loss = cfg.lambda * t.intra_hinge + (1.0 - cfg.lambda) * t.inter_hinge;
  return t;
}

double quadruplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                       const Eigen::VectorXd& intra_negative,
                       const Eigen::VectorXd& inter_negative, const LossConfig& cfg) {
  return quadruplet_loss_terms(anchor, positive, intra_negative, inter_negative, cfg).loss;
}

HeadGradients HeadGradients::zeros_like(const ProjectionHead& head) {
  return {Eigen::MatrixXd::Zero(head.w1.rows(), head.w1.cols()),
          Eigen::VectorXd::Zero(head.b1.size()),
          Eigen::MatrixXd::Zero(head.w2.rows(), head.w2.cols()),
          Eigen::VectorXd::Zero(head.b2.size())};
}

double accumulate_batch(const ProjectionHead& head, const Eigen::MatrixXd& inputs,
                        const LossConfig& cfg, HeadGradients& grads) {
  if (inputs.cols() % 4 != 0) throw ValidationError("batch columns must be a multiple of 4");
  if (static_cast<std::size_t>(inputs.rows()) != head.input_dim())
    throw ValidationError("batch input dimension does not match head");
  const Eigen::Index n = inputs.cols() / 4;

  const Eigen::MatrixXd pre = (head.w1 * inputs).colwise() + head.b1;
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::MatrixXd emb = (head.w2 * hidden).colwise() + head.b2;

  // dL/de for every column.
  Eigen::MatrixXd g_emb = Eigen::MatrixXd::Zero(emb.rows(), emb.cols());
  double total = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto a = emb.col(k);
    const auto p = emb.col(n + k);
    const auto ni = emb.col(2 * n + k);
    const auto nn = emb.col(3 * n + k);
    const Distance ap = distance(a, p);
    const Distance an = distance(a, ni);
    const Distance ae = distance(a, nn);
    const double h1 = ap.value - an.value + cfg.margin_intra;
    const double h2 = an.value - ae.value + cfg.margin_inter;
    total += cfg.lambda * std::max(h1, 0.0) + (1.0 - cfg.lambda) * std::max(h2, 0.0);
    if (h1 > 0.0) {
      const double w = cfg.lambda;
      g_emb.col(k) += w * (ap.unit - an.unit);
      g_emb.col(n + k) -= w * ap.unit;
      g_emb.col(2 * n + k) += w * an.unit;
    }
    if (h2 > 0.0) {
      const double w = 1.0 - cfg.lambda;
      g_emb.col(k) += w * (an.unit - ae.unit);
      g_emb.col(2 * n + k) -= w * an.unit;
      g_emb.col(3 * n + k) += w * ae.unit;
    }
  }

  grads.w2.noalias() += g_emb * hidden.transpose();
  grads.b2 += g_emb.rowwise().sum();
  const Eigen::MatrixXd g_pre =
      (head.w2.transpose() * g_emb).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grads.w1.noalias() += g_pre * inputs.transpose();
  grads.b1 += g_pre.rowwise().sum();
  return total;
}

LossAndGradients loss_gradients(const ProjectionHead& head, std::span<const double> x_anchor,
                                std::span<const double> x_positive,
                                std::span<const double> x_intra_negative,
                                std::span<const double> x_inter_negative,
                                const LossConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(head.input_dim());
  Eigen::MatrixXd inputs(d, 4);
  const std::span<const double> cols[] = {x_anchor, x_positive, x_intra_negative,
                                          x_inter_negative};
  for (int c = 0; c < 4; ++c) {
    if (static_cast<Eigen::Index>(cols[c].size()) != d)
      throw ValidationError("loss_gradients: input dimension mismatch");
    inputs.col(c) = as_vector(cols[c]);
  }
  LossAndGradients out{0.0, HeadGradients::zeros_like(head)};
  out.loss = accumulate_batch(head, inputs, cfg, out.gradients);
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const Dataset& store, const std::vector<Quadruplet>& quadruplets,
                  std::uint64_t head_init_seed, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg, const QuadrupletResampler& resample) {
  loss_cfg.validate();
  train_cfg.validate();
  if (quadruplets.empty()) throw DataError("train: no quadruplets");

  // Raw vectors for every record, 64-bit, one column each.
  const auto dim = static_cast<Eigen::Index>(store.dimension());
  Eigen::MatrixXd raw(dim, static_cast<Eigen::Index>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i)
    for (Eigen::Index d = 0; d < dim; ++d)
      raw(d, static_cast<Eigen::Index>(i)) = store[i].vector[static_cast<std::size_t>(d)];

  auto resolve = [&store](const std::vector<Quadruplet>& quads) {
    if (auto bad = validate_quadruplets(store, quads); !bad.empty())
      throw ValidationError("train: quadruplet " + std::to_string(bad.front().index) +
                            " invalid (" + bad.front().reason + ")");
    std::vector<std::array<Eigen::Index, 4>> cols;
    cols.reserve(quads.size());
    for (const auto& q : quads)
      cols.push_back({static_cast<Eigen::Index>(*store.find(q.anchor)),
                      static_cast<Eigen::Index>(*store.find(q.positive)),
                      static_cast<Eigen::Index>(*store.find(q.intra_negative)),
                      static_cast<Eigen::Index>(*store.find(q.inter_negative))});
    return cols;
  };

  TrainResult result;
  result.head = ProjectionHead::initialize(store.dimension(),
                                           static_cast<std::size_t>(train_cfg.hidden_dim),
                                           static_cast<std::size_t>(train_cfg.embedding_dim),
                                           head_init_seed);
  ProjectionHead& head = result.head;
  HeadGradients velocity = HeadGradients::zeros_like(head);
  std::vector<std::array<Eigen::Index, 4>> items = resolve(quadruplets);
  std::mt19937_64 rng(train_cfg.seed);
  const auto batch = static_cast<std::size_t>(train_cfg.batch_size);

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    if (epoch > 0 && resample) {
      items = resolve(resample(epoch + 1));
      if (items.empty()) throw DataError("train: resampling produced no quadruplets");
    }
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);

    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      const auto ni = static_cast<Eigen::Index>(n);
      Eigen::MatrixXd inputs(dim, 4 * ni);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& cols = items[order[start + k]];
        for (Eigen::Index role = 0; role < 4; ++role)
          inputs.col(role * ni + static_cast<Eigen::Index>(k)) = raw.col(cols[role]);
      }
      HeadGradients g = HeadGradients::zeros_like(head);
      epoch_total += accumulate_batch(head, inputs, loss_cfg, g);
      const double scale = 1.0 / static_cast<double>(n);
      auto step = [&](auto& param, auto& vel, const auto& grad) {
        if (train_cfg.momentum > 0.0) {
          vel = train_cfg.momentum * vel + scale * grad;
          param -= train_cfg.learning_rate * vel;
        } else {
          param -= (train_cfg.learning_rate * scale) * grad;
        }
      };
      step(head.w1, velocity.w1, g.w1);
      step(head.b1, velocity.b1, g.b1);
      step(head.w2, velocity.w2, g.w2);
      step(head.b2, velocity.b2, g.b2);
    }
    const double mean = epoch_total / static_cast<double>(items.size());
    if (!std::isfinite(mean) || !head.all_finite())
      throw NumericError("train: loss diverged at epoch " + std::to_string(epoch + 1));
    result.epoch_loss.push_back(mean);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string encode_head(const ProjectionHead& head, const LossConfig& loss) {
  io::ByteWriter w;
  w.put_magic(kHeadMagic);
  w.put(kHeadVersion);
  w.put(static_cast<std::uint32_t>(head.input_dim()));
  w.put(static_cast<std::uint32_t>(head.hidden_dim()));
  w.put(static_cast<std::uint32_t>(head.output_dim()));
  w.put(loss.lambda);
  w.put(loss.margin_intra);
  w.put(loss.margin_inter);
  auto put_matrix = [&w](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.put(m(r, c));
  };
  auto put_vector = [&w](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) w.put(v(i));
  };
  put_matrix(head.w1);
  put_vector(head.b1);
  put_matrix(head.w2);
  put_vector(head.b2);
  io::append_checksum_trailer(w);
  return w.take();
}

Checkpoint decode_head(std::string_view bytes, const std::string& what) {
  io::ByteReader rd(io::verify_checksum_trailer(bytes, what), what);
  rd.expect_magic(kHeadMagic);
  if (const auto v = rd.get<std::uint32_t>(); v != kHeadVersion)
    throw DataError(what + ": unsupported checkpoint version " + std::to_string(v));
  const auto d = rd.get<std::uint32_t>();
  const auto h = rd.get<std::uint32_t>();
  const auto e = rd.get<std::uint32_t>();
  if (d == 0 || h == 0 || e == 0) throw DataError(what + ": zero dimension in header");
  Checkpoint ck;
  ck.loss.lambda = rd.get<double>();
  ck.loss.margin_intra = rd.get<double>();
  ck.loss.margin_inter = rd.get<double>();
  ck.head = ProjectionHead(d, h, e);
  auto get_matrix = [&rd](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.get<double>();
  };
  auto get_vector = [&rd](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rd.get<double>();
  };
  get_matrix(ck.head.w1);
  get_vector(ck.head.b1);
  get_matrix(ck.head.w2);
  get_vector(ck.head.b2);
  if (rd.remaining() != 0) throw DataError(what + ": trailing bytes after parameters");
  if (!ck.head.all_finite()) throw DataError(what + ": non-finite parameters");
  return ck;
}

void save_head(const ProjectionHead& head, const LossConfig& loss, const std::string& path) {
  io::write_file_atomic(path, encode_head(head, loss));
}

Checkpoint load_head(const std::string& path) { return decode_head(io::read_file(path), path); }

std::string format_loss_history(const std::vector<double>& epoch_loss) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu, %.17g\n", i + 1, epoch_loss[i]);
    out += buf;
  }
  return out;
}

}  // namespace oscars
