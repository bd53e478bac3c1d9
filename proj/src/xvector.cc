// src/xvector.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "asv/xvector.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "asv/error.h"
#include "asv/numerics.h"

namespace asv {

namespace {

constexpr double kVarFloor = 1e-8;

void context_span(const std::vector<int> &ctx, int *min_off, int *max_off) {
  if (ctx.empty()) throw ArgumentError("empty context offset list");
  *min_off = *std::min_element(ctx.begin(), ctx.end());
  *max_off = *std::max_element(ctx.begin(), ctx.end());
}

// Columns of the VAD-retained frames, in order.
Matrix kept_columns(const FeatureMatrix &feat) {
  const std::size_t d = feat.dim();
  std::size_t kept = feat.kept_frames();
  Matrix out(d, kept);
  std::size_t j = 0;
  for (std::size_t t = 0; t < feat.frames(); ++t) {
    if (!feat.frame_kept(t)) continue;
    for (std::size_t i = 0; i < d; ++i) out(i, j) = feat.values(i, t);
    ++j;
  }
  return out;
}

struct ForwardTrace {
  // acts[0] is the input; acts[l+1] the post-ReLU output of frame layer l.
  std::vector<Matrix> acts;
  std::vector<Matrix> pre;  // pre-activation of frame layer l
  Vector mean, var, stddev;
  Vector pooled;
  std::vector<Vector> seg_pre, seg_act;
  Vector logits;
};

void run_frame_stack(const XvectorModel &model, const Matrix &input,
                     ForwardTrace *tr) {
  if (input.cols() < model.min_frames())
    throw ReceptiveFieldError(
        "utterance has " + std::to_string(input.cols()) +
        " retained frames, context stack needs at least " +
        std::to_string(model.min_frames()));
  tr->acts.push_back(input);
  for (const XvectorLayer &layer : model.frame_layers) {
    int lo, hi;
    context_span(layer.context, &lo, &hi);
    const Matrix &x = tr->acts.back();
    const std::size_t in_dim = x.rows();
    const std::size_t t_out = x.cols() - std::size_t(hi - lo);
    const std::size_t out_dim = layer.weight.rows();
    Matrix pre(out_dim, t_out);
    Vector spliced(in_dim * layer.context.size());
    for (std::size_t j = 0; j < t_out; ++j) {
      const std::size_t center = j + std::size_t(-lo);
      for (std::size_t k = 0; k < layer.context.size(); ++k) {
        const std::size_t src = center + std::size_t(layer.context[k] - 0);
        for (std::size_t i = 0; i < in_dim; ++i)
          spliced[k * in_dim + i] = x(i, src);
      }
      Vector y = mat_vec(layer.weight, spliced);
      for (std::size_t i = 0; i < out_dim; ++i)
        pre(i, j) = y[i] + layer.bias[i];
    }
    Matrix act = pre;
    for (std::size_t i = 0; i < act.size(); ++i)
      act.data()[i] = std::max(0.0, act.data()[i]);
    tr->pre.push_back(std::move(pre));
    tr->acts.push_back(std::move(act));
  }
}

void run_pooling(const Matrix &top, ForwardTrace *tr) {
  const std::size_t h = top.rows(), t = top.cols();
  tr->mean = Vector(h, 0.0);
  tr->var = Vector(h, 0.0);
  tr->stddev = Vector(h, 0.0);
  std::vector<double> row(t);
  for (std::size_t i = 0; i < h; ++i) {
    // Accumulate in sorted order so the pooled statistics are exactly
    // invariant to frame permutations.
    for (std::size_t j = 0; j < t; ++j) row[j] = top(i, j);
    std::sort(row.begin(), row.end());
    double s = 0.0, s2 = 0.0;
    for (double v : row) {
      s += v;
      s2 += v * v;
    }
    double m = s / double(t);
    tr->mean[i] = m;
    tr->var[i] = std::max(0.0, s2 / double(t) - m * m);
    tr->stddev[i] = std::sqrt(std::max(tr->var[i], kVarFloor));
  }
  tr->pooled = Vector(2 * h);
  for (std::size_t i = 0; i < h; ++i) {
    tr->pooled[i] = tr->mean[i];
    tr->pooled[h + i] = tr->stddev[i];
  }
}

void run_segment(const XvectorModel &model, ForwardTrace *tr) {
  Vector x = tr->pooled;
  for (std::size_t l = 0; l < model.segment_weights.size(); ++l) {
    Vector pre = mat_vec(model.segment_weights[l], x);
    for (std::size_t i = 0; i < pre.size(); ++i)
      pre[i] += model.segment_biases[l][i];
    Vector act = pre;
    for (auto &v : act) v = std::max(0.0, v);
    tr->seg_pre.push_back(std::move(pre));
    tr->seg_act.push_back(act);
    x = std::move(act);
  }
  tr->logits = mat_vec(model.softmax_weight, x);
  for (std::size_t i = 0; i < tr->logits.size(); ++i)
    tr->logits[i] += model.softmax_bias[i];
}

ForwardTrace forward_all(const XvectorModel &model, const FeatureMatrix &feat) {
  if (feat.dim() != model.input_dim())
    throw ArgumentError("feature dim does not match the network input");
  ForwardTrace tr;
  run_frame_stack(model, kept_columns(feat), &tr);
  run_pooling(tr.acts.back(), &tr);
  run_segment(model, &tr);
  return tr;
}

XvectorModel zero_like(const XvectorModel &m) {
  XvectorModel g = m;
  for (auto &l : g.frame_layers) {
    std::fill(l.weight.data(), l.weight.data() + l.weight.size(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  for (auto &w : g.segment_weights)
    std::fill(w.data(), w.data() + w.size(), 0.0);
  for (auto &b : g.segment_biases) std::fill(b.begin(), b.end(), 0.0);
  std::fill(g.softmax_weight.data(),
            g.softmax_weight.data() + g.softmax_weight.size(), 0.0);
  std::fill(g.softmax_bias.begin(), g.softmax_bias.end(), 0.0);
  return g;
}

void sgd_step(XvectorModel *m, const XvectorModel &g, double lr) {
  for (std::size_t l = 0; l < m->frame_layers.size(); ++l) {
    auto &dst = m->frame_layers[l];
    const auto &src = g.frame_layers[l];
    for (std::size_t i = 0; i < dst.weight.size(); ++i)
      dst.weight.data()[i] -= lr * src.weight.data()[i];
    for (std::size_t i = 0; i < dst.bias.size(); ++i)
      dst.bias[i] -= lr * src.bias[i];
  }
  for (std::size_t l = 0; l < m->segment_weights.size(); ++l) {
    for (std::size_t i = 0; i < m->segment_weights[l].size(); ++i)
      m->segment_weights[l].data()[i] -= lr * g.segment_weights[l].data()[i];
    for (std::size_t i = 0; i < m->segment_biases[l].size(); ++i)
      m->segment_biases[l][i] -= lr * g.segment_biases[l][i];
  }
  for (std::size_t i = 0; i < m->softmax_weight.size(); ++i)
    m->softmax_weight.data()[i] -= lr * g.softmax_weight.data()[i];
  for (std::size_t i = 0; i < m->softmax_bias.size(); ++i)
    m->softmax_bias[i] -= lr * g.softmax_bias[i];
}

}  // namespace

std::size_t XvectorModel::input_dim() const {
  if (frame_layers.empty()) throw ArgumentError("empty network");
  return frame_layers.front().weight.cols() /
         frame_layers.front().context.size();
}

std::size_t XvectorModel::embed_dim() const {
  return segment_weights.at(embedding_layer_index).rows();
}

std::size_t XvectorModel::min_frames() const {
  std::size_t span = 0;
  for (const auto &l : frame_layers) {
    int lo, hi;
    context_span(l.context, &lo, &hi);
    span += std::size_t(hi - lo);
  }
  return span + 1;
}

XvectorModel init_xvector(const XvectorArch &arch, std::size_t n_speakers,
                          uint64_t seed) {
  if (n_speakers < 2)
    throw TrainingError("x-vector training needs at least 2 speakers");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  auto gaussian = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    const double s = 1.0 / std::sqrt(double(c));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = s * d(rng);
    return m;
  };

  XvectorModel model;
  std::size_t in = arch.input_dim;
  for (const auto &ctx : arch.contexts) {
    XvectorLayer layer;
    layer.context = ctx;
    layer.weight = gaussian(arch.hidden_dim, in * ctx.size());
    layer.bias = Vector(arch.hidden_dim, 0.1);
    model.frame_layers.push_back(std::move(layer));
    in = arch.hidden_dim;
  }
  model.segment_weights.push_back(gaussian(arch.embed_dim, 2 * in));
  model.segment_biases.push_back(Vector(arch.embed_dim, 0.1));
  model.segment_weights.push_back(
      gaussian(arch.segment_hidden_dim, arch.embed_dim));
  model.segment_biases.push_back(Vector(arch.segment_hidden_dim, 0.1));
  model.embedding_layer_index = arch.embedding_layer_index;
  model.softmax_weight = gaussian(n_speakers, arch.segment_hidden_dim);
  model.softmax_bias = Vector(n_speakers, 0.0);
  return model;
}

SpeakerEmbedding forward_embed(const XvectorModel &model,
                               const FeatureMatrix &feat) {
  ForwardTrace tr = forward_all(model, feat);
  SpeakerEmbedding out;
  out.kind = EmbeddingKind::kXvector;
  out.values = tr.seg_pre.at(model.embedding_layer_index);
  out.normalized = false;
  return out;
}

Vector forward_log_probs(const XvectorModel &model, const FeatureMatrix &feat) {
  ForwardTrace tr = forward_all(model, feat);
  double lse = logsumexp(tr.logits);
  Vector lp = tr.logits;
  for (auto &v : lp) v -= lse;
  return lp;
}

double xvector_loss_grad(const XvectorModel &model, const TrainRecord &record,
                         XvectorModel *grad) {
  ForwardTrace tr = forward_all(model, record.features);
  const std::size_t n_cls = tr.logits.size();
  if (record.speaker_label >= n_cls)
    throw ArgumentError("speaker label out of range");
  double lse = logsumexp(tr.logits);
  double loss = lse - tr.logits[record.speaker_label];
  if (!grad) return loss;

  // Softmax cross-entropy backward.
  Vector dlogits(n_cls);
  for (std::size_t i = 0; i < n_cls; ++i)
    dlogits[i] = std::exp(tr.logits[i] - lse) -
                 (i == record.speaker_label ? 1.0 : 0.0);

  const Vector &top_act = tr.seg_act.back();
  for (std::size_t i = 0; i < n_cls; ++i) {
    grad->softmax_bias[i] += dlogits[i];
    for (std::size_t j = 0; j < top_act.size(); ++j)
      grad->softmax_weight(i, j) += dlogits[i] * top_act[j];
  }
  Vector dx = mat_t_vec(model.softmax_weight, dlogits);

  // Segment layers, last to first.
  for (std::size_t l = model.segment_weights.size(); l-- > 0;) {
    Vector dpre = dx;
    for (std::size_t i = 0; i < dpre.size(); ++i)
      if (tr.seg_pre[l][i] <= 0.0) dpre[i] = 0.0;
    const Vector &in =
        l == 0 ? tr.pooled : tr.seg_act[l - 1];
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      grad->segment_biases[l][i] += dpre[i];
      for (std::size_t j = 0; j < in.size(); ++j)
        grad->segment_weights[l](i, j) += dpre[i] * in[j];
    }
    dx = mat_t_vec(model.segment_weights[l], dpre);
  }

  // Statistics pooling backward: dx holds [dmean; dstddev].
  const Matrix &top = tr.acts.back();
  const std::size_t h = top.rows(), t = top.cols();
  Matrix dtop(h, t);
  for (std::size_t i = 0; i < h; ++i) {
    const double dmean = dx[i];
    const double dstd = dx[h + i];
    // stddev is constant when the variance sits on the floor.
    const double dvar =
        tr.var[i] > kVarFloor ? dstd / (2.0 * tr.stddev[i]) : 0.0;
    for (std::size_t j = 0; j < t; ++j)
      dtop(i, j) = dmean / double(t) +
                   dvar * 2.0 * (top(i, j) - tr.mean[i]) / double(t);
  }

  // Frame layers, last to first; scatter through the context splices.
  Matrix dact = std::move(dtop);
  for (std::size_t l = model.frame_layers.size(); l-- > 0;) {
    const XvectorLayer &layer = model.frame_layers[l];
    int lo, hi;
    context_span(layer.context, &lo, &hi);
    const Matrix &x = tr.acts[l];
    const Matrix &pre = tr.pre[l];
    const std::size_t in_dim = x.rows();
    const std::size_t t_out = pre.cols();
    Matrix dinput(in_dim, x.cols());
    Vector spliced(in_dim * layer.context.size());
    for (std::size_t j = 0; j < t_out; ++j) {
      const std::size_t center = j + std::size_t(-lo);
      Vector dpre(pre.rows());
      for (std::size_t i = 0; i < pre.rows(); ++i)
        dpre[i] = pre(i, j) > 0.0 ? dact(i, j) : 0.0;
      for (std::size_t k = 0; k < layer.context.size(); ++k) {
        const std::size_t src = center + std::size_t(layer.context[k]);
        for (std::size_t i = 0; i < in_dim; ++i)
          spliced[k * in_dim + i] = x(i, src);
      }
      for (std::size_t i = 0; i < pre.rows(); ++i) {
        if (dpre[i] == 0.0) continue;
        grad->frame_layers[l].bias[i] += dpre[i];
        double *wrow = grad->frame_layers[l].weight.row_ptr(i);
        const double *mrow = layer.weight.row_ptr(i);
        for (std::size_t c = 0; c < spliced.size(); ++c)
          wrow[c] += dpre[i] * spliced[c];
        for (std::size_t k = 0; k < layer.context.size(); ++k) {
          const std::size_t src = center + std::size_t(layer.context[k]);
          for (std::size_t ii = 0; ii < in_dim; ++ii)
            dinput(ii, src) += dpre[i] * mrow[k * in_dim + ii];
        }
      }
    }
    dact = std::move(dinput);
  }
  return loss;
}

XvectorModel train_xvector(const std::vector<TrainRecord> &records,
                           const XvectorArch &arch,
                           const XvectorTrainOptions &opts) {
  if (records.empty()) throw EmptyInputError("no training records");
  std::size_t n_speakers = 0;
  for (const auto &r : records)
    n_speakers = std::max(n_speakers, r.speaker_label + 1);
  XvectorModel model = init_xvector(arch, n_speakers, opts.seed);

  auto mean_loss = [&] {
    double s = 0.0;
    for (const auto &r : records) s += xvector_loss_grad(model, r, nullptr);
    return s / double(records.size());
  };
  if (opts.loss_history) opts.loss_history->push_back(mean_loss());

  std::mt19937_64 rng(opts.seed + 1);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      XvectorModel grad = zero_like(model);
      double loss = xvector_loss_grad(model, records[i], &grad);
      if (!std::isfinite(loss))
        throw TrainingError(
            "x-vector training diverged (loss not finite); lower the "
            "learning rate");
      sgd_step(&model, grad, opts.lr);
    }
    if (opts.loss_history) opts.loss_history->push_back(mean_loss());
  }
  return model;
}

}  // namespace asv
