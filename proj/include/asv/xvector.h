// asv/xvector.h

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

#ifndef ASV_XVECTOR_H_
#define ASV_XVECTOR_H_

#include <cstdint>
#include <vector>

#include "asv/features.h"
#include "asv/ivector.h"
#include "asv/matrix.h"

namespace asv {

// One frame-level layer: affine over a spliced context window, then ReLU.
// weight is out_dim x (in_dim * |context|); the splice stacks the input frames
// at offsets context[0], context[1], ... in order.
struct XvectorLayer {
  std::vector<int> context;  // offsets, symmetric around 0
  Matrix weight;
  Vector bias;
};

// Small TDNN speaker embedding network: frame-level layers, statistics
// pooling (per-channel mean and stddev, variance floor 1e-8), two segment
// affine+ReLU layers, softmax classifier. The x-vector is the pre-activation
// output of segment layer embedding_layer_index.
struct XvectorModel {
  std::vector<XvectorLayer> frame_layers;
  std::vector<Matrix> segment_weights;  // two layers
  std::vector<Vector> segment_biases;
  std::size_t embedding_layer_index = 0;
  Matrix softmax_weight;  // n_speakers x last segment dim
  Vector softmax_bias;

  std::size_t input_dim() const;
  std::size_t embed_dim() const;
  // Smallest frame count the context stack accepts.
  std::size_t min_frames() const;
};

struct XvectorArch {
  std::size_t input_dim = 24;
  std::vector<std::vector<int>> contexts = {
      {-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}, {0}, {0}};
  std::size_t hidden_dim = 64;
  std::size_t embed_dim = 32;
  std::size_t segment_hidden_dim = 32;
  std::size_t embedding_layer_index = 0;
};

struct TrainRecord {
  FeatureMatrix features;
  std::size_t speaker_label = 0;
};

struct XvectorTrainOptions {
  std::size_t epochs = 10;
  double lr = 0.01;
  uint64_t seed = 0;
  // Mean cross-entropy after each epoch, init value first.
  std::vector<double> *loss_history = nullptr;
};

// Fixed-seed Gaussian init scaled by 1 / sqrt(fan in); biases start slightly
// positive so the ReLU units are alive at small scale.
XvectorModel init_xvector(const XvectorArch &arch, std::size_t n_speakers,
                          uint64_t seed);

// Embedding of one utterance (VAD-retained frames only). Throws a
// receptive-field error naming the minimum when too few frames remain.
SpeakerEmbedding forward_embed(const XvectorModel &model,
                               const FeatureMatrix &feat);

// Softmax class log-probabilities, for the training loss.
Vector forward_log_probs(const XvectorModel &model, const FeatureMatrix &feat);

// Cross-entropy and parameter gradients of one record; gradient buffers must
// be shaped like the model (see init_xvector). Exposed for the
// finite-difference checks.
double xvector_loss_grad(const XvectorModel &model, const TrainRecord &record,
                         XvectorModel *grad);

// Plain SGD over per-record gradients, fixed seed shuffle.
XvectorModel train_xvector(const std::vector<TrainRecord> &records,
                           const XvectorArch &arch,
                           const XvectorTrainOptions &opts);

}  // namespace asv

#endif  // ASV_XVECTOR_H_
