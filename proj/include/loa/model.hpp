#pragma once

// Coordinate-wise prediction network. Every coordinate (row of the n×3
// input) goes through the same bias-free layers; the only interaction
// between coordinates is the mean of the first block's output.
//
//   h   = fc3(relu(fc2(relu(fc1(input)))))        3 → 6 → 12 → 3
//   aug = [mean_rows(h) broadcast, input]          n × 6
//   y   = fc5(relu(fc4(aug))) + skip(aug)          6 → 12 → 1, 6 → 1
//
// Layer matrices are stored inputs × outputs, so a layer is H·W.

#include <array>
#include <iosfwd>
#include <string>

#include "loa/numerics.hpp"

namespace loa {

inline constexpr std::size_t kLayerCount = 6;
inline constexpr std::size_t kParameterCount = 216;
inline constexpr std::size_t kSkipLayer = 5;

struct LayerShape {
  const char* name;
  std::size_t rows;
  std::size_t cols;
};

inline constexpr std::array<LayerShape, kLayerCount> kLayerShapes{{
    {"block1.fc1", 3, 6},
    {"block1.fc2", 6, 12},
    {"block1.fc3", 12, 3},
    {"block2.fc1", 6, 12},
    {"block2.fc2", 12, 1},
    {"skip", 6, 1},
}};

template <class M>
using LayerArray = std::array<M, kLayerCount>;

struct ModelWeights {
  LayerArray<Matrix> layers;

  std::size_t parameter_count() const;
  /// Throws FormatError if any layer has the wrong shape.
  void validate() const;
  bool operator==(const ModelWeights&) const = default;
};

/// Fan-in uniform layers, then the last layer of the second block zeroed and
/// the skip set to select the fifth augmented feature: the output is the
/// second input column exactly.
ModelWeights init_bfgs_coincident(Rng& rng);
/// Every layer fan-in uniform U[−√(1/fan_in), √(1/fan_in)] times `scale`.
ModelWeights init_random(Rng& rng, double scale = 1.0);
/// init_bfgs_coincident plus init_random(scale = sigma) added to every layer:
/// a random model that stays close enough to BFGS to iterate stably.
ModelWeights init_near_coincident(Rng& rng, double sigma = 0.1);

template <class M>
M model_forward(const LayerArray<M>& w, const M& input) {
  const std::size_t n = input.rows();
  M h = relu(matmul(input, w[0]));
  h = relu(matmul(h, w[1]));
  h = matmul(h, w[2]);
  const M aug = concat_cols(broadcast_rows(mean_rows(h), n), input);
  const M z = relu(matmul(aug, w[3]));
  return matmul(z, w[4]) + matmul(aug, w[kSkipLayer]);
}

/// y for an n×3 input; ShapeError unless the input has 3 columns.
Vector forward(const ModelWeights& w, const Matrix& input);

void save_weights(const ModelWeights& w, std::ostream& out, int epoch = -1, double mean_loss = 0.0);
ModelWeights load_weights(std::istream& in);
void save_weights_file(const ModelWeights& w, const std::string& path, int epoch = -1,
                       double mean_loss = 0.0);
ModelWeights load_weights_file(const std::string& path);

}  // namespace loa
