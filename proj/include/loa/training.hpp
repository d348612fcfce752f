#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loa/baselines.hpp"
#include "loa/errors.hpp"
#include "loa/model.hpp"
#include "loa/problems.hpp"

namespace loa {

struct TrainConfig {
  int k_unroll = 40;
  int segment = 5;
  int batch_size = 2;
  double lr_fc = 1e-4;
  double lr_skip = 1e-3;
  double clip_norm = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  bool coincident_init = true;
  bool parallel = false;  // batch members on separate threads, fixed reduction order

  void validate() const;
};

/// BFGS sub-optimality f(x̃_k) − f* at k = segment, 2·segment, …, K for each
/// problem. A problem whose gaps are not all positive (relative to its
/// starting gap) is excluded.
struct ReferenceTable {
  std::vector<std::vector<double>> gaps;
  std::vector<bool> valid;
  std::vector<std::string> warnings;

  std::size_t valid_count() const;
};

ReferenceTable precompute_reference(const std::vector<Problem>& problems, int k, int segment,
                                    double gamma = 1.0);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Matrix> grad;  // one per layer, same shapes as the weights
};

/// Mean over segment boundaries of log(1 + (f(x_k) − f*)/(f(x̃_k) − f*)),
/// differentiated on a tape that restarts the carried state {x, x_prev,
/// g_prev, B} at every boundary. Requires a closed-form quadratic problem.
/// Throws NonFiniteLoss.
LossAndGrad unrolled_loss(const ModelWeights& w, const Problem& problem, const std::vector<double>& ref_gaps,
                          const TrainConfig& cfg);
/// The same loss evaluated without a tape; works for any problem.
double unrolled_loss_value(const ModelWeights& w, const Problem& problem, const std::vector<double>& ref_gaps,
                           const TrainConfig& cfg);

/// Mean loss over the valid problems of `ref`; NaN when any is non-finite.
double mean_loss(const ModelWeights& w, const std::vector<Problem>& problems, const ReferenceTable& ref,
                 const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;  // NaN without a test set
  int skipped_batches = 0;
};

struct TrainResult {
  ModelWeights best;
  int best_epoch = 0;
  double best_loss = 0.0;
  ModelWeights last;
  std::vector<EpochRecord> history;
  std::vector<std::string> warnings;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, ModelWeights checkpoint, int epoch)
      : Error(ErrorCode::TrainingDiverged, what), checkpoint_(std::move(checkpoint)), epoch_(epoch) {}
  const ModelWeights& checkpoint() const noexcept { return checkpoint_; }
  int epoch() const noexcept { return epoch_; }

 private:
  ModelWeights checkpoint_;
  int epoch_;
};

/// Epoch 0 is the evaluation of the initial weights; each later epoch runs
/// shuffled mini-batches of ADAM on the weights then evaluates the full set.
TrainResult train(const TrainConfig& cfg, const std::vector<Problem>& problems,
                  const std::vector<Problem>& test_problems = {});

/// Training from explicit starting weights.
TrainResult train_from(const TrainConfig& cfg, ModelWeights start, const std::vector<Problem>& problems,
                       const std::vector<Problem>& test_problems = {});

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

}  // namespace loa
