#pragma once

#include "afn/training.hpp"

namespace afn {

// Learned affine blend of two frozen sub-models, applied on the logit scale.
struct EnsembleParams {
  double w1 = 0.5;
  double w2 = 0.5;
  double b = 0.0;
};

inline double ensemble_logit(double first_logit, double second_logit, const EnsembleParams& p) {
  return p.w1 * first_logit + p.w2 * second_logit + p.b;
}

struct EnsembleTrainResult {
  EnsembleParams params;
  double val_logloss = 0.0;
  double val_auc = 0.0;
};

// Optimizes only (w1, w2, b) by mini-batch Adam on the log loss over the
// frozen sub-models' logits, keeping the best validation-logloss iterate.
// The single-model corners (1,0,0) and (0,1,0) are scored as candidates, so
// the result never exceeds either sub-model's validation logloss. Sub-model
// parameters are read-only throughout. Throws if the sub-model schemas
// differ.
EnsembleTrainResult train_ensemble(Model& first, Model& second, const Dataset& train_ds,
                                   const Dataset& val_ds, const TrainConfig& cfg);

}  // namespace afn
