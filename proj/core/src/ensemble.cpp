#include "afn/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "afn/data.hpp"

namespace afn {

namespace {

double blend_val_logloss(const EnsembleParams& p, std::span<const int> labels,
                         std::span<const double> z1, std::span<const double> z2) {
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += stable_logloss(labels[i], ensemble_logit(z1[i], z2[i], p));
  }
  return s / static_cast<double>(labels.size());
}

}  // namespace

EnsembleTrainResult train_ensemble(Model& first, Model& second, const Dataset& train_ds,
                                   const Dataset& val_ds, const TrainConfig& cfg) {
  if (!schema_equal(first.schema(), second.schema())) {
    throw std::invalid_argument("ensemble: sub-model schemas differ");
  }
  if (train_ds.instances.empty() || val_ds.instances.empty()) {
    throw std::invalid_argument("ensemble: empty dataset");
  }

  // The sub-models are frozen; score everything once.
  const std::vector<double> z1_tr = predict_logits(first, train_ds);
  const std::vector<double> z2_tr = predict_logits(second, train_ds);
  const std::vector<double> z1_va = predict_logits(first, val_ds);
  const std::vector<double> z2_va = predict_logits(second, val_ds);
  std::vector<int> y_tr(train_ds.size());
  for (std::size_t i = 0; i < train_ds.size(); ++i) y_tr[i] = train_ds.instances[i].label;
  std::vector<int> y_va(val_ds.size());
  for (std::size_t i = 0; i < val_ds.size(); ++i) y_va[i] = val_ds.instances[i].label;

  ParamStore store;
  Tensor& blend = store.add("ensemble.blend", {3});
  blend.value = {0.5, 0.5, 0.0};
  AdamState adam(store);

  // The single-model corners are feasible points of the affine blend, so the
  // selected iterate can never be worse on validation than either sub-model.
  EnsembleParams best{1.0, 0.0, 0.0};
  double best_ll = blend_val_logloss(best, y_va, z1_va, z2_va);
  {
    const EnsembleParams corner2{0.0, 1.0, 0.0};
    const double ll = blend_val_logloss(corner2, y_va, z1_va, z2_va);
    if (ll < best_ll) {
      best = corner2;
      best_ll = ll;
    }
  }

  int epochs_since_improve = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_ds.size(), cfg.batch_size, /*shuffle=*/true, cfg.seed, epoch);
    for (const auto& rows : batches) {
      store.zero_grads();
      const double inv_b = 1.0 / static_cast<double>(rows.size());
      for (int r : rows) {
        const double z = blend.value[0] * z1_tr[r] + blend.value[1] * z2_tr[r] + blend.value[2];
        const double d = (sigmoid(z) - y_tr[r]) * inv_b;
        blend.grad[0] += d * z1_tr[r];
        blend.grad[1] += d * z2_tr[r];
        blend.grad[2] += d;
      }
      adam_step(store, adam, cfg);
    }
    const EnsembleParams cur{blend.value[0], blend.value[1], blend.value[2]};
    const double ll = blend_val_logloss(cur, y_va, z1_va, z2_va);
    if (ll < best_ll) {
      best = cur;
      best_ll = ll;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }
    if (epochs_since_improve > cfg.patience) break;
  }

  EnsembleTrainResult res;
  res.params = best;
  res.val_logloss = best_ll;
  std::vector<double> zb(val_ds.size());
  for (std::size_t i = 0; i < val_ds.size(); ++i) {
    zb[i] = ensemble_logit(z1_va[i], z2_va[i], best);
  }
  res.val_auc = auc(y_va, zb);
  return res;
}

}  // namespace afn
