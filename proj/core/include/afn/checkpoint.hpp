#pragma once

#include <memory>
#include <string>

#include "afn/ensemble.hpp"
#include "afn/model.hpp"

namespace afn {

struct CheckpointMeta {
  long step = -1;
  int epoch = -1;
};

// Single JSON document: format tag, model kind, config, the schema with its
// vocabularies, and every tensor as {"shape": [...], "data": [...]} with
// round-trip-exact 64-bit reals. Serialization is deterministic, so equal
// parameters produce byte-identical files.
void save_checkpoint(const Model& model, const std::string& path,
                     const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Ensemble checkpoints reference the two frozen sub-model files by path.
void save_ensemble_checkpoint(const std::string& path, const EnsembleParams& params,
                              const std::string& first_ckpt, const std::string& second_ckpt);

struct LoadedEnsemble {
  EnsembleParams params;
  std::string first_ckpt;
  std::string second_ckpt;
};

bool is_ensemble_checkpoint(const std::string& path);
LoadedEnsemble load_ensemble_checkpoint(const std::string& path);

}  // namespace afn
