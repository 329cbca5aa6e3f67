#include "afn/synth.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "afn/errors.hpp"
#include "afn/rng.hpp"
#include "afn/training.hpp"

namespace afn {

namespace {

// cross3 plants two crosses on the first three fields and leaves every other
// field as uniform noise:
//
//   C2 = 1[(x0 - x1) mod card <  card/2]          second-order cross
//   C3 = 1[(x0 + x1 + x2) mod card < card/2]      third-order cross
//   label ~ Bernoulli(sigmoid(a + b2*C2 + b3*C3))
//
// All fields are sampled uniformly, so every single-field margin and, for
// C3, every pair margin is flat: a first-order model sees nothing, a
// pairwise model can recover C2 but not C3, and only an adaptive-order model
// can use both. With a = -(b2+b3)/2 the positive rate is exactly 1/2 in
// expectation, and the four logit levels put the Bayes AUC near 0.93.
constexpr double kPairBoost = 2.5;
constexpr double kTripleBoost = 5.0;
constexpr double kBase = -(kPairBoost + kTripleBoost) / 2.0;

constexpr int kPlantedFieldCount = 3;

}  // namespace

SynthInfo gen_synth_tsv(const std::string& path, const SynthConfig& cfg) {
  if (cfg.pattern != "cross3") {
    throw std::invalid_argument("gen-synth: unknown pattern '" + cfg.pattern + "'");
  }
  if (cfg.num_fields < kPlantedFieldCount) {
    throw std::invalid_argument("gen-synth: cross3 needs at least 3 fields");
  }
  if (cfg.cardinality < 2) throw std::invalid_argument("gen-synth: cardinality must be >= 2");
  if (cfg.count < 1) throw std::invalid_argument("gen-synth: count must be >= 1");

  SynthInfo info;
  for (int i = 0; i < kPlantedFieldCount; ++i) {
    info.planted_fields.push_back(i);
    info.planted_tokens.push_back(i < 2 ? "pair+triple" : "triple");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << "label";
  for (int f = 0; f < cfg.num_fields; ++f) out << "\tf" << f << ":C";
  out << '\n';

  Rng rng(mix_seed(cfg.seed, kStreamSynth));
  const int half = cfg.cardinality / 2;
  long positives = 0;
  std::vector<int> values(cfg.num_fields);
  for (int n = 0; n < cfg.count; ++n) {
    for (int f = 0; f < cfg.num_fields; ++f) {
      values[f] = static_cast<int>(rng.uniform_int(cfg.cardinality));
    }
    const bool pair_cross =
        ((values[0] - values[1]) % cfg.cardinality + cfg.cardinality) % cfg.cardinality < half;
    const bool triple_cross = (values[0] + values[1] + values[2]) % cfg.cardinality < half;
    const double logit =
        kBase + (pair_cross ? kPairBoost : 0.0) + (triple_cross ? kTripleBoost : 0.0);
    const int label = rng.bernoulli(sigmoid(logit)) ? 1 : 0;
    positives += label;
    out << label;
    for (int f = 0; f < cfg.num_fields; ++f) out << "\tv" << values[f];
    out << '\n';
  }
  info.positive_rate = static_cast<double>(positives) / static_cast<double>(cfg.count);
  return info;
}

}  // namespace afn
