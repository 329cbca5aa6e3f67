#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afn/data.hpp"

namespace afn {

// Synthetic benchmark generator. Pattern "cross3" plants one conjunction of
// three specific (field, value) pairs: the three planted fields draw their
// planted value with elevated probability, every other field is uniform, and
// the label is Bernoulli with logit a + b * 1[conjunction]. The constants
// are fixed so the positive rate is ~0.5 and the Bayes AUC is high.
struct SynthConfig {
  std::string pattern = "cross3";
  int count = 50000;
  int num_fields = 8;
  int cardinality = 10;  // distinct tokens per field
  std::uint64_t seed = 2020;
};

struct SynthInfo {
  std::vector<int> planted_fields;
  std::vector<std::string> planted_tokens;
  double positive_rate = 0.0;
};

// Writes a TSV dataset (header `label  f0:C ...`) and reports the planted
// pattern plus the realized positive rate.
SynthInfo gen_synth_tsv(const std::string& path, const SynthConfig& cfg);

}  // namespace afn
