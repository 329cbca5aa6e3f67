#include "afn/model.hpp"

#include <stdexcept>

#include "afn/afn_model.hpp"
#include "afn/baselines.hpp"

namespace afn {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLr: return "lr";
    case ModelKind::kFm: return "fm";
    case ModelKind::kHofm: return "hofm";
    case ModelKind::kDnn: return "dnn";
    case ModelKind::kAfn: return "afn";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lr") return ModelKind::kLr;
  if (s == "fm") return ModelKind::kFm;
  if (s == "hofm") return ModelKind::kHofm;
  if (s == "dnn") return ModelKind::kDnn;
  if (s == "afn") return ModelKind::kAfn;
  throw std::invalid_argument("unknown model '" + s + "' (expected lr|fm|hofm|dnn|afn)");
}

std::unique_ptr<Model> make_model(ModelKind kind, const Schema& schema, const ModelConfig& config,
                                  std::uint64_t seed) {
  if (schema.empty()) throw std::invalid_argument("make_model: empty schema");
  switch (kind) {
    case ModelKind::kLr: return std::make_unique<LrModel>(schema, config, seed);
    case ModelKind::kFm: return std::make_unique<FmModel>(schema, config, seed);
    case ModelKind::kHofm: return std::make_unique<HofmModel>(schema, config, seed);
    case ModelKind::kDnn: return std::make_unique<DnnModel>(schema, config, seed);
    case ModelKind::kAfn: return std::make_unique<AfnModel>(schema, config, seed);
  }
  throw std::invalid_argument("make_model: bad kind");
}

}  // namespace afn
