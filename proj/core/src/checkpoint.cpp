#include "afn/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "afn/errors.hpp"

namespace afn {

namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "afn.ckpt.v1";
constexpr const char* kEnsembleFormat = "afn.ensemble.v1";

json schema_to_json(const Schema& schema) {
  json arr = json::array();
  for (const FieldSchema& f : schema) {
    json jf;
    jf["field_id"] = f.field_id;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FieldKind::kCategorical ? "C" : "N";
    if (f.kind == FieldKind::kCategorical) {
      jf["cardinality"] = f.cardinality;
      json vocab = json::object();
      for (const auto& [tok, idx] : f.vocab) vocab[tok] = idx;
      jf["vocab"] = std::move(vocab);
    }
    arr.push_back(std::move(jf));
  }
  return arr;
}

Schema schema_from_json(const json& arr) {
  Schema schema;
  for (const json& jf : arr) {
    FieldSchema f;
    f.field_id = jf.at("field_id").get<int>();
    f.name = jf.at("name").get<std::string>();
    const auto kind = jf.at("kind").get<std::string>();
    if (kind == "C") {
      f.kind = FieldKind::kCategorical;
      f.cardinality = jf.at("cardinality").get<int>();
      for (const auto& [tok, idx] : jf.at("vocab").items()) {
        f.vocab[tok] = idx.get<int>();
      }
    } else if (kind == "N") {
      f.kind = FieldKind::kNumerical;
    } else {
      throw DataError("checkpoint: unknown field kind '" + kind + "'");
    }
    schema.push_back(std::move(f));
  }
  return schema;
}

json config_to_json(const ModelConfig& c) {
  json j;
  j["embed_dim"] = c.embed_dim;
  j["log_neurons"] = c.log_neurons;
  j["hidden"] = c.hidden;
  j["batch_norm"] = c.batch_norm;
  j["bn_ln_site"] = c.bn_ln_site == BnLnSite::kPostLn ? "post_ln" : "post_sum";
  j["max_order"] = c.max_order;
  j["clamp_epsilon"] = c.clamp_epsilon;
  j["init_scale"] = c.init_scale;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.log_neurons = j.at("log_neurons").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.batch_norm = j.at("batch_norm").get<bool>();
  c.bn_ln_site =
      j.at("bn_ln_site").get<std::string>() == "post_sum" ? BnLnSite::kPostSum : BnLnSite::kPostLn;
  c.max_order = j.at("max_order").get<int>();
  c.clamp_epsilon = j.at("clamp_epsilon").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

json parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta) {
  json j;
  j["format"] = kModelFormat;
  j["model"] = to_string(model.kind());
  j["meta"] = {{"step", meta.step}, {"epoch", meta.epoch}};
  j["config"] = config_to_json(model.config());
  j["schema"] = schema_to_json(model.schema());

  json params = json::object();
  for (const auto& t : model.params().tensors()) {
    for (double v : t->value) {
      if (!std::isfinite(v)) {
        throw NumericError("checkpoint: non-finite value in tensor '" + t->name + "'");
      }
    }
    params[t->name] = {{"shape", t->shape}, {"data", t->value}};
  }
  j["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const json j = parse_file(path);
  if (j.value("format", "") != kModelFormat) {
    throw DataError("not a model checkpoint: " + path);
  }

  LoadedCheckpoint lc;
  lc.meta.step = j.at("meta").at("step").get<long>();
  lc.meta.epoch = j.at("meta").at("epoch").get<int>();

  const Schema schema = schema_from_json(j.at("schema"));
  const ModelConfig config = config_from_json(j.at("config"));
  const ModelKind kind = model_kind_from_string(j.at("model").get<std::string>());
  lc.model = make_model(kind, schema, config, /*seed=*/0);

  const json& params = j.at("params");
  std::size_t seen = 0;
  for (const auto& t : lc.model->params().tensors()) {
    auto it = params.find(t->name);
    if (it == params.end()) throw DataError("checkpoint missing tensor '" + t->name + "'");
    const auto shape = it->at("shape").get<std::vector<std::size_t>>();
    if (shape != t->shape) throw DataError("checkpoint shape mismatch for '" + t->name + "'");
    const auto data = it->at("data").get<std::vector<double>>();
    if (data.size() != t->value.size()) {
      throw DataError("checkpoint data size mismatch for '" + t->name + "'");
    }
    t->value = data;
    ++seen;
  }
  if (seen != params.size()) {
    throw DataError("checkpoint has extra tensors not used by the model: " + path);
  }
  return lc;
}

void save_ensemble_checkpoint(const std::string& path, const EnsembleParams& params,
                              const std::string& first_ckpt, const std::string& second_ckpt) {
  json j;
  j["format"] = kEnsembleFormat;
  j["w1"] = params.w1;
  j["w2"] = params.w2;
  j["b"] = params.b;
  j["afn_ckpt"] = first_ckpt;
  j["dnn_ckpt"] = second_ckpt;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

bool is_ensemble_checkpoint(const std::string& path) {
  const json j = parse_file(path);
  return j.value("format", "") == kEnsembleFormat;
}

LoadedEnsemble load_ensemble_checkpoint(const std::string& path) {
  const json j = parse_file(path);
  if (j.value("format", "") != kEnsembleFormat) {
    throw DataError("not an ensemble checkpoint: " + path);
  }
  LoadedEnsemble le;
  le.params.w1 = j.at("w1").get<double>();
  le.params.w2 = j.at("w2").get<double>();
  le.params.b = j.at("b").get<double>();
  le.first_ckpt = j.at("afn_ckpt").get<std::string>();
  le.second_ckpt = j.at("dnn_ckpt").get<std::string>();
  return le;
}

}  // namespace afn
