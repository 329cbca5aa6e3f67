// Command-line driver: schema fitting + training for every model class,
// evaluation, AFN+ ensembling, order inspection, gradient checking, and the
// synthetic benchmark generator.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afn/afn_model.hpp"
#include "afn/analysis.hpp"
#include "afn/checkpoint.hpp"
#include "afn/data.hpp"
#include "afn/ensemble.hpp"
#include "afn/errors.hpp"
#include "afn/logtransform.hpp"
#include "afn/synth.hpp"
#include "afn/text.hpp"
#include "afn/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<int> parse_hidden(const std::string& s) {
  if (s.empty() || s == "none" || s == "0") return {};
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(',', start);
    const std::string tok = s.substr(start, pos == std::string::npos ? pos : pos - start);
    long v = 0;
    if (!afn::parse_int(tok, v) || v < 1) {
      throw std::invalid_argument("--hidden expects comma-separated widths, e.g. 32,32");
    }
    out.push_back(static_cast<int>(v));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct TrainOptions {
  std::string model = "afn";
  std::string data_path;
  std::string val_path;
  std::string out_path = "model.ckpt.json";
  std::string metrics_path;
  std::string hidden = "32,32";
  std::string bn = "on";
  std::string bn_ln_site = "post-ln";
  std::string snapshot_prefix;
  int embed_dim = 10;
  int log_neurons = 32;
  int max_order = 3;
  double lr = 0.001;
  int batch = 4096;
  int epochs = 20;
  int patience = 3;
  std::uint64_t seed = 1;
  int snapshot_every = 0;
  double clamp_eps = afn::kClampEpsilon;
};

void add_model_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--embed-dim", o.embed_dim, "Embedding rank k")->check(CLI::PositiveNumber);
  cmd->add_option("--log-neurons", o.log_neurons, "Number of logarithmic neurons N (afn)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hidden", o.hidden, "Hidden layer widths, e.g. 32,32 ('none' for depth 0)");
  cmd->add_option("--bn", o.bn, "Batch normalization: on|off")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--bn-ln-site", o.bn_ln_site,
                  "BN site for the log transformation: post-ln|post-sum")
      ->check(CLI::IsMember({"post-ln", "post-sum"}));
  cmd->add_option("--max-order", o.max_order, "Maximum cross-feature order (hofm)");
  cmd->add_option("--clamp-eps", o.clamp_eps, "Positivity floor for afn embeddings");
}

void add_train_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--patience", o.patience, "Early-stopping patience (epochs)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Seed for init, shuffling, and synthesis");
}

afn::ModelConfig to_model_config(const TrainOptions& o) {
  afn::ModelConfig mc;
  mc.embed_dim = o.embed_dim;
  mc.log_neurons = o.log_neurons;
  mc.hidden = parse_hidden(o.hidden);
  mc.batch_norm = o.bn == "on";
  mc.bn_ln_site =
      o.bn_ln_site == "post-sum" ? afn::BnLnSite::kPostSum : afn::BnLnSite::kPostLn;
  mc.max_order = o.max_order;
  mc.clamp_epsilon = o.clamp_eps;
  return mc;
}

afn::TrainConfig to_train_config(const TrainOptions& o) {
  afn::TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  tc.max_epochs = o.epochs;
  tc.patience = o.patience;
  tc.seed = o.seed;
  tc.snapshot_every = o.snapshot_every;
  return tc;
}

afn::TrainResult train_one(afn::Model& model, const afn::Dataset& train_ds,
                           const afn::Dataset& val_ds, const TrainOptions& o,
                           const std::string& snapshot_prefix) {
  afn::SnapshotSink sink;
  if (o.snapshot_every > 0 && model.kind() == afn::ModelKind::kAfn) {
    sink = [&snapshot_prefix](const afn::Model& m, long step, int epoch) {
      afn::save_checkpoint(m, snapshot_prefix + std::to_string(step) + ".json", {step, epoch});
    };
  }
  return afn::train(model, train_ds, val_ds, to_train_config(o), sink);
}

void report_train_result(const afn::TrainResult& res, const std::string& out_path,
                         const std::string& metrics_path) {
  for (const afn::EpochLog& e : res.log) {
    std::cout << "epoch=" << e.epoch << " train_logloss=" << afn::fmt_double(e.train_logloss)
              << " val_auc=" << afn::fmt_double(e.val_auc)
              << " val_logloss=" << afn::fmt_double(e.val_logloss) << '\n';
  }
  std::cout << "best_epoch=" << res.best_epoch
            << " best_val_auc=" << afn::fmt_double(res.best_val_auc)
            << " best_val_logloss=" << afn::fmt_double(res.best_val_logloss) << '\n';
  std::cout << "checkpoint=" << out_path << " metrics=" << metrics_path << '\n';
}

int run_train(const TrainOptions& o) {
  const afn::ModelKind kind = afn::model_kind_from_string(o.model);
  const afn::Schema schema = afn::fit_schema(o.data_path);
  const afn::Dataset train_ds = afn::load_dataset(o.data_path, schema);
  const afn::Dataset val_ds = afn::load_dataset(o.val_path, schema);
  auto model = afn::make_model(kind, schema, to_model_config(o), o.seed);

  const std::string metrics_path =
      o.metrics_path.empty() ? o.out_path + ".metrics.csv" : o.metrics_path;
  const std::string snap_prefix =
      o.snapshot_prefix.empty() ? o.out_path + ".snap_" : o.snapshot_prefix;

  const afn::TrainResult res = train_one(*model, train_ds, val_ds, o, snap_prefix);
  afn::save_checkpoint(*model, o.out_path, {res.total_steps, res.best_epoch});
  afn::write_metrics_csv(metrics_path, res.log);
  report_train_result(res, o.out_path, metrics_path);
  return 0;
}

struct EvalOptions {
  std::string ckpt_path;
  std::string data_path;
  std::string metrics_out;
};

afn::Metrics evaluate_any_checkpoint(const std::string& ckpt_path, const std::string& data_path) {
  if (afn::is_ensemble_checkpoint(ckpt_path)) {
    const afn::LoadedEnsemble ens = afn::load_ensemble_checkpoint(ckpt_path);
    auto resolve = [&](const std::string& p) {
      if (fs::exists(p)) return p;
      return (fs::path(ckpt_path).parent_path() / p).string();
    };
    afn::LoadedCheckpoint first = afn::load_checkpoint(resolve(ens.first_ckpt));
    afn::LoadedCheckpoint second = afn::load_checkpoint(resolve(ens.second_ckpt));
    if (!afn::schema_equal(first.model->schema(), second.model->schema())) {
      throw afn::DataError("ensemble sub-checkpoints disagree on the schema");
    }
    const afn::Dataset ds = afn::load_dataset(data_path, first.model->schema());
    const auto z1 = afn::predict_logits(*first.model, ds);
    const auto z2 = afn::predict_logits(*second.model, ds);
    std::vector<double> zb(ds.size());
    std::vector<int> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      zb[i] = afn::ensemble_logit(z1[i], z2[i], ens.params);
      labels[i] = ds.instances[i].label;
    }
    return {afn::auc(labels, zb), afn::logloss(labels, zb)};
  }
  afn::LoadedCheckpoint lc = afn::load_checkpoint(ckpt_path);
  const afn::Dataset ds = afn::load_dataset(data_path, lc.model->schema());
  return afn::evaluate_model(*lc.model, ds);
}

int run_evaluate(const EvalOptions& o) {
  const afn::Metrics m = evaluate_any_checkpoint(o.ckpt_path, o.data_path);
  std::cout << "auc=" << afn::fmt_double(m.auc) << " logloss=" << afn::fmt_double(m.logloss)
            << '\n';
  if (!o.metrics_out.empty()) {
    const bool fresh = !fs::exists(o.metrics_out);
    std::ofstream out(o.metrics_out, std::ios::binary | std::ios::app);
    if (!out) throw afn::DataError("cannot write file: " + o.metrics_out);
    if (fresh) out << "data,auc,logloss\n";
    out << o.data_path << ',' << afn::fmt_double(m.auc) << ',' << afn::fmt_double(m.logloss)
        << '\n';
  }
  return 0;
}

struct EnsembleOptions {
  TrainOptions train;  // used in end-to-end mode and for the blend budget
  std::string afn_ckpt;
  std::string dnn_ckpt;
  std::string out_path = "ensemble.ckpt.json";
};

int run_ensemble(EnsembleOptions& o) {
  std::string afn_path = o.afn_ckpt;
  std::string dnn_path = o.dnn_ckpt;
  std::unique_ptr<afn::Model> first;
  std::unique_ptr<afn::Model> second;

  const afn::Schema schema = afn::fit_schema(o.train.data_path);
  const afn::Dataset train_ds = afn::load_dataset(o.train.data_path, schema);
  const afn::Dataset val_ds = afn::load_dataset(o.train.val_path, schema);

  if (afn_path.empty() != dnn_path.empty()) {
    throw std::invalid_argument("ensemble: pass both --afn-ckpt and --dnn-ckpt, or neither");
  }
  if (afn_path.empty()) {
    // End-to-end: train the two sub-models separately on their own
    // embedding tables, then blend.
    if (o.train.model != "afn+") {
      throw std::invalid_argument("ensemble: end-to-end mode requires --model afn+");
    }
    TrainOptions afn_opts = o.train;
    afn_opts.model = "afn";
    first = afn::make_model(afn::ModelKind::kAfn, schema, to_model_config(afn_opts), o.train.seed);
    const afn::TrainResult r1 = train_one(*first, train_ds, val_ds, afn_opts, o.out_path + ".snap_");
    afn_path = o.out_path + ".afn.json";
    afn::save_checkpoint(*first, afn_path, {r1.total_steps, r1.best_epoch});
    std::cout << "afn: best_val_auc=" << afn::fmt_double(r1.best_val_auc)
              << " best_val_logloss=" << afn::fmt_double(r1.best_val_logloss) << '\n';

    TrainOptions dnn_opts = o.train;
    dnn_opts.model = "dnn";
    second = afn::make_model(afn::ModelKind::kDnn, schema, to_model_config(dnn_opts), o.train.seed);
    const afn::TrainResult r2 = train_one(*second, train_ds, val_ds, dnn_opts, "");
    dnn_path = o.out_path + ".dnn.json";
    afn::save_checkpoint(*second, dnn_path, {r2.total_steps, r2.best_epoch});
    std::cout << "dnn: best_val_auc=" << afn::fmt_double(r2.best_val_auc)
              << " best_val_logloss=" << afn::fmt_double(r2.best_val_logloss) << '\n';
  } else {
    first = afn::load_checkpoint(afn_path).model;
    second = afn::load_checkpoint(dnn_path).model;
  }

  const afn::EnsembleTrainResult res =
      afn::train_ensemble(*first, *second, train_ds, val_ds, to_train_config(o.train));
  afn::save_ensemble_checkpoint(o.out_path, res.params, afn_path, dnn_path);
  std::cout << "ensemble: w1=" << afn::fmt_double(res.params.w1)
            << " w2=" << afn::fmt_double(res.params.w2) << " b=" << afn::fmt_double(res.params.b)
            << " val_logloss=" << afn::fmt_double(res.val_logloss)
            << " val_auc=" << afn::fmt_double(res.val_auc) << '\n';
  std::cout << "checkpoint=" << o.out_path << '\n';
  return 0;
}

struct InspectOptions {
  std::string ckpt_glob;
  std::string out_dir = ".";
  int top = 3;
};

bool wildcard_match(const std::string& pattern, const std::string& text) {
  // Supports '*' and '?' only.
  std::size_t p = 0;
  std::size_t t = 0;
  std::size_t star = std::string::npos;
  std::size_t mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  const fs::path pat(pattern);
  const fs::path dir = pat.parent_path().empty() ? fs::path(".") : pat.parent_path();
  const std::string name_pat = pat.filename().string();
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (wildcard_match(name_pat, entry.path().filename().string())) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run_inspect(const InspectOptions& o) {
  const std::vector<std::string> files = expand_glob(o.ckpt_glob);
  if (files.empty()) {
    throw afn::DataError("inspect-orders: no checkpoints match '" + o.ckpt_glob + "'");
  }

  std::vector<afn::OrderSnapshot> snaps;
  std::vector<std::string> field_names;
  for (const std::string& f : files) {
    afn::LoadedCheckpoint lc = afn::load_checkpoint(f);
    const afn::Tensor* w = lc.model->params().find("ltl.W");
    if (w == nullptr) {
      throw afn::DataError("inspect-orders: '" + f + "' is not an afn checkpoint");
    }
    afn::Mat wm(w->rows(), w->cols());
    wm.a = w->value;
    snaps.push_back({lc.meta.step, std::move(wm)});
    if (field_names.empty()) {
      for (const afn::FieldSchema& fs_ : lc.model->schema()) field_names.push_back(fs_.name);
    }
  }
  std::sort(snaps.begin(), snaps.end(),
            [](const afn::OrderSnapshot& a, const afn::OrderSnapshot& b) { return a.step < b.step; });

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  afn::write_orders_csv((dir / "orders.csv").string(), afn::snapshot_orders(snaps));
  afn::write_weights_csv((dir / "weights.csv").string(), afn::snapshot_weights(snaps));

  const afn::Mat& last = snaps.back().weights;
  const afn::CaseStudy cs = afn::case_study(last, field_names, o.top);
  afn::write_case_study_csv((dir / "case_study.csv").string(), cs);
  afn::write_field_sums_csv((dir / "field_sums.csv").string(), cs);
  afn::write_profile_csvs(last, (dir / "profile_weights.csv").string(),
                          (dir / "profile_orders.csv").string());

  std::cout << "snapshots=" << snaps.size() << " out_dir=" << o.out_dir << '\n';
  for (const char* f : {"orders.csv", "weights.csv", "case_study.csv", "field_sums.csv",
                        "profile_weights.csv", "profile_orders.csv"}) {
    std::cout << "wrote " << (dir / f).string() << '\n';
  }
  return 0;
}

struct GradcheckOptions {
  std::string model = "afn";
  std::string bn = "on";
  std::uint64_t seed = 1;
  double h = 1e-5;
  double tol = 1e-4;
};

int run_gradcheck(const GradcheckOptions& o) {
  afn::GradCheckFixture fx =
      afn::make_gradcheck_fixture(afn::model_kind_from_string(o.model), o.bn == "on", o.seed);
  const afn::GradCheckResult res = afn::grad_check(*fx.model, fx.data, fx.rows, o.h);
  for (const auto& [name, err] : res.per_tensor) {
    std::cout << "tensor=" << name << " rel_error=" << afn::fmt_double(err) << '\n';
  }
  std::cout << "max_rel_error=" << afn::fmt_double(res.max_rel_error)
            << " worst_tensor=" << res.worst_tensor << " tol=" << afn::fmt_double(o.tol) << '\n';
  if (!(res.max_rel_error <= o.tol)) {
    std::cerr << "gradcheck FAILED: " << afn::fmt_double(res.max_rel_error) << " > "
              << afn::fmt_double(o.tol) << '\n';
    return kExitNumeric;
  }
  return 0;
}

struct SynthOptions {
  std::string pattern = "cross3";
  std::string out_path;
  int count = 50000;
  int fields = 8;
  int cardinality = 10;
  std::uint64_t seed = 2020;
};

int run_gensynth(const SynthOptions& o) {
  afn::SynthConfig cfg;
  cfg.pattern = o.pattern;
  cfg.count = o.count;
  cfg.num_fields = o.fields;
  cfg.cardinality = o.cardinality;
  cfg.seed = o.seed;
  const afn::SynthInfo info = afn::gen_synth_tsv(o.out_path, cfg);
  std::cout << "wrote " << o.out_path << " count=" << o.count
            << " positive_rate=" << afn::fmt_double(info.positive_rate) << '\n';
  std::cout << "planted:";
  for (std::size_t i = 0; i < info.planted_fields.size(); ++i) {
    std::cout << " f" << info.planted_fields[i] << "=" << info.planted_tokens[i];
  }
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-order factorization models: train, evaluate, inspect"};
  app.require_subcommand(1);

  TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a schema and train one model");
  train_cmd->add_option("--model", train_opts.model, "lr|fm|hofm|dnn|afn")->required();
  train_cmd->add_option("--data", train_opts.data_path, "Training TSV")->required();
  train_cmd->add_option("--val", train_opts.val_path, "Validation TSV")->required();
  train_cmd->add_option("--out", train_opts.out_path, "Checkpoint output path");
  train_cmd->add_option("--metrics-out", train_opts.metrics_path, "Per-epoch metrics CSV");
  train_cmd->add_option("--snapshot-every", train_opts.snapshot_every,
                        "Write an order snapshot every E epochs (afn only; 0 = off)");
  train_cmd->add_option("--snapshot-prefix", train_opts.snapshot_prefix,
                        "Snapshot path prefix (default: <out>.snap_)");
  add_model_flags(train_cmd, train_opts);
  add_train_flags(train_cmd, train_opts);

  EvalOptions eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval_opts.ckpt_path, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_opts.data_path, "Dataset TSV")->required();
  eval_cmd->add_option("--metrics-out", eval_opts.metrics_out, "Append `data,auc,logloss` row");

  EnsembleOptions ens_opts;
  CLI::App* ens_cmd =
      app.add_subcommand("ensemble", "Blend a trained afn and dnn (or train both end to end)");
  ens_cmd->add_option("--model", ens_opts.train.model, "afn+ for end-to-end mode");
  ens_cmd->add_option("--afn-ckpt", ens_opts.afn_ckpt, "Trained afn checkpoint");
  ens_cmd->add_option("--dnn-ckpt", ens_opts.dnn_ckpt, "Trained dnn checkpoint");
  ens_cmd->add_option("--data", ens_opts.train.data_path, "Training TSV")->required();
  ens_cmd->add_option("--val", ens_opts.train.val_path, "Validation TSV")->required();
  ens_cmd->add_option("--out", ens_opts.out_path, "Ensemble checkpoint output path");
  add_model_flags(ens_cmd, ens_opts.train);
  add_train_flags(ens_cmd, ens_opts.train);

  InspectOptions ins_opts;
  CLI::App* ins_cmd = app.add_subcommand("inspect-orders", "Export order-analysis CSVs");
  ins_cmd->add_option("--ckpt-glob", ins_opts.ckpt_glob, "Snapshot glob, e.g. 'snap_*.json'")
      ->required();
  ins_cmd->add_option("--out-dir", ins_opts.out_dir, "Output directory");
  ins_cmd->add_option("--top", ins_opts.top, "Top-k cut for the case study")
      ->check(CLI::PositiveNumber);

  GradcheckOptions gc_opts;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  gc_cmd->add_option("--model", gc_opts.model, "lr|fm|hofm|dnn|afn");
  gc_cmd->add_option("--bn", gc_opts.bn, "on|off")->check(CLI::IsMember({"on", "off"}));
  gc_cmd->add_option("--seed", gc_opts.seed, "Fixture seed");
  gc_cmd->add_option("--fd-step", gc_opts.h, "Central-difference step")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--tol", gc_opts.tol, "Max relative error tolerated");

  SynthOptions sy_opts;
  CLI::App* sy_cmd = app.add_subcommand("gen-synth", "Generate a synthetic benchmark dataset");
  sy_cmd->add_option("--pattern", sy_opts.pattern, "Pattern name (cross3)");
  sy_cmd->add_option("--out", sy_opts.out_path, "Output TSV path")->required();
  sy_cmd->add_option("--count", sy_opts.count, "Instances to generate");
  sy_cmd->add_option("--fields", sy_opts.fields, "Number of categorical fields");
  sy_cmd->add_option("--cardinality", sy_opts.cardinality, "Distinct tokens per field");
  sy_cmd->add_option("--seed", sy_opts.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (app.got_subcommand(train_cmd)) return run_train(train_opts);
    if (app.got_subcommand(eval_cmd)) return run_evaluate(eval_opts);
    if (app.got_subcommand(ens_cmd)) return run_ensemble(ens_opts);
    if (app.got_subcommand(ins_cmd)) return run_inspect(ins_opts);
    if (app.got_subcommand(gc_cmd)) return run_gradcheck(gc_opts);
    if (app.got_subcommand(sy_cmd)) return run_gensynth(sy_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const afn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const afn::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
