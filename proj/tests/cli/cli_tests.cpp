// End-to-end checks of the command-line surface: exit codes, output
// contracts, and the evaluate-reproduces-training-metrics guarantee.
//
// Usage: afn_cli_tests --cli <path-to-afn-binary> --scratch <dir>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_cli;
fs::path g_scratch;

void check(bool ok, const std::string& what) {
  if (!ok) ++g_failures;
  std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path log = g_scratch / "last.log";
  const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log, std::ios::binary);
  r.output = std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Pulls `key=<double>` out of CLI output.
bool find_value(const std::string& output, const std::string& key, double& out) {
  const auto pos = output.rfind(key + "=");
  if (pos == std::string::npos) return false;
  out = std::strtod(output.c_str() + pos + key.size() + 1, nullptr);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") g_cli = argv[i + 1];
    if (flag == "--scratch") g_scratch = argv[i + 1];
  }
  if (g_cli.empty() || g_scratch.empty()) {
    std::cerr << "usage: afn_cli_tests --cli <binary> --scratch <dir>\n";
    return 2;
  }
  fs::create_directories(g_scratch);
  const std::string tr = (g_scratch / "train.tsv").string();
  const std::string va = (g_scratch / "val.tsv").string();

  // usage errors exit with 2
  check(run("definitely-not-a-command").exit_code == 2, "unknown subcommand exits 2");
  check(run("train --model afn").exit_code == 2, "missing required flags exits 2");
  check(run("train --model nope --data x --val y").exit_code == 2, "unknown model exits 2");
  check(run("--help").exit_code == 0, "help exits 0");

  // gen-synth: deterministic output, sane positive rate
  {
    const RunResult a = run("gen-synth --pattern cross3 --out " + tr + " --count 6000 --seed 2020");
    check(a.exit_code == 0, "gen-synth train exits 0");
    const std::string first = read_file(tr);
    run("gen-synth --pattern cross3 --out " + tr + " --count 6000 --seed 2020");
    check(read_file(tr) == first, "gen-synth is byte-deterministic for a fixed seed");
    double rate = 0.0;
    check(find_value(a.output, "positive_rate", rate) && rate > 0.4 && rate < 0.6,
          "positive rate is near one half");
    check(run("gen-synth --pattern nope --out x.tsv").exit_code == 2,
          "unknown pattern exits 2");
  }
  run("gen-synth --pattern cross3 --out " + va + " --count 1500 --seed 2021");

  // data errors exit with 3
  check(run("evaluate --ckpt missing.json --data " + tr).exit_code == 3,
        "missing checkpoint exits 3");
  {
    const fs::path bad = g_scratch / "bad.tsv";
    std::ofstream(bad) << "label\tx:Q\n";
    check(run("train --model lr --data " + bad.string() + " --val " + va).exit_code == 3,
          "malformed header exits 3");
  }

  // hofm order validation
  check(run("train --model hofm --max-order 1 --data " + tr + " --val " + va).exit_code == 2,
        "hofm max-order below 2 exits 2");
  {
    const RunResult r = run("train --model hofm --max-order 1 --data " + tr + " --val " + va);
    check(r.output.find("max-order must be >= 2") != std::string::npos,
          "hofm error message names the constraint");
  }
  check(run("train --model hofm --max-order 3 --embed-dim 2 --epochs 1 --batch 1024 --data " + tr +
            " --val " + va + " --out " + (g_scratch / "hofm.json").string())
                .exit_code == 0,
        "hofm with a valid order trains");

  // train -> evaluate reproduces the best validation metrics exactly
  {
    const std::string ckpt = (g_scratch / "afn.json").string();
    const RunResult t = run("train --model afn --data " + tr + " --val " + va +
                            " --embed-dim 4 --log-neurons 8 --hidden 16,16 --lr 0.002" +
                            " --batch 512 --epochs 4 --seed 7 --out " + ckpt);
    check(t.exit_code == 0, "afn training exits 0");
    double best_auc = 0.0;
    check(find_value(t.output, "best_val_auc", best_auc), "training reports best_val_auc");

    fs::remove(g_scratch / "m.csv");
    const RunResult e = run("evaluate --ckpt " + ckpt + " --data " + va + " --metrics-out " +
                            (g_scratch / "m.csv").string());
    check(e.exit_code == 0, "evaluate exits 0");
    double auc = 0.0;
    check(find_value(e.output, "auc", auc), "evaluate prints auc=");
    check(std::abs(auc - best_auc) <= 1e-12, "evaluate reproduces the logged best val auc");

    run("evaluate --ckpt " + ckpt + " --data " + va + " --metrics-out " +
        (g_scratch / "m.csv").string());
    std::istringstream csv(read_file(g_scratch / "m.csv"));
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    check(lines == 3, "metrics-out appends one row per evaluation plus a header");

    // snapshots + inspect-orders produce the analysis CSVs
    const std::string snap_ckpt = (g_scratch / "snap.json").string();
    const RunResult s = run("train --model afn --data " + tr + " --val " + va +
                            " --embed-dim 4 --log-neurons 8 --hidden 16 --epochs 3 --batch 512" +
                            " --seed 3 --snapshot-every 1 --out " + snap_ckpt);
    check(s.exit_code == 0, "training with snapshots exits 0");
    const RunResult ins = run("inspect-orders --ckpt-glob '" + snap_ckpt + ".snap_*.json'" +
                              " --out-dir " + (g_scratch / "insp").string());
    check(ins.exit_code == 0, "inspect-orders exits 0");
    for (const char* f : {"orders.csv", "weights.csv", "case_study.csv", "field_sums.csv",
                          "profile_weights.csv", "profile_orders.csv"}) {
      check(fs::exists(g_scratch / "insp" / f), std::string("inspect wrote ") + f);
    }
  }

  // ensemble end to end: afn+ blend never loses to either part
  {
    const std::string ens = (g_scratch / "ens.json").string();
    const RunResult r = run("ensemble --model afn+ --data " + tr + " --val " + va +
                            " --embed-dim 4 --log-neurons 8 --hidden 16 --lr 0.002 --batch 512" +
                            " --epochs 4 --seed 7 --out " + ens);
    check(r.exit_code == 0, "afn+ end-to-end exits 0");
    double afn_ll = 0.0;
    double dnn_ll = 0.0;
    double ens_ll = 0.0;
    const bool found = find_value(r.output, "best_val_logloss", dnn_ll) &&
                       find_value(r.output, "val_logloss", ens_ll);
    // first best_val_logloss line is the afn sub-model
    const auto pos = r.output.find("best_val_logloss=");
    afn_ll = std::strtod(r.output.c_str() + pos + 17, nullptr);
    check(found, "ensemble reports sub-model and blend losses");
    check(ens_ll <= std::min(afn_ll, dnn_ll) + 1e-6, "blend val logloss <= min(parts) + 1e-6");
    check(run("evaluate --ckpt " + ens + " --data " + va).exit_code == 0,
          "evaluate handles ensemble checkpoints");
  }

  // AFN_NUM_THREADS shards inference without changing results
  {
    const std::string ckpt = (g_scratch / "afn.json").string();
    const RunResult serial = run("evaluate --ckpt " + ckpt + " --data " + tr);
    const fs::path log = g_scratch / "thr.log";
    const std::string cmd = "AFN_NUM_THREADS=4 " + g_cli + " evaluate --ckpt " + ckpt +
                            " --data " + tr + " > " + log.string() + " 2>&1";
    check(std::system(cmd.c_str()) == 0, "threaded evaluate exits 0");
    check(read_file(log) == serial.output, "threaded evaluate output matches single-threaded");
  }

  // gradcheck: passes at the documented tolerance, fails with a tiny one
  check(run("gradcheck --model afn --seed 1").exit_code == 0, "gradcheck afn passes");
  check(run("gradcheck --model afn --bn off --seed 1").exit_code == 0,
        "gradcheck afn without bn passes");
  check(run("gradcheck --model lr --seed 1 --tol 1e-18").exit_code == 4,
        "gradcheck exits 4 when the tolerance is exceeded");

  std::printf("cli integration: %s\n", g_failures == 0 ? "all checks passed" : "FAILURES");
  return g_failures == 0 ? 0 : 1;
}
