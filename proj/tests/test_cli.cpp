#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "salclass_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

CliResult run(const std::string& args) {
  static int counter = 0;
  const fs::path out = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
  const fs::path err = work_dir() / ("stderr" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(SALCLASS_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string body(const std::string& log) { return log.substr(log.find('\n') + 1); }

// Tiny synthetic dataset shared by the training-related tests.
const fs::path& tiny_manifest() {
  static const fs::path manifest = [] {
    const fs::path dir = work_dir() / "tiny";
    const CliResult r = run("synth --classes 2 --per-class 5 --size 64 --seed 3 --out " + dir.string());
    EXPECT_EQ(r.code, 0) << r.err;
    return dir / "manifest.tsv";
  }();
  return manifest;
}

std::string train_args(const fs::path& out, int epochs) {
  return "train --manifest " + tiny_manifest().string() + " --out " + out.string() +
         " --batch-size 4 --seed 5 --max-epochs " + std::to_string(epochs);
}

}  // namespace

TEST(Cli, SynthWritesBalancedManifest) {
  const fs::path dir = work_dir() / "synth_a";
  const CliResult r = run("synth --classes 4 --per-class 32 --size 64 --seed 7 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 128 samples"), std::string::npos) << r.out;
  std::ifstream in(dir / "manifest.tsv");
  int entries = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#' && line[0] != '@') ++entries;
  EXPECT_EQ(entries, 128);
}

TEST(Cli, SynthIsByteIdenticalForOneSeed) {
  const fs::path a = work_dir() / "synth_b1", b = work_dir() / "synth_b2";
  ASSERT_EQ(run("synth --classes 2 --per-class 3 --seed 9 --out " + a.string()).code, 0);
  ASSERT_EQ(run("synth --classes 2 --per-class 3 --seed 9 --out " + b.string()).code, 0);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) EXPECT_EQ(slurp(entry.path()), slurp(b / fs::relative(entry.path(), a)));
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("synth --classes 1 --out " + (work_dir() / "bad").string()).code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train --manifest x").code, 1);
  EXPECT_EQ(run("synth --bogus 3 --out x").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train --manifest /nonexistent/manifest.tsv --out " + (work_dir() / "none").string()).code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ConfigFilePrecedence) {
  const fs::path cfg = work_dir() / "run.cfg";
  std::ofstream(cfg) << "alpha=0.5\nbatch-size=4\n";
  const fs::path out = work_dir() / "cfg_run";
  const std::string base = "train --manifest " + tiny_manifest().string() + " --max-epochs 1 --out ";
  const CliResult from_file = run(base + out.string() + "a --config " + cfg.string());
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NE(from_file.out.find("alpha=0.5\n"), std::string::npos) << from_file.out;
  EXPECT_NE(from_file.out.find("batch-size=4\n"), std::string::npos);
  const CliResult flag_wins = run(base + out.string() + "b --config " + cfg.string() + " --alpha 0.3");
  ASSERT_EQ(flag_wins.code, 0) << flag_wins.err;
  EXPECT_NE(flag_wins.out.find("alpha=0.29999999999999999\n"), std::string::npos) << flag_wins.out;
  const CliResult defaults = run(base + out.string() + "c");
  ASSERT_EQ(defaults.code, 0) << defaults.err;
  EXPECT_NE(defaults.out.find("alpha=0.20000000000000001\n"), std::string::npos) << defaults.out;
  EXPECT_NE(defaults.out.find("batch-size=16\n"), std::string::npos);
}

TEST(Cli, ConfigFileRejectsUnknownKeys) {
  const fs::path cfg = work_dir() / "bad.cfg";
  std::ofstream(cfg) << "alpha=0.5\nlearning_speed=3\n";
  const CliResult r = run(train_args(work_dir() / "bad_cfg", 1) + " --config " + cfg.string());
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, TrainWritesCheckpointsAndLog) {
  const fs::path out = work_dir() / "train_a";
  const CliResult r = run(train_args(out, 2));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("final val_mca"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out / "best.ckpt"));
  EXPECT_TRUE(fs::exists(out / "last.ckpt"));
  const std::string log = slurp(out / "train_log.csv");
  EXPECT_EQ(log.rfind("# ", 0), 0u);
  EXPECT_NE(log.find("epoch,iter,lr,loss_total,loss_class,loss_sal,val_mca,val_mse\n1,2,"), std::string::npos)
      << log;
}

TEST(Cli, IdenticalSeedsGiveIdenticalArtifacts) {
  const fs::path a = work_dir() / "det_a", b = work_dir() / "det_b";
  ASSERT_EQ(run(train_args(a, 2)).code, 0);
  ASSERT_EQ(run(train_args(b, 2)).code, 0);
  EXPECT_EQ(slurp(a / "best.ckpt"), slurp(b / "best.ckpt"));
  EXPECT_EQ(slurp(a / "last.ckpt"), slurp(b / "last.ckpt"));
  EXPECT_EQ(body(slurp(a / "train_log.csv")), body(slurp(b / "train_log.csv")));
}

TEST(Cli, ResumeContinuesTheSameTrace) {
  const fs::path whole = work_dir() / "resume_whole", part = work_dir() / "resume_part";
  ASSERT_EQ(run(train_args(whole, 3)).code, 0);
  ASSERT_EQ(run(train_args(part, 1)).code, 0);
  const CliResult r = run(train_args(part, 3) + " --resume " + (part / "last.ckpt").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("resuming after epoch 1"), std::string::npos);
  EXPECT_EQ(body(slurp(part / "train_log.csv")), body(slurp(whole / "train_log.csv")));
  EXPECT_EQ(slurp(part / "last.ckpt"), slurp(whole / "last.ckpt"));
  EXPECT_EQ(slurp(part / "best.ckpt"), slurp(whole / "best.ckpt"));
}

TEST(Cli, NonFiniteLossExitsTwo) {
  const CliResult r = run(train_args(work_dir() / "nan_run", 3) + " --lr 1e200");
  EXPECT_EQ(r.code, 2) << r.out << r.err;
  EXPECT_NE(r.err.find("iteration"), std::string::npos) << r.err;
}

TEST(Cli, EvalAndExport) {
  const fs::path run_dir = work_dir() / "eval_model";
  ASSERT_EQ(run(train_args(run_dir, 1)).code, 0);
  const std::string common = " --manifest " + tiny_manifest().string() + " --checkpoint " +
                             (run_dir / "best.ckpt").string() + " --split val --out ";

  const fs::path eval_dir = work_dir() / "eval_out";
  const CliResult e = run("eval" + common + eval_dir.string() + " --sauc-splits 10");
  ASSERT_EQ(e.code, 0) << e.err;
  std::ifstream js(eval_dir / "metrics.json");
  const auto summary = nlohmann::json::parse(js);
  EXPECT_EQ(summary["n_images"], 2);
  EXPECT_TRUE(summary.contains("mca"));
  EXPECT_EQ(slurp(eval_dir / "metrics.csv").rfind("image_id,s_auc,nss,cc\n", 0), 0u);

  const fs::path maps = work_dir() / "maps_out";
  const CliResult x = run("export-maps" + common + maps.string());
  ASSERT_EQ(x.code, 0) << x.err;
  int pred = 0, gt = 0;
  for (const auto& entry : fs::directory_iterator(maps)) {
    const std::string name = entry.path().filename().string();
    pred += name.ends_with("_pred.pgm");
    gt += name.ends_with("_gt.pgm");
  }
  EXPECT_EQ(pred, 2);
  EXPECT_EQ(gt, 2);
}

TEST(Cli, MissingCheckpointExitsOne) {
  const CliResult r = run("eval --manifest " + tiny_manifest().string() + " --checkpoint " +
                    (work_dir() / "nope.ckpt").string() + " --out " + (work_dir() / "nope").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("checkpoint not found"), std::string::npos) << r.err;
}

TEST(Cli, HumanBaselineCcIsOne) {
  const fs::path out = work_dir() / "human";
  const CliResult r = run("human-baseline --manifest " + tiny_manifest().string() + " --split train --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream js(out / "metrics.json");
  const auto summary = nlohmann::json::parse(js);
  EXPECT_EQ(summary["cc"].get<double>(), 1.0);
  EXPECT_GT(summary["s_auc"].get<double>(), 0.9);
}
