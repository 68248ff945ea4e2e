#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "p2s/cli/cli.hpp"
#include "p2s/cli/gradsuite.hpp"
#include "p2s/errors.hpp"
#include "p2s/objective/train.hpp"
#include "p2s/sketch/dataset.hpp"
#include "p2s/sketch/image_io.hpp"

using namespace p2s;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("p2s_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "p2s");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const char* kSmallConfig =
    "# small model for tests\n"
    "batch_size=4\npretrain_iterations=6\niterations=4\nseed=3\n"
    "latent=4\nencoder_hidden=6\ndecoder_hidden=6\nmixtures=3\n"
    "conv_channels=2,3,3,4,4\nphoto_fc=6\n";

}  // namespace

TEST_CASE("sample with the same seed writes byte-identical SVG") {
  TempDir d("sample");
  auto cfg = objective::TrainConfig::parse(kSmallConfig);
  cfg.model.n_max = 12;
  objective::save_checkpoint(d / "m.ckpt", objective::initial_state(cfg));
  auto photo = sketch::RasterImage::blank(64, 64, 1);
  for (std::size_t i = 0; i < photo.data.size(); ++i) photo.data[i] = static_cast<double>(i % 17) / 16.0;
  sketch::write_image(d / "photo.pgm", photo);

  const auto a = invoke({"sample", "--ckpt", d / "m.ckpt", "--photo", d / "photo.pgm", "--n", "3", "--seed", "7",
                      "--svg", d / "a.svg"});
  const auto b = invoke({"sample", "--ckpt", d / "m.ckpt", "--photo", d / "photo.pgm", "--n", "3", "--seed", "7",
                      "--svg", d / "b.svg"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(d / "a.svg") == slurp(d / "b.svg"));
  CHECK(slurp(d / "a.svg").find("<svg") != std::string::npos);
  CHECK(a.out == b.out);

  const auto c = invoke({"sample", "--ckpt", d / "m.ckpt", "--photo", d / "photo.pgm", "--n", "3", "--seed", "8",
                      "--svg", d / "c.svg"});
  REQUIRE(c.code == 0);
  CHECK(slurp(d / "c.svg") != slurp(d / "a.svg"));
}

TEST_CASE("usage errors exit 1 with usage text") {
  const auto missing = invoke({"sample", "--photo", "x.png"});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(missing.err.find("--ckpt") != std::string::npos);
  CHECK(missing.err.find("Usage") != std::string::npos);

  const auto unknown = invoke({"gradcheck", "--bogus"});
  CHECK(unknown.code == cli::kExitUsage);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
  CHECK(invoke({"sample", "--ckpt", "a", "--photo", "b", "--temperature", "2"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("runtime failures exit 2") {
  const auto r = invoke({"sample", "--ckpt", "/nonexistent/m.ckpt", "--photo", "/nonexistent/p.png"});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK(invoke({"gradcheck", "--op", "no_such_op"}).code == cli::kExitRuntime);
}

TEST_CASE("gradcheck prints the named check and passes") {
  const auto r = invoke({"gradcheck", "--op", "lstm_cell", "--seeds", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("lstm_cell") != std::string::npos);
  CHECK(r.out.find("ok") != std::string::npos);
}

TEST_CASE("suite covers every op and composite loss with unique names") {
  std::set<std::string> names;
  for (const auto& c : cli::grad_suite()) names.insert(c.name);
  CHECK(names.size() == cli::grad_suite().size());
  for (const char* n : {"matmul", "conv2d", "conv2d_transpose", "instance_norm", "lstm_cell", "bilstm", "rnn_loss",
                        "kl_loss", "triplet_loss", "L_rnn", "L_shortcut", "L_supervised", "L_KL", "L_full"}) {
    CHECK_MESSAGE(names.count(n) == 1, n);
  }
}

TEST_CASE("toydata, pretrain, train, eval pipeline with resume and config round trip") {
  TempDir d("pipeline");
  REQUIRE(invoke({"toydata", "--out", d / "data", "--n", "24", "--seed", "1", "--max-len", "20"}).code == 0);
  {
    std::ofstream f(d / "cfg.txt");
    f << kSmallConfig;
  }

  SUBCASE("metrics header reproduces the config") {
    REQUIRE(invoke({"pretrain", "--data", d / "data", "--config", d / "cfg.txt", "--out", d / "p.ckpt", "--metrics",
                 d / "m.jsonl"})
                .code == 0);
    const auto manifest = sketch::load_manifest(d / "data");
    auto expected = objective::TrainConfig::load(d / "cfg.txt");
    expected.model.n_max = manifest.n_max;
    expected.model.image_size = manifest.image_size;
    CHECK(objective::MetricsLog::read_config(d / "m.jsonl") == expected);
  }

  SUBCASE("a pretraining run resumed from a checkpoint matches an uninterrupted one") {
    REQUIRE(invoke({"pretrain", "--data", d / "data", "--config", d / "cfg.txt", "--out", d / "full.ckpt"}).code == 0);
    {
      std::ofstream f(d / "half.txt");
      f << kSmallConfig << "pretrain_iterations=3\n";
    }
    REQUIRE(invoke({"pretrain", "--data", d / "data", "--config", d / "half.txt", "--out", d / "half.ckpt"}).code == 0);
    REQUIRE(invoke({"pretrain", "--data", d / "data", "--config", d / "cfg.txt", "--out", d / "resumed.ckpt",
                 "--resume", d / "half.ckpt"})
                .code == 0);
    CHECK(slurp(d / "full.ckpt") == slurp(d / "resumed.ckpt"));

    REQUIRE(invoke({"train", "--data", d / "data", "--init", d / "full.ckpt", "--config", d / "cfg.txt", "--out",
                 d / "fine.ckpt"})
                .code == 0);
    auto cfg = objective::TrainConfig::load(d / "cfg.txt");
    cfg.model = objective::load_model(d / "fine.ckpt").model;
    const auto st = objective::load_checkpoint(d / "fine.ckpt", cfg);
    CHECK(st.stage == objective::Stage::Finetune);
    CHECK(st.step == 4);

    const auto e = invoke({"eval", "--ckpt", d / "fine.ckpt", "--data", d / "data", "--report", d / "r.json",
                        "--recognizer-steps", "5", "--embedder-steps", "5"});
    REQUIRE(e.code == 0);
    const std::string report = slurp(d / "r.json");
    for (const char* key : {"\"validation\"", "\"recognition\"", "\"retrieval\"", "\"chamfer\"",
                            "\"acc_at_k_monotone\": true"}) {
      CHECK_MESSAGE(report.find(key) != std::string::npos, key);
    }
  }
}
