#include "doctest.h"
#include "fd.hpp"

#include "modbal/checkpoint.hpp"
#include "modbal/config.hpp"

#include <filesystem>
#include <fstream>

using namespace modbal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("modbal_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string error_of(const std::string& json) {
  try {
    parse_run_config(json, "test.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

GcnModel small_model(Rng& rng) {
  GcnModel g;
  g.normalized_adjacency = Matrix::Identity(5, 5);
  g.layer_weights = {fd::random(rng, 4, 3), fd::random(rng, 3, 2)};
  g.representation_dim = 2;
  g.head_weights = fd::random(rng, 3, 4);
  g.node_source = "RPPA";
  return g;
}

}  // namespace

TEST_SUITE("config_checkpoint") {

TEST_CASE("unknown and mistyped keys are rejected by name") {
  CHECK(error_of(R"({"snf": {"mu": 0.5, "kneighbours": 3}})").find("kneighbours") != std::string::npos);
  CHECK(error_of(R"({"sede": 1})").find("sede") != std::string::npos);
  CHECK(error_of(R"({"optimizer": {"epochs": "many"}})").find("epochs") != std::string::npos);
  CHECK(error_of(R"({"snf": {"mu": -1}})") != "");
  CHECK(error_of("{not json") != "");
  CHECK(error_of("{}") == "");
}

TEST_CASE("missing keys keep their defaults") {
  const auto c = parse_run_config(R"({"seed": 9, "balance": {"alpha": 0.5}})", "t");
  CHECK(c.seed == 9);
  CHECK(c.balance.alpha == 0.5);
  CHECK(c.balance.beta == 0.1);
  CHECK(c.balance.gamma == 1.5);
  CHECK(c.snf.mu == 0.5);
  CHECK(c.distill.mi_gate == 0.2);
  CHECK(c.encoder.avg_edges_per_node == 10.0);
  CHECK(c.optimizer.momentum == 0.9);
  CHECK(c.reduction.method == ReductionMethod::pca);
}

TEST_CASE("dump round trip and hash") {
  RunConfig c;
  c.seed = 4;
  c.snf.mu = 0.4;
  const auto again = parse_run_config(dump_run_config(c), "dump");
  CHECK(dump_run_config(again) == dump_run_config(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  RunConfig moved = c;
  moved.output_dir = "/elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  RunConfig other = c;
  other.seed = 5;
  CHECK(config_hash(other) != config_hash(c));
  // FNV-1a reference values.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("synthetic spec parsing") {
  const auto s = parse_synthetic_spec(R"({"modalities": [{"name": "x", "dim": 5}], "class_counts": [10, 12],
                                         "class_names": ["a", "b"], "seed": 3})",
                                      "spec");
  CHECK(s.modalities[0].dim == 5);
  CHECK(s.seed == 3);
  CHECK_THROWS_AS(parse_synthetic_spec(R"({"modalities": [{"name": "x", "dims": 5}]})", "spec"), ConfigError);
  CHECK(parse_synthetic_spec(dump_synthetic_spec(s), "again").class_counts == s.class_counts);
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto dir = scratch("manifest");
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "m.json") << R"({"modalities": [{"name": "a", "path": "a.csv"}],
    "labels": "../labels.csv", "class_names": ["p", "q"]})";
  const auto m = load_manifest(dir / "sub" / "m.json");
  CHECK(fs::weakly_canonical(m.modalities[0].path) == fs::weakly_canonical(dir / "sub" / "a.csv"));
  CHECK(fs::weakly_canonical(m.labels) == fs::weakly_canonical(dir / "labels.csv"));
  CHECK(m.class_names == std::vector<std::string>{"p", "q"});
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = scratch("ckpt");
  Rng rng(81);
  Checkpoint c;
  c.metadata["kind"] = "unimodal";
  c.metadata["note"] = std::string("with\0nul", 8);
  c.tensors["w"] = fd::random(rng, 3, 7);
  c.tensors["empty"] = Matrix(0, 4);
  put_model(c, "enc.", small_model(rng));
  c.save(dir / "a.ckpt");
  const auto back = Checkpoint::load(dir / "a.ckpt");
  CHECK(back.metadata == c.metadata);
  CHECK(back.tensor("w") == c.tensor("w"));
  CHECK(back.tensor("empty").cols() == 4);
  Rng same(81);
  fd::random(same, 3, 7);
  const auto want = small_model(same);
  const auto got = get_model(back, "enc.");
  CHECK(got.head_weights == want.head_weights);
  CHECK(got.layer_weights[1] == want.layer_weights[1]);
  CHECK(got.node_source == "RPPA");
  CHECK(got.normalized_adjacency == want.normalized_adjacency);
  CHECK_THROWS_AS(back.meta("absent"), DataError);
  CHECK_THROWS_AS(back.tensor("absent"), DataError);

  JointModel j;
  j.names = {"a", "b"};
  j.encoders = {small_model(rng), small_model(rng)};
  j.fusion_head = fd::random(rng, 5, 4);
  Checkpoint jc;
  put_joint(jc, j);
  jc.save(dir / "j.ckpt");
  const auto jb = get_joint(Checkpoint::load(dir / "j.ckpt"));
  CHECK(jb.names == j.names);
  CHECK(jb.fusion_head == j.fusion_head);
  CHECK(jb.encoders[1].layer_weights[0] == j.encoders[1].layer_weights[0]);
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto dir = scratch("corrupt");
  Rng rng(82);
  Checkpoint c;
  c.metadata["kind"] = "x";
  c.tensors["w"] = fd::random(rng, 20, 20);
  c.save(dir / "good.ckpt");
  std::ifstream in(dir / "good.ckpt", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});

  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::load(write("magic.ckpt", magic)), DataError);
  std::string version = bytes;
  version[8] = 7;
  CHECK_THROWS_AS(Checkpoint::load(write("version.ckpt", version)), DataError);
  for (std::size_t cut : {4ul, 12ul, 30ul, bytes.size() / 2, bytes.size() - 1})
    CHECK_THROWS_AS(Checkpoint::load(write("cut.ckpt", bytes.substr(0, cut))), DataError);
  CHECK_THROWS_AS(Checkpoint::load(dir / "absent.ckpt"), DataError);
  fs::remove_all(dir);
}

}
