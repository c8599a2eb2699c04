#include <unistd.h>

#include <fstream>

#include "advgo/nnet.hpp"
#include "advgo/tensor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace advgo;

namespace {

NetworkConfig small_cnn() {
  NetworkConfig c;
  c.backbone = Backbone::cnn;
  c.blocks = 2;
  c.channels = 16;
  c.head_channels = 16;
  return c;
}

NetworkConfig small_vit() {
  NetworkConfig c;
  c.backbone = Backbone::vit;
  c.blocks = 2;
  c.channels = 32;
  c.heads = 2;
  c.patch_size = 2;
  c.mlp_dim = 64;
  c.head_channels = 16;
  return c;
}

void check_gradients(const NetworkConfig& cfg, int size, int checks) {
  const NetworkParameters p = init_network(cfg, 17);
  const TrainingBatch batch = testutil::random_batch(size, 3, 5);
  const auto theta = p.cast<double>();
  const auto lg = loss_and_gradients<double>(cfg, theta, batch);
  Rng rng(99);
  for (int i = 0; i < checks; ++i) {
    const auto c = testutil::directional_check(cfg, theta, lg.gradients, batch, rng);
    CHECK(c.rel_error <= 1e-4);
  }
}

}  // namespace

TEST_CASE("tape ops: matmul and tanh gradient by finite differences") {
  ad::Matrix<double> a(2, 3), b(3, 2);
  a << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6;
  b << 0.7, 0.1, -0.3, 0.2, 0.5, -0.4;
  auto f = [&](const ad::Matrix<double>& x, ad::Matrix<double>* grad) {
    ad::Tape<double> t(true);
    auto va = t.parameter(x);
    auto vb = t.constant(b);
    auto y = t.tanh(t.matmul(va, vb));
    auto s = t.matmul(t.segment_mean(y, 1), t.constant(ad::Matrix<double>::Ones(2, 1)));
    if (grad) {
      t.backward(s);
      *grad = t.grad(va);
    }
    return t.value(s)(0, 0);
  };
  ad::Matrix<double> g;
  f(a, &g);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    ad::Matrix<double> ap = a, am = a;
    ap.data()[i] += 1e-6;
    am.data()[i] -= 1e-6;
    CHECK(g.data()[i] == doctest::Approx((f(ap, nullptr) - f(am, nullptr)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("forward output shapes for both backbones and several sizes") {
  for (const NetworkConfig& cfg : {small_cnn(), small_vit()}) {
    const NetworkParameters p = init_network(cfg, 1);
    for (int n : {5, 7, 9}) {
      const NetworkOutput o = forward(p, BoardState(n));
      CHECK(o.policy_logits.size() == static_cast<std::size_t>(n * n + 1));
      CHECK(o.value >= -1.0f);
      CHECK(o.value <= 1.0f);
    }
  }
}

TEST_CASE("initialization is deterministic and seed-dependent") {
  const auto a = init_network(small_cnn(), 3);
  const auto b = init_network(small_cnn(), 3);
  const auto c = init_network(small_cnn(), 4);
  CHECK(a.tensors.at("input.w") == b.tensors.at("input.w"));
  CHECK(a.tensors.at("input.w") != c.tensors.at("input.w"));
  CHECK(a.parameter_count() > 0);
  CHECK(a.all_finite());
}

TEST_CASE("batched forward equals single-position forward") {
  const NetworkParameters p = init_network(small_vit(), 2);
  const TrainingBatch batch = testutil::random_batch(7, 4, 8);
  std::vector<const TrainingRow*> rows;
  for (const auto& r : batch.rows) rows.push_back(&r);
  const auto out = forward_batch<float>(p.config, p.tensors, stack_inputs<float>(rows));
  for (int i = 0; i < 4; ++i) {
    const auto single = forward_batch<float>(p.config, p.tensors, stack_inputs<float>({rows[i]}));
    for (Eigen::Index j = 0; j < out.logits.cols(); ++j) {
      CHECK(out.logits(i, j) == doctest::Approx(single.logits(0, j)).epsilon(1e-4));
    }
    CHECK(out.value(i, 0) == doctest::Approx(single.value(0, 0)).epsilon(1e-4));
  }
}

TEST_CASE("cnn gradients match finite differences") { check_gradients(small_cnn(), 5, 10); }

TEST_CASE("vit gradients match finite differences on an odd board") { check_gradients(small_vit(), 5, 10); }

TEST_CASE("vit gradients match finite differences on a patch-aligned board") { check_gradients(small_vit(), 6, 5); }

TEST_CASE("mixed board sizes in one batch") {
  const NetworkConfig cfg = small_cnn();
  const auto theta = init_network(cfg, 5).cast<double>();
  TrainingBatch batch = testutil::random_batch(5, 2, 1);
  for (auto& r : testutil::random_batch(7, 2, 2).rows) batch.rows.push_back(r);
  const auto lg = loss_and_gradients<double>(cfg, theta, batch);
  CHECK(lg.loss == doctest::Approx(batch_loss<double>(cfg, theta, batch)));
  Rng rng(1);
  for (int i = 0; i < 5; ++i) CHECK(testutil::directional_check(cfg, theta, lg.gradients, batch, rng).rel_error <= 1e-4);
}

TEST_CASE("zero-weight rows contribute nothing") {
  const NetworkConfig cfg = small_cnn();
  const auto theta = init_network(cfg, 5).cast<double>();
  TrainingBatch batch = testutil::random_batch(5, 2, 3);
  for (auto& r : batch.rows) r.weight = 0;
  const auto lg = loss_and_gradients<double>(cfg, theta, batch);
  CHECK(lg.loss == 0.0);
  for (const auto& [name, g] : lg.gradients) CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicated rows give the same gradient") {
  const NetworkConfig cfg = small_vit();
  const auto theta = init_network(cfg, 5).cast<double>();
  const TrainingBatch one = testutil::random_batch(5, 1, 3);
  TrainingBatch two = one;
  two.rows.push_back(one.rows[0]);
  const auto a = loss_and_gradients<double>(cfg, theta, one);
  const auto b = loss_and_gradients<double>(cfg, theta, two);
  CHECK(a.loss == doctest::Approx(b.loss));
  for (const auto& [name, g] : a.gradients) CHECK((g - b.gradients.at(name)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-finite loss is reported") {
  NetworkParameters p = init_network(small_cnn(), 5);
  p.tensors.at("value2.b")(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(gradients(p, testutil::random_batch(5, 2, 3)), NonFiniteLoss);
  CHECK_FALSE(p.all_finite());
}

TEST_CASE("loss helper agrees with the batched loss") {
  const NetworkParameters p = init_network(small_cnn(), 6);
  TrainingBatch batch = testutil::random_batch(5, 1, 4);
  batch.rows[0].weight = 1.0f;
  const auto theta = p.cast<double>();
  std::vector<const TrainingRow*> rows{&batch.rows[0]};
  const auto out = forward_batch<float>(p.config, p.tensors, stack_inputs<float>(rows));
  NetworkOutput o;
  o.policy_logits.assign(out.logits.data(), out.logits.data() + out.logits.size());
  o.value = out.value(0, 0);
  CHECK(loss(o, batch.rows[0].policy_target, batch.rows[0].value_target) ==
        doctest::Approx(batch_loss<double>(p.config, theta, batch)).epsilon(1e-4));
}

TEST_CASE("sgd reduces the loss on a fixed batch") {
  NetworkParameters p = init_network(small_cnn(), 8);
  const TrainingBatch batch = testutil::random_batch(5, 8, 2);
  const double before = batch_loss<float>(p.config, p.tensors, batch);
  SgdState st;
  for (int i = 0; i < 30; ++i) sgd_step(p, gradients(p, batch), 0.05, 0.9, st);
  CHECK(batch_loss<float>(p.config, p.tensors, batch) < before);
  CHECK(p.step_count == 30);
}

TEST_CASE("checkpoint round trip is bit exact") {
  testutil::TempDir dir("ckpt");
  NetworkParameters p = init_network(small_vit(), 12);
  p.step_count = 42;
  save_checkpoint(p, dir.file("a.bin"));
  const NetworkParameters q = load_checkpoint(dir.file("a.bin"));
  CHECK(q.config == p.config);
  CHECK(q.step_count == 42);
  for (const auto& [name, t] : p.tensors) CHECK(q.tensors.at(name) == t);
  CHECK(q.tensors.size() == p.tensors.size());
  const auto n = forward(q, BoardState(5));
  const auto m = forward(p, BoardState(5));
  CHECK(n.policy_logits == m.policy_logits);
  CHECK_THROWS_AS(load_checkpoint(dir.file("a.bin"), small_cnn()), ShapeMismatch);
  CHECK_NOTHROW(load_checkpoint(dir.file("a.bin"), small_vit()));
}

TEST_CASE("corrupted and truncated checkpoints are rejected") {
  testutil::TempDir dir("ckpt_bad");
  save_checkpoint(init_network(small_cnn(), 1), dir.file("a.bin"));
  std::string bytes;
  {
    std::ifstream f(dir.file("a.bin"), std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream f(dir.file(name), std::ios::binary);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
  };
  write("trunc.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir.file("trunc.bin")), CorruptCheckpoint);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  write("flip.bin", flipped);
  CHECK_THROWS_AS(load_checkpoint(dir.file("flip.bin")), CorruptCheckpoint);
  std::string version = bytes;
  version[8] = 9;
  write("ver.bin", version);
  CHECK_THROWS_AS(load_checkpoint(dir.file("ver.bin")), VersionMismatch);
  write("junk.bin", "hello");
  CHECK_THROWS_AS(load_checkpoint(dir.file("junk.bin")), CorruptCheckpoint);
}

TEST_CASE("config text round trip and validation") {
  const NetworkConfig v = NetworkConfig::desk_vit();
  CHECK(NetworkConfig::from_text(v.to_text()) == v);
  NetworkConfig bad = small_vit();
  bad.heads = 3;  // 32 not divisible by 3
  CHECK_THROWS(bad.validate());
}

TEST_CASE("forward rejects mismatched features") {
  const NetworkParameters p = init_network(small_cnn(), 1);
  EncodedPosition e = encode(BoardState(5));
  e.globals.values.pop_back();
  CHECK_THROWS_AS(forward(p, e), ShapeMismatch);
  NetworkConfig c = small_cnn();
  c.max_board = 7;
  CHECK_THROWS_AS(forward(init_network(c, 1), BoardState(9)), ShapeMismatch);
}
