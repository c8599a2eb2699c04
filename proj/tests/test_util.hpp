#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "advgo/features.hpp"
#include "advgo/nnet.hpp"
#include "advgo/sgf.hpp"
#include "oracles.hpp"

namespace testutil {

/// Rows drawn from a random game, with random normalized policy targets.
inline advgo::TrainingBatch random_batch(int size, int rows, std::uint64_t seed) {
  advgo::Rng rng(seed);
  std::vector<advgo::BoardState> trace;
  oracle::random_playout(size, rng, advgo::kDefaultKomi, &trace);
  advgo::TrainingBatch batch;
  for (int i = 0; i < rows; ++i) {
    const auto& s = trace[(i * 7 + 3) % trace.size()];
    std::vector<float> p(s.area() + 1);
    float total = 0;
    for (auto& x : p) total += (x = static_cast<float>(advgo::uniform01(rng)));
    for (auto& x : p) x /= total;
    const float v = static_cast<float>(2 * advgo::uniform01(rng) - 1);
    batch.rows.push_back(advgo::make_row(advgo::encode(s), p, v, static_cast<float>(0.5 + advgo::uniform01(rng))));
  }
  return batch;
}

struct DirectionalCheck {
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

/// Central difference of the double-precision loss along a random unit
/// direction against the analytic directional derivative.
inline DirectionalCheck directional_check(const advgo::NetworkConfig& cfg,
                                         const advgo::TensorMap<double>& theta,
                                         const advgo::TensorMap<double>& grads, const advgo::TrainingBatch& batch,
                                         advgo::Rng& rng, double h = 1e-4) {
  advgo::TensorMap<double> dir;
  double norm = 0;
  for (const auto& [name, t] : theta) {
    advgo::ad::Matrix<double> d(t.rows(), t.cols());
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = advgo::standard_normal(rng);
    norm += d.squaredNorm();
    dir.emplace(name, std::move(d));
  }
  norm = std::sqrt(norm);
  double analytic = 0;
  advgo::TensorMap<double> plus = theta, minus = theta;
  for (auto& [name, d] : dir) {
    d /= norm;
    analytic += (grads.at(name).array() * d.array()).sum();
    plus[name] += h * d;
    minus[name] -= h * d;
  }
  const double lp = advgo::batch_loss<double>(cfg, plus, batch);
  const double lm = advgo::batch_loss<double>(cfg, minus, batch);
  DirectionalCheck c;
  c.analytic = analytic;
  c.numeric = (lp - lm) / (2 * h);
  const double scale = std::max({std::abs(c.analytic), std::abs(c.numeric), 1e-8});
  c.rel_error = std::abs(c.analytic - c.numeric) / scale;
  return c;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("advgo_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline advgo::Move vertex_move(int r, int c) { return advgo::Move::play(r, c); }

// A white ring of 12 stones around rows 4..6, cols 2..6 of a 9x9 board,
// with black on both interior points but one and on every outside liberty.
// The final black move fills the last interior point and captures the ring.
inline advgo::SgfGame ring_game() {
  using namespace advgo;
  std::vector<Vertex> ring, outside;
  for (int c = 2; c <= 6; ++c) {
    ring.push_back({4, c});
    ring.push_back({6, c});
    outside.push_back({3, c});
    outside.push_back({7, c});
  }
  ring.push_back({5, 2});
  ring.push_back({5, 6});
  for (int r = 4; r <= 6; ++r) {
    outside.push_back({r, 1});
    outside.push_back({r, 7});
  }
  const std::vector<Vertex> white_other{{8, 8}, {8, 7}, {7, 8}};
  std::vector<Move> black{vertex_move(5, 3), vertex_move(5, 4)};
  for (auto v : outside) black.push_back(vertex_move(v.row, v.col));
  std::vector<Move> white;
  for (auto v : ring) white.push_back(vertex_move(v.row, v.col));
  for (auto v : white_other) white.push_back(vertex_move(v.row, v.col));
  while (white.size() < black.size()) white.push_back(Move::pass());
  black.push_back(vertex_move(5, 5));

  SgfGame g;
  g.size = 9;
  g.black = "adversary";
  g.white = "victim";
  for (std::size_t i = 0; i < black.size(); ++i) {
    g.moves.push_back({Color::black, black[i], std::nullopt, {}});
    if (i < white.size()) g.moves.push_back({Color::white, white[i], std::nullopt, {}});
  }
  return g;
}

}  // namespace testutil
