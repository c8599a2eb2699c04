#include "advgo/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advgo/random.hpp"

namespace advgo {

namespace {

using ad::Var;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::string block_name(int i, const char* leaf) { return "block" + std::to_string(i) + "." + leaf; }

// Row indices of the 3x3 neighbourhood of every vertex, -1 off board.
std::shared_ptr<const std::vector<int>> conv_table(int size, int count) {
  const int hw = size * size;
  auto t = std::make_shared<std::vector<int>>(static_cast<std::size_t>(count) * hw * 9);
  for (int b = 0; b < count; ++b) {
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        const int row = b * hw + r * size + c;
        int k = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc, ++k) {
            const int rr = r + dr, cc = c + dc;
            (*t)[row * 9 + k] =
                (rr >= 0 && rr < size && cc >= 0 && cc < size) ? b * hw + rr * size + cc : -1;
          }
        }
      }
    }
  }
  return t;
}

template <typename Scalar>
class GraphBuilder {
 public:
  GraphBuilder(ad::Tape<Scalar>& tape, const NetworkConfig& cfg, const TensorMap<Scalar>& tensors)
      : t_(tape), cfg_(cfg) {
    for (const auto& [name, m] : tensors) vars_.emplace(name, t_.parameter(m));
  }

  const std::map<std::string, Var>& vars() const { return vars_; }

  Var p(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ShapeMismatch("missing tensor " + name);
    return it->second;
  }

  Var linear(Var x, const std::string& prefix) {
    return t_.add_row(t_.matmul(x, p(prefix + ".w")), p(prefix + ".b"));
  }

  Var conv3x3(Var x, const std::shared_ptr<const std::vector<int>>& table, const std::string& prefix) {
    return linear(t_.gather_rows(x, table, 9), prefix);
  }

  // Spatial planes with globals broadcast to every vertex.
  Var input(const InputBatch<Scalar>& in) {
    const int hw = in.board_size * in.board_size;
    auto seg = std::make_shared<std::vector<int>>(static_cast<std::size_t>(in.count) * hw);
    for (int b = 0; b < in.count; ++b) {
      for (int v = 0; v < hw; ++v) (*seg)[b * hw + v] = b;
    }
    Var spatial = t_.constant(in.spatial);
    Var globals = t_.gather_rows(t_.constant(in.globals), seg, 1);
    return t_.concat_cols(spatial, globals);
  }

  Var cnn_backbone(Var x, int size, int count) {
    auto table = conv_table(size, count);
    Var h = conv3x3(x, table, "input");
    for (int i = 0; i < cfg_.blocks; ++i) {
      Var y = t_.mish(h);
      y = conv3x3(y, table, block_name(i, "conv1"));
      y = t_.mish(y);
      y = conv3x3(y, table, block_name(i, "conv2"));
      h = t_.add(h, y);
    }
    return t_.mish(h);
  }

  Var vit_backbone(Var x, int size, int count) {
    const int ps = cfg_.patch_size;
    const int side = ceil_div(size, ps);  // patches per padded row
    const int npatch = side * side;
    const int max_side = ceil_div(cfg_.max_board, ps);
    const int hw = size * size;
    const int e = cfg_.channels;

    auto patch_index = std::make_shared<std::vector<int>>(static_cast<std::size_t>(count) * npatch * ps * ps);
    auto pos_index = std::make_shared<std::vector<int>>(static_cast<std::size_t>(count) * npatch);
    for (int b = 0; b < count; ++b) {
      for (int pi = 0; pi < side; ++pi) {
        for (int pj = 0; pj < side; ++pj) {
          const int q = b * npatch + pi * side + pj;
          (*pos_index)[q] = pi * max_side + pj;
          for (int di = 0; di < ps; ++di) {
            for (int dj = 0; dj < ps; ++dj) {
              const int r = pi * ps + di, c = pj * ps + dj;
              (*patch_index)[q * ps * ps + di * ps + dj] = (r < size && c < size) ? b * hw + r * size + c : -1;
            }
          }
        }
      }
    }
    Var tokens = linear(t_.gather_rows(x, patch_index, ps * ps), "patch");
    tokens = t_.add(tokens, t_.gather_rows(p("pos"), pos_index, 1));

    for (int i = 0; i < cfg_.blocks; ++i) {
      Var y = t_.layer_norm(tokens, p(block_name(i, "ln1.g")), p(block_name(i, "ln1.b")));
      y = linear(y, block_name(i, "qkv"));
      y = t_.attention(y, count, npatch, cfg_.heads);
      y = linear(y, block_name(i, "attn_out"));
      tokens = t_.add(tokens, y);
      y = t_.layer_norm(tokens, p(block_name(i, "ln2.g")), p(block_name(i, "ln2.b")));
      y = t_.gelu(linear(y, block_name(i, "mlp1")));
      y = linear(y, block_name(i, "mlp2"));
      tokens = t_.add(tokens, y);
    }
    tokens = t_.layer_norm(tokens, p("final_ln.g"), p("final_ln.b"));

    // Each patch token maps linearly onto its ps*ps vertices.
    Var un = linear(tokens, "unembed");
    un = t_.reshape(un, static_cast<Eigen::Index>(count) * npatch * ps * ps, e);
    auto vertex_index = std::make_shared<std::vector<int>>(static_cast<std::size_t>(count) * hw);
    for (int b = 0; b < count; ++b) {
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          const int q = b * npatch + (r / ps) * side + (c / ps);
          const int k = (r % ps) * ps + (c % ps);
          (*vertex_index)[b * hw + r * size + c] = q * ps * ps + k;
        }
      }
    }
    return t_.gather_rows(un, vertex_index, 1);
  }

  Var backbone(const InputBatch<Scalar>& in) {
    Var x = input(in);
    return cfg_.backbone == Backbone::cnn ? cnn_backbone(x, in.board_size, in.count)
                                          : vit_backbone(x, in.board_size, in.count);
  }

  std::pair<Var, Var> heads(Var trunk, int size, int count) {
    const int hw = size * size;
    Var play = linear(trunk, "policy");
    play = t_.reshape(play, count, hw);
    Var pooled = t_.segment_mean(trunk, count);
    Var pass = linear(pooled, "pass");
    Var logits = t_.concat_cols(play, pass);
    Var v = t_.mish(linear(pooled, "value1"));
    v = t_.tanh(linear(v, "value2"));
    return {logits, v};
  }

 private:
  ad::Tape<Scalar>& t_;
  const NetworkConfig& cfg_;
  std::map<std::string, Var> vars_;
};

template <typename Scalar>
void check_input(const NetworkConfig& cfg, const InputBatch<Scalar>& in) {
  const int hw = in.board_size * in.board_size;
  if (in.board_size < 1 || in.board_size > cfg.max_board) {
    throw ShapeMismatch("board size " + std::to_string(in.board_size) + " exceeds max_board");
  }
  if (in.spatial.cols() != cfg.input_planes || in.spatial.rows() != static_cast<Eigen::Index>(in.count) * hw) {
    throw ShapeMismatch("spatial input has wrong shape");
  }
  if (in.globals.cols() != cfg.input_globals || in.globals.rows() != in.count) {
    throw ShapeMismatch("global input has wrong shape");
  }
}

template <typename Scalar>
void check_tensors(const NetworkConfig& cfg, const TensorMap<Scalar>& tensors) {
  const auto shapes = parameter_shapes(cfg);
  if (shapes.size() != tensors.size()) throw ShapeMismatch("tensor count does not match config");
  for (const auto& [name, shape] : shapes) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ShapeMismatch("missing tensor " + name);
    if (it->second.rows() != shape.first || it->second.cols() != shape.second) {
      throw ShapeMismatch("tensor " + name + " has wrong shape");
    }
  }
}

}  // namespace

void NetworkConfig::validate() const {
  if (blocks < 0 || channels < 1 || head_channels < 1) throw std::invalid_argument("bad network widths");
  if (input_planes < 1 || input_globals < 0) throw std::invalid_argument("bad input counts");
  if (max_board < 1 || max_board > kMaxBoardSize) throw std::invalid_argument("bad max_board");
  if (backbone == Backbone::vit) {
    if (patch_size < 1) throw std::invalid_argument("patch_size must be >= 1");
    if (heads < 1 || channels % heads != 0) throw std::invalid_argument("embed must be divisible by heads");
    if (mlp_dim < channels) throw std::invalid_argument("mlp_dim must be >= embed");
  }
}

std::string NetworkConfig::to_text() const {
  std::ostringstream out;
  out << "backbone = " << (backbone == Backbone::cnn ? "cnn" : "vit") << "\n"
      << "blocks = " << blocks << "\n"
      << "channels = " << channels << "\n"
      << "patch_size = " << patch_size << "\n"
      << "heads = " << heads << "\n"
      << "mlp_dim = " << mlp_dim << "\n"
      << "head_channels = " << head_channels << "\n"
      << "input_planes = " << input_planes << "\n"
      << "input_globals = " << input_globals << "\n"
      << "max_board = " << max_board << "\n";
  return out.str();
}

NetworkConfig NetworkConfig::from_text(const std::string& text) {
  NetworkConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "backbone") {
      if (val == "cnn") c.backbone = Backbone::cnn;
      else if (val == "vit") c.backbone = Backbone::vit;
      else throw std::invalid_argument("unknown backbone " + val);
      continue;
    }
    int* field = nullptr;
    if (key == "blocks") field = &c.blocks;
    else if (key == "channels") field = &c.channels;
    else if (key == "patch_size") field = &c.patch_size;
    else if (key == "heads") field = &c.heads;
    else if (key == "mlp_dim") field = &c.mlp_dim;
    else if (key == "head_channels") field = &c.head_channels;
    else if (key == "input_planes") field = &c.input_planes;
    else if (key == "input_globals") field = &c.input_globals;
    else if (key == "max_board") field = &c.max_board;
    else throw std::invalid_argument("unknown network key " + key);
    *field = std::stoi(val);
  }
  c.validate();
  return c;
}

NetworkConfig NetworkConfig::desk_cnn() {
  NetworkConfig c;
  c.backbone = Backbone::cnn;
  c.blocks = 4;
  c.channels = 32;
  c.head_channels = 32;
  return c;
}

NetworkConfig NetworkConfig::desk_vit() {
  NetworkConfig c;
  c.backbone = Backbone::vit;
  c.blocks = 4;
  c.channels = 64;
  c.heads = 4;
  c.patch_size = 2;
  c.mlp_dim = 256;
  c.head_channels = 32;
  return c;
}

std::map<std::string, std::pair<int, int>> parameter_shapes(const NetworkConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::pair<int, int>> s;
  const int c = cfg.channels;
  const int cin = cfg.input_channels();
  if (cfg.backbone == Backbone::cnn) {
    s["input.w"] = {9 * cin, c};
    s["input.b"] = {1, c};
    for (int i = 0; i < cfg.blocks; ++i) {
      s[block_name(i, "conv1.w")] = {9 * c, c};
      s[block_name(i, "conv1.b")] = {1, c};
      s[block_name(i, "conv2.w")] = {9 * c, c};
      s[block_name(i, "conv2.b")] = {1, c};
    }
  } else {
    const int p2 = cfg.patch_size * cfg.patch_size;
    const int max_side = ceil_div(cfg.max_board, cfg.patch_size);
    s["patch.w"] = {p2 * cin, c};
    s["patch.b"] = {1, c};
    s["pos"] = {max_side * max_side, c};
    for (int i = 0; i < cfg.blocks; ++i) {
      s[block_name(i, "ln1.g")] = {1, c};
      s[block_name(i, "ln1.b")] = {1, c};
      s[block_name(i, "qkv.w")] = {c, 3 * c};
      s[block_name(i, "qkv.b")] = {1, 3 * c};
      s[block_name(i, "attn_out.w")] = {c, c};
      s[block_name(i, "attn_out.b")] = {1, c};
      s[block_name(i, "ln2.g")] = {1, c};
      s[block_name(i, "ln2.b")] = {1, c};
      s[block_name(i, "mlp1.w")] = {c, cfg.mlp_dim};
      s[block_name(i, "mlp1.b")] = {1, cfg.mlp_dim};
      s[block_name(i, "mlp2.w")] = {cfg.mlp_dim, c};
      s[block_name(i, "mlp2.b")] = {1, c};
    }
    s["final_ln.g"] = {1, c};
    s["final_ln.b"] = {1, c};
    s["unembed.w"] = {c, p2 * c};
    s["unembed.b"] = {1, p2 * c};
  }
  s["policy.w"] = {c, 1};
  s["policy.b"] = {1, 1};
  s["pass.w"] = {c, 1};
  s["pass.b"] = {1, 1};
  s["value1.w"] = {c, cfg.head_channels};
  s["value1.b"] = {1, cfg.head_channels};
  s["value2.w"] = {cfg.head_channels, 1};
  s["value2.b"] = {1, 1};
  return s;
}

std::size_t NetworkParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

bool NetworkParameters::all_finite() const {
  for (const auto& [name, t] : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

NetworkParameters init_network(const NetworkConfig& config, std::uint64_t seed) {
  NetworkParameters params;
  params.config = config;
  Rng rng(seed);
  for (const auto& [name, shape] : parameter_shapes(config)) {
    ad::Matrix<float> m = ad::Matrix<float>::Zero(shape.first, shape.second);
    const bool is_bias = name.ends_with(".b");
    if (name.ends_with(".g")) {
      m.setOnes();
    } else if (name == "pos") {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(0.02 * standard_normal(rng));
    } else if (!is_bias) {
      // Uniform Glorot scaling; residual branch outputs and heads start small.
      double gain = 1.0;
      if (name.find("conv2.w") != std::string::npos || name.find("mlp2.w") != std::string::npos ||
          name.find("attn_out.w") != std::string::npos) {
        gain = 0.25;
      }
      if (name == "policy.w" || name == "pass.w" || name == "value2.w") gain = 0.1;
      const double limit = gain * std::sqrt(6.0 / (shape.first + shape.second));
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<float>((2.0 * uniform01(rng) - 1.0) * limit);
      }
    }
    params.tensors.emplace(name, std::move(m));
  }
  return params;
}

TrainingRow make_row(const EncodedPosition& encoded, std::vector<float> policy_target, float value_target,
                     float weight) {
  TrainingRow row;
  row.board_size = encoded.spatial.height;
  row.planes.resize(encoded.spatial.data.size());
  for (std::size_t i = 0; i < row.planes.size(); ++i) row.planes[i] = encoded.spatial.data[i] > 0.5f ? 1 : 0;
  row.globals = encoded.globals.values;
  row.policy_target = std::move(policy_target);
  row.value_target = value_target;
  row.weight = weight;
  return row;
}

template <typename Scalar>
InputBatch<Scalar> stack_inputs(const std::vector<const TrainingRow*>& rows) {
  InputBatch<Scalar> in;
  if (rows.empty()) return in;
  in.board_size = rows.front()->board_size;
  in.count = static_cast<int>(rows.size());
  const int hw = in.board_size * in.board_size;
  const int planes = static_cast<int>(rows.front()->planes.size()) / hw;
  const int globals = static_cast<int>(rows.front()->globals.size());
  in.spatial.resize(static_cast<Eigen::Index>(in.count) * hw, planes);
  in.globals.resize(in.count, globals);
  for (int b = 0; b < in.count; ++b) {
    const TrainingRow& r = *rows[b];
    if (r.board_size != in.board_size || static_cast<int>(r.planes.size()) != hw * planes) {
      throw ShapeMismatch("mixed row shapes in one input group");
    }
    for (int v = 0; v < hw; ++v) {
      for (int p = 0; p < planes; ++p) in.spatial(b * hw + v, p) = Scalar(r.planes[v * planes + p]);
    }
    for (int g = 0; g < globals; ++g) in.globals(b, g) = Scalar(r.globals[g]);
  }
  return in;
}

template InputBatch<float> stack_inputs<float>(const std::vector<const TrainingRow*>&);
template InputBatch<double> stack_inputs<double>(const std::vector<const TrainingRow*>&);

InputBatch<float> stack_encoded(const std::vector<const EncodedPosition*>& positions) {
  InputBatch<float> in;
  if (positions.empty()) return in;
  const auto& first = positions.front()->spatial;
  in.board_size = first.height;
  in.count = static_cast<int>(positions.size());
  const int hw = first.height * first.width;
  in.spatial.resize(static_cast<Eigen::Index>(in.count) * hw, first.planes);
  in.globals.resize(in.count, static_cast<Eigen::Index>(positions.front()->globals.values.size()));
  for (int b = 0; b < in.count; ++b) {
    const auto& sp = positions[b]->spatial;
    if (sp.height != first.height || sp.planes != first.planes) throw ShapeMismatch("mixed position shapes");
    in.spatial.middleRows(static_cast<Eigen::Index>(b) * hw, hw) =
        Eigen::Map<const ad::Matrix<float>>(sp.data.data(), hw, sp.planes);
    const auto& g = positions[b]->globals.values;
    for (std::size_t j = 0; j < g.size(); ++j) in.globals(b, static_cast<Eigen::Index>(j)) = g[j];
  }
  return in;
}

template <typename Scalar>
BatchOutput<Scalar> forward_batch(const NetworkConfig& config, const TensorMap<Scalar>& tensors,
                                  const InputBatch<Scalar>& input) {
  check_input(config, input);
  ad::Tape<Scalar> tape(false);
  GraphBuilder<Scalar> g(tape, config, tensors);
  Var trunk = g.backbone(input);
  auto [logits, value] = g.heads(trunk, input.board_size, input.count);
  return {tape.value(logits), tape.value(value)};
}

template BatchOutput<float> forward_batch<float>(const NetworkConfig&, const TensorMap<float>&,
                                                 const InputBatch<float>&);
template BatchOutput<double> forward_batch<double>(const NetworkConfig&, const TensorMap<double>&,
                                                   const InputBatch<double>&);

NetworkOutput forward(const NetworkParameters& params, const EncodedPosition& features) {
  if (features.spatial.planes != params.config.input_planes ||
      static_cast<int>(features.globals.values.size()) != params.config.input_globals) {
    throw ShapeMismatch("feature counts do not match network config");
  }
  const auto in = stack_encoded({&features});
  const auto out = forward_batch<float>(params.config, params.tensors, in);
  NetworkOutput o;
  o.policy_logits.assign(out.logits.data(), out.logits.data() + out.logits.size());
  o.value = out.value(0, 0);
  return o;
}

NetworkOutput forward(const NetworkParameters& params, const BoardState& state) {
  return forward(params, encode(state));
}

ad::Matrix<float> backbone_embedding(const NetworkParameters& params, const EncodedPosition& features) {
  const auto in = stack_encoded({&features});
  check_input(params.config, in);
  ad::Tape<float> tape(false);
  GraphBuilder<float> g(tape, params.config, params.tensors);
  return tape.value(g.backbone(in));
}

double loss(const NetworkOutput& output, const std::vector<float>& policy_target, double value_target,
            double value_weight) {
  const auto& z = output.policy_logits;
  double m = -INFINITY;
  for (float x : z) m = std::max(m, static_cast<double>(x));
  double sum = 0.0;
  for (float x : z) sum += std::exp(x - m);
  const double lse = m + std::log(sum);
  double ce = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) ce -= policy_target[i] * (z[i] - lse);
  const double dv = output.value - value_target;
  return ce + value_weight * dv * dv;
}

namespace {

template <typename Scalar>
std::map<int, std::vector<const TrainingRow*>> group_by_size(const TrainingBatch& batch) {
  std::map<int, std::vector<const TrainingRow*>> groups;
  for (const auto& r : batch.rows) groups[r.board_size].push_back(&r);
  return groups;
}

template <typename Scalar>
void targets_for(const std::vector<const TrainingRow*>& rows, ad::Matrix<Scalar>& pt, ad::Matrix<Scalar>& vt,
                 ad::Matrix<Scalar>& w) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index a = static_cast<Eigen::Index>(rows.front()->policy_target.size());
  pt.resize(n, a);
  vt.resize(n, 1);
  w.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i]->policy_target.size()) != a) throw ShapeMismatch("policy target size");
    for (Eigen::Index j = 0; j < a; ++j) pt(i, j) = Scalar(rows[i]->policy_target[j]);
    vt(i, 0) = Scalar(rows[i]->value_target);
    w(i, 0) = Scalar(rows[i]->weight);
  }
}

}  // namespace

template <typename Scalar>
LossAndGradients<Scalar> loss_and_gradients(const NetworkConfig& config, const TensorMap<Scalar>& tensors,
                                            const TrainingBatch& batch, Scalar value_weight) {
  if (batch.empty()) throw std::invalid_argument("gradients require a nonempty batch");
  check_tensors(config, tensors);
  LossAndGradients<Scalar> out;
  for (const auto& [name, t] : tensors) out.gradients.emplace(name, ad::Matrix<Scalar>::Zero(t.rows(), t.cols()));
  const Scalar total_rows = Scalar(batch.rows.size());
  for (const auto& [size, rows] : group_by_size<Scalar>(batch)) {
    const auto in = stack_inputs<Scalar>(rows);
    check_input(config, in);
    ad::Tape<Scalar> tape(true);
    GraphBuilder<Scalar> g(tape, config, tensors);
    Var trunk = g.backbone(in);
    auto [logits, value] = g.heads(trunk, in.board_size, in.count);
    ad::Matrix<Scalar> pt, vt, w;
    targets_for(rows, pt, vt, w);
    Var l = tape.policy_value_loss(logits, value, std::move(pt), std::move(vt), std::move(w), value_weight);
    const Scalar share = Scalar(rows.size()) / total_rows;
    l = tape.scale(l, share);
    const Scalar lv = tape.value(l)(0, 0);
    if (!std::isfinite(static_cast<double>(lv))) throw NonFiniteLoss("loss is not finite");
    out.loss += lv;
    tape.backward(l);
    for (const auto& [name, var] : g.vars()) {
      const auto& gr = tape.grad(var);
      if (gr.size() > 0) out.gradients[name] += gr;
    }
  }
  return out;
}

template LossAndGradients<float> loss_and_gradients<float>(const NetworkConfig&, const TensorMap<float>&,
                                                           const TrainingBatch&, float);
template LossAndGradients<double> loss_and_gradients<double>(const NetworkConfig&, const TensorMap<double>&,
                                                             const TrainingBatch&, double);

template <typename Scalar>
Scalar batch_loss(const NetworkConfig& config, const TensorMap<Scalar>& tensors, const TrainingBatch& batch,
                  Scalar value_weight) {
  if (batch.empty()) throw std::invalid_argument("loss requires a nonempty batch");
  Scalar total = 0;
  const Scalar total_rows = Scalar(batch.rows.size());
  for (const auto& [size, rows] : group_by_size<Scalar>(batch)) {
    const auto in = stack_inputs<Scalar>(rows);
    const auto fo = forward_batch<Scalar>(config, tensors, in);
    ad::Tape<Scalar> tape(false);
    ad::Matrix<Scalar> pt, vt, w;
    targets_for(rows, pt, vt, w);
    Var l = tape.policy_value_loss(tape.constant(fo.logits), tape.constant(fo.value), std::move(pt),
                                   std::move(vt), std::move(w), value_weight);
    total += tape.value(l)(0, 0) * Scalar(rows.size()) / total_rows;
  }
  return total;
}

template float batch_loss<float>(const NetworkConfig&, const TensorMap<float>&, const TrainingBatch&, float);
template double batch_loss<double>(const NetworkConfig&, const TensorMap<double>&, const TrainingBatch&,
                                   double);

TensorMap<float> gradients(const NetworkParameters& params, const TrainingBatch& batch, double value_weight) {
  return loss_and_gradients<float>(params.config, params.tensors, batch, static_cast<float>(value_weight))
      .gradients;
}

void sgd_step(NetworkParameters& params, const TensorMap<float>& grads, double lr, double momentum,
              SgdState& state, double l2) {
  for (auto& [name, w] : params.tensors) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const auto& g = git->second;
    if (g.rows() != w.rows() || g.cols() != w.cols()) throw ShapeMismatch("gradient shape for " + name);
    auto [vit, inserted] = state.velocity.try_emplace(name, ad::Matrix<float>::Zero(w.rows(), w.cols()));
    auto& v = vit->second;
    v = static_cast<float>(momentum) * v + g + static_cast<float>(l2) * w;
    w -= static_cast<float>(lr) * v;
  }
  params.step_count += 1;
}

}  // namespace advgo
