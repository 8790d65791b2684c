#include "so3kit/model.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "so3kit/io.hpp"
#include "so3kit/rng.hpp"

namespace so3kit {

std::string nonlin_kind_name(NonlinKind k) {
  switch (k) {
    case NonlinKind::FourierFixed:
      return "fourier_fixed";
    case NonlinKind::Adaptive:
      return "adaptive";
    case NonlinKind::Norm:
      return "norm";
    case NonlinKind::Gated:
      return "gated";
  }
  throw std::logic_error("unreachable nonlinearity kind");
}

NonlinKind nonlin_kind_from_name(const std::string& s) {
  if (s == "fourier_fixed") return NonlinKind::FourierFixed;
  if (s == "adaptive") return NonlinKind::Adaptive;
  if (s == "norm") return NonlinKind::Norm;
  if (s == "gated") return NonlinKind::Gated;
  throw std::invalid_argument("unknown nonlinearity kind: " + s);
}

namespace {

bool fourier_kind(NonlinKind k) {
  return k == NonlinKind::FourierFixed || k == NonlinKind::Adaptive;
}

int pool_width(const ModelConfig& c) {
  const int last = static_cast<int>(c.widths.size()) - 1;
  int n = 0;
  for (int l = 0; l <= c.L; ++l) n += post_nonlin_mult(c, last, l);
  return n;
}

}  // namespace

void validate_config(const ModelConfig& c) {
  if (c.widths.empty()) throw std::invalid_argument("config: at least one block required");
  for (const int w : c.widths)
    if (w < 1) throw std::invalid_argument("config: widths must be >= 1");
  if (c.fps_ratios.size() != c.widths.size())
    throw std::invalid_argument("config: one downsampling ratio per block required");
  for (const double r : c.fps_ratios)
    if (!(r > 0.0 && r <= 1.0))
      throw std::invalid_argument("config: downsampling ratios must lie in (0, 1]");
  if (c.radius <= 0.0) throw std::invalid_argument("config: radius must be positive");
  if (c.n_radial < 1) throw std::invalid_argument("config: need at least one radial bin");
  if (c.L < 0 || c.L > kMaxL) throw std::invalid_argument("config: L out of range");
  if (c.n_classes < 2) throw std::invalid_argument("config: need at least two classes");
  if (c.dense_hidden < 1) throw std::invalid_argument("config: dense width must be >= 1");
  if (fourier_kind(c.nonlin)) {
    if (c.n_samples < 1) throw std::invalid_argument("config: need at least one sample row");
    if (c.carrier.L != c.L)
      throw std::invalid_argument("config: carrier frequency cap must match L");
  }
  if (c.nonlin == NonlinKind::FourierFixed) {
    if (c.grid != "repulsion" && c.grid != "cubic")
      throw std::invalid_argument("config: unknown grid kind " + c.grid);
    if (c.grid == "cubic" && c.n_samples != 24)
      throw std::invalid_argument("config: the cubic grid has exactly 24 elements");
  }
}

int linear_out_mult(const ModelConfig& c, int block, int l) {
  const int w = c.widths[block];
  switch (c.nonlin) {
    case NonlinKind::FourierFixed:
    case NonlinKind::Adaptive:
      return w * c.carrier.q(l);
    case NonlinKind::Norm:
      return w;
    case NonlinKind::Gated:
      return l == 0 ? w * (1 + c.L) : w;
  }
  throw std::logic_error("unreachable nonlinearity kind");
}

int post_nonlin_mult(const ModelConfig& c, int block, int l) {
  const int w = c.widths[block];
  return fourier_kind(c.nonlin) ? w * c.carrier.q(l) : w;
}

int linear_in_mult(const ModelConfig& c, int block, int l) {
  return block == 0 ? c.n_radial : post_nonlin_mult(c, block - 1, l);
}

ModelWeights init_weights(const ModelConfig& c) {
  validate_config(c);
  Rng rng(c.seed);
  auto randn = [&rng](int rows, int cols, double sd) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = sd * rng.normal();
    return m;
  };

  ModelWeights w;
  const int blocks = static_cast<int>(c.widths.size());
  for (int k = 0; k < blocks; ++k) {
    std::vector<Eigen::MatrixXd> per_l;
    for (int l = 0; l <= c.L; ++l) {
      const int m_in = linear_in_mult(c, k, l);
      per_l.push_back(randn(linear_out_mult(c, k, l), m_in, 1.0 / std::sqrt(m_in)));
    }
    w.lin.push_back(std::move(per_l));
    w.bias0.push_back(Eigen::MatrixXd::Zero(1, linear_out_mult(c, k, 0)));
  }
  if (c.nonlin == NonlinKind::Norm)
    for (int k = 0; k < blocks; ++k)
      w.norm_bias.push_back(Eigen::MatrixXd::Constant(1, c.widths[k] * c.L, 0.1));
  if (c.nonlin == NonlinKind::Adaptive)
    w.gen = build_generator(std::vector<int>(c.L + 1, c.n_radial), c.carrier, c.n_samples,
                            c.seed ^ 0x9e3779b97f4a7c15ull)
                .w;

  const int pool = pool_width(c);
  w.d1 = randn(c.dense_hidden, pool, 1.0 / std::sqrt(pool));
  w.b1 = Eigen::MatrixXd::Zero(1, c.dense_hidden);
  w.d2 = randn(c.dense_hidden, c.dense_hidden, 1.0 / std::sqrt(c.dense_hidden));
  w.b2 = Eigen::MatrixXd::Zero(1, c.dense_hidden);
  w.d3 = randn(c.n_classes, c.dense_hidden, 1.0 / std::sqrt(c.dense_hidden));
  w.b3 = Eigen::MatrixXd::Zero(1, c.n_classes);
  return w;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> param_refs(ModelWeights& w) {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
  visit_params(w, [&out](const std::string& name, Eigen::MatrixXd& m) {
    out.emplace_back(name, &m);
  });
  return out;
}

FixedGridOp fixed_grid_op(const ModelConfig& c) {
  validate_config(c);
  Grid g;
  if (c.grid == "cubic") {
    g = cubic_group();
  } else {
    const Space space = c.carrier.kind == RepKind::Quotient ? Space::Sphere : Space::Group;
    g = repulsion_grid(space, c.n_samples);
  }
  const auto S = sampling_matrix(c.carrier, g, false);
  FixedGridOp op;
  op.a_t = S.A.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  op.pinv_t = svd.solve(Eigen::MatrixXd::Identity(S.A.rows(), S.A.rows())).transpose();
  return op;
}

TapedWeights feed_params(Tape& t, const ModelWeights& w, const std::string& override_name,
                         Var override_var) {
  TapedWeights tw;
  visit_params(w, [&](const std::string& name, const Eigen::MatrixXd& m) {
    tw.flat.push_back(name == override_name ? override_var : t.input(m));
  });
  size_t i = 0;
  for (size_t k = 0; k < w.lin.size(); ++k) {
    std::vector<Var> per_l;
    for (size_t l = 0; l < w.lin[k].size(); ++l) per_l.push_back(tw.flat[i++]);
    tw.lin.push_back(std::move(per_l));
    tw.bias0.push_back(tw.flat[i++]);
    if (!w.norm_bias.empty()) tw.norm_bias.push_back(tw.flat[i++]);
  }
  for (size_t l = 0; l < w.gen.size(); ++l) tw.gen.push_back(tw.flat[i++]);
  tw.d1 = tw.flat[i++];
  tw.b1 = tw.flat[i++];
  tw.d2 = tw.flat[i++];
  tw.b2 = tw.flat[i++];
  tw.d3 = tw.flat[i++];
  tw.b3 = tw.flat[i++];
  return tw;
}

CloudPlan plan_cloud(const ModelConfig& c, const PointCloud& cloud) {
  CloudPlan p;
  p.lift = harmonic_lift(cloud, c.radius, c.n_radial, c.L);
  p.label = cloud.label;
  PointCloud cur = cloud;
  for (const double ratio : c.fps_ratios) {
    const auto ids = fps(cur, ratio);
    p.keep.push_back(ids);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(ids.size()), 3);
    for (size_t i = 0; i < ids.size(); ++i)
      sub.row(static_cast<Eigen::Index>(i)) = cur.points.row(ids[i]);
    cur.points = std::move(sub);
  }
  return p;
}

namespace {

// one row per (point, channel): channel j of point p sits at row p*width + j
Var to_carrier(Tape& t, const ModelConfig& c, const std::vector<Var>& fields) {
  Var x;
  for (int l = 0; l <= c.L; ++l) {
    const Var part = t.reshape_rows(fields[l], c.carrier.block_size(l));
    x = (l == 0) ? part : t.concat_cols(x, part);
  }
  return x;
}

std::vector<Var> from_carrier(Tape& t, const ModelConfig& c, Var x, int width) {
  std::vector<Var> fields;
  for (int l = 0; l <= c.L; ++l) {
    const Var part = t.slice_cols(x, c.carrier.block_offset(l), c.carrier.block_size(l));
    fields.push_back(t.reshape_rows(part, width * c.carrier.block_size(l)));
  }
  return fields;
}

// sampling rows of every point stacked: row p*N + i is row i at point p
Var assemble_sampling_rows(Tape& t, const ModelConfig& c, const TapedWeights& tw,
                           const std::vector<Var>& raw) {
  Var a;
  for (int l = 0; l <= c.L; ++l) {
    const Var mixed = t.block_linear(raw[l], tw.gen[l], 2 * l + 1);
    const Var part = t.reshape_rows(mixed, c.carrier.block_size(l));
    a = (l == 0) ? part : t.concat_cols(a, part);
  }
  return t.rows_normalize(a);
}

std::vector<Var> fourier_fixed_nonlin(Tape& t, const ModelConfig& c, const FixedGridOp& fg,
                                      const std::vector<Var>& fields, int width) {
  const Var x = to_carrier(t, c, fields);
  const Var sampled = t.act(t.matmul(x, t.input(fg.a_t)), c.act);
  return from_carrier(t, c, t.matmul(sampled, t.input(fg.pinv_t)), width);
}

std::vector<Var> adaptive_nonlin(Tape& t, const ModelConfig& c, Var a_cur, int pts,
                                 const std::vector<Var>& fields, int width) {
  const int n = c.n_samples;
  const double back_scale = static_cast<double>(c.carrier.F) / n;
  const Var x = to_carrier(t, c, fields);
  Var out;
  for (int p = 0; p < pts; ++p) {
    const Var xp = t.slice_rows(x, p * width, width);
    const Var ap = t.slice_rows(a_cur, p * n, n);
    const Var s = t.act(t.matmul(xp, t.transpose(ap)), c.act);
    const Var bp = t.scale(t.matmul(s, ap), back_scale);
    out = (p == 0) ? bp : t.concat_rows(out, bp);
  }
  return from_carrier(t, c, out, width);
}

std::vector<Var> norm_nonlin(Tape& t, const ModelConfig& c, const TapedWeights& tw, int block,
                             const std::vector<Var>& fields, int width) {
  std::vector<Var> out;
  out.push_back(t.elu(fields[0]));
  for (int l = 1; l <= c.L; ++l) {
    const int dim = 2 * l + 1;
    const Var norms = t.safe_norm(fields[l], dim);
    const Var bias = t.slice_cols(tw.norm_bias[block], (l - 1) * width, width);
    const Var gate = t.hadamard(t.relu(t.add_rowvec(norms, t.scale(bias, -1.0))),
                                t.inv_shift(norms, 1e-12));
    out.push_back(t.seg_scale(fields[l], gate, dim));
  }
  return out;
}

std::vector<Var> gated_nonlin(Tape& t, const ModelConfig& c, const std::vector<Var>& fields,
                              int width) {
  std::vector<Var> out;
  out.push_back(t.elu(t.slice_cols(fields[0], 0, width)));
  for (int l = 1; l <= c.L; ++l) {
    const Var gate = t.sigmoid(t.slice_cols(fields[0], l * width, width));
    out.push_back(t.seg_scale(fields[l], gate, 2 * l + 1));
  }
  return out;
}

}  // namespace

Var model_logits(Tape& t, const ModelConfig& c, const TapedWeights& tw, const FixedGridOp* fg,
                 const CloudPlan& plan) {
  if (c.nonlin == NonlinKind::FourierFixed && fg == nullptr)
    throw std::invalid_argument("model_logits: fixed-grid operator required");
  if (plan.lift.levels() != c.L + 1)
    throw std::invalid_argument("model_logits: lift depth does not match the configuration");

  std::vector<Var> fields;
  for (int l = 0; l <= c.L; ++l) fields.push_back(t.input(plan.lift.fields[l]));

  Var a_cur;
  if (c.nonlin == NonlinKind::Adaptive) a_cur = assemble_sampling_rows(t, c, tw, fields);

  int pts = plan.lift.points();
  for (size_t k = 0; k < c.widths.size(); ++k) {
    std::vector<Var> lin;
    for (int l = 0; l <= c.L; ++l) {
      Var f = t.block_linear(fields[l], tw.lin[k][l], 2 * l + 1);
      if (l == 0) f = t.add_rowvec(f, tw.bias0[k]);
      lin.push_back(f);
    }
    const int width = c.widths[k];
    switch (c.nonlin) {
      case NonlinKind::FourierFixed:
        fields = fourier_fixed_nonlin(t, c, *fg, lin, width);
        break;
      case NonlinKind::Adaptive:
        fields = adaptive_nonlin(t, c, a_cur, pts, lin, width);
        break;
      case NonlinKind::Norm:
        fields = norm_nonlin(t, c, tw, static_cast<int>(k), lin, width);
        break;
      case NonlinKind::Gated:
        fields = gated_nonlin(t, c, lin, width);
        break;
    }
    const auto& keep = plan.keep[k];
    for (auto& f : fields) f = t.gather_rows(f, keep);
    if (c.nonlin == NonlinKind::Adaptive) {
      std::vector<int> rows;
      for (const int p : keep)
        for (int r = 0; r < c.n_samples; ++r) rows.push_back(p * c.n_samples + r);
      a_cur = t.gather_rows(a_cur, rows);
    }
    pts = static_cast<int>(keep.size());
  }

  Var pool = t.mean_rows(fields[0]);
  for (int l = 1; l <= c.L; ++l)
    pool = t.concat_cols(pool, t.mean_rows(t.safe_norm(fields[l], 2 * l + 1)));
  Var h = t.relu(t.add_rowvec(t.matmul(pool, t.transpose(tw.d1)), tw.b1));
  h = t.relu(t.add_rowvec(t.matmul(h, t.transpose(tw.d2)), tw.b2));
  return t.add_rowvec(t.matmul(h, t.transpose(tw.d3)), tw.b3);
}

Eigen::VectorXd forward(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                        const PointCloud& cloud) {
  Tape t;
  const auto tw = feed_params(t, w);
  return t.value(model_logits(t, c, tw, fg, plan_cloud(c, cloud))).row(0).transpose();
}

double logit_invariance(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                        const std::vector<PointCloud>& clouds,
                        const std::vector<Rotation>& rotations) {
  double acc = 0.0;
  int count = 0;
  for (const auto& cloud : clouds) {
    const Eigen::VectorXd base = forward(c, w, fg, cloud);
    for (const auto& r : rotations) {
      const Eigen::VectorXd moved = forward(c, w, fg, rotate_cloud(cloud, r));
      const double den = std::max(base.norm(), moved.norm());
      acc += den == 0.0 ? 0.0 : (moved - base).norm() / den;
      ++count;
    }
  }
  return count ? acc / count : 0.0;
}

double accuracy(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                const std::vector<PointCloud>& clouds) {
  if (clouds.empty()) return 0.0;
  int hit = 0;
  for (const auto& cloud : clouds) {
    Eigen::Index best = 0;
    forward(c, w, fg, cloud).maxCoeff(&best);
    if (static_cast<int>(best) == cloud.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(clouds.size());
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "epoch,split,accuracy,invariance_error,wall_ms\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.split << ',' << fmt17(r.accuracy) << ','
        << fmt17(r.invariance_error) << ',' << fmt17(r.wall_ms) << '\n';
  return out.str();
}

TrainResult train(const ModelConfig& c, const Dataset& data, const TrainOptions& opt) {
  validate_config(c);
  if (opt.epochs < 1 || opt.batch < 1) throw std::invalid_argument("train: bad options");
  if (data.train.empty()) throw std::invalid_argument("train: empty training split");

  TrainResult res;
  res.weights = init_weights(c);
  FixedGridOp fg_store;
  const FixedGridOp* fg = nullptr;
  if (c.nonlin == NonlinKind::FourierFixed) {
    fg_store = fixed_grid_op(c);
    fg = &fg_store;
  }

  auto refs = param_refs(res.weights);
  std::vector<AdamState> adam(refs.size());
  Rng rng(c.seed ^ 0x5deece66dull);

  std::vector<CloudPlan> plans;
  plans.reserve(data.train.size());
  for (const auto& cloud : data.train) plans.push_back(plan_cloud(c, cloud));

  // fixed probes for the per-epoch invariance metric: one test cloud per class
  std::vector<PointCloud> probes;
  std::vector<bool> seen(static_cast<size_t>(c.n_classes), false);
  for (const auto& cloud : data.test) {
    if (static_cast<int>(probes.size()) >= opt.invariance_clouds) break;
    if (cloud.label >= 0 && cloud.label < c.n_classes && !seen[cloud.label]) {
      seen[cloud.label] = true;
      probes.push_back(cloud);
    }
  }
  if (probes.empty() && !data.test.empty()) probes.push_back(data.test.front());
  std::vector<Rotation> probe_rots;
  {
    const auto cube = cubic_group().rotations;
    const int stride = std::max(1, static_cast<int>(cube.size()) / opt.invariance_rotations);
    for (size_t i = 1; i < cube.size(); i += static_cast<size_t>(stride))
      probe_rots.push_back(cube[i]);
  }

  std::vector<int> order(plans.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);

    double loss_sum = 0.0;
    int batches = 0;
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(opt.batch)) {
      const size_t stop = std::min(order.size(), at + static_cast<size_t>(opt.batch));
      Tape t;
      const auto tw = feed_params(t, res.weights);
      Var logits;
      std::vector<int> labels;
      for (size_t i = at; i < stop; ++i) {
        CloudPlan use = plans[static_cast<size_t>(order[i])];
        if (data.augment_train) use.lift = rotate_bundle(use.lift, random_haar(rng));
        const Var row = model_logits(t, c, tw, fg, use);
        logits = (i == at) ? row : t.concat_rows(logits, row);
        labels.push_back(use.label);
      }
      const Var loss = t.softmax_cross_entropy(logits, labels);
      t.backward(loss);
      loss_sum += t.value(loss)(0, 0);
      ++batches;
      for (size_t j = 0; j < refs.size(); ++j)
        adam_step(*refs[j].second, t.grad(tw.flat[j]), adam[j], opt.lr);
    }
    res.epoch_loss.push_back(loss_sum / batches);

    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick)
            .count();
    const double inv = logit_invariance(c, res.weights, fg, probes, probe_rots);
    res.history.push_back(
        {epoch, "train", accuracy(c, res.weights, fg, data.train), inv, wall});
    res.history.push_back({epoch, "test", accuracy(c, res.weights, fg, data.test), inv, wall});
  }
  return res;
}

namespace {

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("checkpoint: malformed matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw std::invalid_argument("checkpoint: ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

void require_shape(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want, const char* name) {
  if (got.rows() != want.rows() || got.cols() != want.cols())
    throw std::invalid_argument(std::string("checkpoint: shape mismatch for ") + name);
}

}  // namespace

std::string config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["nonlinearity"] = nonlin_kind_name(c.nonlin);
  j["carrier"] = nlohmann::json::parse(field_type_to_json(c.carrier));
  j["n_samples"] = c.n_samples;
  j["grid"] = c.grid;
  j["activation"] = activation_name(c.act);
  j["widths"] = c.widths;
  j["fps_ratios"] = c.fps_ratios;
  j["radius"] = c.radius;
  j["n_radial"] = c.n_radial;
  j["L"] = c.L;
  j["n_classes"] = c.n_classes;
  j["dense_hidden"] = c.dense_hidden;
  j["seed"] = c.seed;
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::set<std::string> known = {
      "nonlinearity", "carrier", "n_samples", "grid",      "activation",
      "widths",       "fps_ratios", "radius",  "n_radial", "L",
      "n_classes",    "dense_hidden", "seed"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw std::invalid_argument("config: unknown key " + item.key());

  ModelConfig c;
  if (j.contains("nonlinearity")) c.nonlin = nonlin_kind_from_name(j["nonlinearity"]);
  if (j.contains("carrier")) c.carrier = field_type_from_json(j["carrier"].dump());
  if (j.contains("n_samples")) c.n_samples = j["n_samples"].get<int>();
  if (j.contains("grid")) c.grid = j["grid"].get<std::string>();
  if (j.contains("activation")) c.act = activation_from_name(j["activation"].get<std::string>());
  if (j.contains("widths")) c.widths = j["widths"].get<std::vector<int>>();
  if (j.contains("fps_ratios")) c.fps_ratios = j["fps_ratios"].get<std::vector<double>>();
  if (j.contains("radius")) c.radius = j["radius"].get<double>();
  if (j.contains("n_radial")) c.n_radial = j["n_radial"].get<int>();
  if (j.contains("L")) c.L = j["L"].get<int>();
  if (j.contains("n_classes")) c.n_classes = j["n_classes"].get<int>();
  if (j.contains("dense_hidden")) c.dense_hidden = j["dense_hidden"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  validate_config(c);
  return c;
}

std::string checkpoint_to_json(const ModelConfig& c, const ModelWeights& w) {
  nlohmann::json doc;
  doc["config"] = nlohmann::json::parse(config_to_json(c));
  nlohmann::json lin = nlohmann::json::array();
  for (const auto& block : w.lin) {
    nlohmann::json per_l = nlohmann::json::array();
    for (const auto& m : block) per_l.push_back(mat_to_json(m));
    lin.push_back(std::move(per_l));
  }
  doc["linear"] = std::move(lin);
  nlohmann::json bias = nlohmann::json::array();
  for (const auto& m : w.bias0) bias.push_back(mat_to_json(m));
  doc["scalar_bias"] = std::move(bias);
  if (!w.norm_bias.empty()) {
    nlohmann::json nb = nlohmann::json::array();
    for (const auto& m : w.norm_bias) nb.push_back(mat_to_json(m));
    doc["norm_bias"] = std::move(nb);
  }
  if (!w.gen.empty()) {
    nlohmann::json gen = nlohmann::json::array();
    for (const auto& m : w.gen) gen.push_back(mat_to_json(m));
    doc["generator"] = std::move(gen);
  }
  doc["dense"] = {{"w1", mat_to_json(w.d1)}, {"b1", mat_to_json(w.b1)},
                  {"w2", mat_to_json(w.d2)}, {"b2", mat_to_json(w.b2)},
                  {"w3", mat_to_json(w.d3)}, {"b3", mat_to_json(w.b3)}};
  return doc.dump(2);
}

void checkpoint_from_json(const std::string& text, ModelConfig& c, ModelWeights& w) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_object() || !doc.contains("config"))
    throw std::invalid_argument("checkpoint: missing config");
  c = config_from_json(doc["config"].dump());
  const ModelWeights shape = init_weights(c);

  ModelWeights out;
  const auto& lin = doc.at("linear");
  if (lin.size() != shape.lin.size())
    throw std::invalid_argument("checkpoint: wrong number of blocks");
  for (size_t k = 0; k < shape.lin.size(); ++k) {
    std::vector<Eigen::MatrixXd> per_l;
    if (lin[k].size() != shape.lin[k].size())
      throw std::invalid_argument("checkpoint: wrong number of frequencies");
    for (size_t l = 0; l < shape.lin[k].size(); ++l) {
      per_l.push_back(mat_from_json(lin[k][l]));
      require_shape(per_l.back(), shape.lin[k][l], "linear");
    }
    out.lin.push_back(std::move(per_l));
    out.bias0.push_back(mat_from_json(doc.at("scalar_bias").at(k)));
    require_shape(out.bias0.back(), shape.bias0[k], "scalar_bias");
  }
  if (!shape.norm_bias.empty()) {
    for (size_t k = 0; k < shape.norm_bias.size(); ++k) {
      out.norm_bias.push_back(mat_from_json(doc.at("norm_bias").at(k)));
      require_shape(out.norm_bias.back(), shape.norm_bias[k], "norm_bias");
    }
  }
  if (!shape.gen.empty()) {
    for (size_t l = 0; l < shape.gen.size(); ++l) {
      out.gen.push_back(mat_from_json(doc.at("generator").at(l)));
      require_shape(out.gen.back(), shape.gen[l], "generator");
    }
  }
  const auto& dense = doc.at("dense");
  out.d1 = mat_from_json(dense.at("w1"));
  out.b1 = mat_from_json(dense.at("b1"));
  out.d2 = mat_from_json(dense.at("w2"));
  out.b2 = mat_from_json(dense.at("b2"));
  out.d3 = mat_from_json(dense.at("w3"));
  out.b3 = mat_from_json(dense.at("b3"));
  require_shape(out.d1, shape.d1, "dense w1");
  require_shape(out.b1, shape.b1, "dense b1");
  require_shape(out.d2, shape.d2, "dense w2");
  require_shape(out.b2, shape.b2, "dense b2");
  require_shape(out.d3, shape.d3, "dense w3");
  require_shape(out.b3, shape.b3, "dense b3");
  w = std::move(out);
}

}  // namespace so3kit
