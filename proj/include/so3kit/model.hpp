#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "so3kit/adaptive.hpp"
#include "so3kit/autodiff.hpp"
#include "so3kit/cloud.hpp"
#include "so3kit/dataset.hpp"
#include "so3kit/field_type.hpp"
#include "so3kit/sampling.hpp"

namespace so3kit {

enum class NonlinKind { FourierFixed, Adaptive, Norm, Gated };

std::string nonlin_kind_name(NonlinKind k);
NonlinKind nonlin_kind_from_name(const std::string& s);

// Point-cloud classifier: lift -> [copy-mixing linear -> nonlinearity ->
// farthest-point downsampling] per block -> invariant pooling -> dense head.
// The Fourier kinds push features through the carrier type; Norm and Gated act
// on copy norms directly and ignore the carrier.
struct ModelConfig {
  NonlinKind nonlin = NonlinKind::Adaptive;
  FieldType carrier = field_type(RepKind::Quotient, 3);
  int n_samples = 2;              // rows per (fixed or generated) sampling matrix
  std::string grid = "repulsion";  // fixed-grid source: "repulsion" | "cubic"
  Activation act = Activation::Elu;
  std::vector<int> widths = {8, 16, 32};
  std::vector<double> fps_ratios = {0.5, 0.5, 0.5};
  double radius = 1.5;
  int n_radial = 2;
  int L = 3;
  int n_classes = 8;
  int dense_hidden = 32;
  std::uint64_t seed = 0;
};

void validate_config(const ModelConfig& c);
std::string config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const std::string& text);

// multiplicity bookkeeping per block and frequency
int linear_out_mult(const ModelConfig& c, int block, int l);
int post_nonlin_mult(const ModelConfig& c, int block, int l);
int linear_in_mult(const ModelConfig& c, int block, int l);

struct ModelWeights {
  std::vector<std::vector<Eigen::MatrixXd>> lin;  // [block][l]: m_out x m_in
  std::vector<Eigen::MatrixXd> bias0;             // [block]: 1 x m_out(l=0)
  std::vector<Eigen::MatrixXd> norm_bias;         // [block]: 1 x width*L (Norm kind)
  std::vector<Eigen::MatrixXd> gen;               // [l]: (N q_l) x n_radial (Adaptive kind)
  Eigen::MatrixXd d1, b1, d2, b2, d3, b3;
};

ModelWeights init_weights(const ModelConfig& c);

// one visit per trainable array, canonical order shared by every consumer
template <class W, class F>
void visit_params(W& w, F&& f) {
  for (size_t k = 0; k < w.lin.size(); ++k) {
    const std::string b = "block" + std::to_string(k + 1);
    for (size_t l = 0; l < w.lin[k].size(); ++l) f(b + "_lin_l" + std::to_string(l), w.lin[k][l]);
    f(b + "_bias", w.bias0[k]);
    if (!w.norm_bias.empty()) f(b + "_norm_bias", w.norm_bias[k]);
  }
  for (size_t l = 0; l < w.gen.size(); ++l) f("generator_l" + std::to_string(l), w.gen[l]);
  f("head_w1", w.d1);
  f("head_b1", w.b1);
  f("head_w2", w.d2);
  f("head_b2", w.b2);
  f("head_w3", w.d3);
  f("head_b3", w.b3);
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> param_refs(ModelWeights& w);

// constant sampling operator shared by every fixed-grid nonlinearity
struct FixedGridOp {
  Eigen::MatrixXd a_t;     // F x N, evaluate on the grid by fhat . a_t
  Eigen::MatrixXd pinv_t;  // N x F, back-transform by samples . pinv_t
};
FixedGridOp fixed_grid_op(const ModelConfig& c);

// tape-resident copy of the weights; flat order matches param_refs
struct TapedWeights {
  std::vector<std::vector<Var>> lin;
  std::vector<Var> bias0, norm_bias, gen;
  Var d1, b1, d2, b2, d3, b3;
  std::vector<Var> flat;
};
TapedWeights feed_params(Tape& t, const ModelWeights& w, const std::string& override_name = "",
                         Var override_var = {});

// per-cloud precomputation independent of the weights
struct CloudPlan {
  FieldBundle lift;
  std::vector<std::vector<int>> keep;  // fps survivors per block
  int label = -1;
};
CloudPlan plan_cloud(const ModelConfig& c, const PointCloud& cloud);

// differentiable forward; fg may be null except for the fixed-grid kind
Var model_logits(Tape& t, const ModelConfig& c, const TapedWeights& tw, const FixedGridOp* fg,
                 const CloudPlan& plan);

Eigen::VectorXd forward(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                        const PointCloud& cloud);

// mean relative logit deviation over clouds x rotations (invariance form)
double logit_invariance(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                        const std::vector<PointCloud>& clouds,
                        const std::vector<Rotation>& rotations);

double accuracy(const ModelConfig& c, const ModelWeights& w, const FixedGridOp* fg,
                const std::vector<PointCloud>& clouds);

struct MetricsRow {
  int epoch = 0;
  std::string split;
  double accuracy = 0.0;
  double invariance_error = 0.0;
  double wall_ms = 0.0;
};
std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct TrainOptions {
  int epochs = 60;
  double lr = 1e-3;
  int batch = 16;
  int invariance_clouds = 8;     // fixed test subset for the per-epoch metric
  int invariance_rotations = 6;  // cubic subsample per epoch; the full group is used in reports
};

struct TrainResult {
  ModelWeights weights;
  std::vector<MetricsRow> history;
  std::vector<double> epoch_loss;
};

TrainResult train(const ModelConfig& c, const Dataset& data, const TrainOptions& opt);

// checkpoint round trip, bit exact
std::string checkpoint_to_json(const ModelConfig& c, const ModelWeights& w);
void checkpoint_from_json(const std::string& text, ModelConfig& c, ModelWeights& w);

}  // namespace so3kit
