#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "so3kit/activation.hpp"

namespace so3kit {

struct Var {
  int id = -1;
};

// Define-by-run reverse-mode engine over dense double matrices. Scalars are
// 1x1. Every op validates shapes and rejects non-finite results; backward
// walks the record once in reverse, accumulating into preallocated gradient
// slots. Single-threaded by construction.
class Tape {
 public:
  Var input(const Eigen::MatrixXd& value);

  const Eigen::MatrixXd& value(Var v) const;
  const Eigen::MatrixXd& grad(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }
  void clear();

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var add_rowvec(Var a, Var b);  // b is 1 x c, broadcast over rows
  Var scale(Var a, double c);
  Var hadamard(Var a, Var b);
  Var concat_rows(Var a, Var b);
  Var concat_cols(Var a, Var b);
  Var slice_rows(Var a, int start, int count);
  Var slice_cols(Var a, int start, int count);
  Var gather_rows(Var a, const std::vector<int>& idx);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var mean_rows(Var a);  // column means, 1 x c
  Var act(Var a, Activation kind);
  Var relu(Var a) { return act(a, Activation::Relu); }
  Var elu(Var a) { return act(a, Activation::Elu); }
  Var sigmoid(Var a) { return act(a, Activation::Sigmoid); }

  // per-row segment norms: n x (m*sub) -> n x m, backward guarded by 1e-12
  Var safe_norm(Var a, int sub);
  // multiply segment (i,j) of a by g(i,j)
  Var seg_scale(Var a, Var g, int sub);
  // elementwise 1/(x + eps)
  Var inv_shift(Var a, double eps);
  // rows scaled to unit norm
  Var rows_normalize(Var a);
  // x: n x (m_in*sub), w: m_out x m_in -> n x (m_out*sub); copies mix across
  // the multiplicity axis only, identity within each sub-segment
  Var block_linear(Var x, Var w, int sub);
  // row-major reinterpretation keeping element count
  Var reshape_rows(Var a, int new_cols);

  Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

  void backward(Var root);

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void()> back;  // empty for leaves
  };
  std::vector<Node> nodes_;

  Var emplace(Eigen::MatrixXd value, std::function<void()> back, const char* op);
  const Eigen::MatrixXd& val(int id) const { return nodes_[id].value; }
  Eigen::MatrixXd& g(int id) { return nodes_[id].grad; }
  void check(Var v) const;
};

// max over coordinates of the relative gap between backward and central
// finite differences of a scalar-valued composite
template <class F>
double gradient_check(F&& f, const Eigen::MatrixXd& x0, double step = 1e-5) {
  Tape t;
  const Var x = t.input(x0);
  const Var y = f(t, x);
  t.backward(y);
  const Eigen::MatrixXd analytic = t.grad(x);

  auto eval = [&](const Eigen::MatrixXd& xv) {
    Tape s;
    const Var xs = s.input(xv);
    return s.value(f(s, xs))(0, 0);
  };

  double worst = 0.0;
  Eigen::MatrixXd xv = x0;
  for (Eigen::Index i = 0; i < x0.rows(); ++i)
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      const double keep = xv(i, j);
      xv(i, j) = keep + step;
      const double up = eval(xv);
      xv(i, j) = keep - step;
      const double dn = eval(xv);
      xv(i, j) = keep;
      const double cd = (up - dn) / (2.0 * step);
      const double a = analytic(i, j);
      const double rel = std::abs(a - cd) / std::max({std::abs(a), std::abs(cd), 1e-8});
      worst = std::max(worst, rel);
    }
  return worst;
}

struct AdamState {
  Eigen::MatrixXd m, v;
  long t = 0;
};

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace so3kit
