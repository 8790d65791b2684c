#include "so3kit/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace so3kit {

namespace {

[[noreturn]] void shape_error(const char* op) {
  throw std::invalid_argument(std::string(op) + ": operand shapes are incompatible");
}

}  // namespace

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: variable does not belong to this tape");
}

Var Tape::emplace(Eigen::MatrixXd value, std::function<void()> back, const char* op) {
  if (!value.allFinite())
    throw std::runtime_error(std::string(op) + " produced a non-finite value");
  Node n;
  n.grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(const Eigen::MatrixXd& value) { return emplace(value, {}, "input"); }

const Eigen::MatrixXd& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id].value;
}

const Eigen::MatrixXd& Tape::grad(Var v) const {
  check(v);
  return nodes_[v.id].grad;
}

void Tape::clear() { nodes_.clear(); }

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  if (val(a.id).cols() != val(b.id).rows()) shape_error("matmul");
  const int ia = a.id, ib = b.id;
  Var out = emplace(val(ia) * val(ib), {}, "matmul");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io) * val(ib).transpose();
    g(ib) += val(ia).transpose() * g(io);
  };
  return out;
}

Var Tape::transpose(Var a) {
  check(a);
  const int ia = a.id;
  Var out = emplace(val(ia).transpose(), {}, "transpose");
  const int io = out.id;
  nodes_[io].back = [this, ia, io] { g(ia) += g(io).transpose(); };
  return out;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  if (val(a.id).rows() != val(b.id).rows() || val(a.id).cols() != val(b.id).cols())
    shape_error("add");
  const int ia = a.id, ib = b.id;
  Var out = emplace(val(ia) + val(ib), {}, "add");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io);
    g(ib) += g(io);
  };
  return out;
}

Var Tape::add_rowvec(Var a, Var b) {
  check(a);
  check(b);
  if (val(b.id).rows() != 1 || val(a.id).cols() != val(b.id).cols()) shape_error("add_rowvec");
  const int ia = a.id, ib = b.id;
  Var out = emplace(val(ia).rowwise() + val(ib).row(0), {}, "add_rowvec");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io);
    g(ib).row(0) += g(io).colwise().sum();
  };
  return out;
}

Var Tape::scale(Var a, double c) {
  check(a);
  const int ia = a.id;
  Var out = emplace(val(ia) * c, {}, "scale");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, c] { g(ia) += g(io) * c; };
  return out;
}

Var Tape::hadamard(Var a, Var b) {
  check(a);
  check(b);
  if (val(a.id).rows() != val(b.id).rows() || val(a.id).cols() != val(b.id).cols())
    shape_error("hadamard");
  const int ia = a.id, ib = b.id;
  Var out = emplace(val(ia).cwiseProduct(val(ib)), {}, "hadamard");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io).cwiseProduct(val(ib));
    g(ib) += g(io).cwiseProduct(val(ia));
  };
  return out;
}

Var Tape::concat_rows(Var a, Var b) {
  check(a);
  check(b);
  if (val(a.id).cols() != val(b.id).cols()) shape_error("concat_rows");
  const int ia = a.id, ib = b.id;
  Eigen::MatrixXd v(val(ia).rows() + val(ib).rows(), val(ia).cols());
  v << val(ia), val(ib);
  Var out = emplace(std::move(v), {}, "concat_rows");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io).topRows(val(ia).rows());
    g(ib) += g(io).bottomRows(val(ib).rows());
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  if (val(a.id).rows() != val(b.id).rows()) shape_error("concat_cols");
  const int ia = a.id, ib = b.id;
  Eigen::MatrixXd v(val(ia).rows(), val(ia).cols() + val(ib).cols());
  v << val(ia), val(ib);
  Var out = emplace(std::move(v), {}, "concat_cols");
  const int io = out.id;
  nodes_[io].back = [this, ia, ib, io] {
    g(ia) += g(io).leftCols(val(ia).cols());
    g(ib) += g(io).rightCols(val(ib).cols());
  };
  return out;
}

Var Tape::slice_rows(Var a, int start, int count) {
  check(a);
  if (start < 0 || count < 1 || start + count > val(a.id).rows()) shape_error("slice_rows");
  const int ia = a.id;
  Var out = emplace(val(ia).middleRows(start, count), {}, "slice_rows");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, start, count] { g(ia).middleRows(start, count) += g(io); };
  return out;
}

Var Tape::slice_cols(Var a, int start, int count) {
  check(a);
  if (start < 0 || count < 1 || start + count > val(a.id).cols()) shape_error("slice_cols");
  const int ia = a.id;
  Var out = emplace(val(ia).middleCols(start, count), {}, "slice_cols");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, start, count] { g(ia).middleCols(start, count) += g(io); };
  return out;
}

Var Tape::gather_rows(Var a, const std::vector<int>& idx) {
  check(a);
  if (idx.empty()) shape_error("gather_rows");
  for (const int i : idx)
    if (i < 0 || i >= val(a.id).rows()) shape_error("gather_rows");
  const int ia = a.id;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(idx.size()), val(ia).cols());
  for (size_t k = 0; k < idx.size(); ++k) v.row(static_cast<Eigen::Index>(k)) = val(ia).row(idx[k]);
  Var out = emplace(std::move(v), {}, "gather_rows");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, idx] {
    for (size_t k = 0; k < idx.size(); ++k)
      g(ia).row(idx[k]) += g(io).row(static_cast<Eigen::Index>(k));
  };
  return out;
}

Var Tape::sum_all(Var a) {
  check(a);
  const int ia = a.id;
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = val(ia).sum();
  Var out = emplace(std::move(v), {}, "sum_all");
  const int io = out.id;
  nodes_[io].back = [this, ia, io] { g(ia).array() += g(io)(0, 0); };
  return out;
}

Var Tape::mean_all(Var a) {
  check(a);
  const int ia = a.id;
  const double n = static_cast<double>(val(ia).size());
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = val(ia).mean();
  Var out = emplace(std::move(v), {}, "mean_all");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, n] { g(ia).array() += g(io)(0, 0) / n; };
  return out;
}

Var Tape::mean_rows(Var a) {
  check(a);
  const int ia = a.id;
  const double n = static_cast<double>(val(ia).rows());
  Var out = emplace(val(ia).colwise().mean(), {}, "mean_rows");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, n] { g(ia) += (g(io) / n).replicate(val(ia).rows(), 1); };
  return out;
}

Var Tape::act(Var a, Activation kind) {
  check(a);
  const int ia = a.id;
  Var out = emplace(activate(kind, val(ia)), {}, "activation");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, kind] {
    const auto& x = val(ia);
    const auto& y = val(io);
    Eigen::MatrixXd d(x.rows(), x.cols());
    switch (kind) {
      case Activation::Identity: d.setOnes(); break;
      case Activation::Relu: d = (x.array() > 0.0).cast<double>(); break;
      case Activation::Elu: d = (x.array() > 0.0).select(1.0, y.array() + 1.0); break;
      case Activation::Sigmoid: d = y.array() * (1.0 - y.array()); break;
    }
    g(ia) += g(io).cwiseProduct(d);
  };
  return out;
}

Var Tape::safe_norm(Var a, int sub) {
  check(a);
  if (sub < 1 || val(a.id).cols() % sub != 0) shape_error("safe_norm");
  const int ia = a.id;
  const int m = static_cast<int>(val(ia).cols()) / sub;
  Eigen::MatrixXd v(val(ia).rows(), m);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (int j = 0; j < m; ++j) v(i, j) = val(ia).row(i).segment(j * sub, sub).norm();
  Var out = emplace(std::move(v), {}, "safe_norm");
  const int io = out.id;
  nodes_[io].back = [this, ia, io, m, sub] {
    for (Eigen::Index i = 0; i < val(io).rows(); ++i)
      for (int j = 0; j < m; ++j) {
        const double n = val(io)(i, j);
        g(ia).row(i).segment(j * sub, sub) +=
            (g(io)(i, j) / (n + 1e-12)) * val(ia).row(i).segment(j * sub, sub);
      }
  };
  return out;
}

Var Tape::seg_scale(Var a, Var gate, int sub) {
  check(a);
  check(gate);
  if (sub < 1 || val(a.id).cols() != val(gate.id).cols() * sub ||
      val(a.id).rows() != val(gate.id).rows())
    shape_error("seg_scale");
  const int ia = a.id, ig = gate.id;
  const int m = static_cast<int>(val(ig).cols());
  Eigen::MatrixXd v = val(ia);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (int j = 0; j < m; ++j) v.row(i).segment(j * sub, sub) *= val(ig)(i, j);
  Var out = emplace(std::move(v), {}, "seg_scale");
  const int io = out.id;
  nodes_[io].back = [this, ia, ig, io, m, sub] {
    for (Eigen::Index i = 0; i < val(io).rows(); ++i)
      for (int j = 0; j < m; ++j) {
        g(ia).row(i).segment(j * sub, sub) += val(ig)(i, j) * g(io).row(i).segment(j * sub, sub);
        g(ig)(i, j) +=
            g(io).row(i).segment(j * sub, sub).dot(val(ia).row(i).segment(j * sub, sub));
      }
  };
  return out;
}

Var Tape::inv_shift(Var a, double eps) {
  check(a);
  const int ia = a.id;
  Var out = emplace((val(ia).array() + eps).inverse(), {}, "inv_shift");
  const int io = out.id;
  nodes_[io].back = [this, ia, io] {
    g(ia) -= g(io).cwiseProduct(val(io).cwiseProduct(val(io)));
  };
  return out;
}

Var Tape::rows_normalize(Var a) {
  check(a);
  const int ia = a.id;
  Eigen::MatrixXd v = val(ia);
  for (Eigen::Index i = 0; i < v.rows(); ++i) v.row(i) /= std::max(v.row(i).norm(), 1e-12);
  Var out = emplace(std::move(v), {}, "rows_normalize");
  const int io = out.id;
  nodes_[io].back = [this, ia, io] {
    for (Eigen::Index i = 0; i < val(io).rows(); ++i) {
      const double n = std::max(val(ia).row(i).norm(), 1e-12);
      const auto y = val(io).row(i);
      const auto dy = g(io).row(i);
      g(ia).row(i) += (dy - y * y.dot(dy)) / n;
    }
  };
  return out;
}

Var Tape::block_linear(Var x, Var w, int sub) {
  check(x);
  check(w);
  const int m_in = static_cast<int>(val(w.id).cols());
  const int m_out = static_cast<int>(val(w.id).rows());
  if (sub < 1 || val(x.id).cols() != static_cast<Eigen::Index>(m_in) * sub)
    shape_error("block_linear");
  const int ix = x.id, iw = w.id;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(val(ix).rows(), static_cast<Eigen::Index>(m_out) * sub);
  for (int j = 0; j < m_out; ++j)
    for (int k = 0; k < m_in; ++k)
      v.middleCols(j * sub, sub) += val(iw)(j, k) * val(ix).middleCols(k * sub, sub);
  Var out = emplace(std::move(v), {}, "block_linear");
  const int io = out.id;
  nodes_[io].back = [this, ix, iw, io, m_in, m_out, sub] {
    for (int j = 0; j < m_out; ++j)
      for (int k = 0; k < m_in; ++k) {
        g(ix).middleCols(k * sub, sub) += val(iw)(j, k) * g(io).middleCols(j * sub, sub);
        g(iw)(j, k) +=
            g(io).middleCols(j * sub, sub).cwiseProduct(val(ix).middleCols(k * sub, sub)).sum();
      }
  };
  return out;
}

Var Tape::reshape_rows(Var a, int new_cols) {
  check(a);
  const Eigen::Index total = val(a.id).size();
  if (new_cols < 1 || total % new_cols != 0) shape_error("reshape_rows");
  const int ia = a.id;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor rm = val(ia);
  Eigen::MatrixXd v =
      Eigen::Map<const RowMajor>(rm.data(), total / new_cols, new_cols);
  Var out = emplace(std::move(v), {}, "reshape_rows");
  const int io = out.id;
  nodes_[io].back = [this, ia, io] {
    RowMajor rm2 = g(io);
    g(ia) += Eigen::Map<const RowMajor>(rm2.data(), val(ia).rows(), val(ia).cols());
  };
  return out;
}

Var Tape::softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  check(logits);
  const auto& z = val(logits.id);
  if (static_cast<Eigen::Index>(labels.size()) != z.rows())
    shape_error("softmax_cross_entropy");
  for (const int c : labels)
    if (c < 0 || c >= z.cols()) shape_error("softmax_cross_entropy");

  const Eigen::Index b = z.rows();
  Eigen::MatrixXd soft(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = z.row(i).maxCoeff();
    const Eigen::ArrayXd e = (z.row(i).array() - mx).exp();
    const double sum = e.sum();
    soft.row(i) = (e / sum).matrix();
    loss += std::log(sum) + mx - z(i, labels[i]);
  }
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = loss / static_cast<double>(b);

  const int iz = logits.id;
  Var out = emplace(std::move(v), {}, "softmax_cross_entropy");
  const int io = out.id;
  nodes_[io].back = [this, iz, io, soft, labels] {
    Eigen::MatrixXd d = soft;
    for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, labels[i]) -= 1.0;
    g(iz) += (g(io)(0, 0) / static_cast<double>(d.rows())) * d;
  };
  return out;
}

void Tape::backward(Var root) {
  check(root);
  if (val(root.id).rows() != 1 || val(root.id).cols() != 1)
    throw std::invalid_argument("backward: root must be a scalar");
  for (auto& n : nodes_) n.grad.setZero();
  nodes_[root.id].grad(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (state.t == 0) {
    state.m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    state.v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
  }
  state.t += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  param.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

}  // namespace so3kit
