#include "so3kit/field_type.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace so3kit {

FieldType field_type(RepKind kind, int L) {
  if (L < 0 || L > kMaxL)
    throw std::invalid_argument("field_type: L out of range [0, " + std::to_string(kMaxL) + "]");
  FieldType t;
  t.kind = kind;
  t.L = L;
  int f = 0;
  for (int l = 0; l <= L; ++l) f += t.block_size(l);
  t.F = f;
  return t;
}

Eigen::VectorXd delta_hat(const FieldType& t, bool normalized) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(t.F);
  for (int l = 0; l <= t.L; ++l) {
    const double s = std::sqrt(2.0 * l + 1.0);
    const int off = t.block_offset(l);
    const int dim = 2 * l + 1;
    if (t.kind == RepKind::Quotient) {
      d[off + l] = s;  // m = 0 slot of the single copy
    } else {
      // copy j holds sqrt(2l+1) times column j of the identity
      for (int j = 0; j < dim; ++j) d[off + j * dim + j] = s;
    }
  }
  if (normalized) d /= std::sqrt(static_cast<double>(t.F));
  return d;
}

Eigen::VectorXd rho_apply(const FieldType& t, const Rotation& r, const Eigen::VectorXd& fhat) {
  if (fhat.size() != t.F) throw std::invalid_argument("rho_apply: coefficient length mismatch");
  Eigen::VectorXd out = fhat;
  const auto D = wigner_d_stack(t.L, r);
  for (int l = 0; l <= t.L; ++l) {
    const int dim = 2 * l + 1;
    const int off = t.block_offset(l);
    for (int j = 0; j < t.q(l); ++j)
      out.segment(off + j * dim, dim) = D[l] * fhat.segment(off + j * dim, dim);
  }
  return out;
}

Eigen::MatrixXd rho_apply(const FieldType& t, const Rotation& r, const Eigen::MatrixXd& fhat) {
  if (fhat.cols() != t.F) throw std::invalid_argument("rho_apply: coefficient length mismatch");
  Eigen::MatrixXd out = fhat;
  const auto D = wigner_d_stack(t.L, r);
  for (int l = 0; l <= t.L; ++l) {
    const int dim = 2 * l + 1;
    const int off = t.block_offset(l);
    for (int j = 0; j < t.q(l); ++j)
      out.middleCols(off + j * dim, dim) = fhat.middleCols(off + j * dim, dim) * D[l].transpose();
  }
  return out;
}

Eigen::MatrixXd rho_matrix(const FieldType& t, const Rotation& r) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(t.F, t.F);
  const auto D = wigner_d_stack(t.L, r);
  for (int l = 0; l <= t.L; ++l) {
    const int dim = 2 * l + 1;
    const int off = t.block_offset(l);
    for (int j = 0; j < t.q(l); ++j) B.block(off + j * dim, off + j * dim, dim, dim) = D[l];
  }
  return B;
}

std::string field_type_to_json(const FieldType& t) {
  nlohmann::json j;
  j["kind"] = t.kind == RepKind::Quotient ? "quotient" : "regular";
  j["L"] = t.L;
  return j.dump();
}

FieldType field_type_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "quotient" && kind != "regular")
    throw std::invalid_argument("field_type_from_json: unknown kind \"" + kind + "\"");
  return field_type(kind == "quotient" ? RepKind::Quotient : RepKind::Regular, j.at("L").get<int>());
}

}  // namespace so3kit
