#include "granular_biped/linkage.hpp"

#include <cmath>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

// Unit direction of a term and its first derivative in the angle.
Vector2d dir(const LinkTerm& t, double q) {
  return {t.sx * std::sin(q), t.sz * std::cos(q)};
}

Vector2d dir_prime(const LinkTerm& t, double q) {
  return {t.sx * std::cos(q), -t.sz * std::sin(q)};
}

}  // namespace

PlanarLinkage::PlanarLinkage(int num_angles, std::vector<LinkBody> bodies, double gravity)
    : num_angles_(num_angles), bodies_(std::move(bodies)), gravity_(gravity) {
  if (num_angles_ < 1) throw DomainError("linkage needs at least one angle");
  for (const auto& b : bodies_) {
    if (b.mass < 0.0 || b.inertia < 0.0) throw DomainError("negative mass or inertia in body " + b.name);
    if (b.rotation >= num_angles_) throw DomainError("rotation index out of range in body " + b.name);
    for (const auto& t : b.chain) {
      if (t.angle < 0 || t.angle >= num_angles_) throw DomainError("angle index out of range in body " + b.name);
    }
    total_mass_ += b.mass;
  }
}

Vector2d PlanarLinkage::point(const VectorXd& q, const PointChain& chain) const {
  Vector2d p(q[x_index()], q[z_index()]);
  for (const auto& t : chain) p += t.length * dir(t, q[t.angle]);
  return p;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> PlanarLinkage::point_jacobian(const VectorXd& q,
                                                                      const PointChain& chain) const {
  Eigen::Matrix<double, 2, Eigen::Dynamic> J = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, dof());
  J(0, x_index()) = 1.0;
  J(1, z_index()) = 1.0;
  for (const auto& t : chain) J.col(t.angle) += t.length * dir_prime(t, q[t.angle]);
  return J;
}

Vector2d PlanarLinkage::point_jdot_qdot(const VectorXd& q, const VectorXd& dq, const PointChain& chain) const {
  // d/dt of dir_prime is -dir * qdot.
  Vector2d a = Vector2d::Zero();
  for (const auto& t : chain) a -= t.length * dir(t, q[t.angle]) * dq[t.angle] * dq[t.angle];
  return a;
}

MatrixXd PlanarLinkage::mass_matrix(const VectorXd& q) const {
  MatrixXd D = MatrixXd::Zero(dof(), dof());
  for (const auto& b : bodies_) {
    const auto J = point_jacobian(q, b.chain);
    D.noalias() += b.mass * J.transpose() * J;
    if (b.rotation >= 0) D(b.rotation, b.rotation) += b.inertia;
  }
  return D;
}

MatrixXd PlanarLinkage::mass_matrix_derivative(const VectorXd& q, int index) const {
  MatrixXd dD = MatrixXd::Zero(dof(), dof());
  if (index >= num_angles_) return dD;  // translation does not enter D
  for (const auto& b : bodies_) {
    if (b.mass == 0.0) continue;
    Eigen::Matrix<double, 2, Eigen::Dynamic> dJ = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, dof());
    for (const auto& t : b.chain) {
      if (t.angle == index) dJ.col(index) -= t.length * dir(t, q[index]);
    }
    if (dJ.col(index).isZero(0.0)) continue;
    const auto J = point_jacobian(q, b.chain);
    const MatrixXd JtdJ = J.transpose() * dJ;
    dD.noalias() += b.mass * (JtdJ + JtdJ.transpose());
  }
  return dD;
}

MatrixXd PlanarLinkage::coriolis(const VectorXd& q, const VectorXd& dq) const {
  const int n = dof();
  std::vector<MatrixXd> dD;
  dD.reserve(num_angles_);
  for (int l = 0; l < num_angles_; ++l) dD.push_back(mass_matrix_derivative(q, l));

  // C_kj = sum_l Gamma_kjl dq_l, Gamma_kjl = (dD_kj/dq_l + dD_kl/dq_j - dD_jl/dq_k) / 2.
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int l = 0; l < n; ++l) {
        double g = 0.0;
        if (l < num_angles_) g += dD[l](k, j);
        if (j < num_angles_) g += dD[j](k, l);
        if (k < num_angles_) g -= dD[k](j, l);
        c += 0.5 * g * dq[l];
      }
      C(k, j) = c;
    }
  }
  return C;
}

VectorXd PlanarLinkage::gravity_vector(const VectorXd& q) const {
  VectorXd G = VectorXd::Zero(dof());
  for (const auto& b : bodies_) {
    const auto J = point_jacobian(q, b.chain);
    G.noalias() += b.mass * gravity_ * J.row(1).transpose();
  }
  return G;
}

double PlanarLinkage::kinetic_energy(const VectorXd& q, const VectorXd& dq) const {
  return 0.5 * dq.dot(mass_matrix(q) * dq);
}

double PlanarLinkage::potential_energy(const VectorXd& q) const {
  double v = 0.0;
  for (const auto& b : bodies_) v += b.mass * gravity_ * point(q, b.chain).y();
  return v;
}

Vector2d PlanarLinkage::com(const VectorXd& q) const {
  if (total_mass_ <= 0.0) return point(q, {});
  Vector2d c = Vector2d::Zero();
  for (const auto& b : bodies_) c += b.mass * point(q, b.chain);
  return c / total_mass_;
}

Vector2d PlanarLinkage::com_velocity(const VectorXd& q, const VectorXd& dq) const {
  Vector2d v = Vector2d::Zero();
  if (total_mass_ <= 0.0) return v;
  for (const auto& b : bodies_) v += b.mass * (point_jacobian(q, b.chain) * dq);
  return v / total_mass_;
}

}  // namespace granular_biped
