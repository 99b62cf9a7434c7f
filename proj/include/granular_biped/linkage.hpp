#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace granular_biped {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

/// One segment of a point's offset from the linkage base:
///   length * (sx * sin(q[angle]), sz * cos(q[angle])).
/// sx, sz in {-1, +1} select the direction convention of the link.
struct LinkTerm {
  int angle;
  double length;
  double sx;
  double sz;
};

using PointChain = std::vector<LinkTerm>;

/// A point mass carried by the linkage. `rotation` is the angle index whose
/// rate is the body's angular velocity (for the rotational inertia), or -1.
struct LinkBody {
  std::string name;
  double mass = 0.0;
  double inertia = 0.0;
  int rotation = -1;
  PointChain chain;
};

/// Planar open-chain linkage on a floating translational base.
///
/// Generalized coordinates are [angles..., x, z]: the absolute link angles
/// followed by the horizontal and (upward) vertical displacement of the base
/// point. Every body position is base + sum of LinkTerm offsets, so the
/// kinetic energy is quadratic in the rates with a configuration-dependent
/// inertia matrix. D, C (Christoffel form) and G are assembled from the
/// body Jacobians; nothing here is specific to one robot.
class PlanarLinkage {
 public:
  PlanarLinkage(int num_angles, std::vector<LinkBody> bodies, double gravity);

  int num_angles() const { return num_angles_; }
  int dof() const { return num_angles_ + 2; }
  int x_index() const { return num_angles_; }
  int z_index() const { return num_angles_ + 1; }
  double gravity() const { return gravity_; }
  double total_mass() const { return total_mass_; }
  const std::vector<LinkBody>& bodies() const { return bodies_; }

  Vector2d point(const VectorXd& q, const PointChain& chain) const;
  /// 2 x dof Jacobian of a chain point.
  Eigen::Matrix<double, 2, Eigen::Dynamic> point_jacobian(const VectorXd& q, const PointChain& chain) const;
  /// Velocity-product part of the point acceleration, Jdot * qdot.
  Vector2d point_jdot_qdot(const VectorXd& q, const VectorXd& dq, const PointChain& chain) const;

  MatrixXd mass_matrix(const VectorXd& q) const;
  /// Partial derivative of the mass matrix with respect to q[index].
  MatrixXd mass_matrix_derivative(const VectorXd& q, int index) const;
  MatrixXd coriolis(const VectorXd& q, const VectorXd& dq) const;
  VectorXd gravity_vector(const VectorXd& q) const;

  double kinetic_energy(const VectorXd& q, const VectorXd& dq) const;
  double potential_energy(const VectorXd& q) const;

  Vector2d com(const VectorXd& q) const;
  Vector2d com_velocity(const VectorXd& q, const VectorXd& dq) const;

 private:
  int num_angles_;
  std::vector<LinkBody> bodies_;
  double gravity_;
  double total_mass_ = 0.0;
};

}  // namespace granular_biped
