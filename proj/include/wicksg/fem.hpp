#ifndef WICKSG_FEM_HPP
#define WICKSG_FEM_HPP

#include "wicksg/chaos_expansion.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace wicksg::fem {

using SpMat = Eigen::SparseMatrix<double>;

/// Tensor-product Lagrange space with homogeneous Dirichlet conditions built
/// in: only interior nodes carry degrees of freedom. Uniform meshes on an
/// interval (orders 1..4) or a rectangle (orders 1..2).
class FemSpace {
public:
  static FemSpace interval(double a, double b, int n, int q, int quad_per_dim = 0);
  static FemSpace rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, int nx, int ny, int q,
                            int quad_per_dim = 0);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int n_dof() const { return n_dof_; }

  const Eigen::MatrixXd& quad_points() const { return quad_points_; }
  const Eigen::VectorXd& quad_weights() const { return quad_weights_; }

  /// Interpolation onto quadrature points: (n_q x n_dof).
  const SpMat& value_op() const { return value_op_; }
  /// Gradient component c at quadrature points: (n_q x n_dof).
  const SpMat& grad_op(int c) const { return grad_op_[static_cast<std::size_t>(c)]; }

  /// Coordinates of the interior nodes (n_dof x dim).
  const Eigen::MatrixXd& dof_points() const { return dof_points_; }
  /// Coordinates of all mesh nodes (n_nodes x dim).
  const Eigen::MatrixXd& node_points() const { return node_points_; }
  /// Interior dof index per node, -1 on the boundary.
  const std::vector<int>& node_to_dof() const { return node_to_dof_; }

  /// Nodal vector over all nodes with zeros on the boundary.
  Eigen::VectorXd with_boundary(const Eigen::VectorXd& u_interior) const;

  const Eigen::Vector2d& lower() const { return lo_; }
  const Eigen::Vector2d& upper() const { return hi_; }
  int cells(int c) const { return n_[static_cast<std::size_t>(c)]; }

private:
  int dim_ = 1;
  int order_ = 1;
  int n_dof_ = 0;
  Eigen::Vector2d lo_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi_ = Eigen::Vector2d::Zero();
  std::array<int, 2> n_ = {0, 0};
  Eigen::MatrixXd quad_points_;
  Eigen::VectorXd quad_weights_;
  SpMat value_op_;
  std::array<SpMat, 2> grad_op_;
  Eigen::MatrixXd dof_points_;
  Eigen::MatrixXd node_points_;
  std::vector<int> node_to_dof_;
};

/// build_mesh(domain, n, q): interval when the domain is one-dimensional.
FemSpace build_mesh(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const std::vector<int>& n, int q);

/// S_ij = int c(x) grad theta_i . grad theta_j with c given at quadrature points.
SpMat assemble_stiffness(const FemSpace& space, const Eigen::VectorXd& c_at_quad);
SpMat assemble_stiffness(const FemSpace& space, const std::function<double(const Eigen::VectorXd&)>& c);

/// b_i = int f theta_i.
Eigen::VectorXd assemble_load(const FemSpace& space, const Eigen::VectorXd& f_at_quad);
Eigen::VectorXd assemble_load(const FemSpace& space, const std::function<double(const Eigen::VectorXd&)>& f);

/// Sparse SPD factorization reused across solves; throws if the matrix is not SPD.
class SpdSolver {
public:
  explicit SpdSolver(const SpMat& s);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::Index rows() const { return llt_.rows(); }

private:
  Eigen::SimplicialLLT<SpMat> llt_;
};

/// Direct solve with a relative-residual check (<= 1e-12 by construction).
Eigen::VectorXd solve_deterministic(const SpMat& s, const Eigen::VectorXd& b);

double h1_seminorm(const FemSpace& space, const Eigen::VectorXd& u);
double l2_norm(const FemSpace& space, const Eigen::VectorXd& u);
double l2_error(const FemSpace& space, const Eigen::VectorXd& u,
                const std::function<double(const Eigen::VectorXd&)>& exact);

/// L2(F; H_0^1) norm of a chaos expansion of fields: root of the weighted sum
/// of per-mode H^1 seminorms squared (weights per the stored normalization).
double chaos_h1_norm(const FemSpace& space, const chaos::ChaosExpansion<Eigen::VectorXd>& u);
double chaos_l2_norm(const FemSpace& space, const chaos::ChaosExpansion<Eigen::VectorXd>& u);

/// Plain-text export: one "x [y] value" row per mesh node (boundary included).
void write_field(const std::string& path, const FemSpace& space, const Eigen::VectorXd& u_interior);

/// Values along the horizontal line y = y0 (2D) or all nodes (1D), as
/// (coordinate, value) pairs sorted by x. Boundary nodes included.
std::vector<std::pair<double, double>> line_restriction(const FemSpace& space, const Eigen::VectorXd& u_interior,
                                                        double y0 = 0.0);

} // namespace wicksg::fem

#endif
