#pragma once

// Brute-force reference computations that share no numerics with the solver
// library: monomials about the first vertex, Golub-Welsch Gauss rules on a
// collapsed square, QR-orthonormalized test and trial functions. Results are compared by value at
// sample points, never by coefficients.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <wg/mesh.hpp>
#include <wg/polyspace.hpp>

namespace wg::verify
{
  // n-point Gauss-Legendre rule on [-1, 1] from the Jacobi matrix eigenproblem.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> golub_welsch(int n);

  struct SamplePoint
  {
    Point  x;
    double weight;
  };

  // Collapsed-square rule with n x n points (exact to degree 2n - 2).
  std::vector<SamplePoint> triangle_samples(const std::array<Point, 3> &v, int n);
  // Gauss rule on the segment a -> b, with t in [0, 1] the position along it.
  struct EdgeSample
  {
    Point  x;
    double t;
    double weight;
  };
  std::vector<EdgeSample> segment_samples(const Point &a, const Point &b, int n);

  // One triangle with its global vertex ids, counterclockwise.
  struct Element
  {
    std::array<Point, 3> x;
    std::array<int, 3>   id;

    double diameter() const;
    // outward unit normal of face l (vertex l to vertex (l+1)%3)
    Point normal(int l) const;
    Point centroid() const { return (x[0] + x[1] + x[2]) / 3.0; }
  };

  Element element(const Mesh &mesh, std::size_t t);

  // Reads a local dof vector in the solver's documented layout: interior
  // coefficients of ((x-c)/h)^a ((y-c)/h)^b by total degree, then per face the
  // coefficients of s^j, s in [-1, 1] running from the lower to the higher
  // global vertex id. Components are stored x block first.
  class WeakFunction
  {
  public:
    WeakFunction(const Element &element, int k, Eigen::VectorXd dofs);

    Point interior(const Point &x) const;
    Point face(int l, const Point &x) const;

  private:
    Element         element_;
    int             k_;
    Eigen::VectorXd dofs_;
  };

  // Monomials ((x - x0)/L)^a ((y - y0)/L)^b of total degree <= degree,
  // ordered by the power of x.
  Eigen::VectorXd raw_monomials(const Point &origin, double scale, int degree, const Point &x);
  Eigen::MatrixX2d raw_monomial_gradients(const Point &origin, double scale, int degree,
                                          const Point &x);

  // Operators rebuilt from their defining variational identities.
  struct OracleResult
  {
    std::function<Matrix2(const Point &)> gradient;
    std::function<double(const Point &)>  divergence;
    std::function<Point(const Point &)>   reconstruction;
  };
  OracleResult oracle_operators(const Element &element, int k, const Eigen::VectorXd &dofs);

  // h_T^{-1} <v_0 - v_b, w_0 - w_b>_dT with h_T the longest edge.
  double oracle_stabilizer(const Element &element, int k, const Eigen::VectorXd &v,
                           const Eigen::VectorXd &w);
  // mu (grad_w v, grad_w w) + (lambda + mu)(div_w v, div_w w) + S(v, w)
  double oracle_local_form(const Element &element, int k, double mu, double lambda,
                           const Eigen::VectorXd &v, const Eigen::VectorXd &w);
  // triple-bar norm summed element by element from local dof vectors
  double oracle_triple_bar(const Mesh &mesh, int k, const std::vector<Eigen::VectorXd> &local);

  // Outcome of one verification suite.
  struct Check
  {
    std::string name;
    bool        passed = false;
    double      value  = 0.0; // worst observed quantity
    double      limit  = 0.0;
    std::string detail;
  };

  // Randomized element shapes, vertex numberings and dof vectors; returns one
  // check per operator (gradient, divergence, reconstruction, stabilizer).
  std::vector<Check> check_operator_oracles(int k, int instances, unsigned seed,
                                            double tolerance = 1e-10);
  // div R(v) = div_w v and R(v).n = v_b.n on every element, random dofs.
  std::vector<Check> check_rt_identities(int level, int k, unsigned seed,
                                         double tolerance = 1e-10);
  // grad_w Q_h v = Pi_h grad v and div_w Q_h v = P_h div v for polynomials
  // of degree 1..max_degree.
  std::vector<Check> check_commutation(int level, int k, int max_degree,
                                       double tolerance = 1e-10);
  // Five global polynomial fields of degree <= k are reproduced exactly.
  Check check_patch_tests(int k, int first_level, int last_level, double tolerance = 1e-9);
  Check check_error_equation(int k, int level, double lambda, double tolerance = 1e-9);
  // symmetry, positive definiteness, robust/standard matrix identity
  std::vector<Check> check_structure(int level, int k, double lambda, bool dense_eigen);
  Check check_mesh(int level);
  Check check_quadrature();
  Check check_local_form(int k, unsigned seed, double tolerance = 1e-10);

  // Quick run of every suite, used by the command-line self test.
  std::vector<Check> selftest();
} // namespace wg::verify
