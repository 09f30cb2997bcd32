#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <wg/assembly.hpp>

namespace wg
{
  // Exact solution of -mu Lap u - (lambda + mu) grad div u = f with the
  // derivatives needed to audit it.
  struct ManufacturedProblem
  {
    std::string    label;
    double         mu     = 1.0;
    double         lambda = 1.0;
    VectorFunction u;
    MatrixFunction gradient; // (i, j) = d u_i / d x_j
    ScalarFunction divergence;
    VectorFunction laplacian;
    VectorFunction grad_div;
    VectorFunction load;
    VectorFunction boundary;
  };

  // Manufactured examples on the unit square:
  //  1  u = (sin pi x cos pi y, cos pi x sin pi y)
  //  2  divergence-free field plus a 1/(lambda+mu) perturbation (locking test)
  //  3  u = (sin pi x sin pi y, sin pi x sin pi y), lambda div u unbounded
  ManufacturedProblem example_problem(int id, double mu, double lambda);

  // Bivariate polynomial with exact arithmetic on its monomial coefficients.
  class Polynomial
  {
  public:
    Polynomial() = default;
    // coefficient of x^a y^b
    Polynomial &add(int a, int b, double coefficient);

    double     operator()(const Point &x) const;
    Polynomial dx() const;
    Polynomial dy() const;
    int        degree() const;

    friend Polynomial operator+(const Polynomial &p, const Polynomial &q);
    friend Polynomial operator*(double s, const Polynomial &p);

  private:
    std::map<std::pair<int, int>, double> terms_;
  };

  // Manufactured problem for u = (ux, uy) with f derived from the PDE.
  ManufacturedProblem polynomial_problem(const Polynomial &ux, const Polynomial &uy, double mu,
                                         double lambda, std::string label = "polynomial");

  // Five fixed global polynomial fields of total degree <= k.
  std::vector<ManufacturedProblem> patch_test_suite(int k, double mu, double lambda);

  // Q_h u = {Q_0 u, Q_b u}.
  WgField project_weak(const VectorFunction &u, const Mesh &mesh, const DofMap &dofs,
                       int quadrature_degree = -1);

  // (sum_T |grad_w v|_T^2 + h_T^{-1} |v_0 - v_b|_dT^2)^{1/2}
  double triple_bar_norm(const WgField &field, const Mesh &mesh, int k,
                         const std::vector<ElementOperators> *operators = nullptr);

  struct ErrorPair
  {
    double energy; // |||Q_h u - u_h|||
    double l2;     // ||Q_0 u - u_0||
  };

  ErrorPair errors_against(const VectorFunction &u_exact, const WgField &u_h, const Mesh &mesh,
                           int k, const std::vector<ElementOperators> *operators = nullptr);

  // Solves with g = u and returns max_v |A_h^s(e_h, v) - Theta_u(v)| / max|A|
  // over free basis vectors v, where e_h = Q_h u - u_h and
  // Theta_u(v) = G_u(v) - K_u(v) + S_h(Q_h u, v).
  double error_equation_residual(const ManufacturedProblem &problem, const Mesh &mesh, int k,
                                 Variant variant = Variant::robust);

  struct ConvergenceRow
  {
    int                   level;
    double                h;
    long                  ndof;
    double                energy_error;
    std::optional<double> energy_order;
    double                l2_error;
    std::optional<double> l2_order;
  };

  struct ConvergenceTable
  {
    int         example = 0;
    std::string label;
    int         degree = 1;
    double      mu     = 1.0;
    double      lambda = 1.0;
    Variant     variant = Variant::robust;
    std::vector<ConvergenceRow> rows;
  };

  struct StudyRequest
  {
    int           example     = 1;
    int           degree      = 1;
    int           first_level = 2;
    int           last_level  = 6;
    double        mu          = 1.0;
    double        lambda      = 1.0;
    Variant       variant     = Variant::robust;
    SolverOptions solver;
  };

  // log2(previous / current) for successive rows
  void fill_orders(ConvergenceTable &table);

  ConvergenceTable convergence_study(const StudyRequest &request);
} // namespace wg
