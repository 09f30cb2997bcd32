#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include <wg/mesh.hpp>

namespace wg
{
  using Vector2 = Eigen::Vector2d;
  using Matrix2 = Eigen::Matrix2d;

  using ScalarFunction = std::function<double(const Point &)>;
  using VectorFunction = std::function<Vector2(const Point &)>;
  using MatrixFunction = std::function<Matrix2(const Point &)>;

  inline constexpr int min_degree = 1;
  inline constexpr int max_degree = 4;

  // dim P_k on a triangle; 0 for k < 0.
  constexpr int dim_p(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

  void check_degree(int k);

  // ---------------------------------------------------------------- quadrature

  inline constexpr int max_triangle_rule_degree = 20;

  struct QuadratureRule
  {
    std::vector<Point>  points;
    std::vector<double> weights;
    int                 degree = 0;

    std::size_t size() const { return points.size(); }
  };

  struct EdgeQuadrature
  {
    std::vector<double> params; // position along the edge in [-1, 1]
    std::vector<Point>  points;
    std::vector<double> weights; // physical (scaled by length / 2)
    int                 degree = 0;

    std::size_t size() const { return points.size(); }
  };

  // n-point Gauss-Legendre nodes and weights on [-1, 1].
  std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

  // Rule on the reference triangle (0,0), (1,0), (0,1).
  QuadratureRule reference_triangle_rule(int exactness_degree);
  QuadratureRule triangle_rule(int exactness_degree, const std::array<Point, 3> &vertices);
  EdgeQuadrature edge_rule(int exactness_degree, const Point &a, const Point &b);

  // --------------------------------------------------------- element geometry

  struct ElementFace
  {
    Point  a, b; // a -> b is the global edge direction
    double length;
    Point  outward_normal;
    int    sign; // outward normal = sign * global normal
    int    edge_index;
  };

  struct ElementGeometry
  {
    std::array<Point, 3>       vertices;
    Point                      centroid;
    double                     area;
    double                     diameter;
    std::array<ElementFace, 3> faces; // face l joins vertices l and (l+1)%3
  };

  ElementGeometry element_geometry(const Mesh &mesh, std::size_t t);
  // Standalone triangle (must be counterclockwise); faces are oriented along
  // the counterclockwise traversal with sign +1.
  ElementGeometry element_geometry(const std::array<Point, 3> &vertices);
  // A mesh edge seen from its global orientation (sign +1).
  ElementFace edge_face(const Mesh &mesh, std::size_t edge_index);

  // ---------------------------------------------------------------- bases

  // Scaled monomials ((x - c_x)/s)^a ((y - c_y)/s)^b ordered by total degree,
  // so the first dim_p(m) functions span P_m for every m <= degree.
  class TriBasis
  {
  public:
    TriBasis(int degree, const Point &center, double scale);
    explicit TriBasis(int degree, const ElementGeometry &element)
      : TriBasis(degree, element.centroid, element.diameter)
    {}

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const std::array<int, 2> &exponent(int i) const { return exponents_[i]; }
    const Point &center() const { return center_; }
    double scale() const { return scale_; }

    Point local(const Point &x) const { return (x - center_) / scale_; }
    Eigen::VectorXd values(const Point &x) const;
    // rows = basis functions, columns = d/dx, d/dy
    Eigen::MatrixX2d gradients(const Point &x) const;

  private:
    int                             degree_;
    Point                           center_;
    double                          scale_;
    std::vector<std::array<int, 2>> exponents_;
  };

  // Monomials s^j, j = 0..degree, in the edge parameter s in [-1, 1].
  class EdgeBasis
  {
  public:
    explicit EdgeBasis(int degree);
    int degree() const { return degree_; }
    int size() const { return degree_ + 1; }
    Eigen::VectorXd values(double s) const;

  private:
    int degree_;
  };

  // Evaluates a component-major coefficient vector of [P_m]^n at x.
  Eigen::VectorXd evaluate(const TriBasis &basis, int degree, int n_components,
                           const Eigen::Ref<const Eigen::VectorXd> &coeffs, const Point &x);

  // ----------------------------------------------------------- mass matrices

  // Scalar mass matrix of the first dim_p(degree) basis functions.
  Eigen::MatrixXd element_mass(const TriBasis &basis, int degree, const ElementGeometry &element);
  Eigen::MatrixXd edge_mass(const EdgeBasis &basis, const ElementFace &face);

  // ------------------------------------------------------------ projections

  enum class ElementTarget
  {
    vector_k,        // [P_k]^2
    scalar_k,        // P_k
    matrix_k_minus1, // [P_{k-1}]^{2x2}, components row-major
    vector_k_minus1, // [P_{k-1}]^2
    scalar_k_minus1  // P_{k-1}
  };

  int target_components(ElementTarget target);
  int target_degree(ElementTarget target, int k);

  // Generic L2 projection of an n-component field; returns component-major
  // coefficients in the scaled monomial basis of the element.
  // quadrature_degree < 0 selects 2k + 4.
  Eigen::VectorXd project_element(const std::function<Eigen::VectorXd(const Point &)> &f,
                                  ElementTarget target, int k, const ElementGeometry &element,
                                  int quadrature_degree = -1);

  Eigen::VectorXd project_vector(const VectorFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree);
  Eigen::VectorXd project_scalar(const ScalarFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree);
  Eigen::VectorXd project_matrix(const MatrixFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree);

  // L2 projection onto [P_k(e)]^2; component-major coefficients in EdgeBasis
  // along the face's global direction. quadrature_degree < 0 selects 2k + 4.
  Eigen::VectorXd project_edge(const VectorFunction &g, int k, const ElementFace &face,
                               int quadrature_degree = -1);
} // namespace wg
