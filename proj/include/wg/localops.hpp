#pragma once

#include <Eigen/Dense>

#include <wg/polyspace.hpp>

namespace wg
{
  // Local degrees of freedom of a weak function {v_0, v_b} on one triangle:
  // interior block [P_k(T)]^2 first, then one [P_k(e)]^2 block per face in
  // local face order. Every block is component-major (x coefficients, then y).
  struct LocalLayout
  {
    int k;

    explicit LocalLayout(int degree)
      : k(degree)
    {}

    int scalar_size() const { return dim_p(k); }
    int interior_size() const { return 2 * dim_p(k); }
    int edge_size() const { return 2 * (k + 1); }
    int size() const { return interior_size() + 3 * edge_size(); }

    int interior(int component, int basis) const { return component * dim_p(k) + basis; }
    int face_offset(int face) const { return interior_size() + face * edge_size(); }
    int edge(int face, int component, int basis) const
    {
      return face_offset(face) + component * (k + 1) + basis;
    }
  };

  // RT_k(T) = [P_k(T)]^2 + x P~_k(T) with x centered at the element centroid and
  // scaled like TriBasis. Basis order: (phi_a, 0), (0, phi_a), then
  // (xi, eta) * p~_j for the k+1 homogeneous degree-k monomials.
  class RtSpace
  {
  public:
    RtSpace(int degree, const ElementGeometry &element);

    int degree() const { return k_; }
    int size() const { return (k_ + 1) * (k_ + 3); }
    const TriBasis &basis() const { return basis_; }

    // 2 x size() matrix of basis values at x
    Eigen::Matrix<double, 2, Eigen::Dynamic> values(const Point &x) const;
    // divergence of each basis function at x
    Eigen::RowVectorXd divergences(const Point &x) const;
    Vector2 evaluate(const Eigen::Ref<const Eigen::VectorXd> &coeffs, const Point &x) const;

  private:
    int      k_;
    TriBasis basis_;
  };

  struct ElementOperators
  {
    int k;
    // [P_{k-1}]^{2x2} coefficients of the weak gradient, block (2i+j) holds entry (i,j)
    Eigen::MatrixXd gradient;
    // P_k coefficients of the weak divergence
    Eigen::MatrixXd divergence;
    // RT_k coefficients of the displacement reconstruction
    Eigen::MatrixXd reconstruction;
    // h_T^{-1} <v_0 - v_b, w_0 - w_b>_{dT}
    Eigen::MatrixXd stabilizer;
    // scalar mass matrices of P_k and P_{k-1}
    Eigen::MatrixXd mass_k;
    Eigen::MatrixXd mass_k_minus1;
  };

  Eigen::MatrixXd weak_gradient(const ElementGeometry &element, int k);
  Eigen::MatrixXd weak_divergence(const ElementGeometry &element, int k);
  Eigen::MatrixXd rt_reconstruction(const ElementGeometry &element, int k);
  Eigen::MatrixXd stabilizer(const ElementGeometry &element, int k);

  ElementOperators build_element_operators(const ElementGeometry &element, int k);

  // Matrix mapping RT_k coefficients to the P_k coefficients of their divergence.
  Eigen::MatrixXd rt_divergence_matrix(const ElementGeometry &element, int k);

  // True iff div(R v) = div_w v for every local dof vector, checked
  // coefficient-wise on P_k relative to the size of the divergence matrix.
  bool divergence_identity_check(const ElementGeometry &element, const ElementOperators &ops,
                                 double tolerance = 1e-10);

  // Gram matrices of the weak gradient / divergence target spaces.
  Eigen::MatrixXd gradient_mass(const ElementOperators &ops);

  // Values of v_0 - v_b on face l at a point, as a 2 x local-size matrix;
  // s is the edge parameter along the face's global direction.
  Eigen::Matrix<double, 2, Eigen::Dynamic> jump_trace(const LocalLayout &layout,
                                                      const TriBasis &basis, int face,
                                                      const Point &x, double s);
} // namespace wg
