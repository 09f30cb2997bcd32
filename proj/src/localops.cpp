#include <wg/localops.hpp>

#include <stdexcept>
#include <string>

namespace wg
{
  namespace
  {
    int local_quadrature_degree(int k) { return 2 * k + 2; }

    Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd &block, int copies)
    {
      const int m = static_cast<int>(block.rows());
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(copies * m, copies * m);
      for (int c = 0; c < copies; ++c)
        out.block(c * m, c * m, m, m) = block;
      return out;
    }

    Eigen::MatrixXd solve_spd(const Eigen::MatrixXd &mass, const Eigen::MatrixXd &rhs)
    {
      const Eigen::LLT<Eigen::MatrixXd> llt(mass);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("singular element mass matrix");
      return llt.solve(rhs);
    }
  } // namespace

  RtSpace::RtSpace(int degree, const ElementGeometry &element)
    : k_(degree)
    , basis_(degree, element)
  {
    check_degree(degree);
  }

  Eigen::Matrix<double, 2, Eigen::Dynamic> RtSpace::values(const Point &x) const
  {
    const int n = dim_p(k_);
    const Eigen::VectorXd phi = basis_.values(x);
    const Point xi = basis_.local(x);
    Eigen::Matrix<double, 2, Eigen::Dynamic> out = Eigen::MatrixXd::Zero(2, size());
    out.row(0).head(n) = phi.transpose();
    out.row(1).segment(n, n) = phi.transpose();
    const int first_homogeneous = dim_p(k_ - 1);
    for (int j = 0; j <= k_; ++j)
      {
        const double p = phi[first_homogeneous + j];
        out(0, 2 * n + j) = xi.x() * p;
        out(1, 2 * n + j) = xi.y() * p;
      }
    return out;
  }

  Eigen::RowVectorXd RtSpace::divergences(const Point &x) const
  {
    const int n = dim_p(k_);
    const Eigen::VectorXd phi = basis_.values(x);
    const Eigen::MatrixX2d grad = basis_.gradients(x);
    Eigen::RowVectorXd out(size());
    out.head(n) = grad.col(0).transpose();
    out.segment(n, n) = grad.col(1).transpose();
    // div(xi p) = (2 + k) p / scale for p homogeneous of degree k (Euler)
    const int first_homogeneous = dim_p(k_ - 1);
    for (int j = 0; j <= k_; ++j)
      out[2 * n + j] = (2.0 + k_) * phi[first_homogeneous + j] / basis_.scale();
    return out;
  }

  Vector2 RtSpace::evaluate(const Eigen::Ref<const Eigen::VectorXd> &coeffs, const Point &x) const
  {
    return values(x) * coeffs;
  }

  Eigen::Matrix<double, 2, Eigen::Dynamic> jump_trace(const LocalLayout &layout,
                                                      const TriBasis &basis, int face,
                                                      const Point &x, double s)
  {
    const int n = layout.scalar_size();
    const Eigen::VectorXd phi = basis.values(x).head(n);
    const Eigen::VectorXd psi = EdgeBasis(layout.k).values(s);
    Eigen::Matrix<double, 2, Eigen::Dynamic> out = Eigen::MatrixXd::Zero(2, layout.size());
    for (int c = 0; c < 2; ++c)
      {
        out.row(c).segment(layout.interior(c, 0), n) = phi.transpose();
        out.row(c).segment(layout.edge(face, c, 0), layout.k + 1) = -psi.transpose();
      }
    return out;
  }

  Eigen::MatrixXd weak_gradient(const ElementGeometry &element, int k)
  {
    check_degree(k);
    const LocalLayout layout(k);
    const TriBasis basis(k, element);
    const int n = dim_p(k);
    const int m = dim_p(k - 1);
    const int qdeg = local_quadrature_degree(k);

    // rows: test tensor e_i e_j^T psi_p at index (2i + j) m + p
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(4 * m, layout.size());
    const auto qr = triangle_rule(qdeg, element.vertices);
    for (std::size_t q = 0; q < qr.size(); ++q)
      {
        const Eigen::VectorXd phi = basis.values(qr.points[q]);
        const Eigen::MatrixX2d grad = basis.gradients(qr.points[q]);
        const double w = qr.weights[q];
        // -(v_0, div tau): (div tau)_i = d_j psi_p
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            rhs.block((2 * i + j) * m, layout.interior(i, 0), m, n).noalias() -=
              w * grad.col(j).head(m) * phi.head(n).transpose();
      }
    for (int l = 0; l < 3; ++l)
      {
        const auto &face = element.faces[l];
        const auto er = edge_rule(qdeg, face.a, face.b);
        const EdgeBasis ebasis(k);
        for (std::size_t q = 0; q < er.size(); ++q)
          {
            const Eigen::VectorXd psi = basis.values(er.points[q]).head(m);
            const Eigen::VectorXd trace = ebasis.values(er.params[q]);
            // <v_b, tau n>: (tau n)_i = psi_p n_j
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                rhs.block((2 * i + j) * m, layout.edge(l, i, 0), m, k + 1).noalias() +=
                  er.weights[q] * face.outward_normal[j] * psi * trace.transpose();
          }
      }
    return solve_spd(block_diagonal(element_mass(basis, k - 1, element), 4), rhs);
  }

  Eigen::MatrixXd weak_divergence(const ElementGeometry &element, int k)
  {
    check_degree(k);
    const LocalLayout layout(k);
    const TriBasis basis(k, element);
    const int n = dim_p(k);
    const int qdeg = local_quadrature_degree(k);

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, layout.size());
    const auto qr = triangle_rule(qdeg, element.vertices);
    for (std::size_t q = 0; q < qr.size(); ++q)
      {
        const Eigen::VectorXd phi = basis.values(qr.points[q]);
        const Eigen::MatrixX2d grad = basis.gradients(qr.points[q]);
        for (int i = 0; i < 2; ++i)
          rhs.block(0, layout.interior(i, 0), n, n).noalias() -=
            qr.weights[q] * grad.col(i) * phi.transpose();
      }
    for (int l = 0; l < 3; ++l)
      {
        const auto &face = element.faces[l];
        const auto er = edge_rule(qdeg, face.a, face.b);
        const EdgeBasis ebasis(k);
        for (std::size_t q = 0; q < er.size(); ++q)
          {
            const Eigen::VectorXd phi = basis.values(er.points[q]);
            const Eigen::VectorXd trace = ebasis.values(er.params[q]);
            for (int i = 0; i < 2; ++i)
              rhs.block(0, layout.edge(l, i, 0), n, k + 1).noalias() +=
                er.weights[q] * face.outward_normal[i] * phi * trace.transpose();
          }
      }
    return solve_spd(element_mass(basis, k, element), rhs);
  }

  Eigen::MatrixXd rt_reconstruction(const ElementGeometry &element, int k)
  {
    check_degree(k);
    const LocalLayout layout(k);
    const RtSpace rt(k, element);
    const TriBasis &basis = rt.basis();
    const int n = dim_p(k);
    const int m = dim_p(k - 1);
    const int qdeg = local_quadrature_degree(k);
    const int dim = rt.size();

    // Functionals: interior moments against [P_{k-1}]^2 (rows c m + p), then
    // normal moments against P_k(e) on each face (rows 2m + l (k+1) + s).
    Eigen::MatrixXd functionals = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, layout.size());

    const auto qr = triangle_rule(qdeg, element.vertices);
    for (std::size_t q = 0; q < qr.size(); ++q)
      {
        const Eigen::VectorXd phi = basis.values(qr.points[q]);
        const auto psi = rt.values(qr.points[q]);
        const double w = qr.weights[q];
        for (int c = 0; c < 2; ++c)
          {
            functionals.block(c * m, 0, m, dim).noalias() += w * phi.head(m) * psi.row(c);
            rhs.block(c * m, layout.interior(c, 0), m, n).noalias() +=
              w * phi.head(m) * phi.head(n).transpose();
          }
      }
    for (int l = 0; l < 3; ++l)
      {
        const auto &face = element.faces[l];
        const auto er = edge_rule(qdeg, face.a, face.b);
        const EdgeBasis ebasis(k);
        const int row = 2 * m + l * (k + 1);
        for (std::size_t q = 0; q < er.size(); ++q)
          {
            const Eigen::VectorXd trace = ebasis.values(er.params[q]);
            const Eigen::RowVectorXd normal_values =
              face.outward_normal.transpose() * rt.values(er.points[q]);
            functionals.block(row, 0, k + 1, dim).noalias() +=
              er.weights[q] * trace * normal_values;
            for (int c = 0; c < 2; ++c)
              rhs.block(row, layout.edge(l, c, 0), k + 1, k + 1).noalias() +=
                er.weights[q] * face.outward_normal[c] * trace * trace.transpose();
          }
      }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(functionals);
    if (!(lu.rcond() > 1e-13))
      throw std::runtime_error("Raviart-Thomas moment system is singular on element with centroid (" +
                               std::to_string(element.centroid.x()) + ", " +
                               std::to_string(element.centroid.y()) + ")");
    return lu.solve(rhs);
  }

  Eigen::MatrixXd stabilizer(const ElementGeometry &element, int k)
  {
    check_degree(k);
    const LocalLayout layout(k);
    const TriBasis basis(k, element);
    const int qdeg = local_quadrature_degree(k);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(layout.size(), layout.size());
    for (int l = 0; l < 3; ++l)
      {
        const auto &face = element.faces[l];
        const auto er = edge_rule(qdeg, face.a, face.b);
        for (std::size_t q = 0; q < er.size(); ++q)
          {
            const auto jump = jump_trace(layout, basis, l, er.points[q], er.params[q]);
            S.noalias() += er.weights[q] * jump.transpose() * jump;
          }
      }
    return S / element.diameter;
  }

  ElementOperators build_element_operators(const ElementGeometry &element, int k)
  {
    const TriBasis basis(k, element);
    ElementOperators ops;
    ops.k = k;
    ops.gradient = weak_gradient(element, k);
    ops.divergence = weak_divergence(element, k);
    ops.reconstruction = rt_reconstruction(element, k);
    ops.stabilizer = stabilizer(element, k);
    ops.mass_k = element_mass(basis, k, element);
    ops.mass_k_minus1 = element_mass(basis, k - 1, element);
    return ops;
  }

  Eigen::MatrixXd gradient_mass(const ElementOperators &ops)
  {
    return block_diagonal(ops.mass_k_minus1, 4);
  }

  Eigen::MatrixXd rt_divergence_matrix(const ElementGeometry &element, int k)
  {
    const RtSpace rt(k, element);
    const TriBasis &basis = rt.basis();
    const auto qr = triangle_rule(local_quadrature_degree(k), element.vertices);
    Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(dim_p(k), rt.size());
    for (std::size_t q = 0; q < qr.size(); ++q)
      moments.noalias() +=
        qr.weights[q] * basis.values(qr.points[q]) * rt.divergences(qr.points[q]);
    return solve_spd(element_mass(basis, k, element), moments);
  }

  bool divergence_identity_check(const ElementGeometry &element, const ElementOperators &ops,
                                 double tolerance)
  {
    const Eigen::MatrixXd lhs = rt_divergence_matrix(element, ops.k) * ops.reconstruction;
    const double scale = std::max(ops.divergence.cwiseAbs().maxCoeff(), 1e-300);
    return (lhs - ops.divergence).cwiseAbs().maxCoeff() <= tolerance * scale;
  }
} // namespace wg
