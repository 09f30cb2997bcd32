#include <wg/polyspace.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wg
{
  void check_degree(int k)
  {
    if (k < min_degree || k > max_degree)
      throw std::invalid_argument("polynomial degree k must be in [" + std::to_string(min_degree) +
                                  ", " + std::to_string(max_degree) + "], got " +
                                  std::to_string(k));
  }

  namespace
  {
    // Returns (P_n(z), P_n'(z)) by the three-term recurrence.
    std::pair<double, double> legendre(int n, double z)
    {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j)
        {
          const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
      return {p1, n * (z * p1 - p0) / (z * z - 1.0)};
    }
  } // namespace

  std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n)
  {
    if (n < 1)
      throw std::invalid_argument("Gauss-Legendre rule needs at least one point");
    std::vector<double> x(n), w(n);
    if (n == 1)
      return {{0.0}, {2.0}};
    for (int i = 0; i < (n + 1) / 2; ++i)
      {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it)
          {
            const auto [p, dp] = legendre(n, z);
            const double dz    = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
              break;
          }
        const double dp = legendre(n, z).second;
        x[i]            = -z;
        x[n - 1 - i]    = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
      }
    if (n % 2 == 1)
      x[n / 2] = 0.0;
    return {x, w};
  }

  QuadratureRule reference_triangle_rule(int exactness_degree)
  {
    if (exactness_degree < 1 || exactness_degree > max_triangle_rule_degree)
      throw std::invalid_argument("triangle rule degree must be in [1, " +
                                  std::to_string(max_triangle_rule_degree) + "], got " +
                                  std::to_string(exactness_degree));
    QuadratureRule rule;
    rule.degree = exactness_degree;
    if (exactness_degree == 1)
      {
        rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
        rule.weights.push_back(0.5);
        return rule;
      }
    // Collapsed (Duffy) tensor rule: x = u, y = (1 - u) v, Jacobian (1 - u).
    const int n           = (exactness_degree + 3) / 2;
    const auto [gx, gw]   = gauss_legendre(n);
    rule.points.reserve(n * n);
    rule.weights.reserve(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        {
          const double u = 0.5 * (gx[i] + 1.0);
          const double v = 0.5 * (gx[j] + 1.0);
          rule.points.emplace_back(u, (1.0 - u) * v);
          rule.weights.push_back(0.25 * gw[i] * gw[j] * (1.0 - u));
        }
    return rule;
  }

  QuadratureRule triangle_rule(int exactness_degree, const std::array<Point, 3> &v)
  {
    QuadratureRule rule = reference_triangle_rule(exactness_degree);
    Eigen::Matrix2d J;
    J.col(0) = v[1] - v[0];
    J.col(1) = v[2] - v[0];
    const double det = std::abs(J.determinant());
    for (std::size_t q = 0; q < rule.size(); ++q)
      {
        rule.points[q]  = v[0] + J * rule.points[q];
        rule.weights[q] *= det;
      }
    return rule;
  }

  EdgeQuadrature edge_rule(int exactness_degree, const Point &a, const Point &b)
  {
    if (exactness_degree < 0)
      throw std::invalid_argument("edge rule degree must be non-negative");
    const int n         = std::max(1, (exactness_degree + 2) / 2);
    const auto [gx, gw] = gauss_legendre(n);
    const double half   = 0.5 * (b - a).norm();
    EdgeQuadrature rule;
    rule.degree = exactness_degree;
    for (int i = 0; i < n; ++i)
      {
        rule.params.push_back(gx[i]);
        rule.points.push_back(0.5 * (a + b) + 0.5 * gx[i] * (b - a));
        rule.weights.push_back(half * gw[i]);
      }
    return rule;
  }

  ElementGeometry element_geometry(const Mesh &mesh, std::size_t t)
  {
    ElementGeometry g;
    g.vertices = mesh.triangle_vertices(t);
    g.centroid = (g.vertices[0] + g.vertices[1] + g.vertices[2]) / 3.0;
    g.area     = mesh.triangle_area(t);
    g.diameter = mesh.diameter(t);
    for (int l = 0; l < 3; ++l)
      {
        const int e     = mesh.triangle_edges(t)[l];
        g.faces[l]      = edge_face(mesh, e);
        g.faces[l].sign = mesh.triangle_edge_signs(t)[l];
        g.faces[l].outward_normal *= g.faces[l].sign;
      }
    return g;
  }

  ElementGeometry element_geometry(const std::array<Point, 3> &v)
  {
    ElementGeometry g;
    g.vertices = v;
    g.centroid = (v[0] + v[1] + v[2]) / 3.0;
    g.area = 0.5 * ((v[1].x() - v[0].x()) * (v[2].y() - v[0].y()) -
                    (v[2].x() - v[0].x()) * (v[1].y() - v[0].y()));
    if (!(g.area > 0))
      throw MeshError("element must be counterclockwise with positive area");
    g.diameter = 0.0;
    for (int l = 0; l < 3; ++l)
      {
        const Point a = v[l], b = v[(l + 1) % 3];
        const Point d = b - a;
        g.faces[l]    = ElementFace{a, b, d.norm(), Point(d.y(), -d.x()) / d.norm(), 1, l};
        g.diameter    = std::max(g.diameter, d.norm());
      }
    return g;
  }

  ElementFace edge_face(const Mesh &mesh, std::size_t e)
  {
    const auto geo = edge_geometry(mesh, e);
    const auto &ed = mesh.edge(e);
    return ElementFace{mesh.vertex(ed[0]), mesh.vertex(ed[1]), geo.length, geo.normal, 1,
                       static_cast<int>(e)};
  }

  TriBasis::TriBasis(int degree, const Point &center, double scale)
    : degree_(degree)
    , center_(center)
    , scale_(scale)
  {
    if (degree < 0 || degree > 15)
      throw std::invalid_argument("basis degree must lie in 0..15");
    for (int d = 0; d <= degree; ++d)
      for (int b = 0; b <= d; ++b)
        exponents_.push_back({d - b, b});
  }

  namespace
  {
    // powers[i] = t^i for i = 0..n
    void fill_powers(double t, int n, double *powers)
    {
      powers[0] = 1.0;
      for (int i = 1; i <= n; ++i)
        powers[i] = powers[i - 1] * t;
    }
  } // namespace

  Eigen::VectorXd TriBasis::values(const Point &x) const
  {
    const Point s = local(x);
    double px[16], py[16];
    fill_powers(s.x(), degree_, px);
    fill_powers(s.y(), degree_, py);
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i)
      out[i] = px[exponents_[i][0]] * py[exponents_[i][1]];
    return out;
  }

  Eigen::MatrixX2d TriBasis::gradients(const Point &x) const
  {
    const Point s = local(x);
    double px[16], py[16];
    fill_powers(s.x(), degree_, px);
    fill_powers(s.y(), degree_, py);
    Eigen::MatrixX2d out(size(), 2);
    for (int i = 0; i < size(); ++i)
      {
        const auto [a, b] = exponents_[i];
        out(i, 0) = a > 0 ? a * px[a - 1] * py[b] / scale_ : 0.0;
        out(i, 1) = b > 0 ? b * px[a] * py[b - 1] / scale_ : 0.0;
      }
    return out;
  }

  EdgeBasis::EdgeBasis(int degree)
    : degree_(degree)
  {
    if (degree < 0)
      throw std::invalid_argument("edge basis degree must be non-negative");
  }

  Eigen::VectorXd EdgeBasis::values(double s) const
  {
    Eigen::VectorXd out(size());
    fill_powers(s, degree_, out.data());
    return out;
  }

  Eigen::VectorXd evaluate(const TriBasis &basis, int degree, int n_components,
                           const Eigen::Ref<const Eigen::VectorXd> &coeffs, const Point &x)
  {
    const int m = dim_p(degree);
    if (coeffs.size() != m * n_components)
      throw std::invalid_argument("coefficient vector has the wrong size");
    const Eigen::VectorXd phi = basis.values(x).head(m);
    Eigen::VectorXd out(n_components);
    for (int c = 0; c < n_components; ++c)
      out[c] = coeffs.segment(c * m, m).dot(phi);
    return out;
  }

  Eigen::MatrixXd element_mass(const TriBasis &basis, int degree, const ElementGeometry &element)
  {
    const int m    = dim_p(degree);
    const auto qr  = triangle_rule(std::max(1, 2 * degree), element.vertices);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t q = 0; q < qr.size(); ++q)
      {
        const Eigen::VectorXd phi = basis.values(qr.points[q]).head(m);
        M.noalias() += qr.weights[q] * phi * phi.transpose();
      }
    return M;
  }

  Eigen::MatrixXd edge_mass(const EdgeBasis &basis, const ElementFace &face)
  {
    const auto qr = edge_rule(2 * basis.degree(), face.a, face.b);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (std::size_t q = 0; q < qr.size(); ++q)
      {
        const Eigen::VectorXd phi = basis.values(qr.params[q]);
        M.noalias() += qr.weights[q] * phi * phi.transpose();
      }
    return M;
  }

  int target_components(ElementTarget target)
  {
    switch (target)
      {
        case ElementTarget::vector_k:
        case ElementTarget::vector_k_minus1:
          return 2;
        case ElementTarget::scalar_k:
        case ElementTarget::scalar_k_minus1:
          return 1;
        case ElementTarget::matrix_k_minus1:
          return 4;
      }
    throw std::invalid_argument("unknown projection target");
  }

  int target_degree(ElementTarget target, int k)
  {
    switch (target)
      {
        case ElementTarget::vector_k:
        case ElementTarget::scalar_k:
          return k;
        case ElementTarget::vector_k_minus1:
        case ElementTarget::scalar_k_minus1:
        case ElementTarget::matrix_k_minus1:
          return k - 1;
      }
    throw std::invalid_argument("unknown projection target");
  }

  namespace
  {
    Eigen::VectorXd project_components(const std::function<Eigen::VectorXd(const Point &)> &f,
                                       int n_components, int degree,
                                       const ElementGeometry &element, int quadrature_degree)
    {
      if (degree < 0)
        throw std::invalid_argument("projection target degree must be non-negative");
      const TriBasis basis(degree, element);
      const int m = dim_p(degree);
      const auto qr = triangle_rule(quadrature_degree, element.vertices);
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, n_components);
      for (std::size_t q = 0; q < qr.size(); ++q)
        {
          const Eigen::VectorXd fx = f(qr.points[q]);
          if (fx.size() != n_components)
            throw std::invalid_argument("projected function returned " +
                                        std::to_string(fx.size()) + " components, expected " +
                                        std::to_string(n_components));
          rhs.noalias() += qr.weights[q] * basis.values(qr.points[q]) * fx.transpose();
        }
      const Eigen::LLT<Eigen::MatrixXd> llt(element_mass(basis, degree, element));
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("singular element mass matrix (degenerate element)");
      const Eigen::MatrixXd c = llt.solve(rhs);
      return Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
    }
  } // namespace

  Eigen::VectorXd project_element(const std::function<Eigen::VectorXd(const Point &)> &f,
                                  ElementTarget target, int k, const ElementGeometry &element,
                                  int quadrature_degree)
  {
    if (quadrature_degree < 0)
      quadrature_degree = 2 * k + 4;
    return project_components(f, target_components(target), target_degree(target, k), element,
                              quadrature_degree);
  }

  Eigen::VectorXd project_vector(const VectorFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree)
  {
    return project_components([&](const Point &x) -> Eigen::VectorXd { return f(x); }, 2, degree,
                              element, quadrature_degree);
  }

  Eigen::VectorXd project_scalar(const ScalarFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree)
  {
    return project_components(
      [&](const Point &x) { return Eigen::VectorXd::Constant(1, f(x)); }, 1, degree, element,
      quadrature_degree);
  }

  Eigen::VectorXd project_matrix(const MatrixFunction &f, int degree,
                                 const ElementGeometry &element, int quadrature_degree)
  {
    return project_components(
      [&](const Point &x) {
        const Matrix2 m = f(x);
        Eigen::VectorXd v(4);
        v << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
        return v;
      },
      4, degree, element, quadrature_degree);
  }

  Eigen::VectorXd project_edge(const VectorFunction &g, int k, const ElementFace &face,
                               int quadrature_degree)
  {
    if (k < 0)
      throw std::invalid_argument("edge projection degree must be non-negative");
    if (quadrature_degree < 0)
      quadrature_degree = 2 * k + 4;
    const EdgeBasis basis(k);
    const auto qr = edge_rule(quadrature_degree, face.a, face.b);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + 1, 2);
    for (std::size_t q = 0; q < qr.size(); ++q)
      rhs.noalias() += qr.weights[q] * basis.values(qr.params[q]) * g(qr.points[q]).transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(edge_mass(basis, face));
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("singular edge mass matrix (degenerate edge)");
    const Eigen::MatrixXd c = llt.solve(rhs);
    return Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
  }
} // namespace wg
