#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include <wg/polyspace.hpp>
#include <wg/study.hpp>
#include <wg/verify.hpp>

using namespace wg;

namespace
{
  const std::array<Point, 3> reference = {Point(0, 0), Point(1, 0), Point(0, 1)};
  const std::array<Point, 3> skewed    = {Point(0.2, -0.1), Point(1.3, 0.4), Point(0.1, 0.9)};

  double integrate(const QuadratureRule &rule, const std::function<double(const Point &)> &f)
  {
    double s = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
      s += rule.weights[q] * f(rule.points[q]);
    return s;
  }

  double oracle_integral(const std::array<Point, 3> &v, const std::function<double(const Point &)> &f)
  {
    double s = 0;
    for (const auto &q : verify::triangle_samples(v, 16))
      s += q.weight * f(q.x);
    return s;
  }

  std::vector<Point> random_points(const std::array<Point, 3> &v, int n, unsigned seed)
  {
    std::mt19937                           rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point>                     out;
    while (static_cast<int>(out.size()) < n)
      {
        const double a = u(rng), b = u(rng);
        if (a + b < 1)
          out.push_back(v[0] + a * (v[1] - v[0]) + b * (v[2] - v[0]));
      }
    return out;
  }
} // namespace

TEST_CASE("triangle rules")
{
  SUBCASE("degree 1 is the centroid rule")
  {
    const QuadratureRule r = triangle_rule(1, skewed);
    REQUIRE(r.size() == 1);
    const Point c = (skewed[0] + skewed[1] + skewed[2]) / 3.0;
    CHECK((r.points[0] - c).norm() < 1e-15);
    CHECK(r.weights[0] == doctest::Approx(element_geometry(skewed).area));
  }
  SUBCASE("reference integrals")
  {
    const QuadratureRule r = reference_triangle_rule(3);
    CHECK(integrate(r, [](const Point &) { return 1.0; }) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(integrate(r, [](const Point &x) { return x.x() * x.x() * x.y(); }) ==
          doctest::Approx(1.0 / 60).epsilon(1e-14));
  }
  SUBCASE("exactness on an affine triangle for degrees 1..20")
  {
    for (int d = 1; d <= 20; ++d)
      {
        const QuadratureRule r = triangle_rule(d, skewed);
        CHECK(r.degree >= d);
        for (int a = 0; a <= d; ++a)
          {
            const int  b = d - a;
            const auto f = [a, b](const Point &x) {
              return std::pow(x.x() - 0.3, a) * std::pow(x.y() + 0.2, b);
            };
            const double exact = oracle_integral(skewed, f);
            CAPTURE(d);
            CAPTURE(a);
            CHECK(std::abs(integrate(r, f) - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
          }
      }
  }
  SUBCASE("unsupported degrees")
  {
    CHECK_THROWS_AS(reference_triangle_rule(0), std::invalid_argument);
    CHECK_THROWS_AS(reference_triangle_rule(21), std::invalid_argument);
  }
}

TEST_CASE("edge rules")
{
  const EdgeQuadrature one = edge_rule(1, Point(0, 0), Point(2, 0));
  REQUIRE(one.size() == 1);
  CHECK(one.points[0].x() == doctest::Approx(1.0));
  CHECK(one.weights[0] == doctest::Approx(2.0));

  const EdgeQuadrature two = edge_rule(3, Point(0, 0), Point(1, 0));
  CHECK(two.size() == 2);
  double cubic = 0;
  for (std::size_t q = 0; q < two.size(); ++q)
    cubic += two.weights[q] * std::pow(two.points[q].x(), 3);
  CHECK(cubic == doctest::Approx(0.25).epsilon(1e-15));

  const Point          a(0.3, 0.7), b(-1.1, 2.0);
  const EdgeQuadrature r = edge_rule(9, a, b);
  double               length = 0;
  for (double w : r.weights)
    length += w;
  CHECK(length == doctest::Approx((b - a).norm()).epsilon(1e-15));
}

TEST_CASE("Gauss-Legendre nodes agree with the Golub-Welsch construction")
{
  for (int n = 1; n <= 12; ++n)
    {
      const auto [x, w]   = gauss_legendre(n);
      const auto [gx, gw] = verify::golub_welsch(n);
      std::vector<double> sx(x), sgx(gx.data(), gx.data() + n);
      std::sort(sx.begin(), sx.end());
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(sx[i] - sgx[i]) < 1e-14);
      double total = 0;
      for (double wi : w)
        total += wi;
      CHECK(total == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("triangle basis")
{
  const ElementGeometry el = element_geometry(skewed);
  for (int k = 0; k <= 4; ++k)
    CHECK(TriBasis(k, el).size() == (k + 1) * (k + 2) / 2);
  CHECK_THROWS_AS(TriBasis(16, el), std::invalid_argument);
  CHECK_THROWS_AS(TriBasis(-1, el), std::invalid_argument);

  // gradients against central differences
  const TriBasis b(3, el);
  const Point    x(0.5, 0.4);
  const double   eps = 1e-6;
  const Eigen::MatrixX2d g = b.gradients(x);
  const Eigen::VectorXd  dx =
    (b.values(x + Point(eps, 0)) - b.values(x - Point(eps, 0))) / (2 * eps);
  const Eigen::VectorXd dy =
    (b.values(x + Point(0, eps)) - b.values(x - Point(0, eps))) / (2 * eps);
  CHECK((g.col(0) - dx).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((g.col(1) - dy).cwiseAbs().maxCoeff() < 1e-8);

  CHECK(EdgeBasis(2).size() == 3);
  CHECK_THROWS_AS(check_degree(0), std::invalid_argument);
  CHECK_THROWS_AS(check_degree(5), std::invalid_argument);
  CHECK_NOTHROW(check_degree(4));
}

TEST_CASE("mass matrices are SPD with level-independent conditioning")
{
  for (int k = 1; k <= 4; ++k)
    {
      double cond_first = 0;
      for (int level = 1; level <= 4; level += 3)
        {
          const Mesh mesh = build_square_mesh(level);
          double     worst = 0;
          for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
            {
              const ElementGeometry el = element_geometry(mesh, t);
              const Eigen::MatrixXd M  = element_mass(TriBasis(k, el), k, el);
              Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M / el.area);
              REQUIRE(eig.eigenvalues().minCoeff() > 0);
              worst = std::max(worst, eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff());
            }
          if (level == 1)
            cond_first = worst;
          else
            CHECK(worst == doctest::Approx(cond_first).epsilon(1e-8));
        }
    }
  const ElementFace f{Point(0, 0), Point(0.5, 0.5), std::sqrt(0.5), Point(0, 0), 1, 0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(edge_mass(EdgeBasis(4), f));
  CHECK(eig.eigenvalues().minCoeff() > 0);
}

TEST_CASE("element projections")
{
  const ElementGeometry el = element_geometry(skewed);
  const int             k  = 2;
  const TriBasis        basis(k, el);

  SUBCASE("identity on the target space")
  {
    const VectorFunction f = [](const Point &x) {
      return Vector2(1 + 2 * x.x() - x.y() * x.y(), x.x() * x.y() - 3);
    };
    const Eigen::VectorXd c = project_vector(f, k, el, 12);
    for (const Point &x : random_points(skewed, 20, 1))
      CHECK((evaluate(basis, k, 2, c, x) - f(x)).cwiseAbs().maxCoeff() < 1e-12);
    // idempotence
    const Eigen::VectorXd again =
      project_vector([&](const Point &x) { return Vector2(evaluate(basis, k, 2, c, x)); }, k, el, 12);
    CHECK((again - c).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero")
  {
    CHECK(project_vector([](const Point &) { return Vector2(0, 0); }, k, el, 12).isZero(0));
  }
  SUBCASE("orthogonality of the residual")
  {
    const ElementGeometry ref = element_geometry(reference);
    const VectorFunction  f   = [](const Point &x) {
      return Vector2(std::sin(std::numbers::pi * x.x()), 0);
    };
    const Eigen::VectorXd c = project_vector(f, 1, ref, 12);
    const TriBasis        b(1, ref);
    for (int i = 0; i < 3; ++i)
      for (int comp = 0; comp < 2; ++comp)
        {
          const double moment = oracle_integral(reference, [&](const Point &x) {
            return (f(x) - evaluate(b, 1, 2, c, x))[comp] * b.values(x)[i];
          });
          CHECK(std::abs(moment) < 1e-11);
        }
  }
  SUBCASE("every target shape")
  {
    const auto f = [](const Point &x) {
      Eigen::VectorXd v(4);
      v << x.x(), x.y(), 1.0, x.x() - x.y();
      return v;
    };
    for (ElementTarget target : {ElementTarget::vector_k, ElementTarget::scalar_k,
                                 ElementTarget::matrix_k_minus1, ElementTarget::vector_k_minus1,
                                 ElementTarget::scalar_k_minus1})
      {
        const int             n = target_components(target);
        const auto            g = [&](const Point &x) { return Eigen::VectorXd(f(x).head(n)); };
        const Eigen::VectorXd c = project_element(g, target, k, el);
        CHECK(c.size() == n * dim_p(target_degree(target, k)));
        // linear data is reproduced on every target of degree >= 1
        for (const Point &x : random_points(skewed, 5, 2))
          CHECK((evaluate(basis, target_degree(target, k), n, c, x) - g(x)).cwiseAbs().maxCoeff() <
                1e-12);
      }
  }
}

TEST_CASE("edge projections")
{
  const Mesh        mesh = build_square_mesh(1);
  const ElementFace face = edge_face(mesh, 0);
  const EdgeBasis   eb(2);
  const auto        s_of = [&](const Point &x) {
    return 2 * (x - face.a).dot(face.b - face.a) / (face.b - face.a).squaredNorm() - 1;
  };
  const auto value = [&](const Eigen::VectorXd &c, const Point &x) {
    const Eigen::VectorXd phi = eb.values(s_of(x));
    return Vector2(phi.dot(c.head(3)), phi.dot(c.tail(3)));
  };

  const VectorFunction poly = [](const Point &x) {
    return Vector2(x.x() * x.x() - x.y(), 2 + x.x() * x.y());
  };
  const Eigen::VectorXd c = project_edge(poly, 2, face);
  for (const auto &q : verify::segment_samples(face.a, face.b, 5))
    CHECK((value(c, q.x) - poly(q.x)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(project_edge([](const Point &) { return Vector2(0, 0); }, 2, face).isZero(0));

  const ManufacturedProblem p = example_problem(1, 1.0, 1.0);
  // a boundary edge of the level-1 mesh
  std::size_t boundary = 0;
  while (!mesh.is_boundary_edge(boundary))
    ++boundary;
  const ElementFace bf = edge_face(mesh, boundary);
  const Eigen::VectorXd cu = project_edge(p.u, 2, bf, 14);
  const auto s_b = [&](const Point &x) {
    return 2 * (x - bf.a).dot(bf.b - bf.a) / (bf.b - bf.a).squaredNorm() - 1;
  };
  for (int j = 0; j <= 2; ++j)
    for (int comp = 0; comp < 2; ++comp)
      {
        double moment = 0;
        for (const auto &q : verify::segment_samples(bf.a, bf.b, 12))
          {
            const Eigen::VectorXd phi = eb.values(s_b(q.x));
            const Vector2 uh(phi.dot(cu.head(3)), phi.dot(cu.tail(3)));
            moment += q.weight * (p.u(q.x) - uh)[comp] * phi[j];
          }
        CHECK(std::abs(moment) < 1e-11);
      }
}

TEST_CASE("projections commute with the weak gradient and divergence")
{
  for (int k = 1; k <= 2; ++k)
    for (const auto &c : verify::check_commutation(2, k, k + 3))
      {
        INFO(c.name);
        CHECK(c.value <= 1e-10);
      }
}
