#include <wg/study.hpp>

#include <cmath>
#include <numbers>

#include <wg/parallel.hpp>

namespace wg
{
  namespace
  {
    constexpr double pi = std::numbers::pi;

    int error_quadrature_degree(int k) { return 2 * k + 6; }
  } // namespace

  ManufacturedProblem example_problem(int id, double mu, double lambda)
  {
    if (!(mu > 0) || !(lambda > 0))
      throw std::invalid_argument("Lame constants mu and lambda must be positive");
    ManufacturedProblem p;
    p.mu     = mu;
    p.lambda = lambda;
    switch (id)
      {
        case 1:
          p.label = "convergence test";
          p.u = [](const Point &x) {
            return Vector2(std::sin(pi * x.x()) * std::cos(pi * x.y()),
                           std::cos(pi * x.x()) * std::sin(pi * x.y()));
          };
          p.gradient = [](const Point &x) {
            const double cc = pi * std::cos(pi * x.x()) * std::cos(pi * x.y());
            const double ss = pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
            Matrix2 g;
            g << cc, -ss, -ss, cc;
            return g;
          };
          p.divergence = [](const Point &x) {
            return 2 * pi * std::cos(pi * x.x()) * std::cos(pi * x.y());
          };
          p.laplacian = [u = p.u](const Point &x) -> Vector2 { return -2 * pi * pi * u(x); };
          p.grad_div  = [u = p.u](const Point &x) -> Vector2 { return -2 * pi * pi * u(x); };
          // Lap u = grad div u = -2 pi^2 u
          p.load = [u = p.u, mu, lambda](const Point &x) -> Vector2 {
            return 2 * pi * pi * (lambda + 2 * mu) * u(x);
          };
          break;

        case 2:
          {
            p.label = "locking-free test";
            const double c = 1.0 / (lambda + mu);
            p.u = [c](const Point &x) {
              const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
              return Vector2(-(1 - std::cos(2 * pi * x.x())) * std::sin(2 * pi * x.y()) + c * s,
                             (1 - std::cos(2 * pi * x.y())) * std::sin(2 * pi * x.x()) + c * s);
            };
            p.gradient = [c](const Point &x) {
              const double sx = std::sin(pi * x.x()), cx = std::cos(pi * x.x());
              const double sy = std::sin(pi * x.y()), cy = std::cos(pi * x.y());
              const double s2x = std::sin(2 * pi * x.x()), c2x = std::cos(2 * pi * x.x());
              const double s2y = std::sin(2 * pi * x.y()), c2y = std::cos(2 * pi * x.y());
              Matrix2 g;
              g << -2 * pi * s2x * s2y + c * pi * cx * sy, -2 * pi * (1 - c2x) * c2y + c * pi * sx * cy,
                2 * pi * (1 - c2y) * c2x + c * pi * cx * sy, 2 * pi * s2x * s2y + c * pi * sx * cy;
              return g;
            };
            p.divergence = [c](const Point &x) { return c * pi * std::sin(pi * (x.x() + x.y())); };
            p.laplacian  = [c](const Point &x) {
              const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
              return Vector2(
                4 * pi * pi * std::sin(2 * pi * x.y()) * (1 - 2 * std::cos(2 * pi * x.x())) -
                  2 * pi * pi * c * s,
                -4 * pi * pi * std::sin(2 * pi * x.x()) * (1 - 2 * std::cos(2 * pi * x.y())) -
                  2 * pi * pi * c * s);
            };
            p.grad_div = [c](const Point &x) {
              const double v = c * pi * pi * std::cos(pi * (x.x() + x.y()));
              return Vector2(v, v);
            };
            // body force, expanded
            p.load = [c, mu](const Point &x) {
              const double s2x = std::sin(2 * pi * x.x()), c2x = std::cos(2 * pi * x.x());
              const double s2y = std::sin(2 * pi * x.y()), c2y = std::cos(2 * pi * x.y());
              const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
              const double w = pi * pi * std::cos(pi * x.x()) * std::cos(pi * x.y()) - pi * pi * s;
              const Vector2 rot(-c2x * s2y - s2y * (c2x - 1), c2y * s2x + s2x * (c2y - 1));
              return Vector2(-4 * pi * pi * mu * rot + 2 * pi * pi * mu * c * Vector2(s, s) -
                             Vector2(w, w));
            };
            break;
          }

        case 3:
          p.label = "unbounded lambda div u";
          p.u = [](const Point &x) {
            const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
            return Vector2(s, s);
          };
          p.gradient = [](const Point &x) {
            const double a = pi * std::cos(pi * x.x()) * std::sin(pi * x.y());
            const double b = pi * std::sin(pi * x.x()) * std::cos(pi * x.y());
            Matrix2 g;
            g << a, b, a, b;
            return g;
          };
          p.divergence = [](const Point &x) { return pi * std::sin(pi * (x.x() + x.y())); };
          p.laplacian  = [](const Point &x) {
            const double v = -2 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
            return Vector2(v, v);
          };
          p.grad_div = [](const Point &x) {
            const double v = pi * pi * std::cos(pi * (x.x() + x.y()));
            return Vector2(v, v);
          };
          p.load = [mu, lambda](const Point &x) {
            const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
            const double w = pi * pi * std::cos(pi * x.x()) * std::cos(pi * x.y()) - pi * pi * s;
            return Vector2(Vector2(-mu * (-2 * pi * pi * s) - (lambda + mu) * w,
                                   -mu * (-2 * pi * pi * s) - (lambda + mu) * w));
          };
          break;

        default:
          throw std::invalid_argument("unknown example id " + std::to_string(id) +
                                      " (expected 1, 2 or 3)");
      }
    p.boundary = p.u;
    return p;
  }

  Polynomial &Polynomial::add(int a, int b, double coefficient)
  {
    if (a < 0 || b < 0)
      throw std::invalid_argument("monomial exponents must be non-negative");
    terms_[{a, b}] += coefficient;
    return *this;
  }

  double Polynomial::operator()(const Point &x) const
  {
    double sum = 0.0;
    for (const auto &[exp, c] : terms_)
      sum += c * std::pow(x.x(), exp.first) * std::pow(x.y(), exp.second);
    return sum;
  }

  Polynomial Polynomial::dx() const
  {
    Polynomial out;
    for (const auto &[exp, c] : terms_)
      if (exp.first > 0)
        out.add(exp.first - 1, exp.second, c * exp.first);
    return out;
  }

  Polynomial Polynomial::dy() const
  {
    Polynomial out;
    for (const auto &[exp, c] : terms_)
      if (exp.second > 0)
        out.add(exp.first, exp.second - 1, c * exp.second);
    return out;
  }

  int Polynomial::degree() const
  {
    int d = 0;
    for (const auto &[exp, c] : terms_)
      if (c != 0.0)
        d = std::max(d, exp.first + exp.second);
    return d;
  }

  Polynomial operator+(const Polynomial &p, const Polynomial &q)
  {
    Polynomial out = p;
    for (const auto &[exp, c] : q.terms_)
      out.add(exp.first, exp.second, c);
    return out;
  }

  Polynomial operator*(double s, const Polynomial &p)
  {
    Polynomial out;
    for (const auto &[exp, c] : p.terms_)
      out.add(exp.first, exp.second, s * c);
    return out;
  }

  ManufacturedProblem polynomial_problem(const Polynomial &ux, const Polynomial &uy, double mu,
                                         double lambda, std::string label)
  {
    if (!(mu > 0) || !(lambda > 0))
      throw std::invalid_argument("Lame constants mu and lambda must be positive");
    const Polynomial div = ux.dx() + uy.dy();
    const Polynomial lap_x = ux.dx().dx() + ux.dy().dy();
    const Polynomial lap_y = uy.dx().dx() + uy.dy().dy();
    const Polynomial gd_x = div.dx();
    const Polynomial gd_y = div.dy();
    const Polynomial fx = (-mu) * lap_x + (-(lambda + mu)) * gd_x;
    const Polynomial fy = (-mu) * lap_y + (-(lambda + mu)) * gd_y;

    ManufacturedProblem p;
    p.label    = std::move(label);
    p.mu       = mu;
    p.lambda   = lambda;
    p.u        = [=](const Point &x) { return Vector2(ux(x), uy(x)); };
    p.gradient = [gx = ux.dx(), gy = ux.dy(), hx = uy.dx(), hy = uy.dy()](const Point &x) {
      Matrix2 g;
      g << gx(x), gy(x), hx(x), hy(x);
      return g;
    };
    p.divergence = [=](const Point &x) { return div(x); };
    p.laplacian  = [=](const Point &x) { return Vector2(lap_x(x), lap_y(x)); };
    p.grad_div   = [=](const Point &x) { return Vector2(gd_x(x), gd_y(x)); };
    p.load       = [=](const Point &x) { return Vector2(fx(x), fy(x)); };
    p.boundary   = p.u;
    return p;
  }

  std::vector<ManufacturedProblem> patch_test_suite(int k, double mu, double lambda)
  {
    check_degree(k);
    std::vector<ManufacturedProblem> suite;
    const auto make = [&](Polynomial ux, Polynomial uy, std::string name) {
      suite.push_back(polynomial_problem(ux, uy, mu, lambda, std::move(name)));
    };
    make(Polynomial().add(0, 0, 1.0), Polynomial().add(0, 0, -2.0), "constant");
    make(Polynomial().add(1, 0, 1.0).add(0, 1, 2.0), Polynomial().add(1, 0, 3.0).add(0, 1, -1.0),
         "linear");
    make(Polynomial().add(0, 1, -1.0).add(0, 0, 0.5), Polynomial().add(1, 0, 1.0),
         "rotation");
    make(Polynomial().add(k, 0, 1.0).add(0, k, -0.5).add(1, 0, 0.25),
         Polynomial().add(k - 1, 1, 2.0).add(0, 0, 1.0), "top degree");
    Polynomial full_x, full_y;
    int i = 0;
    for (int d = 0; d <= k; ++d)
      for (int b = 0; b <= d; ++b, ++i)
        {
          full_x.add(d - b, b, 0.3 + 0.17 * i);
          full_y.add(d - b, b, (i % 2 ? -1.0 : 1.0) * (0.9 - 0.11 * i));
        }
    make(full_x, full_y, "all monomials");
    return suite;
  }

  WgField project_weak(const VectorFunction &u, const Mesh &mesh, const DofMap &dofs,
                       int quadrature_degree)
  {
    const int k = dofs.k();
    if (quadrature_degree < 0)
      quadrature_degree = error_quadrature_degree(k);
    WgField field{Eigen::VectorXd::Zero(dofs.n_total())};
    const int interior = dofs.layout().interior_size();
    const int edge     = dofs.layout().edge_size();
    parallel_for(mesh.n_triangles(), [&](std::size_t t) {
      field.coefficients.segment(dofs.interior_offset(t), interior) =
        project_vector(u, k, element_geometry(mesh, t), quadrature_degree);
    });
    parallel_for(mesh.n_edges(), [&](std::size_t e) {
      field.coefficients.segment(dofs.edge_offset(e), edge) =
        project_edge(u, k, edge_face(mesh, e), quadrature_degree);
    });
    return field;
  }

  namespace
  {
    // Per-element squared contributions (energy, l2) of a field.
    std::pair<double, double> norms_squared(const WgField &field, const Mesh &mesh, int k,
                                            const std::vector<ElementOperators> *operators)
    {
      std::vector<ElementOperators> owned;
      if (!operators)
        {
          owned     = build_all_operators(mesh, k);
          operators = &owned;
        }
      const DofMap dofs(mesh, k);
      if (field.coefficients.size() != dofs.n_total())
        throw std::invalid_argument("field size does not match the mesh and degree");
      const int n = dim_p(k);
      std::vector<double> energy(mesh.n_triangles()), l2(mesh.n_triangles());
      parallel_for(mesh.n_triangles(), [&](std::size_t t) {
        const auto &ops         = (*operators)[t];
        const Eigen::VectorXd v = field.local(dofs, t);
        const Eigen::VectorXd g = ops.gradient * v;
        energy[t] = g.dot(gradient_mass(ops) * g) + v.dot(ops.stabilizer * v);
        l2[t] = 0.0;
        for (int c = 0; c < 2; ++c)
          {
            const auto vc = v.segment(c * n, n);
            l2[t] += vc.dot(ops.mass_k * vc);
          }
      });
      double e2 = 0.0, m2 = 0.0;
      for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
        {
          e2 += energy[t];
          m2 += l2[t];
        }
      return {e2, m2};
    }
  } // namespace

  double triple_bar_norm(const WgField &field, const Mesh &mesh, int k,
                         const std::vector<ElementOperators> *operators)
  {
    return std::sqrt(std::max(0.0, norms_squared(field, mesh, k, operators).first));
  }

  ErrorPair errors_against(const VectorFunction &u_exact, const WgField &u_h, const Mesh &mesh,
                           int k, const std::vector<ElementOperators> *operators)
  {
    const DofMap dofs(mesh, k);
    WgField error = project_weak(u_exact, mesh, dofs);
    error.coefficients -= u_h.coefficients;
    const auto [e2, m2] = norms_squared(error, mesh, k, operators);
    return {std::sqrt(std::max(0.0, e2)), std::sqrt(std::max(0.0, m2))};
  }

  double error_equation_residual(const ManufacturedProblem &problem, const Mesh &mesh, int k,
                                 Variant variant)
  {
    const auto ops = build_all_operators(mesh, k);
    const ProblemData data{problem.mu, problem.lambda, variant, problem.load, problem.u};
    const AssembledProblem assembled = assemble(mesh, k, data, &ops);
    const WgField u_h = solve(assembled);
    const DofMap &dofs = assembled.dofs;
    const WgField q_h = project_weak(problem.u, mesh, dofs);

    Eigen::VectorXd error_free(dofs.n_free());
    for (int i = 0; i < dofs.n_free(); ++i)
      {
        const int g = dofs.global_index(i);
        error_free[i] = q_h.coefficients[g] - u_h.coefficients[g];
      }
    const Eigen::VectorXd lhs = assembled.system.matrix * error_free;

    const LocalLayout layout(k);
    const int qdeg = error_quadrature_degree(k);
    std::vector<Eigen::VectorXd> local_theta(mesh.n_triangles());
    parallel_for(mesh.n_triangles(), [&](std::size_t t) {
      const ElementGeometry element = element_geometry(mesh, t);
      const TriBasis basis(k, element);
      const RtSpace rt(k, element);
      const auto &op = ops[t];
      const double mu = problem.mu;
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.size());

      // G_u(v) = mu <v_0 - v_b, (grad u - Pi grad u) n>_dT
      const Eigen::VectorXd pi_grad = project_matrix(problem.gradient, k - 1, element, qdeg);
      for (int l = 0; l < 3; ++l)
        {
          const auto &face = element.faces[l];
          const auto er = edge_rule(qdeg, face.a, face.b);
          for (std::size_t q = 0; q < er.size(); ++q)
            {
              const Eigen::VectorXd pg = evaluate(basis, k - 1, 4, pi_grad, er.points[q]);
              Matrix2 projected;
              projected << pg[0], pg[1], pg[2], pg[3];
              const Vector2 flux =
                (problem.gradient(er.points[q]) - projected) * face.outward_normal;
              theta.noalias() += er.weights[q] * mu *
                                 jump_trace(layout, basis, l, er.points[q], er.params[q]).transpose() *
                                 flux;
            }
        }

      // K_u(v) = mu (Lap u, v_0 - R(v))_T
      const auto qr = triangle_rule(qdeg, element.vertices);
      const int n = dim_p(k);
      Eigen::VectorXd rt_moments = Eigen::VectorXd::Zero(rt.size());
      Eigen::VectorXd k_term = Eigen::VectorXd::Zero(layout.size());
      for (std::size_t q = 0; q < qr.size(); ++q)
        {
          const Vector2 lap = problem.laplacian(qr.points[q]);
          const Eigen::VectorXd phi = basis.values(qr.points[q]);
          for (int c = 0; c < 2; ++c)
            k_term.segment(layout.interior(c, 0), n) += qr.weights[q] * mu * lap[c] * phi;
          rt_moments.noalias() += qr.weights[q] * mu * rt.values(qr.points[q]).transpose() * lap;
        }
      k_term -= op.reconstruction.transpose() * rt_moments;
      theta -= k_term;

      // S_h(Q_h u, v)
      theta += op.stabilizer * q_h.local(dofs, t);
      local_theta[t] = std::move(theta);
    });

    Eigen::VectorXd theta_free = Eigen::VectorXd::Zero(dofs.n_free());
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
      {
        const auto global = dofs.local_dofs(t);
        for (std::size_t i = 0; i < global.size(); ++i)
          if (const int f = dofs.free_index(global[i]); f >= 0)
            theta_free[f] += local_theta[t][i];
      }

    double a_max = 0.0;
    for (int c = 0; c < assembled.system.matrix.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(assembled.system.matrix, c); it; ++it)
        a_max = std::max(a_max, std::abs(it.value()));
    return (lhs - theta_free).cwiseAbs().maxCoeff() / a_max;
  }

  void fill_orders(ConvergenceTable &table)
  {
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      {
        auto &row = table.rows[i];
        if (i == 0)
          {
            row.energy_order.reset();
            row.l2_order.reset();
            continue;
          }
        const auto &prev = table.rows[i - 1];
        row.energy_order = std::log2(prev.energy_error / row.energy_error);
        row.l2_order     = std::log2(prev.l2_error / row.l2_error);
      }
  }

  ConvergenceTable convergence_study(const StudyRequest &request)
  {
    check_degree(request.degree);
    if (request.first_level < 1 || request.last_level < request.first_level)
      throw std::invalid_argument("levels must be ascending and start at 1 or above");
    const ManufacturedProblem problem = example_problem(request.example, request.mu, request.lambda);

    ConvergenceTable table;
    table.example = request.example;
    table.label   = problem.label;
    table.degree  = request.degree;
    table.mu      = request.mu;
    table.lambda  = request.lambda;
    table.variant = request.variant;

    for (int level = request.first_level; level <= request.last_level; ++level)
      {
        try
          {
            const Mesh mesh = build_square_mesh(level);
            const auto ops  = build_all_operators(mesh, request.degree);
            const ProblemData data{request.mu, request.lambda, request.variant, problem.load,
                                   problem.boundary};
            const AssembledProblem assembled = assemble(mesh, request.degree, data, &ops);
            const WgField u_h   = solve(assembled, request.solver);
            const ErrorPair err = errors_against(problem.u, u_h, mesh, request.degree, &ops);
            table.rows.push_back(
              {level, mesh.h(), assembled.dofs.n_total(), err.energy, {}, err.l2, {}});
          }
        catch (const SolverError &e)
          {
            throw SolverError("level " + std::to_string(level) + ": " + e.what());
          }
      }
    fill_orders(table);
    return table;
  }
} // namespace wg
