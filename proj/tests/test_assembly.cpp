#include <doctest.h>

#include <cmath>
#include <limits>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <random>

#include <wg/assembly.hpp>
#include <wg/parallel.hpp>
#include <wg/study.hpp>
#include <wg/verify.hpp>

using namespace wg;

namespace
{
  Eigen::VectorXd random_vector(int n, unsigned seed)
  {
    std::mt19937                           rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::VectorXd                        v(n);
    for (int i = 0; i < n; ++i)
      v[i] = u(rng);
    return v;
  }

  ProblemData zero_data(double lambda = 1.0)
  {
    ProblemData d;
    d.lambda   = lambda;
    d.load     = [](const Point &) { return Vector2(0, 0); };
    d.boundary = [](const Point &) { return Vector2(0, 0); };
    return d;
  }

  ProblemData example_data(int id, double lambda, Variant variant)
  {
    const ManufacturedProblem p = example_problem(id, 1.0, lambda);
    ProblemData               d;
    d.lambda   = lambda;
    d.variant  = variant;
    d.load     = p.load;
    d.boundary = p.boundary;
    return d;
  }

  double max_abs(const SparseMatrix &m)
  {
    double out = 0;
    for (int j = 0; j < m.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(m, j); it; ++it)
        out = std::max(out, std::abs(it.value()));
    return out;
  }
} // namespace

TEST_CASE("dof counts")
{
  for (int level = 1; level <= 3; ++level)
    for (int k = 1; k <= 4; ++k)
      {
        const Mesh   mesh = build_square_mesh(level);
        const DofMap dofs(mesh, k);
        const int    n = 1 << level;
        CHECK(dofs.n_total() == 2 * n * n * (k + 1) * (k + 2) + (3 * n * n + 2 * n) * 2 * (k + 1));
        CHECK(dofs.n_constrained() == 4 * n * 2 * (k + 1));
        CHECK(dofs.n_interior() == 2 * n * n * (k + 1) * (k + 2));
        for (int i = 0; i < dofs.n_interior(); ++i)
          REQUIRE(dofs.free_index(i) == i);
        for (int f = 0; f < dofs.n_free(); ++f)
          REQUIRE(dofs.free_index(dofs.global_index(f)) == f);
      }
}

TEST_CASE("neighbouring elements share face dofs")
{
  const Mesh   mesh = build_square_mesh(2);
  const DofMap dofs(mesh, 2);
  for (std::size_t e = 0; e < mesh.n_edges(); ++e)
    {
      if (mesh.is_boundary_edge(e))
        continue;
      std::vector<std::vector<int>> blocks;
      for (int t : mesh.edge_triangles(e))
        {
          const auto local = dofs.local_dofs(t);
          for (int l = 0; l < 3; ++l)
            if (mesh.triangle_edges(t)[l] == static_cast<int>(e))
              blocks.emplace_back(local.begin() + dofs.layout().face_offset(l),
                                  local.begin() + dofs.layout().face_offset(l) +
                                    dofs.layout().edge_size());
        }
      REQUIRE(blocks.size() == 2);
      CHECK(blocks[0] == blocks[1]);
      CHECK(blocks[0].front() == dofs.edge_offset(e));
    }
}

TEST_CASE("local stiffness")
{
  const Mesh mesh = build_square_mesh(1);
  for (int k = 1; k <= 3; ++k)
    {
      CAPTURE(k);
      const ElementGeometry  el  = element_geometry(mesh, 3);
      const ElementOperators ops = build_element_operators(el, k);
      const Eigen::MatrixXd  K   = local_stiffness(ops, 1.0, 10.0);
      CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12 * K.cwiseAbs().maxCoeff());

      const LocalLayout layout(k);
      for (int comp = 0; comp < 2; ++comp)
        {
          Eigen::VectorXd c = Eigen::VectorXd::Zero(layout.size());
          c[layout.interior(comp, 0)] = 1.0;
          for (int l = 0; l < 3; ++l)
            c[layout.edge(l, comp, 0)] = 1.0;
          CHECK((K * c).cwiseAbs().maxCoeff() < 1e-11);
        }

      const auto parts = local_stiffness_parts(ops);
      CHECK((K - (parts.gradient + 11.0 * parts.divergence + parts.stabilization))
              .cwiseAbs()
              .maxCoeff() < 1e-12 * K.cwiseAbs().maxCoeff());

      const verify::Element oe = verify::element(mesh, 3);
      const Eigen::VectorXd v = random_vector(layout.size(), 3u + k);
      const Eigen::VectorXd w = random_vector(layout.size(), 30u + k);
      const double          expected = verify::oracle_local_form(oe, k, 1.0, 10.0, v, w);
      CHECK(std::abs(v.dot(K * w) - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("local load vectors")
{
  const Mesh             mesh = build_square_mesh(2);
  const int              k    = 2;
  const std::size_t      t    = 5;
  const ElementGeometry  el   = element_geometry(mesh, t);
  const ElementOperators ops  = build_element_operators(el, k);
  const LocalLayout      layout(k);

  SUBCASE("zero force")
  {
    for (Variant v : {Variant::robust, Variant::standard})
      CHECK(local_load(el, ops, [](const Point &) { return Vector2(0, 0); }, v).isZero(0));
  }
  SUBCASE("against sampled integrals")
  {
    const ManufacturedProblem p  = example_problem(1, 1.0, 1.0);
    const verify::Element     oe = verify::element(mesh, t);
    const auto                samples = verify::triangle_samples(oe.x, 14);
    const Eigen::VectorXd     robust   = local_load(el, ops, p.load, Variant::robust, 20);
    const Eigen::VectorXd     standard = local_load(el, ops, p.load, Variant::standard, 20);
    for (int i = 0; i < layout.size(); ++i)
      {
        const Eigen::VectorXd      e  = Eigen::VectorXd::Unit(layout.size(), i);
        const auto                 or_ = verify::oracle_operators(oe, k, e);
        const verify::WeakFunction wf(oe, k, e);
        double                     r = 0, s = 0;
        for (const auto &q : samples)
          {
            r += q.weight * p.load(q.x).dot(or_.reconstruction(q.x));
            s += q.weight * p.load(q.x).dot(wf.interior(q.x));
          }
        CAPTURE(i);
        CHECK(std::abs(robust[i] - r) < 1e-11);
        CHECK(std::abs(standard[i] - s) < 1e-11);
      }
  }
  SUBCASE("constant force, standard variant only sees interior constants")
  {
    const Eigen::VectorXd b =
      local_load(el, ops, [](const Point &) { return Vector2(1, 0); }, Variant::standard);
    CHECK(b[layout.interior(0, 0)] == doctest::Approx(el.area).epsilon(1e-13));
    CHECK(std::abs(b[layout.interior(0, 1)]) < 1e-15);
    CHECK(b.tail(layout.size() - layout.interior_size()).isZero(0));
  }
  SUBCASE("non-finite force")
  {
    const VectorFunction bad = [](const Point &) {
      return Vector2(std::numeric_limits<double>::quiet_NaN(), 0);
    };
    CHECK_THROWS_AS(local_load(el, ops, bad, Variant::robust), std::domain_error);
    ProblemData d = zero_data();
    d.load        = bad;
    CHECK_THROWS(assemble(mesh, k, d));
  }
}

TEST_CASE("assembled system structure")
{
  for (int k = 1; k <= 2; ++k)
    for (const auto &c : verify::check_structure(2, k, 1e6, true))
      {
        INFO(c.name, " ", c.detail);
        CHECK(c.passed);
      }

  const Mesh mesh = build_square_mesh(2);
  AssemblyOptions opts;
  opts.keep_parts = true;
  for (double lambda : {1.0, 1e4})
    {
      const AssembledProblem p   = assemble(mesh, 2, example_data(1, lambda, Variant::robust), nullptr, opts);
      const SparseMatrix     sum = p.gradient_part + (lambda + 1.0) * p.divergence_part +
                               p.stabilization_part;
      CHECK(max_abs(SparseMatrix(p.system.matrix - sum)) <= 1e-13 * max_abs(p.system.matrix));
    }

  const AssembledProblem r = assemble(mesh, 2, example_data(3, 1e4, Variant::robust));
  const AssembledProblem s = assemble(mesh, 2, example_data(3, 1e4, Variant::standard));
  CHECK(max_abs(SparseMatrix(r.system.matrix - s.system.matrix)) == 0.0);
  CHECK((r.system.rhs - s.system.rhs).norm() > 0);
  CHECK(r.system.n_blocks == static_cast<int>(mesh.n_triangles()));
  CHECK(r.system.block_size == 2 * dim_p(2));

  CHECK_THROWS_AS(assemble(mesh, 1, zero_data(-1.0)), std::invalid_argument);
}

TEST_CASE("solver")
{
  const Mesh             mesh = build_square_mesh(3);
  const AssembledProblem p    = assemble(mesh, 2, example_data(1, 1e6, Variant::robust));

  SUBCASE("zero right-hand side")
  {
    SparseSystem sys = p.system;
    sys.rhs.setZero();
    CHECK(solve(sys).isZero(0));
  }
  SUBCASE("zero data gives the zero field")
  {
    const AssembledProblem z = assemble(mesh, 1, zero_data());
    CHECK(solve(z).coefficients.isZero(0));
  }
  SUBCASE("recovers a prescribed solution")
  {
    // the forward error is limited by conditioning, which grows like lambda
    for (auto [lambda, limit] : {std::pair{1.0, 1e-9}, std::pair{1e6, 1e-5}})
      {
        const AssembledProblem q = assemble(mesh, 2, example_data(1, lambda, Variant::robust));
        SparseSystem           sys = q.system;
        const Eigen::VectorXd  x   = random_vector(sys.matrix.rows(), 11u);
        sys.rhs                    = sys.matrix * x;
        SolveReport report;
        const Eigen::VectorXd y = solve(sys, {}, &report);
        CAPTURE(lambda);
        CHECK((y - x).cwiseAbs().maxCoeff() < limit);
        CHECK((report.relative_residual <= 1e-11 || report.backward_error <= 1e-11));
      }
  }
  SUBCASE("static condensation matches the direct solve")
  {
    SolverOptions condensed;
    condensed.static_condensation = true;
    const AssembledProblem q = assemble(mesh, 2, example_data(1, 1.0, Variant::robust));
    const Eigen::VectorXd a  = solve(q.system);
    const Eigen::VectorXd b  = solve(q.system, condensed);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));

    // at lambda = 1e6 the two solves differ by conditioning-sized amounts
    const ManufacturedProblem ex = example_problem(1, 1.0, 1e6);
    const ErrorPair ea = errors_against(ex.u, solve(p), mesh, 2);
    const ErrorPair eb = errors_against(ex.u, solve(p, condensed), mesh, 2);
    CHECK(std::abs(ea.energy - eb.energy) <= 1e-7 * ea.energy);
    CHECK(std::abs(ea.l2 - eb.l2) <= 1e-7 * ea.l2);
  }
  SUBCASE("size mismatch")
  {
    SparseSystem sys = p.system;
    sys.rhs.resize(3);
    CHECK_THROWS_AS(solve(sys), std::invalid_argument);
  }
}

TEST_CASE("linear fields are reproduced")
{
  Polynomial ux, uy;
  ux.add(1, 0, 1.0).add(0, 1, 2.0);
  uy.add(1, 0, 3.0).add(0, 1, -1.0);
  for (Variant variant : {Variant::robust, Variant::standard})
    for (auto [lambda, limit] : {std::pair{1.0, 1e-9}, std::pair{1e6, 1e-6}})
      {
        const ManufacturedProblem prob = polynomial_problem(ux, uy, 1.0, lambda);
        const Mesh                mesh = build_square_mesh(2);
        ProblemData               d;
        d.lambda                 = lambda;
        d.variant                = variant;
        d.load                   = prob.load;
        d.boundary               = prob.boundary;
        const WgField  uh        = solve(assemble(mesh, 1, d));
        const ErrorPair err      = errors_against(prob.u, uh, mesh, 1);
        CAPTURE(lambda);
        CHECK(err.energy < limit);
        CHECK(err.l2 < limit);
      }
  const verify::Check patch = verify::check_patch_tests(2, 1, 2);
  INFO(patch.detail);
  CHECK(patch.passed);
}

TEST_CASE("threaded loops")
{
  ::setenv("WG_NUM_THREADS", "4", 1);
  CHECK(thread_count() == 4);

  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const std::atomic<int> &h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(50,
                               [](std::size_t i) {
                                 if (i == 17)
                                   throw std::runtime_error("boom");
                               }),
                  std::runtime_error);

  // element loops write disjoint slots, so the thread count cannot change results
  const Mesh             mesh = build_square_mesh(3);
  const AssembledProblem a    = assemble(mesh, 2, example_data(2, 1e4, Variant::robust));
  ::setenv("WG_NUM_THREADS", "1", 1);
  CHECK(thread_count() == 1);
  const AssembledProblem b = assemble(mesh, 2, example_data(2, 1e4, Variant::robust));
  CHECK(max_abs(SparseMatrix(a.system.matrix - b.system.matrix)) == 0.0);
  CHECK((a.system.rhs - b.system.rhs).cwiseAbs().maxCoeff() == 0.0);
  ::unsetenv("WG_NUM_THREADS");
}
