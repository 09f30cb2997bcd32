#include <wg/assembly.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/SparseCholesky>

#include <wg/parallel.hpp>

namespace wg
{
  std::string to_string(Variant variant)
  {
    return variant == Variant::robust ? "robust" : "standard";
  }

  Variant parse_variant(std::string_view name)
  {
    if (name == "robust")
      return Variant::robust;
    if (name == "standard")
      return Variant::standard;
    throw std::invalid_argument("unknown variant '" + std::string(name) +
                                "' (expected robust or standard)");
  }

  DofMap::DofMap(const Mesh &mesh, int k)
    : layout_(k)
  {
    check_degree(k);
    triangle_edges_.reserve(mesh.n_triangles());
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
      triangle_edges_.push_back(mesh.triangle_edges(t));

    const long interior = static_cast<long>(mesh.n_triangles()) * layout_.interior_size();
    const long total    = interior + static_cast<long>(mesh.n_edges()) * layout_.edge_size();
    if (total > std::numeric_limits<int>::max())
      throw std::length_error("too many degrees of freedom for 32-bit indexing");
    n_interior_ = static_cast<int>(interior);
    n_total_    = static_cast<int>(total);

    global_to_free_.assign(n_total_, -1);
    for (int g = 0; g < n_interior_; ++g)
      global_to_free_[g] = g;
    for (std::size_t e = 0; e < mesh.n_edges(); ++e)
      if (!mesh.is_boundary_edge(e))
        for (int j = 0; j < layout_.edge_size(); ++j)
          global_to_free_[edge_offset(e) + j] = 0;
    for (int g = 0; g < n_total_; ++g)
      if (global_to_free_[g] >= 0)
        {
          global_to_free_[g] = static_cast<int>(free_to_global_.size());
          free_to_global_.push_back(g);
        }
  }

  std::vector<int> DofMap::local_dofs(std::size_t t) const
  {
    std::vector<int> dofs(layout_.size());
    const int base = interior_offset(t);
    for (int i = 0; i < layout_.interior_size(); ++i)
      dofs[i] = base + i;
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < layout_.edge_size(); ++j)
        dofs[layout_.face_offset(l) + j] = edge_offset(triangle_edges_[t][l]) + j;
    return dofs;
  }

  Eigen::VectorXd WgField::local(const DofMap &dofs, std::size_t t) const
  {
    const auto idx = dofs.local_dofs(t);
    Eigen::VectorXd out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      out[i] = coefficients[idx[i]];
    return out;
  }

  LocalStiffnessParts local_stiffness_parts(const ElementOperators &ops)
  {
    return {ops.gradient.transpose() * gradient_mass(ops) * ops.gradient,
            ops.divergence.transpose() * ops.mass_k * ops.divergence, ops.stabilizer};
  }

  Eigen::MatrixXd local_stiffness(const ElementOperators &ops, double mu, double lambda)
  {
    const auto parts = local_stiffness_parts(ops);
    return mu * parts.gradient + (lambda + mu) * parts.divergence + parts.stabilization;
  }

  Eigen::VectorXd local_load(const ElementGeometry &element, const ElementOperators &ops,
                             const VectorFunction &f, Variant variant, int quadrature_degree)
  {
    const int k = ops.k;
    if (quadrature_degree < 0)
      quadrature_degree = 2 * k + 6;
    const LocalLayout layout(k);
    const auto qr = triangle_rule(quadrature_degree, element.vertices);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());

    const auto sample = [&](const Point &x) {
      const Vector2 v = f(x);
      if (!v.allFinite())
        throw std::domain_error("body force is not finite at (" + std::to_string(x.x()) + ", " +
                                std::to_string(x.y()) + ")");
      return v;
    };

    if (variant == Variant::robust)
      {
        const RtSpace rt(k, element);
        Eigen::VectorXd moments = Eigen::VectorXd::Zero(rt.size());
        for (std::size_t q = 0; q < qr.size(); ++q)
          moments.noalias() +=
            qr.weights[q] * rt.values(qr.points[q]).transpose() * sample(qr.points[q]);
        out = ops.reconstruction.transpose() * moments;
      }
    else
      {
        const TriBasis basis(k, element);
        const int n = layout.scalar_size();
        for (std::size_t q = 0; q < qr.size(); ++q)
          {
            const Eigen::VectorXd phi = basis.values(qr.points[q]);
            const Vector2 fx = sample(qr.points[q]);
            for (int c = 0; c < 2; ++c)
              out.segment(layout.interior(c, 0), n) += qr.weights[q] * fx[c] * phi;
          }
      }
    return out;
  }

  std::vector<ElementOperators> build_all_operators(const Mesh &mesh, int k)
  {
    check_degree(k);
    std::vector<ElementOperators> ops(mesh.n_triangles());
    parallel_for(mesh.n_triangles(), [&](std::size_t t) {
      ops[t] = build_element_operators(element_geometry(mesh, t), k);
    });
    return ops;
  }

  namespace
  {
    // Free-dof sparse matrix with capacity reserved for element-wise accumulation.
    SparseMatrix reserved_matrix(const Mesh &mesh, const DofMap &dofs)
    {
      const int local = dofs.layout().size();
      Eigen::VectorXi capacity = Eigen::VectorXi::Zero(dofs.n_free());
      for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
        for (int g : dofs.local_dofs(t))
          if (int f = dofs.free_index(g); f >= 0)
            capacity[f] += local;
      SparseMatrix A(dofs.n_free(), dofs.n_free());
      A.reserve(capacity);
      return A;
    }

    void scatter(SparseMatrix &A, const std::vector<int> &free_idx, const Eigen::MatrixXd &local)
    {
      const int n = static_cast<int>(free_idx.size());
      for (int j = 0; j < n; ++j)
        if (free_idx[j] >= 0)
          for (int i = 0; i < n; ++i)
            if (free_idx[i] >= 0)
              A.coeffRef(free_idx[i], free_idx[j]) += local(i, j);
    }
  } // namespace

  AssembledProblem assemble(const Mesh &mesh, int k, const ProblemData &data,
                            const std::vector<ElementOperators> *operators,
                            const AssemblyOptions &options)
  {
    check_degree(k);
    if (!(data.mu > 0) || !(data.lambda > 0))
      throw std::invalid_argument("Lame constants mu and lambda must be positive");
    if (!data.load || !data.boundary)
      throw std::invalid_argument("body force and boundary data must be provided");
    validate(mesh);

    std::vector<ElementOperators> owned;
    if (!operators)
      {
        owned     = build_all_operators(mesh, k);
        operators = &owned;
      }
    if (operators->size() != mesh.n_triangles())
      throw std::invalid_argument("element operator count does not match the mesh");

    DofMap dofs(mesh, k);
    const int edge_size = dofs.layout().edge_size();

    Eigen::VectorXd boundary = Eigen::VectorXd::Zero(dofs.n_total());
    for (std::size_t e = 0; e < mesh.n_edges(); ++e)
      if (mesh.is_boundary_edge(e))
        {
          const Eigen::VectorXd values = project_edge(
            [&](const Point &x) {
              const Vector2 g = data.boundary(x);
              if (!g.allFinite())
                throw std::domain_error("boundary data is not finite at (" +
                                        std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                                        ")");
              return g;
            },
            k, edge_face(mesh, e), 2 * k + 6);
          boundary.segment(dofs.edge_offset(e), edge_size) = values;
        }

    const bool parts = options.keep_parts;
    SparseMatrix A = reserved_matrix(mesh, dofs);
    SparseMatrix Ag, Ad, As;
    if (parts)
      {
        Ag = reserved_matrix(mesh, dofs);
        Ad = reserved_matrix(mesh, dofs);
        As = reserved_matrix(mesh, dofs);
      }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dofs.n_free());

    // Local work runs in parallel chunks; insertion is serial in element order
    // so the result does not depend on the thread count.
    struct Staged
    {
      LocalStiffnessParts parts;
      Eigen::MatrixXd     stiffness;
      Eigen::VectorXd     load;
    };
    constexpr std::size_t chunk = 512;
    std::vector<Staged> staged(std::min(chunk, mesh.n_triangles()));
    for (std::size_t begin = 0; begin < mesh.n_triangles(); begin += chunk)
      {
        const std::size_t count = std::min(chunk, mesh.n_triangles() - begin);
        parallel_for(count, [&](std::size_t i) {
          const std::size_t t = begin + i;
          const auto &ops = (*operators)[t];
          auto &s         = staged[i];
          s.parts         = local_stiffness_parts(ops);
          s.stiffness     = data.mu * s.parts.gradient + (data.lambda + data.mu) * s.parts.divergence +
                        s.parts.stabilization;
          s.load = local_load(element_geometry(mesh, t), ops, data.load, data.variant);
        });
        for (std::size_t i = 0; i < count; ++i)
          {
            const std::size_t t = begin + i;
            const auto global   = dofs.local_dofs(t);
            std::vector<int> free_idx(global.size());
            for (std::size_t j = 0; j < global.size(); ++j)
              free_idx[j] = dofs.free_index(global[j]);
            const auto &s = staged[i];
            if (parts)
              {
                scatter(Ag, free_idx, s.parts.gradient);
                scatter(Ad, free_idx, s.parts.divergence);
                scatter(As, free_idx, s.parts.stabilization);
              }
            else
              scatter(A, free_idx, s.stiffness);
            for (std::size_t r = 0; r < global.size(); ++r)
              {
                if (free_idx[r] < 0)
                  continue;
                double value = s.load[r];
                for (std::size_t c = 0; c < global.size(); ++c)
                  if (free_idx[c] < 0)
                    value -= s.stiffness(r, c) * boundary[global[c]];
                rhs[free_idx[r]] += value;
              }
          }
      }

    AssembledProblem out{std::move(dofs), {}, std::move(boundary), {}, {}, {}};
    if (parts)
      {
        Ag.makeCompressed();
        Ad.makeCompressed();
        As.makeCompressed();
        A = data.mu * Ag + (data.lambda + data.mu) * Ad + As;
        out.gradient_part      = std::move(Ag);
        out.divergence_part    = std::move(Ad);
        out.stabilization_part = std::move(As);
      }
    A.makeCompressed();
    out.system.matrix     = std::move(A);
    out.system.rhs        = std::move(rhs);
    out.system.n_blocks   = static_cast<int>(mesh.n_triangles());
    out.system.block_size = out.dofs.layout().interior_size();
    return out;
  }

  namespace
  {
    using Factorization = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

    void factorize(Factorization &ldlt, const SparseMatrix &A)
    {
      ldlt.compute(A);
      if (ldlt.info() != Eigen::Success)
        throw SolverError("sparse LDL^T factorization broke down (" + std::to_string(A.rows()) +
                          " unknowns)");
      const Eigen::VectorXd d = ldlt.vectorD();
      const long non_positive = (d.array() <= 0.0).count();
      if (non_positive > 0)
        {
          std::ostringstream msg;
          msg << "matrix is not positive definite: " << non_positive << " of " << d.size()
              << " pivots are non-positive (smallest pivot " << d.minCoeff() << ", largest "
              << d.maxCoeff() << ")";
          throw SolverError(msg.str());
        }
    }

    // Element interiors eliminated block by block; the Schur complement on the
    // remaining (edge) unknowns is factorized with sparse LDL^T.
    class CondensedSolver
    {
    public:
      CondensedSolver(const SparseMatrix &A, int n_blocks, int block_size)
        : n_interior_(n_blocks * block_size)
        , block_size_(block_size)
        , n_outer_(static_cast<int>(A.rows()) - n_blocks * block_size)
      {
        const Eigen::SparseMatrix<double, Eigen::RowMajor> top = A.topRows(n_interior_);
        blocks_.resize(n_blocks);
        columns_.resize(n_blocks);
        coupling_.resize(n_blocks);

        std::vector<Eigen::Triplet<double>> triplets;
        const SparseMatrix outer = A.bottomRightCorner(n_outer_, n_outer_);
        for (int c = 0; c < outer.outerSize(); ++c)
          for (SparseMatrix::InnerIterator it(outer, c); it; ++it)
            triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                  it.value());

        for (int b = 0; b < n_blocks; ++b)
          {
            const int first = b * block_size;
            auto &cols      = columns_[b];
            for (int r = first; r < first + block_size; ++r)
              for (decltype(top)::InnerIterator it(top, r); it; ++it)
                if (it.col() >= n_interior_)
                  cols.push_back(static_cast<int>(it.col()) - n_interior_);
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

            Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(block_size, block_size);
            Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(block_size, cols.size());
            for (int r = first; r < first + block_size; ++r)
              for (decltype(top)::InnerIterator it(top, r); it; ++it)
                {
                  const int c = static_cast<int>(it.col());
                  if (c >= n_interior_)
                    {
                      const auto pos = std::lower_bound(cols.begin(), cols.end(), c - n_interior_);
                      coupling(r - first, pos - cols.begin()) = it.value();
                    }
                  else if (c >= first && c < first + block_size)
                    inner(r - first, c - first) = it.value();
                  else
                    throw SolverError("interior blocks are coupled; static condensation is not applicable");
                }
            blocks_[b].compute(inner);
            if (blocks_[b].info() != Eigen::Success)
              throw SolverError("interior block " + std::to_string(b) + " is not positive definite");
            const Eigen::MatrixXd schur = coupling.transpose() * blocks_[b].solve(coupling);
            for (std::size_t i = 0; i < cols.size(); ++i)
              for (std::size_t j = 0; j < cols.size(); ++j)
                triplets.emplace_back(cols[i], cols[j], -schur(i, j));
            coupling_[b] = std::move(coupling);
          }
        SparseMatrix reduced(n_outer_, n_outer_);
        reduced.setFromTriplets(triplets.begin(), triplets.end());
        factorize(schur_, reduced);
      }

      Eigen::VectorXd solve(const Eigen::VectorXd &b) const
      {
        Eigen::VectorXd reduced_rhs = b.tail(n_outer_);
        std::vector<Eigen::VectorXd> local(blocks_.size());
        for (std::size_t k = 0; k < blocks_.size(); ++k)
          {
            local[k] = blocks_[k].solve(b.segment(k * block_size_, block_size_));
            const Eigen::VectorXd contrib = coupling_[k].transpose() * local[k];
            for (std::size_t i = 0; i < columns_[k].size(); ++i)
              reduced_rhs[columns_[k][i]] -= contrib[i];
          }
        Eigen::VectorXd x(b.size());
        x.tail(n_outer_) = schur_.solve(reduced_rhs);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
          {
            Eigen::VectorXd outer(columns_[k].size());
            for (std::size_t i = 0; i < columns_[k].size(); ++i)
              outer[i] = x[n_interior_ + columns_[k][i]];
            x.segment(k * block_size_, block_size_) =
              blocks_[k].solve(b.segment(k * block_size_, block_size_) - coupling_[k] * outer);
          }
        return x;
      }

    private:
      int                                    n_interior_;
      int                                    block_size_;
      int                                    n_outer_;
      std::vector<Eigen::LLT<Eigen::MatrixXd>> blocks_;
      std::vector<std::vector<int>>          columns_;
      std::vector<Eigen::MatrixXd>           coupling_;
      Factorization                          schur_;
    };

    double infinity_norm(const SparseMatrix &A)
    {
      Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
      for (int c = 0; c < A.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(A, c); it; ++it)
          rows[it.row()] += std::abs(it.value());
      return rows.maxCoeff();
    }

    // Accepts x once either the relative residual |b - Ax| / |b| or the
    // normwise backward error |b - Ax| / (|A| |x| + |b|) meets the tolerance
    // (infinity norms for the latter).
    Eigen::VectorXd refine(const SparseMatrix &A, const Eigen::VectorXd &b,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &apply,
                           const SolverOptions &options, SolveReport *report)
    {
      const double bnorm = b.norm();
      if (bnorm == 0.0)
        {
          if (report)
            *report = {};
          return Eigen::VectorXd::Zero(b.size());
        }
      const double anorm = infinity_norm(A);
      const double binf  = b.lpNorm<Eigen::Infinity>();

      Eigen::VectorXd x = apply(b);
      Eigen::VectorXd r = b - A * x;
      const auto backward = [&] {
        return r.lpNorm<Eigen::Infinity>() / (anorm * x.lpNorm<Eigen::Infinity>() + binf);
      };
      double residual = r.norm() / bnorm;
      double berr     = backward();
      const auto done = [&] { return residual <= options.tolerance || berr <= options.tolerance; };
      int steps = 0;
      while (!done() && steps < options.max_refinement)
        {
          const Eigen::VectorXd previous = x;
          x += apply(r);
          r = b - A * x;
          const double next = r.norm() / bnorm;
          ++steps;
          if (!(next < residual))
            {
              x = previous;
              r = b - A * x;
              break;
            }
          residual = next;
          berr     = backward();
        }
      if (report)
        *report = {residual, berr, steps};
      if (!done())
        {
          std::ostringstream msg;
          msg << "relative residual " << residual << " and backward error " << berr
              << " exceed tolerance " << options.tolerance << " after " << steps
              << " refinement steps";
          throw SolverError(msg.str());
        }
      return x;
    }
  } // namespace

  Eigen::VectorXd solve(const SparseSystem &system, const SolverOptions &options,
                        SolveReport *report)
  {
    const SparseMatrix &A = system.matrix;
    if (A.rows() != A.cols() || A.rows() != system.rhs.size())
      throw std::invalid_argument("system matrix and right-hand side sizes do not match");
    if (A.rows() == 0)
      return Eigen::VectorXd();

    if (options.static_condensation && system.n_blocks > 0 && system.block_size > 0)
      {
        const CondensedSolver condensed(A, system.n_blocks, system.block_size);
        return refine(
          A, system.rhs, [&](const Eigen::VectorXd &b) { return condensed.solve(b); }, options,
          report);
      }
    Factorization ldlt;
    factorize(ldlt, A);
    return refine(
      A, system.rhs, [&](const Eigen::VectorXd &b) -> Eigen::VectorXd { return ldlt.solve(b); },
      options, report);
  }

  WgField solve(const AssembledProblem &problem, const SolverOptions &options, SolveReport *report)
  {
    const Eigen::VectorXd free = solve(problem.system, options, report);
    WgField field{problem.boundary_values};
    for (int i = 0; i < problem.dofs.n_free(); ++i)
      field.coefficients[problem.dofs.global_index(i)] = free[i];
    return field;
  }
} // namespace wg
