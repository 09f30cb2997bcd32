#pragma once

#include <stdexcept>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <wg/localops.hpp>
#include <wg/mesh.hpp>

namespace wg
{
  using SparseMatrix = Eigen::SparseMatrix<double>;

  // robust: load (f, R(v)); standard: load (f, v_0)
  enum class Variant
  {
    robust,
    standard
  };

  std::string to_string(Variant variant);
  Variant     parse_variant(std::string_view name);

  class SolverError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  // Global numbering: interior blocks element by element, then edge blocks
  // edge by edge. Boundary edge blocks are constrained. Since interior dofs
  // come first and are never constrained, the free index of an interior dof
  // equals its global index.
  class DofMap
  {
  public:
    DofMap(const Mesh &mesh, int k);

    int k() const { return layout_.k; }
    const LocalLayout &layout() const { return layout_; }

    int n_total() const { return n_total_; }
    int n_free() const { return static_cast<int>(free_to_global_.size()); }
    int n_constrained() const { return n_total_ - n_free(); }
    int n_interior() const { return n_interior_; }

    int interior_offset(std::size_t t) const { return static_cast<int>(t) * layout_.interior_size(); }
    int edge_offset(std::size_t e) const
    {
      return n_interior_ + static_cast<int>(e) * layout_.edge_size();
    }

    // global index of each local dof of triangle t
    std::vector<int> local_dofs(std::size_t t) const;

    // -1 for constrained dofs
    int free_index(int global) const { return global_to_free_[global]; }
    int global_index(int free) const { return free_to_global_[free]; }
    bool is_constrained(int global) const { return global_to_free_[global] < 0; }

  private:
    LocalLayout      layout_;
    std::vector<std::array<int, 3>> triangle_edges_;
    int              n_interior_;
    int              n_total_;
    std::vector<int> global_to_free_;
    std::vector<int> free_to_global_;
  };

  // Coefficients of a function in V_h, indexed by DofMap global numbering.
  struct WgField
  {
    Eigen::VectorXd coefficients;

    Eigen::VectorXd local(const DofMap &dofs, std::size_t t) const;
  };

  struct SparseSystem
  {
    SparseMatrix    matrix; // free x free
    Eigen::VectorXd rhs;
    // Leading unknowns form n_blocks uncoupled diagonal blocks of block_size
    // (the element interiors); used by static condensation.
    int n_blocks   = 0;
    int block_size = 0;
  };

  struct LocalStiffnessParts
  {
    Eigen::MatrixXd gradient;      // (grad_w v, grad_w w)_T
    Eigen::MatrixXd divergence;    // (div_w v, div_w w)_T
    Eigen::MatrixXd stabilization; // S_T
  };

  LocalStiffnessParts local_stiffness_parts(const ElementOperators &ops);
  // mu * gradient + (lambda + mu) * divergence + stabilization
  Eigen::MatrixXd local_stiffness(const ElementOperators &ops, double mu, double lambda);

  // Default quadrature (quadrature_degree < 0) is exact to degree 2k + 6.
  Eigen::VectorXd local_load(const ElementGeometry &element, const ElementOperators &ops,
                             const VectorFunction &f, Variant variant,
                             int quadrature_degree = -1);

  std::vector<ElementOperators> build_all_operators(const Mesh &mesh, int k);

  struct AssembledProblem
  {
    DofMap          dofs;
    SparseSystem    system;
    Eigen::VectorXd boundary_values; // full size, nonzero only on constrained dofs
    // free x free parts, system.matrix = mu * gradient + (lambda + mu) * divergence + stabilization;
    // empty unless requested through AssemblyOptions::keep_parts
    SparseMatrix    gradient_part;
    SparseMatrix    divergence_part;
    SparseMatrix    stabilization_part;
  };

  struct ProblemData
  {
    double         mu     = 1.0;
    double         lambda = 1.0;
    Variant        variant = Variant::robust;
    VectorFunction load;     // body force f
    VectorFunction boundary; // Dirichlet data g
  };

  struct AssemblyOptions
  {
    // Also assemble the three parts separately; the system matrix is then
    // formed as their linear combination.
    bool keep_parts = false;
  };

  // Operators may be passed in to share them across solves on the same mesh.
  AssembledProblem assemble(const Mesh &mesh, int k, const ProblemData &data,
                            const std::vector<ElementOperators> *operators = nullptr,
                            const AssemblyOptions &options = {});

  struct SolverOptions
  {
    bool   static_condensation = false;
    // on the relative residual or, failing that, the normwise backward error
    double tolerance           = 1e-11;
    int    max_refinement      = 6;
  };

  struct SolveReport
  {
    double relative_residual = 0.0;
    double backward_error    = 0.0;
    int    refinement_steps  = 0;
  };

  // Sparse LDL^T solve with iterative refinement to the tolerance.
  Eigen::VectorXd solve(const SparseSystem &system, const SolverOptions &options = {},
                        SolveReport *report = nullptr);
  // Full solution including the Dirichlet values.
  WgField solve(const AssembledProblem &problem, const SolverOptions &options = {},
                SolveReport *report = nullptr);
} // namespace wg
