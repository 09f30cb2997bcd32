#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace wg
{
  using Point = Eigen::Vector2d;

  class MeshError : public std::runtime_error
  {
  public:
    using std::runtime_error::runtime_error;
  };

  struct EdgeGeometry
  {
    Point  midpoint;
    double length;
    Point  normal; // global normal: edge direction (low -> high index) rotated clockwise
  };

  // Conforming triangulation of a planar domain.
  //
  // Triangles are stored counterclockwise. Local edge l of a triangle joins
  // its local vertices l and (l+1)%3. Each global edge is stored with its
  // lower vertex index first; the sign attached to a (triangle, local edge)
  // pair is +1 when the triangle's outward normal equals the global edge
  // normal, -1 otherwise. The object is immutable after construction.
  class Mesh
  {
  public:
    // Builds all derived connectivity. Clockwise triangles are reoriented.
    // Throws MeshError on degenerate triangles, bad indices, duplicate
    // vertices or non-manifold edges.
    Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles);

    std::size_t n_vertices() const { return vertices_.size(); }
    std::size_t n_triangles() const { return triangles_.size(); }
    std::size_t n_edges() const { return edges_.size(); }
    std::size_t n_boundary_edges() const;

    const Point &vertex(std::size_t v) const { return vertices_[v]; }
    const std::vector<Point> &vertices() const { return vertices_; }
    const std::array<int, 3> &triangle(std::size_t t) const { return triangles_[t]; }
    const std::vector<std::array<int, 3>> &triangles() const { return triangles_; }
    const std::array<int, 2> &edge(std::size_t e) const { return edges_[e]; }

    const std::array<int, 3> &triangle_edges(std::size_t t) const { return triangle_edges_[t]; }
    const std::array<int, 3> &triangle_edge_signs(std::size_t t) const { return triangle_edge_signs_[t]; }
    // Incident triangles of an edge; second entry is -1 on the boundary.
    const std::array<int, 2> &edge_triangles(std::size_t e) const { return edge_triangles_[e]; }
    bool is_boundary_edge(std::size_t e) const { return edge_triangles_[e][1] < 0; }

    std::array<Point, 3> triangle_vertices(std::size_t t) const;
    double triangle_area(std::size_t t) const;
    double diameter(std::size_t t) const { return diameters_[t]; }
    // max over triangles of the diameter
    double h() const { return h_; }

  private:
    std::vector<Point>              vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> triangle_edges_;
    std::vector<std::array<int, 3>> triangle_edge_signs_;
    std::vector<std::array<int, 2>> edge_triangles_;
    std::vector<double>             diameters_;
    double                          h_ = 0.0;
  };

  // Largest supported refinement level of the structured square mesh.
  inline constexpr int max_square_mesh_level = 12;

  // Unit square split into 2^level x 2^level cells, each cut by its
  // bottom-left to top-right diagonal.
  Mesh build_square_mesh(int level);

  // Reads the planar node/element text format (Triangle's .node/.ele).
  // Both 0- and 1-based numbering are accepted.
  Mesh import_mesh(std::string_view node_text, std::string_view ele_text);

  // Writes the node/element text format with 1-based numbering.
  std::string export_node(const Mesh &mesh);
  std::string export_ele(const Mesh &mesh);

  EdgeGeometry edge_geometry(const Mesh &mesh, std::size_t edge_index);

  // Re-checks every structural invariant; throws MeshError on failure.
  void validate(const Mesh &mesh);
} // namespace wg
