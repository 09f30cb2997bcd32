#include <wg/mesh.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace wg
{
  namespace
  {
    double signed_area(const Point &a, const Point &b, const Point &c)
    {
      return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    }

    void check_duplicate_vertices(const std::vector<Point> &vertices)
    {
      if (vertices.size() < 2)
        return;
      double scale = 0.0;
      for (const auto &p : vertices)
        scale = std::max({scale, std::abs(p.x()), std::abs(p.y())});
      const double tol = 1e-12 * std::max(scale, 1.0);

      std::vector<std::size_t> order(vertices.size());
      for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return vertices[a].x() < vertices[b].x();
      });
      for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
          {
            const Point &p = vertices[order[i]];
            const Point &q = vertices[order[j]];
            if (q.x() - p.x() > tol)
              break;
            if (std::abs(q.y() - p.y()) <= tol)
              throw MeshError("duplicate vertices " + std::to_string(order[i]) + " and " +
                              std::to_string(order[j]) + " at the same location");
          }
    }
  } // namespace

  Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices))
    , triangles_(std::move(triangles))
  {
    if (triangles_.empty())
      throw MeshError("mesh has no triangles");
    check_duplicate_vertices(vertices_);

    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      {
        auto &tri = triangles_[t];
        for (int v : tri)
          if (v < 0 || v >= nv)
            throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(v) + " out of range");
        const double area = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
        double scale = 0.0;
        for (int l = 0; l < 3; ++l)
          scale = std::max(scale, (vertices_[tri[(l + 1) % 3]] - vertices_[tri[l]]).squaredNorm());
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] ||
            std::abs(area) <= 1e-14 * scale)
          throw MeshError("degenerate triangle " + std::to_string(t) + " (zero area)");
        if (area < 0)
          std::swap(tri[1], tri[2]);
      }

    std::map<std::pair<int, int>, int> edge_ids;
    triangle_edges_.resize(triangles_.size());
    triangle_edge_signs_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      {
        const auto &tri = triangles_[t];
        for (int l = 0; l < 3; ++l)
          {
            const int a   = tri[l];
            const int b   = tri[(l + 1) % 3];
            const auto key = std::minmax(a, b);
            auto [it, inserted] =
              edge_ids.try_emplace({key.first, key.second}, static_cast<int>(edges_.size()));
            if (inserted)
              {
                edges_.push_back({key.first, key.second});
                edge_triangles_.push_back({static_cast<int>(t), -1});
              }
            else
              {
                auto &inc = edge_triangles_[it->second];
                if (inc[1] >= 0)
                  throw MeshError("non-manifold edge (" + std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + ") shared by 3 or more triangles");
                inc[1] = static_cast<int>(t);
              }
            triangle_edges_[t][l] = it->second;
            // A counterclockwise triangle traverses the edge a -> b; its outward
            // normal is that direction rotated clockwise.
            triangle_edge_signs_[t][l] = (a < b) ? 1 : -1;
          }
      }

    for (std::size_t e = 0; e < edges_.size(); ++e)
      {
        const auto &inc = edge_triangles_[e];
        if (inc[1] >= 0)
          {
            const auto sign_in = [&](int t) {
              for (int l = 0; l < 3; ++l)
                if (triangle_edges_[t][l] == static_cast<int>(e))
                  return triangle_edge_signs_[t][l];
              return 0;
            };
            if (sign_in(inc[0]) + sign_in(inc[1]) != 0)
              throw MeshError("inconsistent orientation across edge " + std::to_string(e) +
                              " (overlapping or folded triangles)");
          }
      }

    diameters_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      {
        double d = 0.0;
        for (int l = 0; l < 3; ++l)
          d = std::max(d, (vertices_[triangles_[t][(l + 1) % 3]] - vertices_[triangles_[t][l]]).norm());
        diameters_[t] = d;
        h_            = std::max(h_, d);
      }
  }

  std::size_t Mesh::n_boundary_edges() const
  {
    return static_cast<std::size_t>(std::count_if(edge_triangles_.begin(), edge_triangles_.end(),
                                                  [](const auto &inc) { return inc[1] < 0; }));
  }

  std::array<Point, 3> Mesh::triangle_vertices(std::size_t t) const
  {
    const auto &tri = triangles_[t];
    return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
  }

  double Mesh::triangle_area(std::size_t t) const
  {
    const auto v = triangle_vertices(t);
    return signed_area(v[0], v[1], v[2]);
  }

  Mesh build_square_mesh(int level)
  {
    if (level < 1 || level > max_square_mesh_level)
      throw MeshError("square mesh level must be in [1, " + std::to_string(max_square_mesh_level) +
                      "], got " + std::to_string(level));
    const int n = 1 << level;

    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        {
          triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
          triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return Mesh(std::move(vertices), std::move(triangles));
  }

  namespace
  {
    // Splits text into lines with comments ('#') stripped and blank lines dropped.
    std::vector<std::vector<std::string>> tokenize(std::string_view text)
    {
      std::vector<std::vector<std::string>> lines;
      std::istringstream in{std::string(text)};
      std::string line;
      while (std::getline(in, line))
        {
          if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
          std::istringstream ls(line);
          std::vector<std::string> tokens;
          std::string tok;
          while (ls >> tok)
            tokens.push_back(tok);
          if (!tokens.empty())
            lines.push_back(std::move(tokens));
        }
      return lines;
    }

    long parse_int(const std::string &s, const char *what)
    {
      long value = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw MeshError(std::string("cannot parse ") + what + " '" + s + "' as an integer");
      return value;
    }

    double parse_double(const std::string &s, const char *what)
    {
      try
        {
          std::size_t pos = 0;
          double v = std::stod(s, &pos);
          if (pos != s.size() || !std::isfinite(v))
            throw std::invalid_argument(s);
          return v;
        }
      catch (const std::exception &)
        {
          throw MeshError(std::string("cannot parse ") + what + " '" + s + "' as a number");
        }
    }
  } // namespace

  Mesh import_mesh(std::string_view node_text, std::string_view ele_text)
  {
    const auto nodes = tokenize(node_text);
    if (nodes.empty())
      throw MeshError("node text is empty");
    const long n_nodes = parse_int(nodes[0][0], "node count");
    if (nodes[0].size() > 1 && parse_int(nodes[0][1], "dimension") != 2)
      throw MeshError("node text must be two-dimensional");
    if (n_nodes <= 0 || static_cast<long>(nodes.size()) - 1 < n_nodes)
      throw MeshError("node text declares " + std::to_string(n_nodes) + " vertices but has " +
                      std::to_string(nodes.size() - 1) + " vertex lines");

    std::vector<long> ids(n_nodes);
    std::vector<Point> raw(n_nodes);
    for (long i = 0; i < n_nodes; ++i)
      {
        const auto &tok = nodes[i + 1];
        if (tok.size() < 3)
          throw MeshError("vertex line " + std::to_string(i + 1) + " needs 'index x y'");
        ids[i] = parse_int(tok[0], "vertex index");
        raw[i] = Point(parse_double(tok[1], "x coordinate"), parse_double(tok[2], "y coordinate"));
      }
    const long base = *std::min_element(ids.begin(), ids.end());
    if (base != 0 && base != 1)
      throw MeshError("vertex numbering must start at 0 or 1");
    std::vector<Point> vertices(n_nodes);
    std::vector<bool> seen(n_nodes, false);
    for (long i = 0; i < n_nodes; ++i)
      {
        const long idx = ids[i] - base;
        if (idx < 0 || idx >= n_nodes || seen[idx])
          throw MeshError("vertex index " + std::to_string(ids[i]) + " is repeated or out of range");
        seen[idx]     = true;
        vertices[idx] = raw[i];
      }

    const auto eles = tokenize(ele_text);
    if (eles.empty())
      throw MeshError("element text is empty");
    const long n_tri = parse_int(eles[0][0], "triangle count");
    if (eles[0].size() > 1 && parse_int(eles[0][1], "nodes per triangle") != 3)
      throw MeshError("only 3-node triangles are supported");
    if (n_tri <= 0 || static_cast<long>(eles.size()) - 1 < n_tri)
      throw MeshError("element text declares " + std::to_string(n_tri) + " triangles but has " +
                      std::to_string(eles.size() - 1) + " triangle lines");
    std::vector<std::array<int, 3>> triangles(n_tri);
    for (long t = 0; t < n_tri; ++t)
      {
        const auto &tok = eles[t + 1];
        if (tok.size() < 4)
          throw MeshError("triangle line " + std::to_string(t + 1) + " needs 'index v1 v2 v3'");
        for (int l = 0; l < 3; ++l)
          triangles[t][l] = static_cast<int>(parse_int(tok[l + 1], "triangle vertex") - base);
      }

    Mesh mesh(std::move(vertices), std::move(triangles));
    validate(mesh);
    return mesh;
  }

  std::string export_node(const Mesh &mesh)
  {
    std::ostringstream out;
    out.precision(17);
    out << mesh.n_vertices() << " 2 0 1\n";
    std::vector<int> on_boundary(mesh.n_vertices(), 0);
    for (std::size_t e = 0; e < mesh.n_edges(); ++e)
      if (mesh.is_boundary_edge(e))
        for (int v : mesh.edge(e))
          on_boundary[v] = 1;
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v)
      out << v + 1 << ' ' << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << ' '
          << on_boundary[v] << '\n';
    return out.str();
  }

  std::string export_ele(const Mesh &mesh)
  {
    std::ostringstream out;
    out << mesh.n_triangles() << " 3 0\n";
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
      {
        const auto &tri = mesh.triangle(t);
        out << t + 1 << ' ' << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
      }
    return out.str();
  }

  EdgeGeometry edge_geometry(const Mesh &mesh, std::size_t edge_index)
  {
    if (edge_index >= mesh.n_edges())
      throw std::out_of_range("edge index " + std::to_string(edge_index) + " out of range (" +
                              std::to_string(mesh.n_edges()) + " edges)");
    const auto &ed    = mesh.edge(edge_index);
    const Point a     = mesh.vertex(ed[0]);
    const Point b     = mesh.vertex(ed[1]);
    const Point d     = b - a;
    const double len  = d.norm();
    return {0.5 * (a + b), len, Point(d.y(), -d.x()) / len};
  }

  void validate(const Mesh &mesh)
  {
    for (std::size_t t = 0; t < mesh.n_triangles(); ++t)
      {
        if (!(mesh.triangle_area(t) > 0))
          throw MeshError("triangle " + std::to_string(t) + " is not counterclockwise");
        const auto &tri = mesh.triangle(t);
        for (int l = 0; l < 3; ++l)
          {
            const int e   = mesh.triangle_edges(t)[l];
            const auto &ed = mesh.edge(e);
            const int a = tri[l], b = tri[(l + 1) % 3];
            if (std::minmax(a, b) != std::minmax(ed[0], ed[1]) || ed[0] >= ed[1])
              throw MeshError("triangle " + std::to_string(t) + " has inconsistent edge " +
                              std::to_string(e));
            // outward normal of the counterclockwise traversal a -> b
            const Point d       = mesh.vertex(b) - mesh.vertex(a);
            const Point outward = Point(d.y(), -d.x()).normalized();
            const Point global  = edge_geometry(mesh, e).normal;
            if ((outward - mesh.triangle_edge_signs(t)[l] * global).norm() > 1e-12)
              throw MeshError("orientation sign mismatch on triangle " + std::to_string(t));
          }
      }
    for (std::size_t e = 0; e < mesh.n_edges(); ++e)
      {
        const auto g = edge_geometry(mesh, e);
        if (!(g.length > 0) || std::abs(g.normal.norm() - 1.0) > 1e-14)
          throw MeshError("edge " + std::to_string(e) + " has invalid geometry");
        const auto &inc = mesh.edge_triangles(e);
        if (inc[0] < 0)
          throw MeshError("edge " + std::to_string(e) + " has no incident triangle");
        if (inc[1] >= 0)
          {
            int sum = 0;
            for (int t : inc)
              for (int l = 0; l < 3; ++l)
                if (mesh.triangle_edges(t)[l] == static_cast<int>(e))
                  sum += mesh.triangle_edge_signs(t)[l];
            if (sum != 0)
              throw MeshError("interior edge " + std::to_string(e) +
                              " does not have opposite orientation signs");
          }
      }
  }
} // namespace wg
