#include <wg/report.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wg
{
  namespace
  {
    std::string printf_string(const char *pattern, double value)
    {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, pattern, value);
      return buffer;
    }

    std::string fixed(double value, int digits = 2)
    {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
      std::string s = buffer;
      return s == "-0.00" ? "0.00" : s;
    }

    std::string title(const ConvergenceTable &table)
    {
      std::ostringstream out;
      out << "Example " << table.example << ", P" << table.degree << "-P" << table.degree
          << ", mu = " << format_lambda(table.mu) << ", lambda = " << format_lambda(table.lambda)
          << ", " << to_string(table.variant);
      return out.str();
    }
  } // namespace

  std::string to_string(Format format)
  {
    switch (format)
      {
        case Format::csv:
          return "csv";
        case Format::markdown:
          return "md";
        case Format::svg:
          return "svg";
      }
    return "?";
  }

  Format parse_format(std::string_view name)
  {
    if (name == "csv")
      return Format::csv;
    if (name == "md" || name == "markdown")
      return Format::markdown;
    if (name == "svg")
      return Format::svg;
    throw std::invalid_argument("unknown output format '" + std::string(name) + "'");
  }

  std::string format_error(double value) { return printf_string("%.4e", value); }
  std::string format_order(double value) { return printf_string("%.4f", value); }
  std::string format_lambda(double value) { return printf_string("%g", value); }

  std::string emit_csv(const std::vector<ConvergenceTable> &tables)
  {
    std::string out(csv_header);
    out += '\n';
    for (const ConvergenceTable &table : tables)
      for (const ConvergenceRow &row : table.rows)
        {
          out += std::to_string(table.example) + ',' + std::to_string(table.degree) + ',' +
                 to_string(table.variant) + ',' + format_lambda(table.lambda) + ',' +
                 std::to_string(row.level) + ',' + printf_string("%.6e", row.h) + ',' +
                 std::to_string(row.ndof) + ',' + format_error(row.energy_error) + ',' +
                 (row.energy_order ? format_order(*row.energy_order) : "") + ',' +
                 format_error(row.l2_error) + ',' +
                 (row.l2_order ? format_order(*row.l2_order) : "") + '\n';
        }
    return out;
  }

  std::string emit_markdown(const std::vector<ConvergenceTable> &tables)
  {
    std::string out;
    for (const ConvergenceTable &table : tables)
      {
        if (!out.empty())
          out += '\n';
        out += "### " + title(table) + "\n\n";
        out += "| Level | \\|\\|\\|Q_h u − u_h\\|\\|\\| | order | \\|\\|Q_0 u − u_0\\|\\| | order |\n";
        out += "|---:|---:|---:|---:|---:|\n";
        for (const ConvergenceRow &row : table.rows)
          out += "| " + std::to_string(row.level) + " | " + format_error(row.energy_error) +
                 " | " + (row.energy_order ? format_order(*row.energy_order) : "--") + " | " +
                 format_error(row.l2_error) + " | " +
                 (row.l2_order ? format_order(*row.l2_order) : "--") + " |\n";
      }
    return out;
  }

  std::string emit_svg(const std::vector<ConvergenceTable> &tables)
  {
    constexpr double width = 640, height = 480;
    constexpr double left = 70, right = 200, top = 40, bottom = 60;
    constexpr double plot_w = width - left - right, plot_h = height - top - bottom;

    struct Series
    {
      std::string                             name;
      bool                                    dashed;
      std::vector<std::pair<double, double>> points;
    };
    std::vector<Series> series;
    for (const ConvergenceTable &table : tables)
      {
        Series energy{"energy, lambda=" + format_lambda(table.lambda) + ", " +
                        to_string(table.variant),
                      false,
                      {}};
        Series l2{"L2, lambda=" + format_lambda(table.lambda) + ", " + to_string(table.variant),
                  true,
                  {}};
        for (const ConvergenceRow &row : table.rows)
          {
            const double x = std::log2(1.0 / row.h);
            if (row.energy_error > 0)
              energy.points.emplace_back(x, std::log10(row.energy_error));
            if (row.l2_error > 0)
              l2.points.emplace_back(x, std::log10(row.l2_error));
          }
        series.push_back(std::move(energy));
        series.push_back(std::move(l2));
      }

    // slope guides through the last point of the first energy and L2 series
    const int k = tables.empty() ? 1 : tables.front().degree;
    std::vector<Series> guides;
    for (std::size_t s = 0; s < std::min<std::size_t>(2, series.size()); ++s)
      {
        const auto &pts = series[s].points;
        if (pts.size() < 2)
          continue;
        const double slope = s == 0 ? k : k + 1;
        const double x1 = pts.back().first, y1 = pts.back().second - 0.3;
        const double x0 = pts.front().first;
        guides.push_back({"slope " + std::to_string(static_cast<int>(slope)),
                          true,
                          {{x0, y1 + slope * (x1 - x0)}, {x1, y1}}});
      }

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto *group : {&series, &guides})
      for (const Series &s : *group)
        for (const auto &[x, y] : s.points)
          {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
          }
    if (!(xmin <= xmax))
      {
        xmin = 0;
        xmax = 1;
        ymin = -1;
        ymax = 0;
      }
    xmin = std::floor(xmin - 0.25);
    xmax = std::ceil(xmax + 0.25);
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax == ymin)
      ymax = ymin + 1;

    const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
    const auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * plot_h; };

    static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0)
        << "\" height=\"" << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(plot_w)
        << "\" height=\"" << fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!tables.empty())
      out << "<text x=\"" << fixed(left) << "\" y=\"24\" font-size=\"13\">Example "
          << tables.front().example << ", P" << k << "-P" << k << "</text>\n";

    for (double x = xmin; x <= xmax + 1e-9; x += 1)
      {
        out << "<line x1=\"" << fixed(px(x)) << "\" y1=\"" << fixed(top + plot_h) << "\" x2=\""
            << fixed(px(x)) << "\" y2=\"" << fixed(top + plot_h + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(top + plot_h + 18)
            << "\" text-anchor=\"middle\">" << fixed(x, 0) << "</text>\n";
      }
    for (double y = ymin; y <= ymax + 1e-9; y += 1)
      {
        out << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(py(y)) << "\" x2=\""
            << fixed(left + plot_w) << "\" y2=\"" << fixed(py(y))
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py(y) + 4)
            << "\" text-anchor=\"end\">" << fixed(y, 0) << "</text>\n";
      }
    out << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 15)
        << "\" text-anchor=\"middle\">log2(1/h)</text>\n";
    out << "<text x=\"18\" y=\"" << fixed(top + plot_h / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << fixed(top + plot_h / 2)
        << ")\">log10(error)</text>\n";

    const auto polyline = [&](const Series &s, const std::string &color, const char *dash) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (*dash)
        out << " stroke-dasharray=\"" << dash << "\"";
      out << " points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i)
        out << (i ? " " : "") << fixed(px(s.points[i].first)) << ','
            << fixed(py(s.points[i].second));
      out << "\"/>\n";
    };

    double legend_y = top + 10;
    const auto legend = [&](const std::string &name, const std::string &color, const char *dash) {
      out << "<line x1=\"" << fixed(width - right + 10) << "\" y1=\"" << fixed(legend_y)
          << "\" x2=\"" << fixed(width - right + 34) << "\" y2=\"" << fixed(legend_y)
          << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (*dash)
        out << " stroke-dasharray=\"" << dash << "\"";
      out << "/>\n<text x=\"" << fixed(width - right + 40) << "\" y=\"" << fixed(legend_y + 4)
          << "\">" << name << "</text>\n";
      legend_y += 16;
    };

    for (std::size_t s = 0; s < series.size(); ++s)
      {
        const std::string color = colors[(s / 2) % 8];
        const char       *dash  = series[s].dashed ? "5,3" : "";
        polyline(series[s], color, dash);
        for (const auto &[x, y] : series[s].points)
          out << "<circle cx=\"" << fixed(px(x)) << "\" cy=\"" << fixed(py(y))
              << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        legend(series[s].name, color, dash);
      }
    for (const Series &g : guides)
      {
        polyline(g, "#777777", "2,2");
        legend(g.name, "#777777", "2,2");
      }
    out << "</svg>\n";
    return out.str();
  }

  std::string emit_tables(const std::vector<ConvergenceTable> &tables, Format format)
  {
    switch (format)
      {
        case Format::csv:
          return emit_csv(tables);
        case Format::markdown:
          return emit_markdown(tables);
        case Format::svg:
          return emit_svg(tables);
      }
    throw std::invalid_argument("unknown output format");
  }

  std::string emit_table(const ConvergenceTable &table, Format format)
  {
    return emit_tables({table}, format);
  }
} // namespace wg
