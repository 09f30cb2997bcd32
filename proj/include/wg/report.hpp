#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <wg/study.hpp>

namespace wg
{
  enum class Format
  {
    csv,
    markdown,
    svg
  };

  std::string to_string(Format format);
  // accepts csv, md, markdown, svg; throws std::invalid_argument otherwise
  Format parse_format(std::string_view name);

  inline constexpr std::string_view csv_header =
    "example,degree,variant,lambda,level,h,ndof,energy_err,energy_order,l2_err,l2_order";

  // Errors as %.4e, orders as %.4f. All output is locale independent.
  std::string emit_csv(const std::vector<ConvergenceTable> &tables);
  std::string emit_markdown(const std::vector<ConvergenceTable> &tables);
  // log2(1/h) against log10(error) for both error columns of every table,
  // with guide lines of slope k and k + 1.
  std::string emit_svg(const std::vector<ConvergenceTable> &tables);

  std::string emit_table(const ConvergenceTable &table, Format format);
  std::string emit_tables(const std::vector<ConvergenceTable> &tables, Format format);

  std::string format_error(double value); // 4.7978e-01
  std::string format_order(double value); // 0.7939
  std::string format_lambda(double value); // 1, 100, 1e+06
} // namespace wg
