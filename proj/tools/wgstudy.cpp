// wgstudy: convergence studies for the weak Galerkin elasticity solver.
//
//   wgstudy run --example 1 --degree 2 --levels 2..6 --lambda 1,1e4 --variant robust,standard
//   wgstudy run --config study.ini
//   wgstudy run --selftest
//
// Failures print one JSON line on stderr: {"error":{"kind":...,"message":...}}.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <wg/report.hpp>
#include <wg/study.hpp>
#include <wg/verify.hpp>

namespace
{
  enum ExitCode
  {
    ok              = 0,
    selftest_failed = 1,
    invalid_config  = 2,
    solve_failed    = 3,
    io_failed       = 4
  };

  int fail(ExitCode code, const std::string &kind, const std::string &message)
  {
    nlohmann::json line;
    line["error"] = {{"kind", kind}, {"message", message}, {"exit", static_cast<int>(code)}};
    std::cerr << line.dump() << '\n';
    return code;
  }

  struct StudyConfig
  {
    int                      example = 1;
    int                      degree  = 1;
    std::string              levels  = "2..6";
    double                   mu      = 1.0;
    std::vector<double>      lambdas = {1.0};
    std::vector<std::string> variants = {"robust"};
    std::string              out      = ".";
    std::vector<std::string> formats  = {"csv", "md", "svg"};
    bool                     condense = false;
    double                   tolerance = 1e-11;
    bool                     selftest  = false;
    bool                     quiet     = false;
  };

  std::pair<int, int> parse_levels(const std::string &text)
  {
    const auto dots = text.find("..");
    try
      {
        std::size_t used = 0;
        if (dots == std::string::npos)
          {
            const int level = std::stoi(text, &used);
            if (used != text.size())
              throw std::invalid_argument(text);
            return {level, level};
          }
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const int first = std::stoi(a, &used);
        if (used != a.size())
          throw std::invalid_argument(text);
        const int last = std::stoi(b, &used);
        if (used != b.size())
          throw std::invalid_argument(text);
        return {first, last};
      }
    catch (const std::logic_error &)
      {
        throw std::invalid_argument("levels must look like 2..6 or 4, got '" + text + "'");
      }
  }

  int run_selftest(bool quiet)
  {
    const auto start  = std::chrono::steady_clock::now();
    const auto checks = wg::verify::selftest();
    int        failed = 0;
    for (const auto &c : checks)
      {
        if (!c.passed)
          ++failed;
        if (!quiet || !c.passed)
          std::printf("%s  %-64s %.3e (limit %.1e)%s%s\n", c.passed ? "PASS" : "FAIL",
                      c.name.c_str(), c.value, c.limit, c.detail.empty() ? "" : "  ",
                      c.detail.c_str());
      }
    const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("selftest: %zu checks, %d failed, %.1f s\n", checks.size(), failed, seconds);
    return failed == 0 ? ok : selftest_failed;
  }

  int run_study(const StudyConfig &config)
  {
    std::pair<int, int>      levels;
    std::vector<wg::Variant> variants;
    std::vector<wg::Format>  formats;
    try
      {
        levels = parse_levels(config.levels);
        if (levels.first < 1 || levels.second > 8 || levels.first > levels.second)
          throw std::invalid_argument("levels must satisfy 1 <= first <= last <= 8");
        if (config.degree < 1 || config.degree > 4)
          throw std::invalid_argument("degree must lie in 1..4");
        if (config.example < 1 || config.example > 3)
          throw std::invalid_argument("example must be 1, 2 or 3");
        if (!(config.mu > 0))
          throw std::invalid_argument("mu must be positive");
        if (config.lambdas.empty())
          throw std::invalid_argument("at least one lambda is required");
        for (double lambda : config.lambdas)
          if (!(lambda > 0) || !std::isfinite(lambda))
            throw std::invalid_argument("lambda values must be positive and finite");
        if (!(config.tolerance > 0))
          throw std::invalid_argument("tolerance must be positive");
        for (const auto &v : config.variants)
          variants.push_back(wg::parse_variant(v));
        for (const auto &f : config.formats)
          formats.push_back(wg::parse_format(f));
      }
    catch (const std::invalid_argument &e)
      {
        return fail(invalid_config, "config", e.what());
      }

    std::vector<wg::ConvergenceTable> tables;
    for (double lambda : config.lambdas)
      for (wg::Variant variant : variants)
        {
          wg::StudyRequest request;
          request.example                    = config.example;
          request.degree                     = config.degree;
          request.first_level                = levels.first;
          request.last_level                 = levels.second;
          request.mu                         = config.mu;
          request.lambda                     = lambda;
          request.variant                    = variant;
          request.solver.static_condensation = config.condense;
          request.solver.tolerance           = config.tolerance;
          try
            {
              tables.push_back(wg::convergence_study(request));
            }
          catch (const wg::SolverError &e)
            {
              return fail(solve_failed, "solver", e.what());
            }
          catch (const std::exception &e)
            {
              return fail(solve_failed, "study", e.what());
            }
          if (!config.quiet)
            std::cout << wg::emit_markdown({tables.back()}) << '\n';
        }

    namespace fs = std::filesystem;
    const std::string stem = "example" + std::to_string(config.example) + "_k" +
                             std::to_string(config.degree);
    try
      {
        fs::create_directories(config.out);
        for (wg::Format format : formats)
          {
            const fs::path path = fs::path(config.out) / (stem + "." + wg::to_string(format));
            std::ofstream  file(path, std::ios::binary);
            file << wg::emit_tables(tables, format);
            if (!file)
              throw std::runtime_error("cannot write " + path.string());
            if (!config.quiet)
              std::cout << "wrote " << path.string() << '\n';
          }
      }
    catch (const std::exception &e)
      {
        return fail(io_failed, "io", e.what());
      }
    return ok;
  }
} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Weak Galerkin linear elasticity: convergence studies and self tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wgstudy 1.0");

  // Options live on the top-level app so that plain key=value config files
  // map onto them; the run subcommand passes them through.
  StudyConfig config;
  app.add_subcommand("run", "run a convergence study or the self test")
    ->fallthrough()
    ->footer("Study options are listed by wgstudy --help.");
  app.set_config("--config", "", "key=value file with any of the options below");
  app.add_option("--example", config.example, "manufactured example: 1, 2 or 3")
    ->capture_default_str();
  app.add_option("--degree,-k", config.degree, "polynomial degree k (1..4)")->capture_default_str();
  app.add_option("--levels", config.levels, "mesh levels, e.g. 2..6")->capture_default_str();
  app.add_option("--mu", config.mu, "Lame constant mu")->capture_default_str();
  app.add_option("--lambda", config.lambdas, "Lame constant lambda, comma separated list")
    ->delimiter(',')
    ->capture_default_str();
  app.add_option("--variant", config.variants, "robust and/or standard, comma separated")
    ->delimiter(',')
    ->capture_default_str();
  app.add_option("--out,-o", config.out, "output directory")->capture_default_str();
  app.add_option("--format", config.formats, "csv, md and/or svg, comma separated")
    ->delimiter(',')
    ->capture_default_str();
  app.add_flag("--condense", config.condense, "eliminate element interiors before factorizing");
  app.add_option("--tol", config.tolerance, "solver tolerance")->capture_default_str();
  app.add_flag("--selftest", config.selftest, "run the verification suites and exit");
  app.add_flag("--quiet,-q", config.quiet, "only report failures");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::CallForHelp &e)
    {
      return app.exit(e);
    }
  catch (const CLI::CallForAllHelp &e)
    {
      return app.exit(e);
    }
  catch (const CLI::CallForVersion &e)
    {
      return app.exit(e);
    }
  catch (const CLI::ParseError &e)
    {
      return fail(invalid_config, "arguments", e.what());
    }

  if (config.selftest)
    return run_selftest(config.quiet);
  return run_study(config);
}
