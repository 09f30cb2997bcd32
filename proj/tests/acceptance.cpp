// Acceptance run: one PASS/FAIL line per criterion, details for every miss.
// Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <wg/study.hpp>
#include <wg/verify.hpp>

using namespace wg;

namespace
{
  struct Outcome
  {
    bool                     passed = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string &what)
    {
      if (!ok)
        {
          passed = false;
          notes.push_back(what);
        }
    }
  };

  std::string format(const char *pattern, double a, double b, double c)
  {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
  }

  double relative(double value, double reference)
  {
    return std::abs(value - reference) / std::abs(reference);
  }

  void compare_error(Outcome &out, const std::string &where, double ours, double reference,
                     double tolerance = 0.02)
  {
    const double rel = relative(ours, reference);
    out.require(rel <= tolerance,
                where + format(": %.4e vs %.4e (%+.2f%%)", ours, reference,
                               100 * (ours - reference) / reference));
  }

  void compare_order(Outcome &out, const std::string &where, const std::optional<double> &ours,
                     double reference)
  {
    const double v = ours.value_or(std::nan(""));
    out.require(std::abs(v - reference) <= 0.05,
                where + format(": %.4f vs %.4f (%+.4f)", v, reference, v - reference));
  }

  ConvergenceTable study(int example, int k, int first, int last, double lambda,
                         Variant variant = Variant::robust)
  {
    StudyRequest r;
    r.example     = example;
    r.degree      = k;
    r.first_level = first;
    r.last_level  = last;
    r.lambda      = lambda;
    r.variant     = variant;
    return convergence_study(r);
  }

  double solve_l2(int example, int k, int level, double lambda, Variant variant)
  {
    return study(example, k, level, level, lambda, variant).rows.front().l2_error;
  }

  void absorb(Outcome &out, const verify::Check &c)
  {
    out.require(c.passed, c.name + format(": %.3e (limit %.1e)", c.value, c.limit, 0) +
                            (c.detail.empty() ? "" : "  " + c.detail));
  }

  // -------------------------------------------------------------- criteria

  struct ReferenceRows
  {
    std::vector<double> energy;
    std::vector<double> energy_order; // from the second row on
    std::vector<double> l2;
    std::vector<double> l2_order;
  };

  void compare_table(Outcome &out, const std::string &name, const ConvergenceTable &table,
                     const ReferenceRows &ref, bool orders)
  {
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      {
        const auto       &row   = table.rows[i];
        const std::string where = name + " level " + std::to_string(row.level);
        compare_error(out, where + " energy", row.energy_error, ref.energy[i]);
        compare_error(out, where + " L2", row.l2_error, ref.l2[i]);
        if (orders && i > 0)
          {
            compare_order(out, where + " energy order", row.energy_order, ref.energy_order[i - 1]);
            compare_order(out, where + " L2 order", row.l2_order, ref.l2_order[i - 1]);
          }
      }
  }

  Outcome smooth_example()
  {
    Outcome out;
    const ReferenceRows k1{{4.7978e-01, 2.7672e-01, 1.4363e-01, 7.2500e-02, 3.6337e-02},
                           {0.7939, 0.9461, 0.9863, 0.9965},
                           {3.9675e-02, 1.1751e-02, 3.0846e-03, 7.8110e-04, 1.9592e-04},
                           {1.7554, 1.9297, 1.9815, 1.9953}};
    const ReferenceRows k2{{1.1821e-01, 3.3769e-02, 8.8861e-03, 2.2674e-03},
                           {1.8075, 1.9261, 1.9705},
                           {5.4616e-03, 7.6365e-04, 9.9637e-05, 1.2670e-05},
                           {2.8383, 2.9382, 2.9752}};
    compare_table(out, "k=1", study(1, 1, 2, 6, 1.0), k1, true);
    compare_table(out, "k=2", study(1, 2, 2, 5, 1.0), k2, true);
    return out;
  }

  Outcome locking_free_sweep()
  {
    Outcome                   out;
    const std::vector<double> lambdas = {1.0, 1e2, 1e4, 1e6};
    const std::vector<ReferenceRows> refs = {
      {{8.4869, 3.4276, 1.3982, 0.63134, 0.30518},
       {},
       {7.3595e-01, 1.6826e-01, 3.9187e-02, 9.5265e-03, 2.3620e-03},
       {}},
      {{8.5356, 3.4411, 1.3952, 0.62668, 0.30226},
       {},
       {7.2393e-01, 1.6342e-01, 3.7740e-02, 9.1410e-03, 2.2638e-03},
       {}},
      {{8.5375, 3.4418, 1.3954, 0.62671, 0.30227},
       {},
       {7.2370e-01, 1.6334e-01, 3.7716e-02, 9.1348e-03, 2.2622e-03},
       {}},
      {{8.5375, 3.4418, 1.3954, 0.62671, 0.30227},
       {},
       {7.2370e-01, 1.6334e-01, 3.7716e-02, 9.1348e-03, 2.2622e-03},
       {}}};
    std::vector<ConvergenceTable> tables;
    for (std::size_t j = 0; j < lambdas.size(); ++j)
      {
        tables.push_back(study(2, 1, 2, 6, lambdas[j]));
        compare_table(out, "lambda=" + format("%g", lambdas[j], 0, 0), tables.back(), refs[j],
                      false);
      }
    for (std::size_t i = 0; i < tables.front().rows.size(); ++i)
      for (bool energy : {true, false})
        {
          std::vector<double> v;
          for (const auto &t : tables)
            v.push_back(energy ? t.rows[i].energy_error : t.rows[i].l2_error);
          const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
          const double spread = (*hi - *lo) / *lo;
          out.require(spread <= 0.15, "level " + std::to_string(tables.front().rows[i].level) +
                                        (energy ? " energy" : " L2") +
                                        format(" spread across lambda %.3f", spread, 0, 0));
        }
    return out;
  }

  Outcome robust_versus_standard()
  {
    Outcome out;
    compare_error(out, "k=1 level 5 lambda=1e6 robust L2",
                  solve_l2(3, 1, 5, 1e6, Variant::robust), 3.8026e-04);
    const double s6 = solve_l2(3, 1, 5, 1e6, Variant::standard);
    const double s4 = solve_l2(3, 1, 5, 1e4, Variant::standard);
    compare_error(out, "k=1 level 5 lambda=1e6 standard L2", s6, 9.5298e+01);
    const double ratio = s6 / s4;
    out.require(ratio >= 90 && ratio <= 110,
                format("standard L2 ratio lambda 1e6 / 1e4 = %.2f", ratio, 0, 0));
    compare_error(out, "k=2 level 4 lambda=1e4 robust L2",
                  solve_l2(3, 2, 4, 1e4, Variant::robust), 1.8275e-04);
    compare_error(out, "k=2 level 4 lambda=1e4 standard L2",
                  solve_l2(3, 2, 4, 1e4, Variant::standard), 1.7782e-01);
    return out;
  }

  Outcome patch_tests()
  {
    Outcome out;
    for (int k = 1; k <= 3; ++k)
      absorb(out, verify::check_patch_tests(k, 1, 3));
    return out;
  }

  Outcome error_equation()
  {
    Outcome out;
    for (int k = 1; k <= 2; ++k)
      for (int level = 2; level <= 3; ++level)
        for (double lambda : {1.0, 1e4})
          absorb(out, verify::check_error_equation(k, level, lambda));
    return out;
  }

  Outcome operator_oracles()
  {
    Outcome out;
    for (int k = 1; k <= 3; ++k)
      {
        for (const auto &c : verify::check_operator_oracles(k, 100, 1000u + k))
          absorb(out, c);
        for (const auto &c : verify::check_rt_identities(3, k, 77u + k))
          absorb(out, c);
      }
    return out;
  }

  Outcome commutation()
  {
    Outcome out;
    for (int k = 1; k <= 2; ++k)
      for (const auto &c : verify::check_commutation(2, k, k + 3))
        absorb(out, c);
    return out;
  }

  Outcome structure()
  {
    Outcome out;
    for (int k = 1; k <= 2; ++k)
      {
        for (const auto &c : verify::check_structure(2, k, 1e6, true))
          absorb(out, c);
        for (int level = 1; level <= 6; ++level)
          for (const auto &c : verify::check_structure(level, k, 1e6, false))
            absorb(out, c);
      }
    return out;
  }
} // namespace

int main()
{
  struct Criterion
  {
    const char              *name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
    {"1 smooth example, k=1 levels 2-6 and k=2 levels 2-5", smooth_example},
    {"2 locking-free sweep, k=1 levels 2-6, four lambdas", locking_free_sweep},
    {"3 robust versus standard load", robust_versus_standard},
    {"4 polynomial patch tests, k=1..3 levels 1-3", patch_tests},
    {"5 error equation residual, k=1,2 levels 2-3", error_equation},
    {"6 operator oracles and reconstruction identities", operator_oracles},
    {"7 projection commutation", commutation},
    {"8 symmetry, definiteness, identical matrices", structure},
  };

  int failed = 0;
  for (const auto &c : criteria)
    {
      const auto start = std::chrono::steady_clock::now();
      Outcome    o;
      try
        {
          o = c.run();
        }
      catch (const std::exception &e)
        {
          o.passed = false;
          o.notes.push_back(std::string("exception: ") + e.what());
        }
      const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::printf("%s  criterion %s  (%.1f s)\n", o.passed ? "PASS" : "FAIL", c.name, seconds);
      for (const auto &n : o.notes)
        std::printf("      %s\n", n.c_str());
      std::fflush(stdout);
      if (!o.passed)
        ++failed;
    }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
