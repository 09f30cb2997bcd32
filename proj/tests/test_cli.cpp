#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace
{
  struct Result
  {
    int         exit_code;
    std::string out;
    std::string err;
  };

  std::string slurp(const fs::path &p)
  {
    std::ifstream      in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path scratch(const std::string &name)
  {
    const fs::path dir = fs::temp_directory_path() / ("wgstudy_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
  }

  Result run(const std::string &args, const fs::path &dir)
  {
    const std::string cmd = std::string("\"") + WGSTUDY_PATH + "\" " + args + " >\"" +
                            (dir / "stdout").string() + "\" 2>\"" + (dir / "stderr").string() +
                            "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout"),
            slurp(dir / "stderr")};
  }
} // namespace

TEST_CASE("a small study writes every format")
{
  const fs::path dir = scratch("study");
  const Result   r   = run("run --example 1 --degree 1 --levels 2..3 --lambda 1,1e4 --variant "
                           "robust,standard -o \"" + (dir / "out").string() + "\"",
                           dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("### Example 1") != std::string::npos);
  const std::string csv = slurp(dir / "out" / "example1_k1.csv");
  CHECK(csv.rfind("example,degree,variant,lambda,level", 0) == 0);
  // header plus 2 lambdas x 2 variants x 2 levels
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(csv.find("1,1,robust,1,2,3.535534e-01,") != std::string::npos);
  CHECK(csv.find("3.9675e-02") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "example1_k1.md"));
  CHECK(fs::exists(dir / "out" / "example1_k1.svg"));
}

TEST_CASE("invalid configurations are rejected with a JSON error line")
{
  const fs::path dir = scratch("invalid");
  for (const char *args : {"run --levels 0..3", "run --levels 3..2", "run --levels two",
                           "run --lambda -1", "run --lambda nan", "run --format pdf",
                           "run --degree 5", "run --example 4", "run --variant fancy",
                           "run --no-such-flag", ""})
    {
      CAPTURE(args);
      const Result r = run(std::string(args) + " -q -o \"" + (dir / "out").string() + "\"", dir);
      CHECK(r.exit_code == 2);
      CHECK(r.err.rfind("{\"error\":", 0) == 0);
      CHECK(r.err.find("\"exit\":2") != std::string::npos);
    }
}

TEST_CASE("config file")
{
  const fs::path dir = scratch("config");
  {
    std::ofstream ini(dir / "study.ini");
    ini << "example=2\ndegree=1\nlevels=2\nlambda=100\nformat=csv\nquiet=true\nout="
        << (dir / "out").string() << "\n";
  }
  const Result r = run("run --config \"" + (dir / "study.ini").string() + "\"", dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());
  const std::string csv = slurp(dir / "out" / "example2_k1.csv");
  CHECK(csv.find("\n2,1,robust,100,2,") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "example2_k1.md"));
}

TEST_CASE("self test and version")
{
  const fs::path dir = scratch("selftest");
  const Result   s   = run("run --selftest -q", dir);
  CHECK(s.exit_code == 0);
  CHECK(s.out.find("0 failed") != std::string::npos);
  const Result v = run("--version", dir);
  CHECK(v.exit_code == 0);
  CHECK(v.out.find("wgstudy") != std::string::npos);
}
