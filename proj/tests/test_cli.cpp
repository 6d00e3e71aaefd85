#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

namespace {

std::string bin_path() {
  const char* p = std::getenv("RINGTDVP_BIN");
  REQUIRE_MESSAGE(p != nullptr, "RINGTDVP_BIN must point at the CLI binary");
  return p;
}

std::string scratch_dir() {
  static std::string dir = [] {
    std::string d = "/tmp/ringtdvp_cli_" + std::to_string(::getpid());
    ::mkdir(d.c_str(), 0755);
    return d;
  }();
  return dir;
}

int run_cmd(const std::string& cmd, std::string* output = nullptr) {
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  if (output) *output = out;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write_config(const std::string& name, const std::string& body) {
  const std::string path = scratch_dir() + "/" + name;
  std::ofstream f(path);
  f << body;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kGroundConfig = R"(
[experiment]
type = "ground"

[model]
L = 8.0
c = 0.5
mu = 1.0
U0 = 0.4
Omega = 0.0
eps = 0.05

[ansatz]
D = 2
seed = 9

[solver]
grad_tol = 1e-6
max_iters = 3000
)";

}  // namespace

TEST_CASE("oracle-check subcommand passes on a healthy build") {
  std::string out;
  const int rc = run_cmd(bin_path() + " oracle-check --dim 2 --seed 3", &out);
  CHECK(rc == 0);
  CHECK(out.find("overall: pass") != std::string::npos);
}

TEST_CASE("ground experiment writes its artifacts and exits 0") {
  const std::string cfg = write_config("ground.toml", kGroundConfig);
  const std::string out_dir = scratch_dir() + "/ground_out";
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg + " --out " + out_dir, &out);
  INFO(out);
  CHECK(rc == 0);
  CHECK(slurp(out_dir + "/energy.json").find("\"energy_total\"") != std::string::npos);
  CHECK(slurp(out_dir + "/manifest.json").find("\"schema_version\"") != std::string::npos);
  struct stat st;
  CHECK(::stat((out_dir + "/state.ckpt").c_str(), &st) == 0);
  CHECK(::stat((out_dir + "/trace.csv").c_str(), &st) == 0);
}

TEST_CASE("repeated runs are deterministic in their numeric artifacts") {
  const std::string cfg = write_config("ground_det.toml", kGroundConfig);
  const std::string d1 = scratch_dir() + "/det1";
  const std::string d2 = scratch_dir() + "/det2";
  CHECK(run_cmd(bin_path() + " run " + cfg + " --out " + d1) == 0);
  CHECK(run_cmd(bin_path() + " run " + cfg + " --out " + d2) == 0);
  CHECK(slurp(d1 + "/trace.csv") == slurp(d2 + "/trace.csv"));
  CHECK(slurp(d1 + "/energy.json") == slurp(d2 + "/energy.json"));
}

TEST_CASE("conflicting barrier specifications are a config error naming the key") {
  const std::string cfg = write_config("conflict.toml", R"(
[experiment]
type = "ground"

[model]
L = 8.0
c = 0.5
mu = 1.0
U0 = 0.4
Lambda = 1.5
n_target = 2.0
eps = 0.05

[ansatz]
D = 1
)");
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg, &out);
  CHECK(rc == 2);
  CHECK(out.find("config error") != std::string::npos);
  CHECK(out.find("Lambda") != std::string::npos);
}

TEST_CASE("gamma requires rho, reported as a config error") {
  const std::string cfg = write_config("gamma.toml", R"(
[experiment]
type = "ground"

[model]
L = 8.0
gamma = 0.5
mu = 1.0
U0 = 0.4
eps = 0.05

[ansatz]
D = 1
)");
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg, &out);
  CHECK(rc == 2);
  CHECK(out.find("config error") != std::string::npos);
}

TEST_CASE("missing config file exits with the config error code") {
  std::string out;
  const int rc = run_cmd(bin_path() + " run /tmp/no_such_config_xyz.toml", &out);
  CHECK(rc == 2);
}

TEST_CASE("sweep-omega experiment emits a csv with one row per grid point") {
  const std::string cfg = write_config("sweep.toml", R"(
[experiment]
type = "sweep-omega"

[model]
L = 8.0
c = 0.5
mu = 1.0
U0 = 0.0
eps = 0.5

[ansatz]
D = 1
seed = 4

[solver]
grad_tol = 1e-6
max_iters = 2000

[sweep]
omega_values = [-0.1, -0.05, 0.0, 0.05, 0.1]
)");
  const std::string out_dir = scratch_dir() + "/sweep_out";
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg + " --out " + out_dir, &out);
  INFO(out);
  CHECK(rc == 0);
  std::istringstream csv(slurp(out_dir + "/sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "omega,energy,current");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  CHECK(slurp(out_dir + "/summary.json").find("\"alpha\"") != std::string::npos);
}

TEST_CASE("density experiment writes the profile csv") {
  const std::string cfg = write_config("density.toml", R"(
[experiment]
type = "density"

[model]
L = 8.0
c = 0.5
mu = 1.0
U0 = 0.4
eps = 0.05

[ansatz]
D = 2
seed = 9

[solver]
grad_tol = 1e-6
max_iters = 3000

[sweep]
density_points = 64
)");
  const std::string out_dir = scratch_dir() + "/density_out";
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg + " --out " + out_dir, &out);
  INFO(out);
  CHECK(rc == 0);
  std::istringstream csv(slurp(out_dir + "/density.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,rho");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 64);
}

TEST_CASE("warm start resumes from a checkpoint") {
  const std::string cfg = write_config("warm.toml", kGroundConfig);
  const std::string d1 = scratch_dir() + "/warm1";
  CHECK(run_cmd(bin_path() + " run " + cfg + " --out " + d1) == 0);
  const std::string d2 = scratch_dir() + "/warm2";
  std::string out;
  const int rc = run_cmd(bin_path() + " run " + cfg + " --out " + d2 + " --resume " +
                             d1 + "/state.ckpt",
                         &out);
  INFO(out);
  CHECK(rc == 0);
  // warm-started run converges essentially immediately
  std::istringstream csv(slurp(d2 + "/trace.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows <= 12);
}
