#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "localstar_exit";
  const std::string cmd =
      std::string(LOCALSTAR_CLI_PATH) + " --out " + out.string() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ExitCodes, Usage) {
  EXPECT_EQ(run("product --level nowhere"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("sweep --values"), 2);
  EXPECT_EQ(run("--set 'theta.matrix=0, 1; 1, 0' build-theta"), 2);
  EXPECT_EQ(run("--config /nonexistent/run.cfg build-theta"), 2);
  EXPECT_EQ(run("verify --suite prop-3.2"), 2);
}

TEST(ExitCodes, PassAndForcedFailure) {
  EXPECT_EQ(run("build-theta"), 0);
  EXPECT_EQ(run("--set theta.scale=0 product --level fiber"), 0);
  EXPECT_EQ(run("verify --suite geometry"), 0);
  EXPECT_EQ(run("--set tolerance.roundtrip=1e-30 verify --suite geometry"), 1);
}
