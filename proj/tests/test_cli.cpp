// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "../tools/cli.hpp"

namespace fs = std::filesystem;
using linattn::cli::run;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("linattn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("jl writes a self-describing JSON document") {
  TempDir dir;
  const fs::path file = dir.path / "jl.json";
  const Run r = invoke({"jl", "--n", "256", "--k", "64", "--eps", "0.5", "--trials", "1000", "--seed", "3", "--out",
                        file.string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("jl seed=3") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(file));
  CHECK(doc["config"]["command"] == "jl");
  CHECK(doc["config"]["seed"] == "3");
  CHECK(doc["config"]["trials"] == "1000");
  CHECK_FALSE(doc["config"].contains("out"));
  CHECK(doc["verdict"]["theoretical_bound"].get<double>() == doctest::Approx(0.7293294335267746));
  CHECK_FALSE(fs::exists(dir.path / "jl.json.tmp"));

  SUBCASE("rerun is byte-identical") {
    const fs::path again = dir.path / "again.json";
    REQUIRE(invoke({"jl", "--n", "256", "--k", "64", "--eps", "0.5", "--trials", "1000", "--seed", "3", "--out",
                    again.string()})
                .status == 0);
    CHECK(slurp(file) == slurp(again));
  }
}

TEST_CASE("bench emits CSV with embedded config") {
  const Run r = invoke({"bench", "--variants", "factorized_right,vanilla", "--n", "32,64,128,256", "--d-model", "8",
                        "--d-k", "4", "--k", "8", "--reps", "5"});
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(first.rfind("# config: {", 0) == 0);
  CHECK(second == "variant,n,d_model,d_k,k,rep,seconds,peak_bytes");
  CHECK(r.out.find("factorized_right,32,8,4,8,0,") != std::string::npos);
  CHECK(r.out.find("vanilla,256,8,4,0,4,") != std::string::npos);
  CHECK(r.out.find("vanilla_exponent=") != std::string::npos);
}

TEST_CASE("equiv and spectrum succeed on small inputs") {
  const Run e = invoke({"equiv", "--n", "64", "--d-model", "16", "--d-k", "8", "--k", "16"});
  CHECK(e.status == 0);
  const Run s = invoke({"spectrum", "--n", "64", "--d-model", "16", "--d-k", "8"});
  REQUIRE(s.status == 0);
  const auto doc = nlohmann::json::parse(s.out.substr(0, s.out.rfind("spectrum seed=")));
  CHECK(doc["spectrum"]["tail_ratio"].get<double>() <= 1e-10);
}

TEST_CASE("invalid input exits with 1") {
  CHECK(invoke({}).status == 1);
  CHECK(invoke({"nonsense"}).status == 1);
  CHECK(invoke({"jl", "--bogus"}).status == 1);
  CHECK(invoke({"jl", "--eps", "1.5", "--trials", "1000"}).status == 1);
  CHECK(invoke({"jl", "--trials", "10"}).status == 1);
  CHECK(invoke({"jl", "--lemma", "3"}).status == 1);
  CHECK(invoke({"jl", "--format", "xml"}).status == 1);
  CHECK(invoke({"bench", "--n", "64,32,128,256"}).status == 1);
  CHECK(invoke({"bench", "--n", "32,64,128,256", "--reps", "4"}).status == 1);
  CHECK(invoke({"approx", "--n", "2048"}).status == 1);
  const Run r = invoke({"jl", "--trials", "1000", "--out", "/nonexistent_dir_xyz/out.json"});
  CHECK(r.status == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("failed numerical check exits with 2") {
  const Run r = invoke({"gradcheck", "--n", "32", "--d-model", "32", "--d-k", "2", "--k", "32", "--delta", "0.99",
                         "--h", "1e-3", "--tolerance", "1e-12"});
  CHECK(r.status == 2);
  CHECK(invoke({"gradcheck"}).status == 0);
}

TEST_CASE("help") {
  const Run r = invoke({"--help"});
  CHECK(r.status == 0);
  CHECK(r.out.find("bench") != std::string::npos);
}
