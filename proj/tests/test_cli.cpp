#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = IVPROF_CLI_PATH;
const std::string kData = IVPROF_TEST_DATA_DIR;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    const auto tmp = std::filesystem::temp_directory_path();
    const std::string out_path = (tmp / "ivprof_cli_stdout.tmp").string();
    const std::string err_path = (tmp / "ivprof_cli_stderr.tmp").string();
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

}  // namespace

TEST_CASE("profile subcommand happy path") {
    const auto r = run("profile --input " + kData + "/ten_obs.csv");
    CHECK(r.exit_code == 0);
    CHECK(r.out == slurp(kData + "/golden_report.txt"));
}

TEST_CASE("profile exit codes through the binary") {
    CHECK(run("profile --input " + kData + "/violation.csv").exit_code == 2);
    const auto bad = run("profile --input " + kData + "/bad_z.csv");
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("row 7") != std::string::npos);
    CHECK(run("profile --input /does/not/exist.csv").exit_code == 1);
    CHECK(run("profile --input " + kData + "/degenerate.csv").exit_code == 1);
}

TEST_CASE("profile json output and --se both") {
    const auto r = run("profile --input " + kData +
                       "/ten_obs.csv --se both --boot 100 --seed 1 --format json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"schema_version\": 1") != std::string::npos);
    CHECK(r.out.find("\"method\": \"plugin\"") != std::string::npos);
    CHECK(r.out.find("\"method\": \"bootstrap\"") != std::string::npos);
}

TEST_CASE("profile with explicit columns and match id") {
    const auto r = run("profile --input " + kData +
                       "/matched.csv --instrument z --treatment d --covariates x --match-id pair");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("match-id-ignored") != std::string::npos);
}

TEST_CASE("simulate is byte-identical across invocations and thread counts") {
    const std::string args =
        "simulate --variant fixed --sizes 400 --reps 80 --boot 50 --seed 11 --format csv";
    const auto a = run(args + " --threads 1");
    const auto b = run(args + " --threads 1");
    const auto c = run(args + " --threads 3");
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
    CHECK(a.out.find("fixed,400,plugin,80") != std::string::npos);
    CHECK(a.out.find("fixed,400,bootstrap,80") != std::string::npos);
}

TEST_CASE("simulate degenerate single replication") {
    const auto r = run("simulate --variant fixed --sizes 500 --reps 1 --no-bootstrap --seed 1");
    CHECK(r.exit_code == 0);
    const bool covered0 = r.out.find("fixed,500,plugin,1,1,0,0,") != std::string::npos;
    const bool covered1 = r.out.find("fixed,500,plugin,1,1,0,1,") != std::string::npos;
    CHECK((covered0 || covered1));
    CHECK(r.out.find("0.98") != std::string::npos);
}

TEST_CASE("simulate json format and random variant") {
    const auto r = run("simulate --variant random --sizes 300 --reps 40 --no-bootstrap "
                       "--seed 2 --format json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"variant\": \"random\"") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run("simulate --variant nope").exit_code == 1);
    CHECK(run("profile").exit_code != 0);   // --input required
    CHECK(run("--version").exit_code == 0);
}
