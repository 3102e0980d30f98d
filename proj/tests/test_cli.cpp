#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    if (const char* p = std::getenv("BOED_CLI_PATH_OVERRIDE")) return p;
    return BOED_CLI_PATH;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("boed_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, const fs::path& out_dir,
                  const std::string& extra = "") {
    std::ofstream out(path);
    out << "[mesh]\nnx = 4\nny = 4\nnz = 2\n"
        << "[sensors]\ngrid = 3\nmargin = 0.2\n"
        << "[run]\nn_mc = 16\nn_d = 2\nn_tr = 5\nn_v = 4\nK = 2\nseed = 7\n"
        << "out_dir = " << out_dir.string() << "\n"
        << extra;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("bae subcommand writes deterministic error statistics") {
    const fs::path dir = fresh_dir("bae");
    const fs::path out1 = dir / "out1", out2 = dir / "out2";
    write_config(dir / "run.cfg", out1);

    CHECK(run("--config " + (dir / "run.cfg").string() + " bae") == 0);
    CHECK(fs::exists(out1 / "bae_eps0.csv"));
    CHECK(fs::exists(out1 / "bae_gamma_nu.csv"));

    CHECK(run("--config " + (dir / "run.cfg").string() + " --out " + out2.string() + " bae") == 0);
    CHECK(slurp(out1 / "bae_eps0.csv") == slurp(out2 / "bae_eps0.csv"));
    CHECK(slurp(out1 / "bae_gamma_nu.csv") == slurp(out2 / "bae_gamma_nu.csv"));
    fs::remove_all(dir);
}

TEST_CASE("invalid configurations exit with code 2") {
    const fs::path dir = fresh_dir("badcfg");
    write_config(dir / "small.cfg", dir / "out", "n_mc = 1\n");
    CHECK(run("--config " + (dir / "small.cfg").string() + " bae") == 2);

    std::ofstream(dir / "broken.cfg") << "[run]\nthis is not a key value pair\n";
    CHECK(run("--config " + (dir / "broken.cfg").string() + " bae") == 2);

    write_config(dir / "ok.cfg", dir / "out");
    CHECK(run("--config " + (dir / "ok.cfg").string() + " --objective bogus oed") == 2);
    fs::remove_all(dir);
}

TEST_CASE("oed subcommand selects a design and records the evaluation count") {
    const fs::path dir = fresh_dir("oed");
    const fs::path out = dir / "out";
    write_config(dir / "run.cfg", out);
    CHECK(run("--config " + (dir / "run.cfg").string() + " bae") == 0);
    CHECK(run("--config " + (dir / "run.cfg").string() + " oed") == 0);

    CHECK(fs::exists(out / "oed.json"));
    CHECK(fs::exists(out / "oed_objective.csv"));
    const std::string json = slurp(out / "oed.json");
    // K = 2 on a 3x3 sensor grid: K n_s - K(K-1)/2 = 17 evaluations.
    CHECK(json.find("\"evaluations\": 17") != std::string::npos);

    std::ifstream design(out / "oed_design.txt");
    int idx, count = 0;
    while (design >> idx) {
        CHECK(idx >= 0);
        CHECK(idx < 9);
        ++count;
    }
    CHECK(count == 2);
    fs::remove_all(dir);
}

TEST_CASE("invert with an empty design returns the prior") {
    const fs::path dir = fresh_dir("invert");
    const fs::path out = dir / "out";
    write_config(dir / "run.cfg", out);
    std::ofstream(dir / "empty.txt") << "";
    {
        std::ofstream data(dir / "data.csv");
        for (int i = 0; i < 9; ++i) data << "0.5\n";
    }
    CHECK(run("--config " + (dir / "run.cfg").string() + " --unaware invert " +
              (dir / "empty.txt").string() + " " + (dir / "data.csv").string()) == 0);

    // With no active sensors the MAP point is the prior mean (all ones here).
    std::ifstream in(out / "m_map.csv");
    double v;
    int n = 0;
    while (in >> v) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
        ++n;
    }
    CHECK(n == 25);  // bottom nodes of the 4x4x2 mesh
    fs::remove_all(dir);
}

TEST_CASE("invert rejects a data vector of the wrong length") {
    const fs::path dir = fresh_dir("invert_bad");
    write_config(dir / "run.cfg", dir / "out");
    std::ofstream(dir / "d.txt") << "0\n";
    std::ofstream(dir / "data.csv") << "0.5\n0.5\n";
    CHECK(run("--config " + (dir / "run.cfg").string() + " --unaware invert " +
              (dir / "d.txt").string() + " " + (dir / "data.csv").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("validate subcommand scores stored and random designs") {
    const fs::path dir = fresh_dir("validate");
    const fs::path out = dir / "out";
    write_config(dir / "run.cfg", out);
    std::ofstream(dir / "d.txt") << "0\n4\n";
    CHECK(run("--config " + (dir / "run.cfg").string() + " --unaware validate " +
              (dir / "d.txt").string() + " --random 2") == 0);
    CHECK(fs::exists(out / "validation_cloud.csv"));
    CHECK(fs::exists(out / "validate_0.csv"));
    const std::string cloud = slurp(out / "validation_cloud.csv");
    // Header plus one stored and two random rows.
    CHECK(std::count(cloud.begin(), cloud.end(), '\n') == 4);
    fs::remove_all(dir);
}

TEST_CASE("sandbox-check passes") {
    CHECK(run("sandbox-check") == 0);
}

TEST_CASE("missing subcommand is a usage error") {
    CHECK(run("") != 0);
}
