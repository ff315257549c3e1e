#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = RESFORGE_CLI_PATH;
const std::string kSrc = RESFORGE_SOURCE_DIR;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("resforge_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Scenario identical to the shipped whiteboard task but with an absolute
// model path and configurable solver iteration budget.
fs::path write_scenario(const fs::path& dir, const std::string& model, int max_iters) {
    const fs::path path = dir / "scenario.json";
    std::ofstream out(path);
    out << "{\n"
        << "  \"model\": \"" << model << "\",\n"
        << "  \"p_I\": [1.8, -0.5],\n"
        << "  \"p_F\": [1.8, 0.5],\n"
        << "  \"surface\": {\"corner\": [1.8, -1, -0.5], \"edge_u\": [0, 2, 0],"
        << " \"edge_v\": [0, 0, 1]},\n"
        << "  \"duration\": 1.0,\n"
        << "  \"segments\": 10,\n"
        << "  \"objective\": \"A\",\n"
        << "  \"solver\": {\"max_iterations\": " << max_iters << "}\n"
        << "}\n";
    return path;
}

// first optimize run is shared by several cases below
const fs::path& base_run() {
    static const fs::path dir = [] {
        const fs::path d = fresh_dir("base");
        const int code = run("optimize " + kSrc + "/scenarios/planar3_whiteboard_A.json -o " +
                             d.string() + " --dump-polytopes --seed 1");
        REQUIRE(code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("optimize writes solution, trace, and plot") {
    const fs::path& dir = base_run();
    CHECK(fs::exists(dir / "solution.json"));
    CHECK(fs::exists(dir / "trace.csv"));
    CHECK(fs::exists(dir / "trajectory.svg"));

    const std::string sol = slurp(dir / "solution.json");
    CHECK(sol.find("\"converged\": true") != std::string::npos);
    CHECK(sol.find("\"mesh_times\"") != std::string::npos);
    CHECK(sol.find("\"objective_trace\"") != std::string::npos);

    const std::string trace = slurp(dir / "trace.csv");
    CHECK(trace.rfind("iteration,objective,feasibility", 0) == 0);
}

TEST_CASE("optimize --dump-polytopes emits one file per mesh point") {
    const fs::path& dir = base_run();
    for (int k = 0; k <= 10; ++k) {
        const fs::path file = dir / "polytopes" / ("point_" + std::to_string(k) + ".txt");
        REQUIRE(fs::exists(file));
        const std::string text = slurp(file);
        CHECK(text.find("v ") != std::string::npos);
        CHECK(text.find("h ") != std::string::npos);
    }
}

TEST_CASE("optimize exit codes: 1 unconverged, 2 bad input") {
    const fs::path dir = fresh_dir("codes");
    const fs::path stalled =
        write_scenario(dir, kSrc + "/models/planar3.json", 0);
    CHECK(run("optimize " + stalled.string() + " -o " + (dir / "out0").string()) == 1);
    const std::string sol = slurp(dir / "out0" / "solution.json");
    CHECK(sol.find("\"converged\": false") != std::string::npos);

    const fs::path missing = write_scenario(dir, "/nonexistent/model.json", 100);
    CHECK(run("optimize " + missing.string() + " -o " + (dir / "out1").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "out1" / "solution.json"));

    CHECK(run("optimize") == 2);  // missing required arguments
}

TEST_CASE("optimize is deterministic for a fixed seed") {
    const fs::path dir = fresh_dir("determinism");
    const fs::path scenario = write_scenario(dir, kSrc + "/models/planar3.json", 600);
    REQUIRE(run("optimize " + scenario.string() + " -o " + (dir / "a").string() + " --seed 7") ==
            0);
    REQUIRE(run("optimize " + scenario.string() + " -o " + (dir / "b").string() + " --seed 7") ==
            0);
    CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));

    // solution JSON matches except for the wall-clock field
    auto strip_wall = [](std::string text) {
        const size_t pos = text.find("\"wall_time_s\"");
        REQUIRE(pos != std::string::npos);
        const size_t end = text.find('\n', pos);
        return text.erase(pos, end - pos);
    };
    CHECK(strip_wall(slurp(dir / "a" / "solution.json")) ==
          strip_wall(slurp(dir / "b" / "solution.json")));
}

TEST_CASE("evaluate compares trajectories and plots the radii") {
    const fs::path dir = fresh_dir("evaluate");
    fs::copy_file(base_run() / "solution.json", dir / "first.json");
    fs::copy_file(base_run() / "solution.json", dir / "second.json");
    const int code = run("evaluate " + kSrc + "/models/planar3.json " +
                         (dir / "first.json").string() + " " + (dir / "second.json").string() +
                         " -o " + (dir / "out").string());
    REQUIRE(code == 0);

    const std::string csv = slurp(dir / "out" / "robustness.csv");
    CHECK(csv.rfind("k,t,radius_first,radius_second", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 12);  // header + 11 mesh points

    const std::string svg = slurp(dir / "out" / "robustness.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("first") != std::string::npos);
}

TEST_CASE("evaluate --impulse writes per-trajectory torque traces") {
    const fs::path dir = fresh_dir("impulse");
    fs::copy_file(base_run() / "solution.json", dir / "traj.json");
    const int code = run("evaluate " + kSrc + "/models/planar3.json " +
                         (dir / "traj.json").string() + " -o " + (dir / "out").string() +
                         " --impulse --direction 0,-1 --f-peak 40");
    REQUIRE(code == 0);
    const std::string csv = slurp(dir / "out" / "impulse.csv");
    CHECK(csv.rfind("k,t,radius,", 0) == 0);
    CHECK(csv.find("saturated_any") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "torques.svg"));

    // impulse without a direction is an input error
    CHECK(run("evaluate " + kSrc + "/models/planar3.json " + (dir / "traj.json").string() +
              " -o " + (dir / "out2").string() + " --impulse") == 2);
    // and so is an empty trajectory list
    CHECK(run("evaluate " + kSrc + "/models/planar3.json -o " + (dir / "out3").string()) == 2);
}

TEST_CASE("bench writes a timing table") {
    const fs::path dir = fresh_dir("bench");
    const int code = run("bench " + kSrc + "/models/planar3.json --samples 5 -o " +
                         dir.string());
    REQUIRE(code == 0);
    const std::string csv = slurp(dir / "bench.csv");
    CHECK(csv.rfind("operation,mean_us,std_us,samples", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 12);  // header + 11 operations
    for (const char* op : {"force_polytope", "residual_force_polytope", "inscribed_ball",
                           "intersection", "volume", "g_A", "g_B", "g_C", "g_D", "g_E", "g_F"})
        CHECK(csv.find(std::string("\n") + op + ",") != std::string::npos);
}
