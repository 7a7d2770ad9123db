#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "flexmap/io.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path log = fs::temp_directory_path() / ("flexmap_cli_" + tag + ".log");
    const std::string cmd =
        std::string(FLEXMAP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    res.output = testutil::read_file(log.string());
    return res;
}

std::string fx(const std::string& name) { return testutil::fixture_path(name); }

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("flexmap_out_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("nfp produces artifacts and exit 0") {
    const fs::path out = fresh_dir("nfp");
    const RunResult res = run_cli("nfp --case " + fx("case5.m") +
                                      " --zone 3 --q-count 5 --workers 2 --out " + out.string(),
                                  "nfp");
    CHECK(res.exit_code == 0);
    REQUIRE(fs::exists(out / "nfp_bus3.json"));
    REQUIRE(fs::exists(out / "nfp_bus3.csv"));
    REQUIRE(fs::exists(out / "nfp_bus3.svg"));
    const auto nfp = flexmap::io::nfp_from_json(testutil::read_file((out / "nfp_bus3.json").string()));
    CHECK_FALSE(nfp.polygon.empty());
    CHECK(nfp.flex_bus == 3);
}

TEST_CASE("bad case path names the path and exits 1") {
    const RunResult res = run_cli("nfp --case /no/such/case.m --zone 1", "badpath");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("/no/such/case.m") != std::string::npos);
}

TEST_CASE("voltage-pinched fixture exits 2") {
    const fs::path out = fresh_dir("pinched");
    const RunResult res = run_cli("nfp --case " + fx("case2pinched.m") +
                                      " --zone 2 --q-span=-0.3:0.3 --q-count 3 --out " +
                                      out.string(),
                                  "pinched");
    CHECK(res.exit_code == 2);
}

TEST_CASE("lifp on a singleton zone equals the nfp slice data") {
    const fs::path out = fresh_dir("lifp1");
    const RunResult res = run_cli("lifp --case " + fx("case2.m") +
                                      " --zone 2 --q-count 5 --out " + out.string(),
                                  "lifp1");
    CHECK(res.exit_code == 0);
    const auto nfp =
        flexmap::io::nfp_from_json(testutil::read_file((out / "nfp_bus2.json").string()));
    const auto lifp =
        flexmap::io::lifp_from_json(testutil::read_file((out / "lifp.json").string()));
    REQUIRE(lifp.slices.size() == nfp.samples.size());
    for (std::size_t i = 0; i < nfp.samples.size(); ++i) {
        const auto& s = nfp.samples[i];
        const bool solved = s.p_up.has_value() && s.p_down.has_value();
        REQUIRE(lifp.slices[i].has_value() == solved);
        if (solved) {
            CHECK(lifp.slices[i]->first == *s.p_down);
            CHECK(lifp.slices[i]->second == *s.p_up);
        }
    }
}

TEST_CASE("lifp area is bounded by every member nfp") {
    const fs::path out = fresh_dir("lifp3");
    const RunResult res = run_cli("lifp --case " + fx("case5.m") +
                                      " --zone 2,3,4 --q-count 5 --workers 2 --out " +
                                      out.string(),
                                  "lifp3");
    CHECK(res.exit_code == 0);
    const auto lifp =
        flexmap::io::lifp_from_json(testutil::read_file((out / "lifp.json").string()));
    double lifp_area = flexmap::region_area(lifp);
    for (int bus : {2, 3, 4}) {
        const auto nfp = flexmap::io::nfp_from_json(
            testutil::read_file((out / ("nfp_bus" + std::to_string(bus) + ".json")).string()));
        CHECK(lifp_area <= flexmap::region_area(nfp) + 1e-12);
    }
    REQUIRE(fs::exists(out / "lifp.svg"));
}

TEST_CASE("a zone bus disconnected by the topology exits 1 naming it") {
    const fs::path out = fresh_dir("island");
    const RunResult res =
        run_cli("lifp --case " + fx("case5.m") + " --topology open=" + fx("case5_open45.json") +
                    " --zone 5 --q-span=-0.1:0.1 --q-count 3 --out " + out.string(),
                "island");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("5") != std::string::npos);
    CHECK(res.output.find("disconnected") != std::string::npos);
}

TEST_CASE("compare orders the ring topologies and writes reports") {
    const fs::path out = fresh_dir("compare");
    const RunResult res = run_cli(
        "compare --case " + fx("case3ring.m") + " --topology short=" + fx("ring_short.json") +
            " --topology long=" + fx("ring_long.json") + " --zone 3 --q-count 11 --workers 2" +
            " --out " + out.string(),
        "compare");
    CHECK(res.exit_code == 0);
    REQUIRE(fs::exists(out / "compare.json"));
    REQUIRE(fs::exists(out / "compare.txt"));
    const std::string txt = testutil::read_file((out / "compare.txt").string());
    CHECK(txt.find("short") != std::string::npos);
    CHECK(txt.find("1.00") != std::string::npos);
    // the long path is strictly worse
    CHECK(res.output.find("-") != std::string::npos);
}

TEST_CASE("compare refuses a non-radial topology with the report") {
    const fs::path out = fresh_dir("nonradial");
    const RunResult res = run_cli(
        "compare --case " + fx("case3ring.m") + " --topology meshy=" +
            fx("ring_all_closed.json") + " --topology short=" + fx("ring_short.json") +
            " --zone 3 --out " + out.string(),
        "nonradial");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("meshy") != std::string::npos);
    CHECK(res.output.find("cycle") != std::string::npos);
}

TEST_CASE("a ring zone also reports the whole-system comparison") {
    const fs::path out = fresh_dir("ring");
    const RunResult res = run_cli(
        "compare --case " + fx("case3ring.m") + " --topology short=" + fx("ring_short.json") +
            " --topology long=" + fx("ring_long.json") + " --zone ring:" + fx("zone_ring.json") +
            " --q-count 5 --workers 2 --out " + out.string(),
        "ring");
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out / "compare.json"));
    CHECK(fs::exists(out / "compare_all.json"));
    const auto ring_rep =
        flexmap::io::report_from_json(testutil::read_file((out / "compare.json").string()));
    const auto all_rep =
        flexmap::io::report_from_json(testutil::read_file((out / "compare_all.json").string()));
    REQUIRE(ring_rep.entries.size() == 2);
    REQUIRE(all_rep.entries.size() == 2);
    // Aggregating over more buses can only shrink the underlying region; the
    // two reports use separately resolved grids, so leave discretization room.
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(all_rep.entries[i].area <=
              ring_rep.entries[i].area * 1.1 + 0.05);
    }
}

TEST_CASE("identical topologies compare at parity") {
    const fs::path out = fresh_dir("parity");
    const RunResult res = run_cli(
        "compare --case " + fx("case3ring.m") + " --topology a=" + fx("ring_short.json") +
            " --topology b=" + fx("ring_short.json") + " --zone 3 --q-count 7 --out " +
            out.string(),
        "parity");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("+0%") != std::string::npos);
}

TEST_CASE("radial-check exit codes") {
    CHECK(run_cli("radial-check --case " + fx("case5.m"), "rad0").exit_code == 0);
    const RunResult res = run_cli("radial-check --case " + fx("case3ring.m"), "rad3");
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("cycle") != std::string::npos);
}

TEST_CASE("validate passes on the five-bus fixture") {
    const fs::path out = fresh_dir("validate");
    const RunResult res = run_cli("validate --case " + fx("case5.m") +
                                      " --zone 3 --q-span=-0.2:0.2 --q-count 5 --workers 4" +
                                      " --oracle-step 0.02 --out " + out.string(),
                                  "validate");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("0 violation(s)") != std::string::npos);
    CHECK(fs::exists(out / "oracle_grid.csv"));
}

TEST_CASE("validate flags a loosened solver") {
    const fs::path out = fresh_dir("validate_loose");
    const RunResult res = run_cli("validate --case " + fx("case5.m") +
                                      " --zone 3 --q-span=-0.2:0.2 --q-count 5 --workers 4" +
                                      " --oracle-step 0.02 --solver-tol 1e-2 --out " +
                                      out.string(),
                                  "validate_loose");
    CHECK(res.exit_code == 4);
    CHECK(res.output.find("violation") != std::string::npos);
}

TEST_CASE("validate guard rejects large cases") {
    // built on the fly: 31 buses exceeds the oracle guard
    const fs::path dir = fresh_dir("guard");
    const fs::path big = dir / "big.m";
    std::ofstream f(big);
    f << "function mpc = big\nmpc.baseMVA = 10;\nmpc.bus = [\n";
    for (int i = 1; i <= 31; ++i) {
        f << "\t" << i << "\t" << (i == 1 ? 3 : 1) << "\t0\t0\t0\t0\t1\t1.0\t0\t20\t1\t1.05\t0.95;\n";
    }
    f << "];\nmpc.gen = [\n\t1\t0\t0\t10\t-10\t1.0\t10\t1\t15\t-15;\n];\nmpc.branch = [\n";
    for (int i = 1; i < 31; ++i) {
        f << "\t" << i << "\t" << i + 1 << "\t0.01\t0.05\t0\t10\t0\t0\t0\t0\t1;\n";
    }
    f << "];\n";
    f.close();
    const RunResult res = run_cli("validate --case " + big.string() +
                                      " --zone 2 --q-span=-0.1:0.1 --q-count 3 --out " +
                                      dir.string(),
                                  "guard");
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("guard") != std::string::npos);
}
