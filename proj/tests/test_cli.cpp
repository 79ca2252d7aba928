#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "qsynth/gallery.hpp"

using namespace qsynth;
using testing::fresh_dir;
using testing::run_tool;
using testing::slurp;
using testing::spit;

namespace {

std::filesystem::path write_instance(const GalleryInstance& gi, const std::string& tag) {
    auto dir = fresh_dir(tag);
    spit(dir / "p.prog", gi.program_src);
    spit(dir / "p.perf", gi.perf_src);
    spit(dir / "p.sched", gi.sched_src);
    return dir;
}

}  // namespace

TEST_CASE("synth finds the optimum and writes consistent reports") {
    auto gi = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100));
    auto dir = write_instance(gi, "synth");
    std::string out;
    int rc = run_tool("synth " + (dir / "p.prog").string() + " --perf " + (dir / "p.perf").string() +
                          " --sched " + (dir / "p.sched").string() + " --check race --out " +
                          (dir / "o1").string(),
                      &out);
    CHECK(rc == 0);
    CHECK(out.find("value 51/2") != std::string::npos);

    std::string csv = slurp(dir / "o1" / "report.csv");
    CHECK(csv.rfind("strategy,value,decimal,safe\n", 0) == 0);
    CHECK(csv.find("1;1,51/2,25.500000,1") != std::string::npos);
    CHECK(csv.find("0;0,101/3,") != std::string::npos);

    // the emitted optimal program is choice-free and has the same value
    std::string vout;
    int vrc = run_tool("value " + (dir / "o1" / "optimal.prog").string() + " --perf " +
                           (dir / "p.perf").string() + " --sched " + (dir / "p.sched").string() +
                           " --check race",
                       &vout);
    CHECK(vrc == 0);
    CHECK(vout == "51/2\n");

    // reruns and parallel evaluation produce byte-identical reports
    CHECK(run_tool("synth " + (dir / "p.prog").string() + " --perf " + (dir / "p.perf").string() +
                   " --check race --out " + (dir / "o2").string()) == 0);
    CHECK(run_tool("synth " + (dir / "p.prog").string() + " --perf " + (dir / "p.perf").string() +
                   " --check race --threads 4 --out " + (dir / "o3").string()) == 0);
    CHECK(slurp(dir / "o2" / "report.csv") == slurp(dir / "o3" / "report.csv"));
    CHECK(slurp(dir / "o1" / "report.csv") == slurp(dir / "o2" / "report.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("synth exit codes: 2 without a safe program, 1 on errors") {
    auto dir = fresh_dir("codes");
    spit(dir / "racy.prog", R"(
        globals { x : [0, 1] = 0; }
        thread a { loc p; trans p -> p do { x := 1 }; }
        thread b { loc p; trans p -> p do { x := 0 }; }
    )");
    CHECK(run_tool("synth " + (dir / "racy.prog").string() + " --check race --out " +
                   (dir / "o").string()) == 2);
    CHECK(run_tool("synth " + (dir / "racy.prog").string() + " --out " + (dir / "o").string()) ==
          0);  // race check off: safe
    CHECK(run_tool("synth " + (dir / "missing.prog").string()) == 1);
    spit(dir / "bad.prog", "globals { x : [0 1] = 0; }");
    CHECK(run_tool("synth " + (dir / "bad.prog").string()) == 1);
    CHECK(run_tool("synth " + (dir / "racy.prog").string() + " --check phase") == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("gadget mode decides satisfiability through exit codes") {
    auto dir = fresh_dir("gadget");
    spit(dir / "sat.cnf", "p cnf 2 2\n1 2 0\n-1 2 0\n");
    spit(dir / "unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    std::string out;
    CHECK(run_tool("synth --gadget " + (dir / "sat.cnf").string() + " --out " +
                       (dir / "s").string(),
                   &out) == 0);
    CHECK(out.find("safe strategy found") != std::string::npos);
    CHECK(run_tool("synth --gadget " + (dir / "unsat.cnf").string() + " --out " +
                   (dir / "u").string()) == 2);
    // weighted variant: value 0 iff satisfiable
    CHECK(run_tool("synth --gadget --limavg " + (dir / "sat.cnf").string() + " --out " +
                       (dir / "sl").string(),
                   &out) == 0);
    CHECK(out.find("value 0") != std::string::npos);
    CHECK(run_tool("synth --gadget --limavg " + (dir / "unsat.cnf").string() + " --out " +
                       (dir / "ul").string(),
                   &out) == 2);
    CHECK(out.find("value 1") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("value rejects programs that still contain choices") {
    auto gi = gen_producer_consumer(1, 1, 2, Rat(1), Rat(100));
    auto dir = write_instance(gi, "value");
    CHECK(run_tool("value " + (dir / "p.prog").string() + " --perf " + (dir / "p.perf").string()) ==
          1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("bench sweeps a parameter and writes one row per point") {
    auto dir = fresh_dir("bench");
    std::string out;
    int rc = run_tool("bench cache --params nmax=2 lines=1 uncached=6 --sweep n=1..2 --out " +
                          (dir / "b").string(),
                      &out);
    CHECK(rc == 0);
    std::string csv = slurp(dir / "b" / "report.csv");
    CHECK(csv.rfind("param,point,instance,strategy,value,decimal,safe\n", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 3);  // header + 2 points
    CHECK(csv.find("n,1,cache-n1fixed-lines1-c1-u6,") != std::string::npos);
    CHECK(csv.find("n,2,cache-n2fixed-lines1-c1-u6,") != std::string::npos);
    // generated sources are written next to the report
    CHECK(std::filesystem::exists(dir / "b" / "cache-n1fixed-lines1-c1-u6.prog"));
    CHECK(run_tool("bench nosuch --out " + (dir / "x").string()) == 1);
    CHECK(run_tool("bench cache --params bogus=1 --out " + (dir / "y").string()) == 1);
    std::filesystem::remove_all(dir);
}
