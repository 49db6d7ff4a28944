#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"

namespace {

struct CliResult {
    int code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& tag) {
    const std::string log =
        (std::filesystem::temp_directory_path() / ("fsdepth_cli_" + tag + ".log")).string();
    const std::string cmd = std::string(FSDEPTH_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = testutil::read_file_bytes(log);
    std::filesystem::remove(log);
    return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli("", "noargs").code == 2);
    CHECK(run_cli("frobnicate", "badsub").code == 2);
    CHECK(run_cli("estimate", "missingflags").code == 2);
}

TEST_CASE("config errors exit with code 2 and name the key") {
    const CliResult r = run_cli("--set f_number=-1 gradcheck", "badcfg");
    CHECK(r.code == 2);
    CHECK(r.output.find("f_number") != std::string::npos);
}

TEST_CASE("missing inputs exit with code 1 and name the path") {
    testutil::ScratchDir tmp("cli_missing");
    const CliResult r = run_cli(
        "estimate --stack " + tmp.file("no_such_stack") + " --out-dir " + tmp.file("out"),
        "missingstack");
    CHECK(r.code == 1);
    CHECK(r.output.find("no_such_stack") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
    CHECK(run_cli("--help", "help").code == 0);
}

TEST_CASE("pipeline smoke test emits every artifact") {
    testutil::ScratchDir tmp("cli_pipe");
    const std::string out = tmp.file("run");
    const CliResult r = run_cli(
        "--set scene=plane:1.2 --set width=48 --set height=48 --set iters=25 "
        "--set interior_margin=12 --seed 7 pipeline --out-dir " + out,
        "pipeline");
    CAPTURE(r.output);
    REQUIRE(r.code == 0);
    for (const char* name :
         {"effective-config.txt", "stack/slice_00.pfm", "stack/slice_05.pfm",
          "stack/schedule.csv", "gt_aif.pfm", "gt_depth.pfm", "aif.pfm", "aif.png",
          "depth.pfm", "depth.png", "trace.csv", "metrics.csv", "tiling.csv"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(std::filesystem::path(out) / name));
    }

    // the effective config reproduces the run (stage wiring sanity)
    const std::string out2 = tmp.file("run2");
    const CliResult r2 = run_cli("--config " + out + "/effective-config.txt pipeline --out-dir " +
                                     out2,
                                 "pipeline2");
    REQUIRE(r2.code == 0);
    CHECK(testutil::read_file_bytes(out + "/depth.pfm") ==
          testutil::read_file_bytes(out2 + "/depth.pfm"));
    CHECK(testutil::read_file_bytes(out + "/trace.csv") ==
          testutil::read_file_bytes(out2 + "/trace.csv"));
}

TEST_CASE("stage subcommands chain through files") {
    testutil::ScratchDir tmp("cli_stages");
    const std::string syn = tmp.file("syn");
    REQUIRE(run_cli("--set scene=plane:1.4 --set width=48 --set height=48 synth --out-dir " + syn,
                    "synth")
                .code == 0);

    const std::string aif = tmp.file("aif.pfm");
    REQUIRE(run_cli("aif --stack " + syn + "/stack --out " + aif, "aif").code == 0);
    CHECK(std::filesystem::exists(aif));

    const std::string dff = tmp.file("dff.pfm");
    REQUIRE(run_cli("dff --stack " + syn + "/stack --out " + dff, "dff").code == 0);

    const CliResult ev = run_cli(
        "--set interior_margin=12 eval --pred " + dff + " --gt " + syn + "/gt_depth.pfm",
        "eval");
    CHECK(ev.code == 0);
    CHECK(ev.output.find("rmse") != std::string::npos);
}

TEST_CASE("gradcheck subcommand verifies the gradients") {
    const CliResult r = run_cli("--seed 7 gradcheck", "gradcheck");
    CAPTURE(r.output);
    CHECK(r.code == 0);
    CHECK(r.output.find("all gradients verified") != std::string::npos);
}

}  // TEST_SUITE
