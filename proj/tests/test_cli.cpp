#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "copol/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("copol_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const fs::path out = scratch_dir() / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = scratch_dir() / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = env_prefix + std::string(COPOL_CLI_PATH) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

double value_of(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + "=");
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("channel subcommand", "[cli]") {
    SECTION("noiseless receiver") {
        const CliResult r =
            run_cli("channel --p-l 1 --p-d 1 --sigma2-l 0 --sigma2-d 1 --gamma 1");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "rho_l0=0\n"));
    }
    SECTION("matched interference at the half-success exponent") {
        const CliResult r = run_cli(
            "channel --p-l 1 --p-d 1.4426950408889634 --sigma2-l 1 --sigma2-d 1 "
            "--gamma 0.6931471805599453");
        CHECK(r.code == 0);
        CHECK(value_of(r.out, "rho_l1") == Catch::Approx(0.75).margin(1e-6));
    }
    SECTION("symmetric parameters give equal interfered failure rates") {
        const CliResult r =
            run_cli("channel --p-l 2 --p-d 2 --sigma2-l 0.3 --sigma2-d 0.3 --gamma 0.8");
        CHECK(r.code == 0);
        CHECK(value_of(r.out, "rho_l1") == value_of(r.out, "rho_d1"));
    }
    SECTION("decibel input") {
        const CliResult db = run_cli(
            "channel --db --p-l 0 --p-d 0 --sigma2-l -10 --sigma2-d -10 --gamma 0");
        const CliResult lin = run_cli(
            "channel --p-l 1 --p-d 1 --sigma2-l 0.1 --sigma2-d 0.1 --gamma 1");
        CHECK(db.code == 0);
        CHECK(db.out == lin.out);
    }
    SECTION("invalid parameters exit 2") {
        const CliResult r =
            run_cli("channel --p-l 0 --p-d 1 --sigma2-l 0 --sigma2-d 1 --gamma 1");
        CHECK(r.code == 2);
    }
    SECTION("sampled validation lines") {
        const CliResult r = run_cli(
            "channel --p-l 1 --p-d 1 --sigma2-l 1 --sigma2-d 1 --gamma 1 --draws 20000");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "rho_l1 closed_form="));
        CHECK(contains(r.out, "z="));
    }
}

TEST_CASE("describe subcommand", "[cli]") {
    const CliResult r = run_cli("describe --gop 3");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "index,i_rx,n_tx,n_rx\n"));
    CHECK(contains(r.out, "0,0,0,0\n"));
    CHECK(contains(r.err, "states=7"));
    CHECK(contains(r.err, "gop_length=3"));
    int lines = 0;
    for (char c : r.out) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 8);  // header + 7 states
}

TEST_CASE("solve subcommand", "[cli]") {
    SECTION("unconstrained default model") {
        const CliResult r = run_cli("solve --delta 0");
        CHECK(r.code == 0);
        CHECK(value_of(r.out, "t_d2d") == Catch::Approx(0.9).margin(1e-6));
    }
    SECTION("infeasible constraint exits 3 and reports the ceiling") {
        const CliResult r = run_cli("solve --delta 0.99");
        CHECK(r.code == 3);
        CHECK(contains(r.err, "0.980496"));
    }
    SECTION("policy file output is loadable") {
        const fs::path policy = scratch_dir() / "opt.json";
        const CliResult r =
            run_cli("solve --delta 0.95 --out-policy " + policy.string());
        CHECK(r.code == 0);
        const copol::PolicyFile f = copol::read_policy_file(policy.string());
        CHECK(f.gop.n_max == 24);
        const CliResult ev = run_cli("evaluate --policy " + policy.string());
        CHECK(ev.code == 0);
        CHECK(value_of(ev.out, "d_lte") == Catch::Approx(0.95).margin(1e-5));
    }
    SECTION("sweep writes the curve CSV and per-delta policies") {
        const fs::path curve = scratch_dir() / "curve.csv";
        const fs::path policies = scratch_dir() / "sweep.json";
        const CliResult r = run_cli("solve --sweep 0.9:0.99:0.03 --jobs 2 --out-curve " +
                                    curve.string() + " --out-policy " + policies.string());
        CHECK(r.code == 0);
        const std::string text = slurp(curve);
        CHECK(contains(text,
                       "delta,t_d2d,d_lte_achieved,p_tx_iframe,p_tx_dframe_irx1,"
                       "p_tx_dframe_irx0,feasible\n"));
        CHECK(contains(text, "0.99,nan"));
        CHECK(contains(r.out, "feasible"));
        CHECK(fs::exists(scratch_dir() / "sweep.d0.9.json"));
        CHECK(fs::exists(scratch_dir() / "sweep.d0.96.json"));
        CHECK_FALSE(fs::exists(scratch_dir() / "sweep.d0.99.json"));
        CHECK_NOTHROW(copol::read_policy_file((scratch_dir() / "sweep.d0.9.json").string()));
    }
    SECTION("fully infeasible sweep exits 3") {
        const CliResult r = run_cli("solve --sweep 0.985:0.99:0.005 --out-curve -");
        CHECK(r.code == 3);
    }
    SECTION("delta and sweep are mutually exclusive") {
        CHECK(run_cli("solve --delta 0.5 --sweep 0.1:0.2:0.1").code == 2);
        CHECK(run_cli("solve").code == 2);
    }
}

TEST_CASE("evaluate subcommand", "[cli]") {
    SECTION("reference operating points") {
        const CliResult r1 = run_cli("evaluate --const-p 1");
        CHECK(r1.code == 0);
        CHECK(value_of(r1.out, "d_lte") == Catch::Approx(0.8136).margin(1e-6));
        CHECK(value_of(r1.out, "t_d2d") == Catch::Approx(0.9).margin(1e-6));

        const CliResult r0 = run_cli("evaluate --const-p 0");
        CHECK(value_of(r0.out, "d_lte") == Catch::Approx(0.980496).margin(1e-6));
        CHECK(value_of(r0.out, "t_d2d") == 0.0);

        const CliResult rh = run_cli("evaluate --heuristic-p 1");
        CHECK(value_of(rh.out, "d_lte") == Catch::Approx(0.89496).margin(1e-6));
    }
    SECTION("psnr under both conventions") {
        const CliResult paper = run_cli("evaluate --const-p 0 --d-e 1 --c 0 --w 8");
        CHECK(value_of(paper.out, "psnr_db") == Catch::Approx(24.0824).margin(1e-3));
        const CliResult std_conv =
            run_cli("evaluate --const-p 0 --d-e 1 --c 0 --w 8 --psnr-convention standard");
        CHECK(value_of(std_conv.out, "psnr_db") == Catch::Approx(48.1308).margin(1e-3));
    }
    SECTION("a policy source is required") {
        CHECK(run_cli("evaluate").code == 2);
    }
    SECTION("malformed policy file exits 2") {
        const fs::path bad = scratch_dir() / "bad.json";
        std::ofstream(bad) << "{ not json";
        const CliResult r = run_cli("evaluate --policy " + bad.string());
        CHECK(r.code == 2);
        CHECK(contains(r.err, "error"));
    }
}

TEST_CASE("simulate subcommand", "[cli]") {
    SECTION("deterministic under a fixed seed") {
        const std::string args = "simulate --const-p 0.5 --slots 5000 --replications 3 --seed 9";
        const CliResult a = run_cli(args);
        const CliResult b = run_cli(args);
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(value_of(a.out, "replications") == 3.0);
    }
    SECTION("perfect channel delivers exactly") {
        const CliResult r = run_cli(
            "simulate --rho-l0 0 --rho-l1 0 --rho-d1 0 --const-p 1 --slots 2000 "
            "--replications 2");
        CHECK(value_of(r.out, "d_lte_mean") == 1.0);
        CHECK(value_of(r.out, "t_d2d_mean") == 1.0);
    }
    SECTION("fading mode needs channel parameters") {
        CHECK(run_cli("simulate --const-p 1 --sample-fading --slots 100").code == 2);
        const CliResult ok = run_cli(
            "simulate --const-p 1 --sample-fading --slots 5000 --p-l 1 --p-d 1 "
            "--sigma2-l 0.5 --sigma2-d 0.5 --gamma 0.5");
        CHECK(ok.code == 0);
    }
    SECTION("per-replication csv") {
        const fs::path reps = scratch_dir() / "reps.csv";
        const CliResult r = run_cli(
            "simulate --const-p 0.5 --slots 2000 --replications 2 --out-reps " + reps.string());
        CHECK(r.code == 0);
        CHECK(contains(slurp(reps), "replication,d_lte,t_d2d\n"));
    }
}

TEST_CASE("trace subcommand", "[cli]") {
    SECTION("forced losses corrupt exactly their GoPs") {
        const fs::path csv = scratch_dir() / "trace.csv";
        const CliResult r = run_cli(
            "trace --gop 24 --frames 300 --force-loss 121,241 --no-channel-loss --out " +
            csv.string());
        CHECK(r.code == 0);
        const std::string text = slurp(csv);
        std::istringstream lines(text);
        std::string line;
        std::getline(lines, line);  // header
        int corrupted = 0;
        while (std::getline(lines, line)) {
            const auto first = line.find(',');
            const long long slot = std::stoll(line.substr(0, first));
            const bool mask =
                (slot >= 121 && slot <= 144) || (slot >= 241 && slot <= 264);
            std::istringstream cells(line);
            std::string cell;
            for (int i = 0; i < 7; ++i) std::getline(cells, cell, ',');
            CHECK(cell == (mask ? "1" : "0"));
            corrupted += mask ? 1 : 0;
        }
        CHECK(corrupted == 48);
    }
    SECTION("invalid forced index exits 2") {
        CHECK(run_cli("trace --gop 24 --frames 300 --force-loss 122 --no-channel-loss").code ==
              2);
    }
    SECTION("csv to stdout, summary to stderr") {
        const CliResult r = run_cli("trace --gop 24 --frames 48 --no-channel-loss");
        CHECK(r.code == 0);
        CHECK(contains(r.out, "slot,frame_kind"));
        CHECK(contains(r.err, "trace: 48 frames"));
        CHECK_FALSE(contains(r.out, "trace: 48 frames"));
    }
}

TEST_CASE("scatter subcommand", "[cli]") {
    const fs::path csv = scratch_dir() / "scatter.csv";
    const CliResult r = run_cli(
        "scatter --gop 24 --rho-l0 0 --rho-l1 0.5 --rho-d1 0 --p-grid 0.5,1.0 "
        "--slots 5000 --replications 2 --out " +
        csv.string());
    CHECK(r.code == 0);
    const std::string text = slurp(csv);
    CHECK(contains(text, "policy_kind,p_tx,t_d2d,mean_mse,stderr_mse\n"));
    CHECK(contains(text, "constant,0.5"));
    CHECK(contains(text, "heuristic,1"));
    int lines = 0;
    for (char c : text) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 5);  // header + 2 families x 2 probabilities
}

TEST_CASE("config files and precedence", "[cli]") {
    const fs::path cfg = scratch_dir() / "model.json";
    {
        copol::ModelConfig m;
        m.n_max = 24;
        m.rho = copol::LinkFailureProbs{0.01, 0.5, 0.1};
        copol::write_config(cfg.string(), m);
    }
    SECTION("config file supplies the model") {
        const CliResult r = run_cli("evaluate --config " + cfg.string() + " --const-p 1");
        CHECK(value_of(r.out, "d_lte") ==
              Catch::Approx(copol::baseline_delivery_rate(24, 0.01, 0.5, 1.0)).margin(1e-6));
    }
    SECTION("flags override the file") {
        const CliResult r =
            run_cli("evaluate --config " + cfg.string() + " --rho-l1 0.1 --const-p 1");
        CHECK(value_of(r.out, "d_lte") == Catch::Approx(0.8136).margin(1e-6));
    }
    SECTION("environment variable names the default config") {
        const CliResult r =
            run_cli("evaluate --const-p 1", "COPOL_CONFIG=" + cfg.string() + " ");
        CHECK(value_of(r.out, "d_lte") ==
              Catch::Approx(copol::baseline_delivery_rate(24, 0.01, 0.5, 1.0)).margin(1e-6));
    }
    SECTION("config written by channel is accepted by solve") {
        const fs::path written = scratch_dir() / "from_channel.json";
        const CliResult ch = run_cli(
            "channel --p-l 1 --p-d 0.2 --sigma2-l 0.01 --sigma2-d 0.01 --gamma 0.5 "
            "--write-config " +
            written.string());
        CHECK(ch.code == 0);
        const CliResult sv = run_cli("solve --config " + written.string() + " --delta 0");
        CHECK(sv.code == 0);
    }
    SECTION("malformed config exits 2") {
        const fs::path bad = scratch_dir() / "bad_model.json";
        std::ofstream(bad) << R"({"model":{"n_max":2}})";
        CHECK(run_cli("evaluate --config " + bad.string() + " --const-p 1").code == 2);
    }
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(run_cli("no-such-command").code == 2);
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("evaluate --const-p 1.5").code == 2);
    CHECK(run_cli("--help").code == 0);
}
