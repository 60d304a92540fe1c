#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qleak/csv.hpp"
#include "qleak/scenario.hpp"

using namespace qleak;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

// raw: args is already a full shell command
Run run(const std::string& args, bool raw = false) {
    const std::string cmd = (raw ? args : std::string(QLEAK_CLI) + " " + args) + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::vector<csv::Row> rows_of(const std::string& text) {
    std::istringstream in(text);
    return csv::read(in);
}

std::string scenario_path(const char* name) { return (fs::path(QLEAK_DATA_DIR) / "scenarios" / name).string(); }

const fs::path kData = QLEAK_DATA_DIR;

}  // namespace

TEST_CASE("scenario parsing") {
    const auto f = scenario::parse_scenario(R"({
        "seed": 4,
        "device": {"name": "d", "inter_job_gap": 0.1,
                   "from_table": {"path": "table1.csv", "backend": "qc"},
                   "circuits": {"probe": {"mean": 1.0, "variance": 0.5}}},
        "victim": {"circuit": "GHZ", "repetitions": 30},
        "probe": {"circuit": "probe", "every": 3},
        "attack": {"alpha": 0.01, "power": 0.9, "count_mode": "infer", "avg_victim": 2.7},
        "mitigations": [{"kind": "timer-noise", "added_variance": 0.2}]
    })", kData);
    CHECK(f.scenario.seed == 4);
    CHECK(f.scenario.device.circuit_timings.size() == 27);
    CHECK(f.scenario.device.timing("GHZ").mean == 2.779299043);
    CHECK(f.scenario.device.timing("GHZ").variance == 0.3);
    CHECK(f.scenario.probe_every == 3);
    REQUIRE(f.attack.table.has_value());
    CHECK(f.attack.backend == baseline::Backend::hardware);
    CHECK(f.attack.spec.alpha == 0.01);
    CHECK(f.attack.count_mode == scenario::CountMode::infer);
    CHECK(*f.attack.avg_victim == 2.7);
    REQUIRE(f.mitigations.size() == 1);
    CHECK(f.mitigations[0].added_variance == 0.2);
}

TEST_CASE("scenario errors") {
    using scenario::ConfigError;
    CHECK_THROWS_AS(scenario::parse_scenario("{", kData), ConfigError);
    CHECK_THROWS_AS(scenario::parse_scenario("[]", kData), ConfigError);
    CHECK_THROWS_AS(scenario::parse_scenario(R"({"victim": {"circuit": "a"}})", kData), ConfigError);
    CHECK_THROWS(scenario::parse_scenario(
        R"({"device": {"circuits": {"a": {"mean": 1, "variance": 0}}}, "victim": {"circuit": "a"}})", kData));
    CHECK_THROWS(scenario::parse_scenario(
        R"({"device": {"circuits": {"a": {"mean": 1, "variance": 1}}}, "victim": {"circuit": "b"}})", kData));
    CHECK_THROWS(scenario::parse_scenario(
        R"({"device": {"from_table": {"path": "missing.csv"}}, "victim": {"circuit": "a"}})", kData));
    CHECK_THROWS(scenario::load_scenario("/nonexistent/scenario.json"));
}

TEST_CASE("bundled scenarios run every attack") {
    for (auto [file, kind, expect] : std::array<std::tuple<const char*, attacks::AttackKind, const char*>, 5>{
             {{"uc.json", attacks::AttackKind::uc, "GHZ"},
              {"co.json", attacks::AttackKind::co, "i2"},
              {"ca.json", attacks::AttackKind::ca, "indistinguishable"},
              {"qm.json", attacks::AttackKind::qm, "indistinguishable"},
              {"qp.json", attacks::AttackKind::qp, "device-a"}}}) {
        INFO(file);
        const auto f = scenario::load_scenario(scenario_path(file));
        const auto out = scenario::run_attack(f, kind);
        CHECK(out.verdict.label == expect);
        const auto again = scenario::run_attack(f, kind);
        CHECK(again.verdict.statistic == out.verdict.statistic);
    }
}

TEST_CASE("cli power") {
    auto r = run("power --mu1 0.168084145 --mu2 0.163739443 --variance 0.003");
    REQUIRE(r.status == 0);
    auto rows = rows_of(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == csv::Row{"d", "alpha", "power", "t_exact", "normal_approx", "lehr"});
    CHECK(csv::parse_double(rows[1][3]) == doctest::Approx(2495.77).epsilon(1e-5));

    r = run("power --d 1");
    rows = rows_of(r.out);
    CHECK(csv::parse_double(rows[1][5]) == 16.0);

    r = run("power --d 0.281857");
    CHECK(csv::parse_double(rows_of(r.out)[1][3]) == doctest::Approx(198.56).epsilon(1e-4));

    r = run("power --d 0.5 --mc-check --trials 2000 --seed 3 --jobs 2");
    REQUIRE(r.status == 0);
    rows = rows_of(r.out);
    CHECK(rows[0].back() == "mc_power");
    CHECK(csv::parse_double(rows[1].back()) == doctest::Approx(0.8).epsilon(0.05));

    CHECK(run("power --d 0").status == 2);
    CHECK(run("power --d -1").status == 2);
    CHECK(run("power").status == 2);
}

TEST_CASE("cli reproduce-table") {
    auto r = run("reproduce-table --backend sim --table " + (kData / "table1.csv").string());
    auto rows = rows_of(r.out);
    CHECK(rows.size() == 27);
    CHECK(rows[0][0] == "name");
    // two simulator cells are irreproducible from the printed latencies
    CHECK(r.status == 1);

    const auto tmp = fs::temp_directory_path() / "qleak_cli_table.csv";
    {
        std::ofstream out(tmp);
        out << "name,sim_latency_s,qc_latency_s,sim_required,qc_required\n"
            << "a,1.0,1.0,,\nb,1.5,2.0,,\n";
    }
    r = run("reproduce-table --table " + tmp.string());
    CHECK(r.status == 0);
    {
        std::ofstream out(tmp);
        out << "name,sim_latency_s,qc_latency_s,sim_required,qc_required\n";
    }
    CHECK(run("reproduce-table --table " + tmp.string()).status == 2);
    fs::remove(tmp);
}

TEST_CASE("cli attack, simulate, matrix, mitigate") {
    auto r = run("attack --scenario " + scenario_path("uc.json") + " --attack uc");
    REQUIRE(r.status == 0);
    auto rows = rows_of(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "GHZ");
    CHECK(rows[1][2] == "2496");
    CHECK(run("attack --scenario " + scenario_path("uc.json") + " --attack uc --seed 5").out !=
          run("attack --scenario " + scenario_path("uc.json") + " --attack uc --seed 6").out);
    CHECK(run("attack --scenario " + scenario_path("uc.json") + " --attack uc --seed 5").out ==
          run("QLEAK_SEED=5 " + std::string(QLEAK_CLI) + " attack --attack uc --scenario " + scenario_path("uc.json"),
              true).out);

    const auto dir = fs::temp_directory_path() / "qleak_cli_out";
    fs::remove_all(dir);
    r = run("attack --scenario " + scenario_path("qp.json") + " --attack qp --out-dir " + dir.string());
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir / "verdict.csv"));
    CHECK(fs::exists(dir / "trace.csv"));
    REQUIRE(fs::exists(dir / "dom_device-b.csv"));
    std::ifstream dom(dir / "dom_device-b.csv");
    const auto drows = csv::read(dom);
    CHECK(drows[0] == csv::Row{"n", "dom", "band", "exceeds"});
    CHECK(drows.size() == 10);  // n = 2..10

    r = run("attack --scenario " + scenario_path("co.json") + " --attack co --out-dir " + dir.string());
    CHECK(r.status == 0);
    CHECK(fs::exists(dir / "required_matrix.csv"));
    CHECK(fs::exists(dir / "pairs.csv"));
    fs::remove_all(dir);

    CHECK(run("attack --scenario /nonexistent.json --attack uc").status == 2);
    CHECK(run("attack --scenario " + scenario_path("uc.json") + " --attack zz").status == 2);
    CHECK(run("attack --scenario " + scenario_path("uc.json") + " --attack co").status == 2);

    r = run("simulate --scenario " + scenario_path("qp.json"));
    CHECK(r.status == 0);
    CHECK(rows_of(r.out).size() == 1 + 21);

    r = run("matrix --grover --metric ovl");
    rows = rows_of(r.out);
    CHECK(rows.size() == 25);
    CHECK(csv::parse_double(rows[1][2]) > 0.99);
    r = run("matrix --backend qc --long");
    CHECK(rows_of(r.out).size() == 1 + 26 * 26);

    r = run("mitigate --scenario " + scenario_path("mitigate.json") + " --trials 20");
    REQUIRE(r.status == 0);
    rows = rows_of(r.out);
    CHECK(rows.size() == 1 + 1 + 4 + 1);
    CHECK(rows[1][0] == "none");
    CHECK(rows[1][4] == "1");

    CHECK(run("").status == 2);
    CHECK(run("bogus").status == 2);
    CHECK(run("--help").status == 0);
}
