// qleak: timing side-channel lab for a simulated cloud quantum service.
// CSV goes to stdout, diagnostics to stderr.
// Exit status: 0 ok, 1 tolerance failure, 2 usage or input error.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qleak/attacks.hpp"
#include "qleak/baseline.hpp"
#include "qleak/cloudsim.hpp"
#include "qleak/csv.hpp"
#include "qleak/mitigations.hpp"
#include "qleak/scenario.hpp"
#include "qleak/stats.hpp"
#include "qleak/trace.hpp"

#ifndef QLEAK_DEFAULT_TABLE
#define QLEAK_DEFAULT_TABLE "data/table1.csv"
#endif

namespace fs = std::filesystem;
using namespace qleak;

namespace {

struct Options {
    std::string table = QLEAK_DEFAULT_TABLE;
    std::string backend = "both";
    double alpha = 0.05;
    double power = 0.80;
    std::optional<std::uint64_t> seed;
    std::string scenario;
    std::string attack = "uc";
    std::string out_dir;
    unsigned jobs = 1;
    bool mc_check = false;
    std::size_t trials = 0;

    // power
    std::optional<double> d, mu1, mu2, variance, sigma;
    // matrix
    bool grover = false;
    std::string metric = "required";
    bool long_form = false;

    stats::PowerSpec spec() const {
        stats::PowerSpec s{alpha, power};
        s.validate();
        return s;
    }
};

std::optional<std::uint64_t> effective_seed(const Options& o) {
    if (o.seed) return o.seed;
    if (const char* env = std::getenv("QLEAK_SEED"); env && *env) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw std::invalid_argument("QLEAK_SEED is not an unsigned integer");
        return v;
    }
    return std::nullopt;
}

scenario::ScenarioFile load(const Options& o) {
    if (o.scenario.empty()) throw std::invalid_argument("--scenario is required");
    auto f = scenario::load_scenario(o.scenario);
    if (auto s = effective_seed(o)) f.scenario.seed = *s;
    return f;
}

void write_file(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    body(out);
}

std::string file_safe(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return s;
}

int cmd_simulate(const Options& o) {
    const auto f = load(o);
    const auto log = cloudsim::run_simulation(f.scenario);
    cloudsim::write_joblog_csv(std::cout, log);
    if (log.truncated_draws > 0) std::cerr << "truncated draws: " << log.truncated_draws << '\n';
    if (!o.out_dir.empty()) {
        write_file(o.out_dir, "joblog.csv", [&](std::ostream& out) { cloudsim::write_joblog_csv(out, log); });
        const auto t = scenario::reconstruct(f, log);
        write_file(o.out_dir, "trace.csv", [&](std::ostream& out) { trace::write_trace_csv(out, t); });
    }
    return 0;
}

int cmd_attack(const Options& o) {
    const auto kind = attacks::parse_attack(o.attack);
    const auto f = load(o);
    const auto res = scenario::run_attack(f, kind);
    attacks::write_verdict_header(std::cout);
    attacks::write_verdict_row(std::cout, res.verdict);
    std::cerr << "trace: " << res.trace.durations.size() << " durations from " << res.trace.effective_samples()
              << " intervals";
    if (res.trace.invalid_intervals) std::cerr << ", " << res.trace.invalid_intervals << " invalid";
    if (res.truncated_draws) std::cerr << ", " << res.truncated_draws << " truncated draws";
    std::cerr << '\n';
    if (!o.out_dir.empty()) {
        const fs::path dir = o.out_dir;
        write_file(dir, "verdict.csv", [&](std::ostream& out) {
            attacks::write_verdict_header(out);
            attacks::write_verdict_row(out, res.verdict);
        });
        write_file(dir, "trace.csv", [&](std::ostream& out) { trace::write_trace_csv(out, res.trace); });
        for (const auto& [name, series] : res.dom)
            write_file(dir, "dom_" + file_safe(name) + ".csv",
                       [&](std::ostream& out) { scenario::write_dom_csv(out, series); });
        if (res.ovl && res.required) {
            write_file(dir, "ovl_matrix.csv", [&](std::ostream& out) { baseline::write_matrix_csv(out, *res.ovl); });
            write_file(dir, "required_matrix.csv",
                       [&](std::ostream& out) { baseline::write_matrix_csv(out, *res.required); });
            write_file(dir, "pairs.csv",
                       [&](std::ostream& out) { baseline::write_long_form_csv(out, *res.ovl, *res.required); });
        }
    }
    return 0;
}

std::vector<baseline::Backend> backends(const std::string& text) {
    if (text == "both") return {baseline::Backend::simulator, baseline::Backend::hardware};
    return {baseline::parse_backend(text)};
}

int cmd_reproduce(const Options& o) {
    const auto table = baseline::load_table(fs::path(o.table));
    const auto spec = o.spec();
    bool ok = true;
    bool header = true;
    for (auto b : backends(o.backend)) {
        const auto rows = baseline::reproduce(table, b, spec);
        std::ostringstream buf;
        baseline::write_reproduction_csv(buf, rows, b);
        std::string text = buf.str();
        if (!header) text.erase(0, text.find('\n') + 1);
        header = false;
        std::cout << text;
        for (const auto& r : rows) {
            if (r.pass) continue;
            ok = false;
            std::cerr << "out of tolerance: " << r.name << " (" << baseline::to_string(b) << ") printed "
                      << csv::format(*r.printed) << ", recomputed " << csv::format(r.recomputed) << '\n';
        }
    }
    return ok ? 0 : 1;
}

int cmd_matrix(const Options& o) {
    const auto spec = o.spec();
    std::vector<std::string> labels;
    std::vector<stats::TimingDistribution> models;
    if (o.grover) {
        baseline::GroverCalibration cal;
        if (!o.scenario.empty()) {
            const auto f = load(o);
            if (!f.grover) throw std::invalid_argument("scenario has no device.grover");
            cal = *f.grover;
        }
        for (const auto& v : baseline::grover_catalog(cal)) {
            labels.push_back(v.label());
            models.push_back(v.timing);
        }
    } else {
        const auto table = baseline::load_table(fs::path(o.table));
        const auto bs = backends(o.backend == "both" ? "sim" : o.backend);
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            labels.push_back(table.entries[i].name);
            models.push_back(table.model(i, bs.front()));
        }
    }
    if (o.long_form) {
        baseline::write_long_form_csv(std::cout, baseline::ovl_matrix(labels, models),
                                      baseline::required_matrix(labels, models, spec));
    } else if (o.metric == "ovl") {
        baseline::write_matrix_csv(std::cout, baseline::ovl_matrix(labels, models));
    } else if (o.metric == "required") {
        baseline::write_matrix_csv(std::cout, baseline::required_matrix(labels, models, spec));
    } else {
        throw std::invalid_argument("--metric must be 'required' or 'ovl'");
    }
    return 0;
}

int cmd_power(const Options& o) {
    const auto spec = o.spec();
    double d = 0.0;
    if (o.d) {
        if (o.mu1 || o.mu2) throw std::invalid_argument("give either --d or --mu1/--mu2");
        d = *o.d;
    } else {
        if (!o.mu1 || !o.mu2) throw std::invalid_argument("give --d, or --mu1 and --mu2 with --variance or --sigma");
        if (o.variance.has_value() == o.sigma.has_value()) throw std::invalid_argument("give exactly one of --variance, --sigma");
        const double sd = o.sigma ? *o.sigma : std::sqrt(*o.variance);
        if (!(sd > 0.0)) throw std::invalid_argument("spread must be positive");
        d = std::fabs(*o.mu1 - *o.mu2) / sd;
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("effect size must be positive and finite");

    const double exact = stats::required_sample_size(d, spec);
    csv::Row header{"d", "alpha", "power", "t_exact", "normal_approx", "lehr"};
    csv::Row row{csv::format(d), csv::format(spec.alpha), csv::format(spec.power), csv::format(exact),
                 csv::format(stats::normal_approx_sample_size(d, spec)), csv::format(stats::lehr_sample_size(d))};
    if (o.mc_check) {
        const auto n = static_cast<std::size_t>(std::max(2.0, std::ceil(exact)));
        const std::size_t trials = o.trials ? o.trials : 10000;
        const double p = stats::mc_power_oracle({0.0, 1.0}, {d, 1.0}, n, spec, trials, effective_seed(o).value_or(0),
                                                o.jobs);
        header.insert(header.end(), {"mc_n", "mc_trials", "mc_power"});
        row.insert(row.end(), {std::to_string(n), std::to_string(trials), csv::format(p)});
    }
    csv::write_row(std::cout, header);
    csv::write_row(std::cout, row);
    return 0;
}

int cmd_mitigate(const Options& o) {
    const auto f = load(o);
    mitigations::EvaluationSetup setup;
    setup.scenario = f.scenario;
    setup.attack = attacks::parse_attack(o.attack);
    setup.spec = f.attack.spec;
    setup.confidence = f.attack.confidence;
    setup.trials = o.trials ? o.trials : 200;
    setup.seed = f.scenario.seed;
    setup.jobs = o.jobs;
    for (const auto& d : f.reference_devices)
        if (d.name != f.scenario.device.name) setup.other_devices.push_back(d);

    mitigations::write_report_header(std::cout);
    auto emit = [&](const std::vector<mitigations::Mitigation>& ms) {
        mitigations::write_report_row(std::cout, mitigations::evaluate(ms, setup));
        std::cout.flush();
    };
    emit({});
    for (const auto& m : f.mitigations) emit({m});
    if (f.mitigations.size() > 1) emit(f.mitigations);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qleak: timing side-channel lab for cloud quantum services"};
    app.require_subcommand(1, 1);
    Options o;

    auto add_spec = [&](CLI::App* c) {
        c->add_option("--alpha", o.alpha, "significance level");
        c->add_option("--power", o.power, "target power");
    };
    auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "seed (falls back to QLEAK_SEED)"); };
    auto add_jobs = [&](CLI::App* c) { c->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber); };

    auto* sim = app.add_subcommand("simulate", "run a scenario and print the job log");
    sim->add_option("--scenario", o.scenario, "scenario JSON")->required();
    sim->add_option("--out-dir", o.out_dir, "also write joblog.csv and trace.csv here");
    add_seed(sim);

    auto* atk = app.add_subcommand("attack", "run one attack on a scenario");
    atk->add_option("--scenario", o.scenario, "scenario JSON")->required();
    atk->add_option("--attack", o.attack, "uc, co, ca, qm or qp")->check(CLI::IsMember({"uc", "co", "ca", "qm", "qp"}));
    atk->add_option("--out-dir", o.out_dir, "write verdict, trace, DoM and matrix CSVs here");
    add_seed(atk);

    auto* rep = app.add_subcommand("reproduce-table", "recompute the required-measurement columns");
    rep->add_option("--table", o.table, "baseline table CSV");
    rep->add_option("--backend", o.backend, "sim, qc or both")->check(CLI::IsMember({"sim", "qc", "both"}));
    add_spec(rep);

    auto* mat = app.add_subcommand("matrix", "pairwise required-n or OVL matrix");
    mat->add_option("--table", o.table, "baseline table CSV");
    mat->add_option("--backend", o.backend, "sim or qc")->check(CLI::IsMember({"sim", "qc"}));
    mat->add_flag("--grover", o.grover, "use the Grover oracle catalog instead of the table");
    mat->add_option("--scenario", o.scenario, "take the Grover calibration from this scenario");
    mat->add_option("--metric", o.metric, "required or ovl")->check(CLI::IsMember({"required", "ovl"}));
    mat->add_flag("--long", o.long_form, "long form i,j,ovl,required_n");
    add_spec(mat);

    auto* pow = app.add_subcommand("power", "sample size for a two-sample t-test");
    pow->add_option("--d", o.d, "standardized effect size");
    pow->add_option("--mu1", o.mu1, "first mean");
    pow->add_option("--mu2", o.mu2, "second mean");
    pow->add_option("--variance", o.variance, "common variance");
    pow->add_option("--sigma", o.sigma, "common standard deviation");
    pow->add_flag("--mc-check", o.mc_check, "Monte-Carlo power at the t-exact n");
    pow->add_option("--trials", o.trials, "Monte-Carlo trials (default 10000)");
    add_spec(pow);
    add_seed(pow);
    add_jobs(pow);

    auto* mit = app.add_subcommand("mitigate", "measurement inflation of the scenario's mitigations");
    mit->add_option("--scenario", o.scenario, "scenario JSON")->required();
    mit->add_option("--attack", o.attack, "uc, co or qp")->check(CLI::IsMember({"uc", "co", "qp"}));
    mit->add_option("--trials", o.trials, "harness trials (default 200)");
    add_seed(mit);
    add_jobs(mit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*atk) return cmd_attack(o);
        if (*rep) return cmd_reproduce(o);
        if (*mat) return cmd_matrix(o);
        if (*pow) return cmd_power(o);
        if (*mit) return cmd_mitigate(o);
    } catch (const std::exception& e) {
        std::cerr << "qleak: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
