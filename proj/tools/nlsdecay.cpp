// nlsdecay: run stationary-NLS decay scenarios from the command line.
//
//   nlsdecay spectrum  --config S.ini [--out DIR] [--stable-output]
//   nlsdecay solve     --config S.ini [--out DIR] [--force] [--stable-output]
//   nlsdecay verify    --config S.ini [--out DIR] [--force] [--stable-output]
//   nlsdecay bootstrap --dimension N --p P [--epsilon E]
//   nlsdecay batch     --config A.ini --config DIR ... [--out DIR] [--threads K]
//
// Exit status: 0 pass, 1 scientific failure, 2 configuration or usage error.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nlsdecay/nlsdecay.hpp"

namespace fs = std::filesystem;
using namespace nlsdecay;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

/// Runs one scenario file and writes its artifacts. Returns the exit status.
int run_one(const std::string& config_path, Stage stage, const RunOptions& opt,
            const std::optional<fs::path>& out_dir, std::ostream& log) {
    try {
        const ScenarioConfig cfg = load_scenario_file(config_path);
        const RunReport rep = run_scenario(cfg, stage, opt);
        if (out_dir) {
            fs::create_directories(*out_dir);
            write_file(*out_dir / cfg.report_name, rep.text());
            if (!rep.csv.empty()) write_file(*out_dir / cfg.csv_name, rep.csv);
        } else {
            log << rep.text();
        }
        std::cerr << cfg.name << ": " << rep.document.value("outcome", "") << " (status " << rep.status
                  << ")\n";
        if (rep.document.contains("error")) {
            std::cerr << "  " << rep.document["error"].get<std::string>() << "\n";
        }
        return rep.status;
    } catch (const ConfigError& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const SupercriticalError& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const SlackError& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const InvalidPotentialError& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const ClassificationError& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << config_path << ": error: " << e.what() << "\n";
    } catch (const Error& e) {
        std::cerr << config_path << ": failure: " << e.what() << "\n";
        return kScientificFailure;
    }
    return kConfigFailure;
}

std::vector<std::string> expand_configs(const std::vector<std::string>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.path().extension() == ".ini") found.push_back(entry.path().string());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

int run_bootstrap_table(int n, const std::string& p_text, const std::string& eps_text) {
    try {
        const Rational p = parse_rational(p_text);
        std::optional<Rational> eps;
        if (!eps_text.empty()) eps = parse_rational(eps_text);
        const BootstrapRun run = run_bootstrap(make_problem(n, p, eps));
        const auto& prob = run.problem;
        std::cout << "n = " << n << ", p = " << to_string(prob.p);
        if (!prob.critical) {
            std::cout << ", 2* = inf\n" << run.reason_text() << "\nk* = 0\n";
            return kPass;
        }
        std::cout << ", 2* = " << to_string(*prob.critical) << ", eps = " << to_string(prob.epsilon)
                  << ", delta = " << to_string(prob.delta())
                  << (run.delta_used ? "" : " (unused)") << ", threshold n(p-1)/2 = "
                  << to_string(prob.threshold()) << "\n";
        std::cout << std::left << std::setw(6) << "k" << std::setw(24) << "r_k" << std::setw(24)
                  << "s_k" << std::setw(24) << "q_k" << "gain_gap\n";
        for (const auto& st : run.states) {
            std::cout << std::setw(6) << st.step << std::setw(24) << to_string(st.r) << std::setw(24)
                      << to_string(st.s) << std::setw(24) << (st.q ? to_string(*st.q) : "-")
                      << (st.q ? to_string(verify_gain(prob, st)) : "-") << "\n";
        }
        std::cout << "k* = " << run.termination_index << "\n";
        return kPass;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical checks of decay for stationary nonlinear Schrodinger equations"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> configs;
    std::string out;
    bool force = false;
    bool stable = false;
    unsigned threads = 1;
    int dimension = 3;
    std::string p_text;
    std::string eps_text;

    auto add_stage = [&](const std::string& name, const std::string& help, bool solve_flags) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Scenario file")->required();
        sub->add_option("--out", out, "Output directory (report + CSV); stdout report if omitted");
        sub->add_flag("--stable-output", stable, "Omit timings so reports are byte-reproducible");
        if (solve_flags) sub->add_flag("--force", force, "Continue even if 0 lies in the essential spectrum");
        return sub;
    };
    auto* spectrum = add_stage("spectrum", "Essential spectrum, gap distance and low eigenvalues", false);
    auto* solve = add_stage("solve", "Spectrum check plus Newton solve; writes x,u,W CSV", true);
    auto* verify = add_stage("verify", "Full pipeline including decay verdicts and bootstrap ladder", true);

    auto* boot = app.add_subcommand("bootstrap", "Exact-rational integrability ladder");
    boot->add_option("-n,--dimension", dimension, "Space dimension n >= 1")->required();
    boot->add_option("-p,--p", p_text, "Growth exponent p (a or a/b)")->required();
    boot->add_option("-e,--epsilon", eps_text, "Slack eps (a/b); default half its supremum");

    auto* batch = app.add_subcommand("batch", "Run verify over several scenarios");
    batch->add_option("--config", configs, "Scenario files or directories of *.ini")->required();
    batch->add_option("--out", out, "Output directory; one subdirectory per scenario");
    batch->add_option("--threads", threads, "Concurrent scenarios")->check(CLI::PositiveNumber);
    batch->add_flag("--force", force, "Continue even if 0 lies in the essential spectrum");
    batch->add_flag("--stable-output", stable, "Omit timings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigFailure;
    }

    const RunOptions opt{force, stable};
    std::optional<fs::path> out_dir;
    if (!out.empty()) out_dir = fs::path(out);

    if (*spectrum) return run_one(config, Stage::Spectrum, opt, out_dir, std::cout);
    if (*solve) return run_one(config, Stage::Solve, opt, out_dir, std::cout);
    if (*verify) return run_one(config, Stage::Verify, opt, out_dir, std::cout);
    if (*boot) return run_bootstrap_table(dimension, p_text, eps_text);

    // batch
    const auto files = expand_configs(configs);
    std::vector<int> status(files.size(), kPass);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            std::optional<fs::path> dir;
            if (out_dir) dir = *out_dir / fs::path(files[i]).stem();
            std::ostringstream buffer;
            status[i] = run_one(files[i], Stage::Verify, opt, dir, buffer);
            if (!out_dir) {
                std::lock_guard lock(log_mutex);
                std::cout << buffer.str();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(files.size())));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int worst = kPass;
    for (std::size_t i = 0; i < files.size(); ++i) {
        std::cerr << "[" << status[i] << "] " << files[i] << "\n";
        worst = std::max(worst, status[i]);
    }
    return worst;
}
