// slpd: spectra, dynamics, mean-field trajectories and invariant checks for
// polynomial deformations of sl(2)

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "slpd/experiment.hpp"

namespace fs = std::filesystem;
namespace ex = slpd::experiment;

namespace {

enum Exit { ok = 0, verification_failed = 1, config_error = 2, numeric_failure = 3 };

struct Options {
    std::string config;
    std::string out{"."};
    int jobs{1};
    bool verbose{false};
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config, "run configuration (JSON)")->required();
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::Range(1, 1024));
    cmd->add_flag("--verbose", opt.verbose, "residuals and timings on stderr");
}

class Timer {
public:
    Timer(bool on, std::string what) : on_(on), what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        if (!on_) return;
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
        std::cerr << what_ << ": " << dt.count() << " s\n";
    }

private:
    bool on_;
    std::string what_;
    std::chrono::steady_clock::time_point start_;
};

void write_pair(const Options& opt, const std::string& stem, const std::string& csv, const std::string& json) {
    const fs::path dir(opt.out);
    fs::create_directories(dir);
    ex::write_text(dir / (stem + ".csv"), csv);
    ex::write_text(dir / (stem + ".json"), json);
    if (opt.verbose) std::cerr << "wrote " << (dir / (stem + ".csv")).string() << " and " << stem << ".json\n";
}

int cmd_spectrum(const Options& opt) {
    const auto cfg = ex::load_config(opt.config);
    Timer timer(opt.verbose, "spectrum");
    const auto spectra = ex::compute_spectra(cfg, opt.jobs);
    std::ostringstream csv;
    ex::write_spectrum_csv(csv, cfg, spectra);
    write_pair(opt, ex::output_stem(cfg, "spectrum"), csv.str(), ex::dump_json(ex::spectrum_summary(cfg, spectra)));
    return ok;
}

int cmd_dynamics(const Options& opt) {
    const auto cfg = ex::load_config(opt.config);
    Timer timer(opt.verbose, "dynamics");
    const auto res = ex::compute_dynamics(cfg, opt.jobs);
    if (res.tail_warning)
        std::cerr << "warning: truncated coherent input misses probability " << res.tail_deficit << " beyond ncut\n";
    std::ostringstream csv;
    ex::write_dynamics_csv(csv, cfg, res);
    write_pair(opt, ex::output_stem(cfg, "dynamics"), csv.str(), ex::dump_json(ex::dynamics_summary(cfg, res)));
    return ok;
}

int cmd_meanfield(const Options& opt) {
    const auto cfg = ex::load_config(opt.config);
    Timer timer(opt.verbose, "meanfield");
    const auto res = ex::compute_meanfield(cfg);
    if (res.trajectory.clamp_events > 0)
        std::cerr << "warning: p left [-j, j] and was clamped " << res.trajectory.clamp_events << " times\n";
    std::ostringstream csv;
    ex::write_meanfield_csv(csv, cfg, res);
    write_pair(opt, ex::output_stem(cfg, "meanfield"), csv.str(), ex::dump_json(ex::meanfield_summary(cfg, res)));
    return ok;
}

int cmd_verify(const Options& opt) {
    const auto cfg = ex::load_config(opt.config);
    Timer timer(opt.verbose, "verify");
    const auto checks = ex::run_verify(cfg, opt.jobs);
    ex::print_verify_table(std::cout, checks, opt.verbose);
    for (const auto& c : checks)
        if (!c.passed) return verification_failed;
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"slpd: polynomial sl(2) deformations, three-wave mixing spectra and dynamics"};
    app.require_subcommand(1);
    Options opt;
    auto* spectrum = app.add_subcommand("spectrum", "exact, variational and sl(2) reference spectra per block");
    auto* dynamics = app.add_subcommand("dynamics", "block-wise evolution and collapse/revival report");
    auto* meanfield = app.add_subcommand("meanfield", "coherent-state mean-field trajectory");
    auto* verify = app.add_subcommand("verify", "invariant checks; exit 1 on any failure");
    for (auto* cmd : {spectrum, dynamics, meanfield, verify}) add_common(cmd, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*spectrum) return cmd_spectrum(opt);
        if (*dynamics) return cmd_dynamics(opt);
        if (*meanfield) return cmd_meanfield(opt);
        return cmd_verify(opt);
    } catch (const slpd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const slpd::DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const slpd::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return numeric_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numeric_failure;
    }
}
