// run configuration, experiment drivers and deterministic CSV/JSON output for the slpd tool

#pragma once

#include <openssl/evp.h>

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slpd/slpd.hpp"

namespace slpd::experiment {

using json = nlohmann::json;

enum class Model { three_boson, custom_psi, sl2_limit };

inline std::string model_name(Model m) {
    switch (m) {
    case Model::three_boson: return "three_boson";
    case Model::custom_psi: return "custom_psi";
    case Model::sl2_limit: return "sl2_limit";
    }
    return "?";
}

struct SolverFlags {
    bool exact{true};
    bool variational{true};
    bool sl2_reference{true};
};

struct DynamicsConfig {
    double tmax{100.0};
    int samples{2000};
    std::optional<std::array<std::complex<double>, 3>> alpha; // three_boson coherent input
    std::optional<std::array<int, 3>> fock;                   // three_boson Fock seed
    std::optional<int> level;                                 // custom_psi / sl2_limit seed |v>
    int ncut{20};
    double tail_bound{1e-8};
    int qmax{8};
    CollapseRevivalOptions detector;
};

struct MeanFieldConfig {
    std::optional<three_boson::BlockLabel> block;
    double p0{0.0};
    double q0{0.0};
    double dt{0.01};
    int steps{1000};
};

struct FaultConfig {
    bool enabled{false};
    std::size_t root_index{0};
    double shift{0.0};
};

struct RunConfig {
    Model model{Model::three_boson};
    three_boson::Params three_boson;      // three_boson
    HamiltonianParams params;             // custom_psi, sl2_limit
    double j{0.5};                        // sl2_limit
    StructureFunction psi;                // custom_psi
    double l0{0.0};                       // custom_psi
    int dmax{64};                         // custom_psi
    std::vector<three_boson::BlockLabel> labels;
    SolverFlags solvers;
    DynamicsConfig dynamics;
    MeanFieldConfig meanfield;
    FaultConfig fault;
    std::string stem;   // output file stem; empty means the subcommand name
    std::string digest; // SHA-256 of the canonical config document
};

// One solvable block of the configured model.
struct ModelBlock {
    std::string id;
    StructureFunction psi;
    Block block;
    HamiltonianParams params;
    std::optional<three_boson::BlockLabel> label;
};

// ---------------------------------------------------------------------------------------------
// formatting and digests

// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------------------------
// config parsing

namespace detail {

inline void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return get_number(obj, key, 0.0, where);
}

inline int get_int(const json& obj, const char* key, int fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

inline std::complex<double> get_complex(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ConfigError(where + ": expected a number or [re, im]");
}

} // namespace detail

// "k0+m2", "k3-m5"
inline three_boson::BlockLabel parse_label(const std::string& text) {
    int k = 0, m = 0;
    char sign = 0;
    std::istringstream in(text);
    char kc = 0, mc = 0;
    if (!(in >> kc >> k >> sign >> mc >> m) || kc != 'k' || mc != 'm' || (sign != '+' && sign != '-') ||
        in.peek() != std::char_traits<char>::eof() || k < 0 || m < 0)
        throw ConfigError("block label '" + text + "': expected the form k<int>(+|-)m<int>");
    return three_boson::make_label(k, sign == '+' ? three_boson::Sign::plus : three_boson::Sign::minus, m);
}

inline RunConfig parse_config(const json& doc) {
    using namespace detail;
    RunConfig cfg;
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    if (!doc.contains("model") || !doc.at("model").is_string()) throw ConfigError("config: missing string 'model'");
    const std::string model = doc.at("model").get<std::string>();

    std::vector<const char*> common{"model", "solvers", "dynamics", "meanfield", "fault", "output_stem", "g", "g_phase"};
    if (model == "three_boson") {
        cfg.model = Model::three_boson;
        common.insert(common.end(), {"omega", "blocks"});
    } else if (model == "custom_psi") {
        cfg.model = Model::custom_psi;
        common.insert(common.end(), {"a", "C", "psi"});
    } else if (model == "sl2_limit") {
        cfg.model = Model::sl2_limit;
        common.insert(common.end(), {"a", "C", "j"});
    } else {
        throw ConfigError("config: unknown model '" + model + "'");
    }
    for (const auto& [key, value] : doc.items())
        if (std::find_if(common.begin(), common.end(), [&](const char* k) { return key == k; }) == common.end())
            throw ConfigError("config: unknown key '" + key + "' for model " + model);

    const double g = get_number(doc, "g", 1.0, "config");
    const double g_phase = get_number(doc, "g_phase", 0.0, "config");
    if (g < 0.0) throw ConfigError("config.g: |g| must be nonnegative");

    if (cfg.model == Model::three_boson) {
        if (doc.contains("omega")) {
            const json& w = doc.at("omega");
            if (!w.is_array() || w.size() != 3) throw ConfigError("config.omega: expected three numbers");
            for (const auto& x : w)
                if (!x.is_number()) throw ConfigError("config.omega: expected three numbers");
            cfg.three_boson.omega1 = w[0].get<double>();
            cfg.three_boson.omega2 = w[1].get<double>();
            cfg.three_boson.omega3 = w[2].get<double>();
        }
        cfg.three_boson.g_mod = g;
        cfg.three_boson.g_phase = g_phase;
        if (doc.contains("blocks")) {
            const json& b = doc.at("blocks");
            only_keys(b, {"labels", "ncut"}, "config.blocks");
            if (b.contains("labels") == b.contains("ncut"))
                throw ConfigError("config.blocks: give exactly one of 'labels' or 'ncut'");
            if (b.contains("labels")) {
                if (!b.at("labels").is_array()) throw ConfigError("config.blocks.labels: expected an array");
                for (const auto& l : b.at("labels")) {
                    if (!l.is_string()) throw ConfigError("config.blocks.labels: expected strings");
                    cfg.labels.push_back(parse_label(l.get<std::string>()));
                }
            } else {
                const int ncut = get_int(b, "ncut", 0, "config.blocks");
                if (ncut < 0 || ncut > 200) throw ConfigError("config.blocks.ncut: expected 0..200");
                cfg.labels = three_boson::enumerate_blocks(ncut);
            }
        }
    } else {
        cfg.params.a = get_number(doc, "a", 0.0, "config");
        cfg.params.C = get_number(doc, "C", 0.0, "config");
        cfg.params.g_mod = g;
        cfg.params.g_phase = g_phase;
    }
    if (cfg.model == Model::sl2_limit) {
        cfg.j = require_number(doc, "j", "config");
        if (!(cfg.j > 0.0) || std::abs(2.0 * cfg.j - std::round(2.0 * cfg.j)) > 0.0 || cfg.j > 500.0)
            throw ConfigError("config.j: expected a positive multiple of 1/2, at most 500");
    }
    if (cfg.model == Model::custom_psi) {
        if (!doc.contains("psi")) throw ConfigError("config: missing 'psi'");
        const json& p = doc.at("psi");
        only_keys(p, {"leading", "roots", "l0", "dmax"}, "config.psi");
        if (!p.contains("roots") || !p.at("roots").is_array()) throw ConfigError("config.psi.roots: expected an array");
        std::vector<double> roots;
        for (const auto& r : p.at("roots")) {
            if (!r.is_number()) throw ConfigError("config.psi.roots: expected numbers");
            roots.push_back(r.get<double>());
        }
        cfg.psi = StructureFunction(require_number(p, "leading", "config.psi"), roots);
        cfg.l0 = require_number(p, "l0", "config.psi");
        cfg.dmax = get_int(p, "dmax", 64, "config.psi");
        if (cfg.dmax < 1 || cfg.dmax > 2000) throw ConfigError("config.psi.dmax: expected 1..2000");
    }

    if (doc.contains("solvers")) {
        const json& s = doc.at("solvers");
        if (s.is_string() && s.get<std::string>() == "all") {
            cfg.solvers = {};
        } else if (s.is_array()) {
            cfg.solvers = {false, false, false};
            for (const auto& x : s) {
                const std::string name = x.is_string() ? x.get<std::string>() : "";
                if (name == "exact") cfg.solvers.exact = true;
                else if (name == "variational") cfg.solvers.variational = true;
                else if (name == "sl2_reference") cfg.solvers.sl2_reference = true;
                else throw ConfigError("config.solvers: unknown solver '" + x.dump() + "'");
            }
        } else {
            throw ConfigError("config.solvers: expected \"all\" or an array of solver names");
        }
    }

    if (doc.contains("dynamics")) {
        const json& d = doc.at("dynamics");
        const std::string where = "config.dynamics";
        only_keys(d, {"tmax", "samples", "alpha", "fock", "level", "ncut", "tail_bound", "qmax", "window_periods",
                      "collapse_fraction", "sustain_windows", "revival_fraction"},
                  where);
        auto& dyn = cfg.dynamics;
        dyn.tmax = get_number(d, "tmax", dyn.tmax, where);
        dyn.samples = get_int(d, "samples", dyn.samples, where);
        dyn.ncut = get_int(d, "ncut", dyn.ncut, where);
        dyn.tail_bound = get_number(d, "tail_bound", dyn.tail_bound, where);
        dyn.qmax = get_int(d, "qmax", dyn.qmax, where);
        dyn.detector.window_periods = get_number(d, "window_periods", dyn.detector.window_periods, where);
        dyn.detector.collapse_fraction = get_number(d, "collapse_fraction", dyn.detector.collapse_fraction, where);
        dyn.detector.sustain_windows = get_int(d, "sustain_windows", dyn.detector.sustain_windows, where);
        dyn.detector.revival_fraction = get_number(d, "revival_fraction", dyn.detector.revival_fraction, where);
        if (!(dyn.tmax > 0.0)) throw ConfigError(where + ".tmax: must be positive");
        if (dyn.samples < static_cast<int>(dyn.detector.min_samples) || dyn.samples > 10000000)
            throw ConfigError(where + ".samples: expected at least 1000");
        if (dyn.ncut < 0 || dyn.ncut > 400) throw ConfigError(where + ".ncut: expected 0..400");
        if (dyn.qmax < 1) throw ConfigError(where + ".qmax: must be positive");
        if (!(dyn.detector.window_periods > 0.0) || dyn.detector.sustain_windows < 1)
            throw ConfigError(where + ": detector window settings must be positive");
        if (d.contains("alpha")) {
            if (cfg.model != Model::three_boson) throw ConfigError(where + ".alpha: only for the three_boson model");
            const json& a = d.at("alpha");
            if (!a.is_array() || a.size() != 3) throw ConfigError(where + ".alpha: expected three amplitudes");
            dyn.alpha = std::array<std::complex<double>, 3>{get_complex(a[0], where + ".alpha"),
                                                            get_complex(a[1], where + ".alpha"),
                                                            get_complex(a[2], where + ".alpha")};
        }
        if (d.contains("fock")) {
            if (cfg.model != Model::three_boson) throw ConfigError(where + ".fock: only for the three_boson model");
            const json& f = d.at("fock");
            if (!f.is_array() || f.size() != 3) throw ConfigError(where + ".fock: expected three occupations");
            std::array<int, 3> n{};
            for (int i = 0; i < 3; ++i) {
                if (!f[i].is_number_integer() || f[i].get<int>() < 0)
                    throw ConfigError(where + ".fock: expected nonnegative integers");
                n[i] = f[i].get<int>();
            }
            dyn.fock = n;
        }
        if (d.contains("level")) {
            if (cfg.model == Model::three_boson) throw ConfigError(where + ".level: use 'fock' for the three_boson model");
            dyn.level = get_int(d, "level", 0, where);
        }
        if (cfg.model == Model::three_boson && dyn.alpha.has_value() == dyn.fock.has_value())
            throw ConfigError(where + ": give exactly one of 'alpha' or 'fock'");
    }

    if (doc.contains("meanfield")) {
        const json& m = doc.at("meanfield");
        const std::string where = "config.meanfield";
        only_keys(m, {"block", "p0", "q0", "dt", "steps"}, where);
        auto& mf = cfg.meanfield;
        if (m.contains("block")) {
            if (cfg.model != Model::three_boson) throw ConfigError(where + ".block: only for the three_boson model");
            if (!m.at("block").is_string()) throw ConfigError(where + ".block: expected a label string");
            mf.block = parse_label(m.at("block").get<std::string>());
        }
        mf.p0 = get_number(m, "p0", mf.p0, where);
        mf.q0 = get_number(m, "q0", mf.q0, where);
        mf.dt = get_number(m, "dt", mf.dt, where);
        mf.steps = get_int(m, "steps", mf.steps, where);
        if (mf.dt == 0.0 || !std::isfinite(mf.dt)) throw ConfigError(where + ".dt: must be nonzero");
        if (mf.steps < 1 || mf.steps > 10000000) throw ConfigError(where + ".steps: expected 1..1e7");
    }

    if (doc.contains("fault")) {
        const json& f = doc.at("fault");
        only_keys(f, {"root_index", "shift"}, "config.fault");
        const int idx = get_int(f, "root_index", 0, "config.fault");
        if (idx < 0) throw ConfigError("config.fault.root_index: must be nonnegative");
        cfg.fault = {true, static_cast<std::size_t>(idx), require_number(f, "shift", "config.fault")};
    }

    if (doc.contains("output_stem")) {
        const json& s = doc.at("output_stem");
        if (!s.is_string() || s.get<std::string>().empty() ||
            s.get<std::string>().find_first_of("/\\") != std::string::npos)
            throw ConfigError("config.output_stem: expected a plain file name");
        cfg.stem = s.get<std::string>();
    }

    cfg.digest = sha256_hex(doc.dump());
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

// ---------------------------------------------------------------------------------------------
// blocks

inline ModelBlock model_block(const RunConfig& cfg, const three_boson::BlockLabel& label) {
    auto mb = three_boson::make_block(label, cfg.three_boson);
    return {label.id(), std::move(mb.psi), mb.block, mb.hamiltonian, label};
}

inline ModelBlock single_block(const RunConfig& cfg) {
    if (cfg.model == Model::sl2_limit) {
        const auto psi = StructureFunction::su2(cfg.j);
        const Block b = build_block(psi, -cfg.j, {{"j", cfg.j}}, cfg.params.C,
                                    static_cast<int>(std::llround(2.0 * cfg.j)) + 2);
        std::ostringstream id;
        id << "j" << format_double(cfg.j);
        return {id.str(), psi, b, cfg.params, std::nullopt};
    }
    try {
        const Block b = build_block(cfg.psi, cfg.l0, {}, cfg.params.C, cfg.dmax);
        return {"custom", cfg.psi, b, cfg.params, std::nullopt};
    } catch (const DomainError& e) {
        throw ConfigError(std::string("block custom: ") + e.what());
    }
}

inline std::vector<ModelBlock> configured_blocks(const RunConfig& cfg) {
    if (cfg.model != Model::three_boson) return {single_block(cfg)};
    if (cfg.labels.empty()) throw ConfigError("config.blocks: the three_boson model needs 'labels' or 'ncut'");
    std::vector<ModelBlock> out;
    for (const auto& l : cfg.labels) out.push_back(model_block(cfg, l));
    return out;
}

// ---------------------------------------------------------------------------------------------
// spectrum

struct BlockSpectrum {
    std::string id;
    int dim{0};
    bool truncated{false};
    std::vector<double> exact, variational, sl2ref;
    std::vector<double> alpha_roots;
    double alpha_selected{std::numeric_limits<double>::quiet_NaN()};
    double residual{std::numeric_limits<double>::quiet_NaN()};
    double residual_scale{std::numeric_limits<double>::quiet_NaN()};
    bool levels_ordered{true};
    std::string note;
};

inline BlockSpectrum solve_block(const ModelBlock& mb, const SolverFlags& flags) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const int d = mb.block.dim;
    BlockSpectrum out;
    out.id = mb.id;
    out.dim = d;
    out.truncated = mb.block.truncated;
    out.exact.assign(d, nan);
    out.variational.assign(d, nan);
    out.sl2ref.assign(d, nan);
    try {
        const auto tri = build_hamiltonian(mb.block, mb.psi, mb.params);
        if (flags.exact) {
            const Spectrum s = eigensolve(tri);
            for (int v = 0; v < d; ++v) out.exact[v] = s.energies[v];
        }
        if (flags.sl2_reference) {
            const Spectrum s = sl2_reference_spectrum(mb.block, mb.params);
            for (int v = 0; v < d; ++v) out.sl2ref[v] = s.energies[v];
        }
        if (flags.variational) {
            if (d == 1) {
                out.variational[0] = tri.diag[0];
                out.alpha_roots = {0.0};
                out.alpha_selected = 0.0;
                out.residual = 0.0;
                out.residual_scale = 0.0;
            } else if (mb.params.g_mod == 0.0) {
                out.note = "|g| = 0: coherent-state phase undefined, variational column left empty";
            } else {
                const auto sol = variational_spectrum(mb.block, mb.psi, mb.params);
                out.variational = sol.energies;
                for (const auto& r : sol.roots) out.alpha_roots.push_back(r.alpha);
                out.alpha_selected = sol.alpha_selected;
                for (const auto& r : sol.roots) {
                    if (r.alpha == sol.alpha_selected) {
                        out.residual = r.residual;
                        out.residual_scale = r.scale;
                    }
                }
                out.levels_ordered = sol.levels_ordered;
            }
        }
    } catch (const NumericError& e) {
        throw NumericError("block " + mb.id + ": " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError("block " + mb.id + ": " + e.what());
    }
    return out;
}

inline std::vector<BlockSpectrum> compute_spectra(const RunConfig& cfg, int jobs = 1) {
    const auto blocks = configured_blocks(cfg);
    std::vector<BlockSpectrum> out(blocks.size());
    parallel_for(blocks.size(), jobs, [&](std::size_t i) { out[i] = solve_block(blocks[i], cfg.solvers); });
    return out;
}

inline void write_spectrum_csv(std::ostream& os, const RunConfig& cfg, const std::vector<BlockSpectrum>& spectra) {
    os << "# config_sha256: " << cfg.digest << '\n';
    os << "block_id,v,E_exact,E_variational,E_sl2ref,abs_err_var,abs_err_sl2,alpha_selected,residual\n";
    for (const auto& b : spectra) {
        for (int v = 0; v < b.dim; ++v) {
            os << b.id << ',' << v << ',' << format_double(b.exact[v]) << ',' << format_double(b.variational[v]) << ','
               << format_double(b.sl2ref[v]) << ',' << format_double(std::abs(b.variational[v] - b.exact[v])) << ','
               << format_double(std::abs(b.sl2ref[v] - b.exact[v])) << ',' << format_double(b.alpha_selected) << ','
               << format_double(b.residual) << '\n';
        }
    }
}

inline json spectrum_summary(const RunConfig& cfg, const std::vector<BlockSpectrum>& spectra) {
    json blocks = json::array();
    for (const auto& b : spectra) {
        double err_var = 0.0, err_sl2 = 0.0;
        for (int v = 0; v < b.dim; ++v) {
            err_var = std::max(err_var, std::abs(b.variational[v] - b.exact[v]));
            err_sl2 = std::max(err_sl2, std::abs(b.sl2ref[v] - b.exact[v]));
        }
        json entry{{"id", b.id},
                   {"dim", b.dim},
                   {"truncated", b.truncated},
                   {"alpha_roots", b.alpha_roots},
                   {"alpha_selected", number_or_null(b.alpha_selected)},
                   {"residual", number_or_null(b.residual)},
                   {"residual_scale", number_or_null(b.residual_scale)},
                   {"levels_ordered", b.levels_ordered},
                   {"max_abs_err_var", number_or_null(err_var)},
                   {"max_abs_err_sl2", number_or_null(err_sl2)}};
        if (!b.note.empty()) entry["note"] = b.note;
        blocks.push_back(entry);
    }
    const VariationalOptions vo;
    return json{{"config_sha256", cfg.digest},
                {"model", model_name(cfg.model)},
                {"blocks", blocks},
                {"tolerances",
                 {{"alpha_grid_points", vo.grid_points},
                  {"alpha_max", vo.alpha_max},
                  {"alpha_tol", vo.alpha_tol},
                  {"root_residual_relative", 1e-10},
                  {"block_root_tolerance", kRootTolerance}}}};
}

// ---------------------------------------------------------------------------------------------
// dynamics

struct DynamicsResult {
    Signal signal;
    std::string observable; // CSV column name
    CollapseRevivalReport detector;
    double tail_deficit{0.0};
    bool tail_warning{false};
    std::size_t block_count{0};
    std::optional<std::string> incommensurability_block;
    std::optional<IncommensurabilityReport> incommensurability;
    std::optional<double> two_level_period; // 2 pi / sqrt(a^2 + 4 |g|^2 psi(l0+1))
    std::optional<double> spectral_period;  // 2 pi / (E1 - E0) from the solved seed block
};

namespace detail {

inline std::optional<IncommensurabilityReport> try_incommensurability(const Eigen::VectorXd& energies, int qmax) {
    try {
        return incommensurability_measure(std::vector<double>(energies.data(), energies.data() + energies.size()), qmax);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

} // namespace detail

inline DynamicsResult compute_dynamics(const RunConfig& cfg, int jobs = 1) {
    const auto& dyn = cfg.dynamics;
    DynamicsResult out;
    const auto times = uniform_times(dyn.tmax, dyn.samples);

    if (cfg.model == Model::three_boson && dyn.alpha) {
        three_boson::CoherentInput in{(*dyn.alpha)[0], (*dyn.alpha)[1], (*dyn.alpha)[2], dyn.ncut};
        const RabiResult rabi = rabi_signal(in, cfg.three_boson, times, jobs, dyn.tail_bound);
        out.signal = rabi.signal;
        out.observable = "n3_mean";
        out.tail_deficit = rabi.tail_deficit;
        out.tail_warning = rabi.tail_warning;
        out.block_count = rabi.blocks.size();
        // incommensurability of the most populated block with at least three levels
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < rabi.blocks.size(); ++i)
            if (rabi.blocks[i].dim() >= 3 && (!best || rabi.block_weights[i] > rabi.block_weights[*best])) best = i;
        if (best) {
            const auto mb = model_block(cfg, rabi.blocks[*best]);
            out.incommensurability_block = mb.id;
            out.incommensurability =
                detail::try_incommensurability(eigensolve(build_hamiltonian(mb.block, mb.psi, mb.params)).energies, dyn.qmax);
        }
    } else {
        ModelBlock mb;
        int v0 = 0;
        if (cfg.model == Model::three_boson) {
            if (!dyn.fock) throw ConfigError("config.dynamics: the three_boson model needs 'alpha' or 'fock'");
            const auto [label, v] = three_boson::locate((*dyn.fock)[0], (*dyn.fock)[1], (*dyn.fock)[2]);
            mb = model_block(cfg, label);
            v0 = v;
            out.observable = "n3_mean";
        } else {
            mb = single_block(cfg);
            v0 = dyn.level.value_or(0);
            if (v0 < 0 || v0 >= mb.block.dim) throw ConfigError("config.dynamics.level: outside the block");
            out.observable = "v0_mean";
        }
        const Spectrum s = eigensolve(build_hamiltonian(mb.block, mb.psi, mb.params));
        Eigen::VectorXcd c0 = Eigen::VectorXcd::Zero(mb.block.dim);
        c0[v0] = 1.0;
        Eigen::VectorXd diag(mb.block.dim);
        for (int v = 0; v < mb.block.dim; ++v)
            diag[v] = mb.label ? static_cast<double>(mb.label->m - v) : mb.block.l0 + v;
        out.signal.times = times;
        out.signal.values = observable_signal({BlockObservable{BlockPropagator(s, c0), diag}}, times, 1);
        out.block_count = 1;
        out.incommensurability_block = mb.id;
        out.incommensurability = detail::try_incommensurability(s.energies, dyn.qmax);
        if (mb.block.dim == 2) {
            const double w = mb.psi(mb.block.l0 + 1.0);
            out.two_level_period = 2.0 * M_PI / std::sqrt(mb.params.a * mb.params.a + 4.0 * mb.params.g_mod * mb.params.g_mod * w);
            out.spectral_period = 2.0 * M_PI / (s.energies[1] - s.energies[0]);
        }
    }
    out.detector = detect_collapse_revival(out.signal, dyn.detector);
    return out;
}

inline void write_dynamics_csv(std::ostream& os, const RunConfig& cfg, const DynamicsResult& r) {
    os << "# config_sha256: " << cfg.digest << '\n';
    os << "t," << r.observable << ",envelope\n";
    for (std::size_t i = 0; i < r.signal.times.size(); ++i)
        os << format_double(r.signal.times[i]) << ',' << format_double(r.signal.values[i]) << ','
           << format_double(r.detector.envelope[i]) << '\n';
}

inline json dynamics_summary(const RunConfig& cfg, const DynamicsResult& r) {
    const auto& d = r.detector;
    json incomm = nullptr;
    if (r.incommensurability) {
        const auto& m = *r.incommensurability;
        incomm = json{{"block", *r.incommensurability_block},
                      {"min_distance", m.min_distance},
                      {"pair_index", m.pair_index},
                      {"ratio", m.ratio},
                      {"p", m.p},
                      {"q", m.q},
                      {"qmax", cfg.dynamics.qmax}};
    }
    return json{{"config_sha256", cfg.digest},
                {"model", model_name(cfg.model)},
                {"observable", r.observable},
                {"blocks", r.block_count},
                {"tail_deficit", r.tail_deficit},
                {"tail_warning", r.tail_warning},
                {"oscillation", d.oscillation},
                {"carrier_period", d.oscillation ? json(d.carrier_period) : json(nullptr)},
                {"window_samples", d.window_samples},
                {"initial_envelope", d.initial_envelope},
                {"collapse_time", d.collapse_time ? json(*d.collapse_time) : json(nullptr)},
                {"revival_times", d.revival_times},
                {"incommensurability", incomm},
                {"two_level_period", r.two_level_period ? json(*r.two_level_period) : json(nullptr)},
                {"spectral_period", r.spectral_period ? json(*r.spectral_period) : json(nullptr)},
                {"detector",
                 {{"window_periods", cfg.dynamics.detector.window_periods},
                  {"collapse_fraction", cfg.dynamics.detector.collapse_fraction},
                  {"sustain_windows", cfg.dynamics.detector.sustain_windows},
                  {"revival_fraction", cfg.dynamics.detector.revival_fraction}}}};
}

// ---------------------------------------------------------------------------------------------
// mean field

struct MeanFieldResult {
    std::string block_id;
    double j{0.0};
    MeanFieldTrajectory trajectory;
    double max_energy_drift{0.0};
    std::optional<double> sl2_period;
};

inline MeanFieldResult compute_meanfield(const RunConfig& cfg) {
    ModelBlock mb;
    if (cfg.model == Model::three_boson) {
        if (!cfg.meanfield.block) throw ConfigError("config.meanfield.block: required for the three_boson model");
        mb = model_block(cfg, *cfg.meanfield.block);
    } else {
        mb = single_block(cfg);
    }
    MeanFieldResult out;
    out.block_id = mb.id;
    out.j = mb.block.j();
    try {
        out.trajectory = meanfield_trajectory(mb.block, mb.psi, mb.params, {cfg.meanfield.p0, cfg.meanfield.q0},
                                              cfg.meanfield.dt, cfg.meanfield.steps);
    } catch (const DomainError& e) {
        throw ConfigError("block " + mb.id + ": " + e.what());
    }
    const double e0 = out.trajectory.samples.front().energy;
    for (const auto& s : out.trajectory.samples) out.max_energy_drift = std::max(out.max_energy_drift, std::abs(s.energy - e0));
    if (cfg.model == Model::sl2_limit)
        out.sl2_period = 2.0 * M_PI / std::hypot(mb.params.a, 2.0 * mb.params.g_mod);
    return out;
}

inline void write_meanfield_csv(std::ostream& os, const RunConfig& cfg, const MeanFieldResult& r) {
    os << "# config_sha256: " << cfg.digest << '\n';
    os << "t,p,q,energy\n";
    for (const auto& s : r.trajectory.samples)
        os << format_double(s.t) << ',' << format_double(s.state.p) << ',' << format_double(s.state.q) << ','
           << format_double(s.energy) << '\n';
}

inline json meanfield_summary(const RunConfig& cfg, const MeanFieldResult& r) {
    const double e0 = r.trajectory.samples.front().energy;
    return json{{"config_sha256", cfg.digest},
                {"model", model_name(cfg.model)},
                {"block", r.block_id},
                {"j", r.j},
                {"steps", cfg.meanfield.steps},
                {"dt", cfg.meanfield.dt},
                {"initial_energy", e0},
                {"max_energy_drift", r.max_energy_drift},
                {"clamp_events", r.trajectory.clamp_events},
                {"sl2_period", r.sl2_period ? json(*r.sl2_period) : json(nullptr)}};
}

// ---------------------------------------------------------------------------------------------
// verification suite

struct CheckResult {
    std::string name;
    bool passed{false};
    double residual{0.0};
    double tolerance{0.0};
};

namespace detail {

inline double ladder_residual(const ModelBlock& mb, const StructureFunction& ops_psi) {
    const int d = mb.block.dim;
    const auto ops = block_operators(mb.block, ops_psi);
    OperatorMatrix psi_v0 = OperatorMatrix::Zero(d, d), psi_v1 = OperatorMatrix::Zero(d, d);
    for (int v = 0; v < d; ++v) {
        psi_v0(v, v) = mb.psi(mb.block.l0 + v);
        psi_v1(v, v) = v + 1 < d || !mb.block.truncated ? mb.psi(mb.block.l0 + v + 1) : 0.0;
    }
    OperatorMatrix minus_plus = ops.minus * ops.plus;
    if (mb.block.truncated) minus_plus(d - 1, d - 1) = 0.0;
    const double scale = std::max(1.0, mb.block.psi_scale);
    return std::max({max_abs(ops.plus * ops.minus - psi_v0), max_abs(minus_plus - psi_v1),
                     max_abs(minus_plus - ops.plus * ops.minus - (psi_v1 - psi_v0))}) /
           scale;
}

inline double su2_residual(const ModelBlock& mb) {
    const auto y = holstein_primakoff(mb.block, mb.psi);
    const int d = mb.block.dim;
    const double j = mb.block.j();
    OperatorMatrix y0 = OperatorMatrix::Zero(d, d);
    for (int v = 0; v < d; ++v) y0(v, v) = v - j;
    return std::max({max_abs(y0 * y.plus - y.plus * y0 - y.plus), max_abs(y0 * y.minus - y.minus * y0 + y.minus),
                     max_abs(y.plus * y.minus - y.minus * y.plus - 2.0 * y0)}) /
           std::max(1.0, j * j);
}

} // namespace detail

inline std::vector<CheckResult> run_verify(const RunConfig& cfg, int jobs = 1) {
    const auto blocks = configured_blocks(cfg);
    const std::size_t n = blocks.size();
    std::vector<double> ladder(n, 0.0), su2(n, 0.0), oracle(n, 0.0), eigres(n, 0.0), unitary(n, 0.0), gcs(n, 0.0),
        roots(n, 0.0);
    parallel_for(n, jobs, [&](std::size_t i) {
        const auto& mb = blocks[i];
        const int d = mb.block.dim;
        const StructureFunction ops_psi =
            cfg.fault.enabled ? mb.psi.with_root_shift(std::min(cfg.fault.root_index, mb.psi.degree() - 1), cfg.fault.shift)
                              : mb.psi;
        ladder[i] = detail::ladder_residual(mb, ops_psi);
        su2[i] = detail::su2_residual(mb);

        const auto tri = build_hamiltonian(mb.block, mb.psi, mb.params);
        const Spectrum s = eigensolve(tri);
        const auto sturm = spectral_polynomial_roots(tri);
        const double radius = std::max(s.energies.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        for (int v = 0; v < d; ++v) oracle[i] = std::max(oracle[i], std::abs(s.energies[v] - sturm[v]) / radius);
        const double norm = std::max(tri.norm(), 1.0);
        const Eigen::MatrixXd h = tri.dense();
        eigres[i] = std::max((h * s.amplitudes - s.amplitudes * s.energies.asDiagonal()).cwiseAbs().maxCoeff() / norm,
                             (s.amplitudes.transpose() * s.amplitudes - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());

        std::mt19937_64 rng(1234 + i);
        std::normal_distribution<double> gauss;
        Eigen::VectorXcd c0(d);
        for (int v = 0; v < d; ++v) c0[v] = {gauss(rng), gauss(rng)};
        c0.normalize();
        Eigen::MatrixXcd hc = h.cast<std::complex<double>>();
        const Eigen::VectorXcd c = evolve_block(s, c0, 1e3);
        // energy in the real gauge: rotate the evolved state back
        Eigen::VectorXcd c_real = c, c0_real = c0;
        for (int v = 0; v < d; ++v) {
            c_real[v] *= std::polar(1.0, -v * tri.gauge_phase);
            c0_real[v] *= std::polar(1.0, -v * tri.gauge_phase);
        }
        unitary[i] = std::max(std::abs(c.norm() - 1.0),
                              std::abs(std::real(c_real.dot(hc * c_real)) - std::real(c0_real.dot(hc * c0_real))) / norm);

        if (d <= 64) {
            for (int v = 0; v < d; ++v) gcs[i] = std::max(gcs[i], std::abs(gcs_overlaps(mb.block, v, 0.5, 0.3).squaredNorm() - 1.0));
        }
        if (d >= 2 && mb.params.g_mod > 0.0) {
            for (const auto& r : solve_alpha(mb.block, mb.psi, mb.params))
                roots[i] = std::max(roots[i], std::abs(r.residual) / std::max(r.scale, std::numeric_limits<double>::min()));
        }
    });

    // sl(2) reduction of the variational spectrum on the undeformed family
    double reduction = 0.0;
    for (int two_j = 1; two_j <= 10; ++two_j) {
        const double j = two_j / 2.0;
        const auto psi = StructureFunction::su2(j);
        const Block b = build_block(psi, -j, {}, 0.0, two_j + 2);
        for (double a : {0.0, 1.0, 3.0}) {
            for (double g : {0.5, 2.0}) {
                const HamiltonianParams p{a, g, 0.0, 0.0};
                const auto sol = variational_spectrum(b, psi, p);
                const double omega = std::hypot(a, 2.0 * g);
                for (int v = 0; v < b.dim; ++v) reduction = std::max(reduction, std::abs(sol.energies[v] - (v - j) * omega));
            }
        }
    }

    auto worst = [](const std::vector<double>& x) { return x.empty() ? 0.0 : *std::max_element(x.begin(), x.end()); };
    std::vector<CheckResult> out{
        {"ladder_identities", false, worst(ladder), 1e-10},
        {"holstein_primakoff_su2", false, worst(su2), 1e-10},
        {"oracle_equivalence", false, worst(oracle), 1e-8},
        {"eigen_residual", false, worst(eigres), 1e-10},
        {"unitarity_energy", false, worst(unitary), 1e-10},
        {"gcs_unit_norm", false, worst(gcs), 1e-10},
        {"stationary_roots", false, worst(roots), 1e-10},
        {"sl2_reduction", false, reduction, 1e-8},
    };
    for (auto& c : out) c.passed = c.residual <= c.tolerance;
    return out;
}

inline void print_verify_table(std::ostream& os, const std::vector<CheckResult>& checks, bool verbose) {
    for (const auto& c : checks) {
        os << std::left << std::setw(26) << c.name << (c.passed ? "PASS" : "FAIL");
        if (verbose) os << "  residual " << std::scientific << std::setprecision(3) << c.residual << "  tol " << c.tolerance
                        << std::defaultfloat;
        os << '\n';
    }
}

// ---------------------------------------------------------------------------------------------
// file output

inline std::string output_stem(const RunConfig& cfg, const std::string& command) {
    return cfg.stem.empty() ? command : cfg.stem;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

} // namespace slpd::experiment
