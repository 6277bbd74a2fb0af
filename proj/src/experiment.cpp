#include "projlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace projlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const char* const kCommands[] = {"lyapunov", "degree",   "harmonic", "dimension",
                                 "verify-formula", "scan", "traceloci", "compare"};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw precondition_error("bad value", "key '" + key + "' expects a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    double x = parse_double(key, v);
    if (x != std::floor(x)) throw precondition_error("bad value", "key '" + key + "' expects an integer");
    return static_cast<long long>(x);
}

std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string complex_text(cplx z) { return num(z.real()) + (z.imag() < 0 ? "-" : "+") + num(std::abs(z.imag())) + "i"; }

json estimate_json(const Estimate& e) { return json::parse(e.to_json()); }

std::string cache_directory(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("PROJLAB_CACHE"); env && *env) return env;
    return cfg.cache_dir;
}

struct Outputs {
    json results = json::object();
    std::map<std::string, std::string> files;  // name -> content
};

std::string harmonic_csv(const HarmonicSample& h) {
    std::ostringstream os;
    os << std::setprecision(17) << "re,im,chart\n";
    for (const auto& p : h.points) {
        // chart 0: z1 / z2, chart 1: z2 / z1 (used near infinity).
        bool flip = std::abs(p.z2()) < std::abs(p.z1());
        cplx z = flip ? p.z2() / p.z1() : p.z1() / p.z2();
        os << z.real() << ',' << z.imag() << ',' << (flip ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::vector<TraceLocus> compute_loci(const FuchsianGroup& g, const CuspForm4& form, const ScanGrid& grid,
                                     const ExperimentConfig& cfg) {
    Rng rng = make_stream(cfg.seed, 0x10c1);
    std::vector<TraceLocus> loci;
    for (double L : cfg.locus_lengths)
        for (int k = 0; k < cfg.loci_per_length; ++k)
            loci.push_back(trace_locus(g, form, grid, random_primitive_word(g, L, rng), cfg.trace_t));
    return loci;
}

json scan_summary(const ScanGrid& grid, const ExperimentConfig& cfg) {
    json j;
    int masked = 0;
    double max_par = 0.0;
    for (std::size_t k = 0; k < grid.spec.size(); ++k) {
        if (grid.mask[k]) {
            ++masked;
            continue;
        }
        max_par = std::max(max_par, grid.parabolicity[k]);
    }
    auto density = laplacian_density(grid);
    auto floor = density_noise_floor(grid, cfg.bootstrap, cfg.seed ^ 0xb00f);
    int interior = 0, negative = 0;
    double positive_mass = 0.0;
    for (std::size_t k = 0; k < density.size(); ++k) {
        if (!std::isfinite(density[k]) || !std::isfinite(floor[k])) continue;
        ++interior;
        if (density[k] < -3.0 * floor[k]) ++negative;
        positive_mass += std::max(density[k], 0.0) * grid.spec.spacing * grid.spec.spacing;
    }
    j["cells"] = grid.spec.size();
    j["masked"] = masked;
    j["max_parabolicity_error"] = max_par;
    j["interior_cells"] = interior;
    j["negative_beyond_noise"] = negative;
    j["negative_fraction"] = interior ? static_cast<double>(negative) / interior : 0.0;
    j["positive_mass"] = positive_mass;
    j["laplacian_convention"] = "raw 5-point Laplacian / spacing^2, one 3x3 box pass; dd^c = Laplacian / (2 pi)";
    return j;
}

void run_command(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
    FuchsianGroup g = punctured_torus_group();
    CuspForm4 form = obtain_form(g, cfg);
    const std::string& cmd = cfg.command;
    ProjectiveStructure s(g, form, cfg.c);

    if (cmd == "lyapunov") {
        Representation rep = holonomy(s);
        out.results["chi"] = estimate_json(lyapunov_brownian(rep, g, cfg.T, cfg.n, cfg.dt, cfg.seed, cfg.workers));
        if (cfg.ball_n > 0) out.results["chi_ball"] = estimate_json(lyapunov_ball(rep, g, cfg.ball_R, cfg.ball_n, cfg.seed));
        out.results["parabolicity_error"] = std::abs(rep.evaluate("ABab").trace_squared() - 4.0);
    } else if (cmd == "degree") {
        PreimageCounter counter(s, cfg.R);
        Estimate d = degree_estimate(counter, cfg.R, default_centers(), default_targets());
        out.results["delta"] = estimate_json(d);
        NevanlinnaFit fit = nevanlinna_slope(counter, default_centers(), default_targets(), cfg.R - 4.0, cfg.R);
        out.results["nevanlinna"] = {{"slope", fit.slope}, {"intercept", fit.intercept},
                                     {"two_pi_delta", 6.283185307179586 * d.value}};
    } else if (cmd == "harmonic" || cmd == "dimension") {
        Representation rep = holonomy(s);
        HarmonicSample h = sample_harmonic(rep, g, cfg.harmonic_T, cfg.harmonic_n, cfg.dt, cfg.seed, "", cfg.workers);
        if (h.median_log_gap < 10.0) log << "warning: median log singular gap " << h.median_log_gap << " below 10\n";
        out.files["harmonic_points.csv"] = harmonic_csv(h);
        out.results["harmonic"] = {{"n", h.points.size()}, {"resampled", h.resampled},
                                   {"median_log_gap", h.median_log_gap}, {"T", h.T}};
        if (cmd == "dimension") {
            Estimate dim = dimension_estimate(h);
            Estimate chi = lyapunov_brownian(rep, g, cfg.T, cfg.n, cfg.dt, cfg.seed, cfg.workers);
            double bound = 1.0 / (2.0 * chi.value);
            out.results["dimension"] = estimate_json(dim);
            out.results["chi"] = estimate_json(chi);
            out.results["bound"] = bound;
            out.results["pass"] = dim.value <= bound + 0.1;
        }
    } else if (cmd == "verify-formula") {
        FormulaReport r = verify_formula(g, form, cfg);
        out.results["chi"] = estimate_json(r.chi);
        out.results["delta"] = estimate_json(r.delta);
        out.results["predicted"] = r.predicted;
        out.results["combined_stderr"] = r.combined_stderr;
        out.results["margin"] = r.margin;
        out.results["pass"] = r.pass;
    } else {
        ScanParams sp{cfg.T, cfg.dt, cfg.n, cfg.seed, cfg.workers};
        ScanGrid grid = scan(g, form, cfg.grid, sp);
        out.files["chi_grid.csv"] = scan_csv(grid);
        out.results["scan"] = scan_summary(grid, cfg);
        if (cmd == "traceloci" || cmd == "compare") {
            auto loci = compute_loci(g, form, grid, cfg);
            out.files["loci.csv"] = loci_csv(loci);
            json lj = json::array();
            for (const auto& l : loci)
                lj.push_back({{"word", l.word.word}, {"roots", l.points.size()}, {"stalled", l.stalled}});
            out.results["loci"] = lj;
            if (cmd == "compare") {
                auto report = equidistribution_compare(loci, laplacian_density(grid), cfg.grid);
                json rows = json::array();
                for (const auto& r : report.rows)
                    rows.push_back({{"word", r.word}, {"length", r.length}, {"mass", r.mass}, {"tv", r.tv}});
                out.results["equidistribution"] = {{"rows", rows}, {"spearman", report.spearman}};
            }
        }
    }
    out.results["command"] = cmd;
}

} // namespace

cplx parse_complex(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (ch != ' ') s += ch;
    auto bad = [&] { return precondition_error("bad value", "cannot parse complex number '" + text + "'"); };
    if (s.empty()) throw bad();
    if (s.back() != 'i' && s.back() != 'j') return {parse_double("c", s), 0.0};
    s.pop_back();
    // Split at the last sign that is not part of an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    std::string re = split == std::string::npos ? "0" : s.substr(0, split);
    std::string im = split == std::string::npos ? s : s.substr(split);
    if (im.empty() || im == "+") im = "1";
    if (im == "-") im = "-1";
    try {
        return {parse_double("c", re), parse_double("c", im)};
    } catch (const Error&) {
        throw bad();
    }
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << "command = " << command << '\n'
       << "c = " << complex_text(c) << '\n'
       << "T = " << num(T) << '\n'
       << "dt = " << num(dt) << '\n'
       << "n = " << n << '\n'
       << "seed = " << seed << '\n'
       << "R = " << num(R) << '\n'
       << "r_trunc = " << num(r_trunc) << '\n'
       << "workers = " << workers << '\n'
       << "ball_R = " << num(ball_R) << '\n'
       << "ball_n = " << ball_n << '\n'
       << "harmonic_T = " << num(harmonic_T) << '\n'
       << "harmonic_n = " << harmonic_n << '\n'
       << "grid_re_min = " << num(grid.origin.real()) << '\n'
       << "grid_im_min = " << num(grid.origin.imag()) << '\n'
       << "grid_spacing = " << num(grid.spacing) << '\n'
       << "grid_nx = " << grid.nx << '\n'
       << "grid_ny = " << grid.ny << '\n'
       << "locus_lengths = ";
    for (std::size_t k = 0; k < locus_lengths.size(); ++k) os << (k ? "," : "") << num(locus_lengths[k]);
    os << '\n'
       << "loci_per_length = " << loci_per_length << '\n'
       << "trace_t = " << complex_text(trace_t) << '\n'
       << "bootstrap = " << bootstrap << '\n'
       << "out = " << out_dir << '\n'
       << "cache = " << cache_dir << '\n'
       << "inject_delta = " << num(inject_delta) << '\n';
    return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw precondition_error("malformed config", "line " + std::to_string(lineno) + " has no '='");
        std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (key == "command") cfg.command = v;
        else if (key == "c") cfg.c = parse_complex(v);
        else if (key == "T") cfg.T = parse_double(key, v);
        else if (key == "dt") cfg.dt = parse_double(key, v);
        else if (key == "n") cfg.n = static_cast<int>(parse_int(key, v));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, v));
        else if (key == "R") cfg.R = parse_double(key, v);
        else if (key == "r_trunc") cfg.r_trunc = parse_double(key, v);
        else if (key == "workers") cfg.workers = static_cast<int>(parse_int(key, v));
        else if (key == "ball_R") cfg.ball_R = parse_double(key, v);
        else if (key == "ball_n") cfg.ball_n = static_cast<int>(parse_int(key, v));
        else if (key == "harmonic_T") cfg.harmonic_T = parse_double(key, v);
        else if (key == "harmonic_n") cfg.harmonic_n = static_cast<int>(parse_int(key, v));
        else if (key == "grid_re_min") cfg.grid.origin.real(parse_double(key, v));
        else if (key == "grid_im_min") cfg.grid.origin.imag(parse_double(key, v));
        else if (key == "grid_spacing") cfg.grid.spacing = parse_double(key, v);
        else if (key == "grid_nx") cfg.grid.nx = static_cast<int>(parse_int(key, v));
        else if (key == "grid_ny") cfg.grid.ny = static_cast<int>(parse_int(key, v));
        else if (key == "locus_lengths") {
            cfg.locus_lengths.clear();
            std::istringstream ls(v);
            std::string item;
            while (std::getline(ls, item, ',')) cfg.locus_lengths.push_back(parse_double(key, trim(item)));
        } else if (key == "loci_per_length") cfg.loci_per_length = static_cast<int>(parse_int(key, v));
        else if (key == "trace_t") cfg.trace_t = parse_complex(v);
        else if (key == "bootstrap") cfg.bootstrap = static_cast<int>(parse_int(key, v));
        else if (key == "out") cfg.out_dir = v;
        else if (key == "cache") cfg.cache_dir = v;
        else if (key == "inject_delta") cfg.inject_delta = parse_double(key, v);
        else throw precondition_error("unknown key", "config key '" + key + "' is not recognized");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw precondition_error("missing config", "cannot read config file " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return parse_config(os.str());
}

void validate(const ExperimentConfig& cfg) {
    auto require = [](bool ok, const char* code, const std::string& what) {
        if (!ok) throw precondition_error(code, what);
    };
    bool known = false;
    for (const char* c : kCommands) known = known || cfg.command == c;
    require(known, "unknown command", "command '" + cfg.command + "' is not one of the supported pipelines");
    require(std::isfinite(cfg.c.real()) && std::isfinite(cfg.c.imag()), "c out of range", "c must be finite");
    require(cfg.T > 0.0 && cfg.T <= 1e4, "T out of range", "T must satisfy 0 < T <= 1e4");
    require(cfg.dt > 0.0 && cfg.dt <= 0.01, "dt out of range", "dt must satisfy 0 < dt <= 0.01");
    require(cfg.n >= 2, "n out of range", "n must be at least 2");
    require(cfg.R >= 6.0 && cfg.R <= 12.0, "R out of range", "R must satisfy 6 <= R <= 12");
    require(cfg.r_trunc >= 6.0 && cfg.r_trunc <= 16.0, "r_trunc out of range", "r_trunc must satisfy 6 <= r_trunc <= 16");
    require(cfg.workers >= 1 && cfg.workers <= 256, "workers out of range", "workers must satisfy 1 <= workers <= 256");
    require(cfg.ball_R > 0.0 && cfg.ball_R <= 14.0, "ball_R out of range", "ball_R must satisfy 0 < ball_R <= 14");
    require(cfg.ball_n >= 0, "ball_n out of range", "ball_n must be nonnegative");
    require(cfg.harmonic_T > 0.0 && cfg.harmonic_T <= 1e4, "harmonic_T out of range", "harmonic_T must satisfy 0 < harmonic_T <= 1e4");
    require(cfg.harmonic_n >= 1, "harmonic_n out of range", "harmonic_n must be positive");
    require(cfg.command != "dimension" || cfg.harmonic_n >= 2000, "harmonic_n out of range",
            "dimension needs harmonic_n >= 2000");
    require(cfg.grid.spacing > 0.0, "grid_spacing out of range", "grid_spacing must be positive");
    require(cfg.grid.nx >= 1 && cfg.grid.nx <= 101 && cfg.grid.ny >= 1 && cfg.grid.ny <= 101, "grid too large",
            "grid_nx and grid_ny must lie in [1, 101]");
    require(!cfg.locus_lengths.empty(), "locus_lengths empty", "locus_lengths needs at least one value");
    for (double L : cfg.locus_lengths) require(L > 0.0 && L <= 12.0, "locus length out of range", "locus lengths must lie in (0, 12]");
    require(cfg.loci_per_length >= 1, "loci_per_length out of range", "loci_per_length must be positive");
    require(cfg.bootstrap >= 2, "bootstrap out of range", "bootstrap must be at least 2");
    require(!cfg.out_dir.empty(), "out empty", "output directory must be set");
}

CuspForm4 obtain_form(const FuchsianGroup& g, const ExperimentConfig& cfg) {
    std::string dir = cache_directory(cfg);
    std::string file;
    if (!dir.empty()) {
        file = (fs::path(dir) / ("form_r" + num(cfg.r_trunc) + ".json")).string();
        if (fs::exists(file)) {
            try {
                return load_form(g, read_file(file));
            } catch (const Error&) {
                // Rebuild below and overwrite the unusable entry.
            }
        }
    }
    CuspForm4 form = build(g, cfg.r_trunc);
    if (!file.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        std::ofstream os(file + ".tmp", std::ios::binary);
        os << form.to_json();
        os.close();
        if (os) fs::rename(file + ".tmp", file, ec);
    }
    return form;
}

FormulaReport verify_formula(const FuchsianGroup& g, const CuspForm4& form, const ExperimentConfig& cfg) {
    ProjectiveStructure s(g, form, cfg.c);
    Representation rep = holonomy(s);
    FormulaReport r;
    r.chi = lyapunov_brownian(rep, g, cfg.T, cfg.n, cfg.dt, cfg.seed, cfg.workers);
    if (cfg.inject_delta >= 0.0) {
        r.delta.value = cfg.inject_delta;
        r.delta.n = 1;
        r.delta.notes["injected"] = "true";
    } else {
        r.delta = degree_estimate(s, cfg.R, default_centers(), default_targets());
    }
    r.predicted = predict_chi(r.delta.value, 0);
    r.combined_stderr = std::hypot(r.chi.stderr_, 6.283185307179586 * r.delta.stderr_);
    r.margin = 3.0 * r.combined_stderr - std::abs(r.chi.value - r.predicted);
    r.pass = r.margin >= 0.0;
    return r;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    auto start = std::chrono::steady_clock::now();
    Outputs out;
    try {
        validate(cfg);
        run_command(cfg, out, log);
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        log << "error: numerical failure: " << e.what() << '\n';
        return 3;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = "projlab";
    manifest["version"] = "0.1.0";
    manifest["command"] = cfg.command;
    manifest["config"] = cfg.to_text();
    manifest["seed"] = cfg.seed;
    manifest["wall_time_s"] = wall;
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    manifest["timestamp"] = stamp;
    json files = json::array({"results.json"});
    for (const auto& [name, content] : out.files) files.push_back(name);
    manifest["files"] = files;
    manifest["columns"] = {{"chi_grid.csv", {"re_c", "im_c", "chi", "stderr", "mask"}},
                           {"loci.csv", {"re_c", "im_c", "mult", "word", "t"}},
                           {"harmonic_points.csv", {"re", "im", "chart"}}};

    try {
        fs::create_directories(cfg.out_dir);
        auto write = [&](const std::string& name, const std::string& content) {
            std::ofstream os(fs::path(cfg.out_dir) / name, std::ios::binary);
            os << content;
            if (!os) throw precondition_error("unwritable output", "cannot write " + name + " in " + cfg.out_dir);
        };
        write("results.json", out.results.dump(2) + "\n");
        for (const auto& [name, content] : out.files) write(name, content);
        write("manifest.json", manifest.dump(2) + "\n");
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        log << "error: unwritable output: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace projlab
