#include "blendimg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/exceptions.h>

#include "blendimg/forward.hpp"
#include "blendimg/imaging.hpp"
#include "blendimg/sweep.hpp"

namespace blendimg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json provenance(const ExperimentConfig &cfg, const std::string &command) {
    return {{"tool", "blendimg"},
            {"command", command},
            {"config_hash", cfg.hash()},
            {"data_hash", cfg.data_hash()},
            {"seed", cfg.seed}};
}

std::string read_file(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

// CSV artifacts carry their provenance as a leading comment line.
void prepend_provenance(const fs::path &p, const json &prov) {
    write_file(p, "# " + prov.dump() + "\n" + read_file(p));
}

double resolve_length(const ExperimentConfig &cfg, const FrequencyGrid &grid) { return cfg.c0 / grid.omegas.back(); }

void log_warnings(const ExperimentConfig &cfg, std::ostream &log) {
    for (const auto &w : cfg.warnings) log << "warning: " << w << '\n';
}

ExperimentConfig with_value(ExperimentConfig cfg, const std::string &variable, double v) {
    if (variable == "eps") {
        cfg.epsilon = v;
    } else if (variable == "eta") {
        if (cfg.source == SourceKind::Blended) {
            const double ratio = cfg.pulse.bandwidth / cfg.pulse.omega0;
            cfg.pulse.omega0 = cfg.c0 / v;
            cfg.pulse.bandwidth = ratio * cfg.pulse.omega0;
        } else {
            const double ratio = cfg.noise.bandwidth / cfg.noise.omega0;
            cfg.noise.omega0 = cfg.c0 / v;
            cfg.noise.bandwidth = ratio * cfg.noise.omega0;
        }
    } else if (variable == "t_tau") {
        if (cfg.source != SourceKind::Blended) throw ValidationError("field 'sweep.variable': t_tau needs blended sources");
        cfg.delays.law = "uniform";
        cfg.delays.tau_max = v / 2.0;
    } else if (variable == "duration") {
        if (cfg.source != SourceKind::Stationary)
            throw ValidationError("field 'sweep.variable': duration needs stationary sources");
        cfg.noise.duration = v;
    } else {
        throw ValidationError("field 'sweep.variable': must be eps, eta, t_tau or duration");
    }
    cfg.validate();
    return cfg;
}

struct EnsembleSummary {
    double center_mean = 0.0, center_std = 0.0, far_mean = 0.0, far_std = 0.0;
    std::string error;
};

EnsembleSummary summarize(const ExperimentConfig &cfg, int workers) {
    EnsembleSummary s;
    try {
        ExperimentConfig c = cfg;
        c.image.type = "probe";
        const EnsembleConfig ens = make_ensemble_config(c, workers);
        const EnsembleStats st = run_ensemble(ens, c.realizations, c.seed);
        s.center_mean = st.mean[0];
        s.center_std = st.std[0];
        for (std::size_t i = 1; i < st.points.size(); ++i) {
            s.far_mean = std::max(s.far_mean, std::abs(st.mean[i]));
            s.far_std = std::max(s.far_std, st.std[i]);
        }
    } catch (const std::exception &e) {
        s.error = e.what();
    }
    return s;
}

double pick(const EnsembleSummary &s, const std::string &location, const std::string &observable) {
    if (observable == "contrast") return s.far_mean > 0.0 ? std::abs(s.center_mean) / s.far_mean : INFINITY;
    if (location == "center") return observable == "mean" ? std::abs(s.center_mean) : s.center_std;
    return observable == "mean" ? s.far_mean : s.far_std;
}

IntegralOptions integral_options(const ExperimentConfig &cfg) {
    IntegralOptions opt;
    opt.level = cfg.quad_level;
    opt.method = cfg.integration_method();
    opt.qmc_seed = derive_seed(cfg.seed, 0x716d63);
    return opt;
}

void sweep_analytic(const ExperimentConfig &cfg, const fs::path &out, int workers, std::ostream &log) {
    const auto &sw = cfg.sweep;
    const Location loc = sw.location == "far" ? Location::Far : Location::Center;
    const Observable obs = sw.observable == "std" ? Observable::Std : Observable::Mean;
    const double t_tau_cfg = cfg.source == SourceKind::Blended ? t_tau(cfg.delays.model()) : cfg.noise.duration;
    std::vector<SweepPoint> pts;
    std::vector<double> tt;
    for (double v : sw.values) {
        SweepPoint p{cfg.kind, loc, cfg.epsilon, cfg.eta()};
        double t = t_tau_cfg;
        if (sw.variable == "eps") p.eps = v;
        else if (sw.variable == "eta") p.eta = v;
        else if (sw.variable == "t_tau") t = v;
        else throw ValidationError("field 'sweep.variable': analytic sweeps take eps, eta or t_tau");
        pts.push_back(p);
        tt.push_back(t);
    }
    const IntegralOptions opt = integral_options(cfg);
    std::size_t hits = 0;
    const auto samples = evaluate_lattice(pts, opt, {}, SweepCache(out / "cache"), workers, &hits);
    log << "sweep: " << pts.size() << " points, " << hits << " from cache\n";

    const AsymptoticPrediction pred = predicted_orders(cfg.kind, loc, cfg.source);
    const Monomial &m = obs == Observable::Mean ? pred.mean : pred.std;
    const double predicted = sw.variable == "eps" ? m.eps : sw.variable == "eta" ? m.eta : m.time;
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        SweepRow r;
        r.variable = sw.variable;
        r.observable = obs;
        r.point = pts[i];
        r.t_tau = tt[i];
        r.sample = samples[i];
        r.value = obs == Observable::Mean ? r.sample.mean() : r.sample.std_at(r.t_tau);
        r.predicted_order = predicted;
        if (!r.sample.ok()) log << "point " << i << " failed: " << r.sample.error << '\n';
        rows.push_back(r);
    }
    const Relation rel = obs == Observable::Mean ? pred.mean_relation : pred.std_relation;
    const ExponentCheck c = check_exponent(rows, sw.variable, predicted, m.log_eps, rel);
    for (auto &r : rows) r.fitted_slope = c.fitted;
    write_sweep_csv(rows, out / "sweep.csv");
    prepend_provenance(out / "sweep.csv", provenance(cfg, "sweep"));
    json fit = {{"variable", c.variable}, {"predicted", c.predicted}, {"slope", c.fitted}, {"r2", c.r2}, {"pass", c.pass},
                {"provenance", provenance(cfg, "sweep")}};
    if (!c.error.empty()) fit["error"] = c.error;
    write_file(out / "fit.json", fit.dump(2) + "\n");
    log << "fitted slope " << c.fitted << " (predicted " << predicted << ")\n";
}

json ensemble_summary_json(const EnsembleSummary &s) {
    return {{"center_mean", s.center_mean}, {"center_std", s.center_std}, {"far_mean", s.far_mean}, {"far_std", s.far_std}};
}

void sweep_ensemble(const ExperimentConfig &cfg, const fs::path &out, int workers, std::ostream &log) {
    const auto &sw = cfg.sweep;
    std::vector<std::pair<double, double>> samples;
    std::ostringstream csv;
    csv << "variable,value,center_mean,center_std,far_mean,far_std,observable,status\n";
    std::vector<EnsembleSummary> sums;
    const fs::path cache = out / "cache";
    for (double v : sw.values) {
        EnsembleSummary s;
        std::string key;
        try {
            const ExperimentConfig c = with_value(cfg, sw.variable, v);
            key = sha256_hex(c.canonical_json());
            std::ifstream in(cache / (key + ".json"));
            if (in) {
                const json j = json::parse(in);
                s.center_mean = j.at("center_mean");
                s.center_std = j.at("center_std");
                s.far_mean = j.at("far_mean");
                s.far_std = j.at("far_std");
                log << "sweep: " << sw.variable << " = " << v << " from cache\n";
            } else {
                log << "sweep: " << sw.variable << " = " << v << '\n';
                s = summarize(c, workers);
                if (s.error.empty()) {
                    fs::create_directories(cache);
                    write_file(cache / (key + ".tmp"), ensemble_summary_json(s).dump() + "\n");
                    fs::rename(cache / (key + ".tmp"), cache / (key + ".json"));
                }
            }
        } catch (const ValidationError &e) {
            s.error = e.what();
        }
        const double y = pick(s, sw.location, sw.observable);
        csv << sw.variable << ',' << format_double(v) << ',' << format_double(s.center_mean) << ','
            << format_double(s.center_std) << ',' << format_double(s.far_mean) << ',' << format_double(s.far_std) << ','
            << format_double(y) << ',';
        if (s.error.empty()) {
            csv << "ok\n";
            samples.emplace_back(v, y);
        } else {
            std::string e = s.error;
            std::replace(e.begin(), e.end(), ',', ';');
            csv << "error: " << e << '\n';
            log << "point " << v << " failed: " << s.error << '\n';
        }
    }
    write_file(out / "sweep.csv", "# " + provenance(cfg, "sweep").dump() + "\n" + csv.str());
    json fit = {{"variable", sw.variable}, {"location", sw.location}, {"observable", sw.observable},
                {"provenance", provenance(cfg, "sweep")}};
    try {
        const ScalingFit f = fit_scaling(samples, sw.variable);
        fit["slope"] = f.slope;
        fit["intercept"] = f.intercept;
        fit["r2"] = f.r2;
        log << "fitted slope " << f.slope << " (r2 " << f.r2 << ")\n";
    } catch (const std::invalid_argument &e) {
        fit["error"] = e.what();
        log << "fit failed: " << e.what() << '\n';
    }
    write_file(out / "fit.json", fit.dump(2) + "\n");
}

TableLattice lattice_of(const ExperimentConfig &cfg) {
    TableLattice lat;
    lat.eta = cfg.sweep.table_eta;
    lat.eps_at = cfg.sweep.table_eps_at;
    lat.eps = cfg.sweep.table_eps;
    lat.eta_at = cfg.sweep.table_eta_at;
    lat.t_tau = cfg.sweep.table_t_tau;
    return lat;
}

// Reads the data rows of a CSV written with a provenance comment line.
std::vector<std::string> csv_rows(const fs::path &p) {
    std::istringstream in(read_file(p));
    std::vector<std::string> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

void check_stored_hash(const ExperimentConfig &cfg, const fs::path &artifact, std::ostream &log) {
    json j = json::parse(read_file(artifact));
    const json &p = j.contains("provenance") ? j["provenance"] : j.contains("meta") ? j["meta"] : j;
    const std::string stored = p.at("config_hash").get<std::string>();
    if (stored != cfg.hash())
        throw ReproducibilityError(artifact.string() + ": config hash " + stored + " does not match " + cfg.hash());
    if (p.at("seed").get<std::uint64_t>() != cfg.seed)
        throw ReproducibilityError(artifact.string() + ": seed does not match the config");
    log << "verify: " << artifact.filename().string() << " hash ok\n";
}

}  // namespace

EnsembleConfig make_ensemble_config(const ExperimentConfig &cfg, int workers) {
    EnsembleConfig e;
    e.array = cfg.make_array();
    e.pert = cfg.perturbation();
    e.grid = cfg.make_grid();
    e.quad = support_quadrature(e.pert, cfg.quad_level, resolve_length(cfg, e.grid));
    e.source = cfg.source;
    e.pulse = cfg.pulse;
    if (cfg.source == SourceKind::Blended) e.delays = cfg.delays.model();
    e.noise = cfg.noise;
    e.points = cfg.image_points();
    e.c0 = cfg.c0;
    e.workers = workers;
    return e;
}

DataMatrix forward_data(const ExperimentConfig &cfg, int workers) {
    ExperimentConfig c = cfg;
    c.image.type = "probe";
    const EnsembleConfig e = make_ensemble_config(c, workers);
    const SourceSpectra src = realization_sources(e, cfg.seed, 0);
    DataMatrix d = born_forward(e.pert, e.quad, e.array, src, e.grid, e.c0, workers);
    d.meta = provenance(cfg, "forward").dump();
    return d;
}

void cmd_forward(const ExperimentConfig &cfg, const fs::path &out, int workers, std::ostream &log) {
    log_warnings(cfg, log);
    fs::create_directories(out);
    const DataMatrix d = forward_data(cfg, workers);
    write_data_binary(d, out / "data.bin");
    write_data_csv(d, out / "data.csv");
    prepend_provenance(out / "data.csv", provenance(cfg, "forward"));
    json summary = {{"provenance", provenance(cfg, "forward")},
                    {"receivers", d.rows},
                    {"frequencies", d.n_freq()},
                    {"sampling_adequate", cfg.sampling_adequate},
                    {"warnings", cfg.warnings}};
    write_file(out / "forward.json", summary.dump(2) + "\n");
    log << "forward: " << d.rows << " receivers x " << d.n_freq() << " frequencies -> " << (out / "data.bin").string() << '\n';
}

void cmd_image(const ExperimentConfig &cfg, const fs::path &out, const fs::path &data, const std::string &method,
               int workers, std::ostream &log) {
    if (method != "spectral" && method != "correlation")
        throw ValidationError("--method must be spectral or correlation");
    log_warnings(cfg, log);
    const DataMatrix d = read_data_binary(data);
    json meta;
    try {
        meta = json::parse(d.meta);
    } catch (const json::exception &) {
        throw ValidationError(data.string() + ": data file carries no provenance");
    }
    const std::string stored = meta.value("data_hash", std::string{});
    if (stored != cfg.data_hash())
        throw ValidationError(data.string() + ": data hash " + stored + " does not match the config (" + cfg.data_hash() +
                              "); refusing to image");
    const EnsembleConfig e = make_ensemble_config(cfg, workers);
    if (e.points.empty()) throw ValidationError("field 'image': empty grid");
    validate_grid(e.points, e.array);
    const SourceSpectra src = realization_sources(e, cfg.seed, 0);
    ImageGrid img;
    if (method == "spectral") {
        img = apply_adjoint(d, e.array, src, e.points, e.grid, e.c0, workers);
    } else {
        const double T = e.grid.dft_aligned() ? e.grid.period : cfg.record_period();
        const double dt = cfg.sample_interval();
        const TraceMatrix data_t = to_time_domain(d, dt, T);
        const TraceMatrix src_t = to_time_domain(src, dt, T);
        CorrelationOptions co;
        co.workers = workers;
        img = image_via_wave_correlation(data_t, e.array, src_t, e.points, e.c0, co);
    }
    fs::create_directories(out);
    json prov = provenance(cfg, "image");
    prov["method"] = method;
    write_image_csv(img, out / "image.csv");
    prepend_provenance(out / "image.csv", prov);
    write_image_json(img, prov.dump(), out / "image.json");
    log << "image: " << img.size() << " points (" << method << ") -> " << (out / "image.csv").string() << '\n';
}

void cmd_sweep(const ExperimentConfig &cfg, const fs::path &out, bool table, int workers, std::ostream &log) {
    log_warnings(cfg, log);
    fs::create_directories(out);
    if (table) {
        const TableResult t = reproduce_table(lattice_of(cfg), integral_options(cfg), {}, SweepCache(out / "cache"), workers);
        write_sweep_csv(t.rows, out / "sweep.csv");
        prepend_provenance(out / "sweep.csv", provenance(cfg, "sweep --table"));
        json tj = json::parse(table_json(t));
        tj["provenance"] = provenance(cfg, "sweep --table");
        write_file(out / "table.json", tj.dump(2) + "\n");
        write_file(out / "table.txt", table_text(t));
        log << table_text(t);
        return;
    }
    if (cfg.sweep.values.size() < 4) throw ValidationError("field 'sweep.values': need at least four values");
    if (cfg.sweep.mode == "analytic") sweep_analytic(cfg, out, workers, log);
    else if (cfg.sweep.mode == "ensemble") sweep_ensemble(cfg, out, workers, log);
    else throw ValidationError("field 'sweep.mode': must be analytic or ensemble");
}

void cmd_stability(const ExperimentConfig &cfg, const fs::path &out, int workers, std::ostream &log) {
    log_warnings(cfg, log);
    ExperimentConfig c = cfg;
    c.image.type = "probe";
    const EnsembleConfig e = make_ensemble_config(c, workers);
    const EnsembleStats st = run_ensemble(e, c.realizations, c.seed);
    const AsymptoticPrediction pred = predicted_orders(c.kind, Location::Center, c.source);
    StabilityInputs in;
    in.center = c.center;
    in.far.assign(st.points.begin() + 1, st.points.end());
    in.eps = c.epsilon;
    in.eta = c.eta();
    in.time_scale = c.source == SourceKind::Blended ? t_tau(c.delays.model()) : c.noise.duration;
    const StabilityReport rep = stability_report(st, pred, in);

    fs::create_directories(out);
    json j = json::parse(rep.to_json());
    j["provenance"] = provenance(cfg, "stability");
    write_file(out / "stability.json", j.dump(2) + "\n");
    write_file(out / "stability.txt", rep.to_text());
    std::ostringstream csv;
    csv << "x,y,z,mean,std,mc_error\n";
    for (std::size_t i = 0; i < st.points.size(); ++i)
        csv << format_double(st.points[i].x) << ',' << format_double(st.points[i].y) << ',' << format_double(st.points[i].z)
            << ',' << format_double(st.mean[i]) << ',' << format_double(st.std[i]) << ',' << format_double(st.mc_error[i])
            << '\n';
    write_file(out / "ensemble.csv", "# " + provenance(cfg, "stability").dump() + "\n" + csv.str());
    log << rep.to_text();
}

void cmd_verify(const ExperimentConfig &cfg, const fs::path &out, int workers, std::ostream &log) {
    bool any = false;
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x766572696679ULL));
    for (const char *name : {"forward.json", "image.json", "fit.json", "table.json", "stability.json"}) {
        if (fs::exists(out / name)) {
            check_stored_hash(cfg, out / name, log);
            any = true;
        }
    }
    if (!any) throw ValidationError(out.string() + ": no artifacts to verify");

    if (fs::exists(out / "data.bin")) {
        const DataMatrix d = forward_data(cfg, workers);
        const fs::path tmp = out / "data.verify.bin";
        write_data_binary(d, tmp);
        const bool same = read_file(tmp) == read_file(out / "data.bin");
        fs::remove(tmp);
        if (!same) throw ReproducibilityError("data.bin differs from a fresh forward run");
        log << "verify: forward data reproduced byte for byte\n";
    }
    if (fs::exists(out / "sweep.csv")) {
        const auto rows = csv_rows(out / "sweep.csv");
        if (rows.empty()) throw ReproducibilityError("sweep.csv has no rows");
        const std::size_t pickrow = std::uniform_int_distribution<std::size_t>(0, rows.size() - 1)(rng);
        const auto f = split(rows[pickrow], ',');
        if (f.size() >= 14) {
            SweepPoint p;
            p.kind = parse_perturbation_kind(f[0]);
            p.location = f[1] == "far" ? Location::Far : Location::Center;
            p.eps = std::stod(f[2]);
            p.eta = std::stod(f[3]);
            const KernelSample s = evaluate_kernels(p, integral_options(cfg));
            if (f[13] != "ok") {
                log << "verify: sampled sweep row " << pickrow << " is a recorded failure\n";
            } else if (format_double(s.J1) != f[5] || format_double(s.J2) != f[6] || format_double(s.I1) != f[7]) {
                throw ReproducibilityError("sweep row " + std::to_string(pickrow) + " did not reproduce");
            } else {
                log << "verify: sweep row " << pickrow << " reproduced\n";
            }
        } else if (f.size() >= 8) {
            const double v = std::stod(f[1]);
            const EnsembleSummary s = summarize(with_value(cfg, f[0], v), workers);
            if (format_double(s.center_mean) != f[2] || format_double(s.center_std) != f[3] ||
                format_double(s.far_mean) != f[4] || format_double(s.far_std) != f[5])
                throw ReproducibilityError("ensemble sweep row " + std::to_string(pickrow) + " did not reproduce");
            log << "verify: ensemble sweep row " << pickrow << " reproduced\n";
        }
    }
    log << "verify: ok\n";
}

int run_command(const std::string &name, const CommandOptions &opt, std::ostream &log) {
    try {
        ExperimentConfig cfg = load_config(opt.config);
        if (opt.seed) {
            cfg.seed = *opt.seed;
            cfg.validate();
        }
        const fs::path out = opt.out ? *opt.out : fs::path(cfg.out_dir);
        const int workers = std::max(1, opt.workers);
        if (name == "forward") cmd_forward(cfg, out, workers, log);
        else if (name == "image") cmd_image(cfg, out, opt.data ? *opt.data : out / "data.bin", opt.method, workers, log);
        else if (name == "sweep") cmd_sweep(cfg, out, opt.table, workers, log);
        else if (name == "stability") cmd_stability(cfg, out, workers, log);
        else if (name == "verify") cmd_verify(cfg, out, workers, log);
        else throw ValidationError("unknown command '" + name + "'");
        return kExitOk;
    } catch (const ValidationError &e) {
        log << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ReproducibilityError &e) {
        log << "reproducibility check failed: " << e.what() << '\n';
        return kExitReproducibility;
    } catch (const std::invalid_argument &e) {
        log << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception &e) {
        log << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace blendimg
