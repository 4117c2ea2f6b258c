#include "blendimg/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "blendimg/config.hpp"
#include "blendimg/imaging.hpp"
#include "parallel.hpp"

namespace blendimg {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double KernelSample::std_at(double t_tau) const { return std::sqrt(std::max(0.0, J1 + J2) / t_tau); }

KernelSample evaluate_kernels(const SweepPoint &p, const IntegralOptions &opt, const FarSpec &far) {
    KernelSample s;
    try {
        const Perturbation pert(p.kind, p.eps);
        std::vector<Point3> pts;
        if (p.location == Location::Center) pts.push_back(pert.center);
        else pts = far_points(pert, p.eta, far.directions, far.offsets, far.radius);
        double best = -1.0;
        for (const auto &x : pts) {
            s.I1 = std::max(s.I1, std::abs(i1_integral(pert, x, p.eta, opt)));
            const I2Result r = i2_integral(pert, x, p.eta, opt);
            if (r.J1 + r.J2 > best) {
                best = r.J1 + r.J2;
                s.J1 = r.J1;
                s.J2 = r.J2;
                s.J1_error = r.J1_error;
                s.method = to_string(r.method);
            }
        }
    } catch (const std::exception &e) {
        s.error = e.what();
        if (s.error.empty()) s.error = "unknown failure";
    }
    return s;
}

std::string SweepCache::key(const SweepPoint &p, const IntegralOptions &opt, const FarSpec &far) const {
    json j = {{"kind", to_string(p.kind)},
              {"location", to_string(p.location)},
              {"eps", p.eps},
              {"eta", p.eta},
              {"level", opt.level},
              {"method", to_string(opt.method)},
              {"qmc_points", opt.qmc_points},
              {"qmc_seed", opt.qmc_seed}};
    if (p.location == Location::Far)
        j["far"] = {{"directions", far.directions}, {"offsets", far.offsets}, {"radius", far.radius}};
    return sha256_hex(j.dump());
}

std::optional<KernelSample> SweepCache::load(const std::string &key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
        const json j = json::parse(in);
        KernelSample s;
        s.I1 = j.at("I1").get<double>();
        s.J1 = j.at("J1").get<double>();
        s.J2 = j.at("J2").get<double>();
        s.J1_error = j.at("J1_error").get<double>();
        s.method = j.at("method").get<std::string>();
        return s;
    } catch (const json::exception &) {
        return std::nullopt;
    }
}

void SweepCache::store(const std::string &key, const KernelSample &s) const {
    if (!enabled() || !s.ok()) return;
    std::filesystem::create_directories(dir_);
    const json j = {{"I1", s.I1}, {"J1", s.J1}, {"J2", s.J2}, {"J1_error", s.J1_error}, {"method", s.method}};
    // write then rename so an interrupted run never leaves a partial entry
    const auto tmp = dir_ / (key + ".tmp");
    {
        std::ofstream out(tmp);
        out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, dir_ / (key + ".json"));
}

std::vector<KernelSample> evaluate_lattice(const std::vector<SweepPoint> &pts, const IntegralOptions &opt,
                                           const FarSpec &far, const SweepCache &cache, int workers,
                                           std::size_t *cache_hits) {
    std::vector<KernelSample> out(pts.size());
    std::vector<std::string> keys(pts.size());
    std::vector<std::size_t> todo;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        keys[i] = cache.key(pts[i], opt, far);
        if (auto s = cache.load(keys[i])) {
            out[i] = *s;
            ++hits;
        } else {
            todo.push_back(i);
        }
    }
    detail::parallel_for(todo.size(), workers, [&](std::size_t k) {
        const std::size_t i = todo[k];
        out[i] = evaluate_kernels(pts[i], opt, far);
        cache.store(keys[i], out[i]);
    });
    if (cache_hits) *cache_hits = hits;
    return out;
}

std::string to_string(Observable o) { return o == Observable::Mean ? "mean" : "std"; }

bool TableRow::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const ExponentCheck &c) { return c.pass; });
}

bool TableResult::all_pass() const {
    return !table.empty() && std::all_of(table.begin(), table.end(), [](const TableRow &r) { return r.pass(); });
}

ExponentCheck check_exponent(const std::vector<SweepRow> &rows, const std::string &variable, double predicted,
                             double log_eps_power, Relation rel) {
    ExponentCheck c;
    c.variable = variable;
    c.predicted = predicted;
    std::vector<std::pair<double, double>> samples;
    for (const auto &r : rows) {
        if (r.variable != variable || !r.sample.ok()) continue;
        double x = variable == "eps" ? r.point.eps : variable == "eta" ? r.point.eta : r.t_tau;
        double y = r.value;
        if (variable == "eps" && log_eps_power != 0.0) y /= std::pow(std::abs(std::log(r.point.eps)), log_eps_power);
        samples.emplace_back(x, y);
    }
    try {
        const ScalingFit f = fit_scaling(samples, variable);
        c.fitted = f.slope;
        c.r2 = f.r2;
        c.pass = rel == Relation::Equivalent ? std::abs(f.slope - predicted) <= kExponentTolerance
                                             : f.slope >= predicted - kExponentTolerance;
    } catch (const std::invalid_argument &e) {
        c.error = e.what();
        c.pass = false;
    }
    return c;
}

namespace {

double exponent_of(const Monomial &m, const std::string &variable) {
    if (variable == "eps") return m.eps;
    if (variable == "eta") return m.eta;
    return m.time;
}

}  // namespace

TableResult reproduce_table(const TableLattice &lat, const IntegralOptions &opt, const FarSpec &far,
                            const SweepCache &cache, int workers) {
    const PerturbationKind kinds[] = {PerturbationKind::Ball, PerturbationKind::Cylinder, PerturbationKind::Disc};
    const Location locs[] = {Location::Center, Location::Far};

    // unique lattice points, deduplicated on (kind, location, eps, eta)
    std::vector<SweepPoint> pts;
    std::map<std::tuple<int, int, double, double>, std::size_t> index;
    auto add = [&](const SweepPoint &p) {
        const auto k = std::make_tuple(static_cast<int>(p.kind), static_cast<int>(p.location), p.eps, p.eta);
        auto it = index.find(k);
        if (it != index.end()) return it->second;
        index.emplace(k, pts.size());
        pts.push_back(p);
        return pts.size() - 1;
    };
    struct Pending {
        std::string variable;
        std::size_t point;
        double t_tau;
    };
    std::vector<std::vector<Pending>> per_case;
    const double t_ref = lat.t_tau.empty() ? 1.0 : lat.t_tau.front();
    for (auto kind : kinds) {
        for (auto loc : locs) {
            std::vector<Pending> v;
            for (double eta : lat.eta) v.push_back({"eta", add({kind, loc, lat.eps_at, eta}), t_ref});
            for (double eps : lat.eps) v.push_back({"eps", add({kind, loc, eps, lat.eta_at}), t_ref});
            for (double tt : lat.t_tau) v.push_back({"t_tau", add({kind, loc, lat.eps_at, lat.eta_at}), tt});
            per_case.push_back(std::move(v));
        }
    }
    const std::vector<KernelSample> samples = evaluate_lattice(pts, opt, far, cache, workers);

    TableResult res;
    std::size_t case_id = 0;
    for (auto kind : kinds) {
        for (auto loc : locs) {
            const AsymptoticPrediction pred = predicted_orders(kind, loc, SourceKind::Blended);
            for (auto obs : {Observable::Mean, Observable::Std}) {
                const Monomial &m = obs == Observable::Mean ? pred.mean : pred.std;
                const Relation rel = obs == Observable::Mean ? pred.mean_relation : pred.std_relation;
                std::vector<SweepRow> rows;
                for (const auto &pd : per_case[case_id]) {
                    SweepRow r;
                    r.variable = pd.variable;
                    r.observable = obs;
                    r.point = pts[pd.point];
                    r.t_tau = pd.t_tau;
                    r.sample = samples[pd.point];
                    r.value = obs == Observable::Mean ? r.sample.mean() : r.sample.std_at(r.t_tau);
                    r.predicted_order = exponent_of(m, pd.variable);
                    rows.push_back(r);
                }
                TableRow t;
                t.kind = kind;
                t.location = loc;
                t.observable = obs;
                t.relation = rel;
                t.predicted = m.str(SourceKind::Blended);
                for (const char *var : {"eps", "eta", "t_tau"}) {
                    t.checks.push_back(check_exponent(rows, var, exponent_of(m, var), m.log_eps, rel));
                    for (auto &r : rows)
                        if (r.variable == var) r.fitted_slope = t.checks.back().fitted;
                }
                res.table.push_back(t);
                res.rows.insert(res.rows.end(), rows.begin(), rows.end());
            }
            ++case_id;
        }
    }
    return res;
}

void write_sweep_csv(const std::vector<SweepRow> &rows, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "kind,location,eps,eta,T_tau,J1,J2,I1,predicted_order,fitted_slope,variable,observable,value,status\n";
    for (const auto &r : rows) {
        out << to_string(r.point.kind) << ',' << to_string(r.point.location) << ',' << format_double(r.point.eps) << ','
            << format_double(r.point.eta) << ',' << format_double(r.t_tau) << ',' << format_double(r.sample.J1) << ','
            << format_double(r.sample.J2) << ',' << format_double(r.sample.I1) << ',' << format_double(r.predicted_order)
            << ',' << format_double(r.fitted_slope) << ',' << r.variable << ',' << to_string(r.observable) << ','
            << format_double(r.value) << ',';
        if (r.sample.ok()) {
            out << "ok";
        } else {
            std::string e = r.sample.error;
            std::replace(e.begin(), e.end(), ',', ';');
            std::replace(e.begin(), e.end(), '\n', ' ');
            out << "error: " << e;
        }
        out << '\n';
    }
}

std::string table_json(const TableResult &t) {
    json rows = json::array();
    for (const auto &r : t.table) {
        json checks = json::array();
        for (const auto &c : r.checks) {
            json jc = {{"variable", c.variable}, {"predicted", c.predicted}, {"fitted", c.fitted}, {"r2", c.r2}, {"pass", c.pass}};
            if (!c.error.empty()) jc["error"] = c.error;
            checks.push_back(jc);
        }
        rows.push_back({{"kind", to_string(r.kind)},
                        {"location", to_string(r.location)},
                        {"observable", to_string(r.observable)},
                        {"relation", to_string(r.relation)},
                        {"predicted", r.predicted},
                        {"checks", checks},
                        {"pass", r.pass()}});
    }
    return json{{"rows", rows}, {"tolerance", kExponentTolerance}, {"pass", t.all_pass()}}.dump(2);
}

std::string table_text(const TableResult &t) {
    std::ostringstream os;
    char line[200];
    std::snprintf(line, sizeof line, "%-9s %-7s %-5s %-3s %-28s %8s %8s %8s  %s\n", "kind", "where", "obs", "rel",
                  "predicted", "eps", "eta", "time", "result");
    os << line;
    for (const auto &r : t.table) {
        double f[3] = {NAN, NAN, NAN};
        for (std::size_t i = 0; i < r.checks.size() && i < 3; ++i)
            if (r.checks[i].error.empty()) f[i] = r.checks[i].fitted;
        std::snprintf(line, sizeof line, "%-9s %-7s %-5s %-3s %-28s %8.3f %8.3f %8.3f  %s\n", to_string(r.kind).c_str(),
                      to_string(r.location).c_str(), to_string(r.observable).c_str(), to_string(r.relation).c_str(),
                      r.predicted.c_str(), f[0], f[1], f[2], r.pass() ? "PASS" : "FAIL");
        os << line;
    }
    return os.str();
}

}  // namespace blendimg
