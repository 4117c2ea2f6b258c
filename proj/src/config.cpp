#include "blendimg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "blendimg/imaging.hpp"

namespace blendimg {

namespace {

using nlohmann::json;

// Field access with dotted paths and line numbers in every message.
class Reader {
public:
    Reader(YAML::Node node, std::string origin, std::string path = "")
        : node_(std::move(node)), origin_(std::move(origin)), path_(std::move(path)) {}

    bool has(const std::string &key) const { return node_.IsMap() && node_[key]; }

    Reader child(const std::string &key) const {
        if (!has(key)) fail_missing(key);
        return {node_[key], origin_, join(key)};
    }

    std::optional<Reader> optional_child(const std::string &key) const {
        if (!has(key)) return std::nullopt;
        return Reader{node_[key], origin_, join(key)};
    }

    template <class T>
    T get(const std::string &key) const {
        if (!has(key)) fail_missing(key);
        return convert<T>(key);
    }

    template <class T>
    T get_or(const std::string &key, T fallback) const {
        if (!has(key)) return fallback;
        return convert<T>(key);
    }

    Point3 point(const std::string &key) const {
        const auto v = get<std::vector<double>>(key);
        if (v.size() != 3) error(key, "expected a list of three numbers");
        return {v[0], v[1], v[2]};
    }

    Point3 point_or(const std::string &key, Point3 fallback) const { return has(key) ? point(key) : fallback; }

    std::vector<Point3> points(const std::string &key) const {
        const YAML::Node n = node_[key];
        if (!n || !n.IsSequence()) error(key, "expected a list of [x, y, z] points");
        std::vector<Point3> out;
        for (const auto &item : n) {
            std::vector<double> v;
            try {
                v = item.as<std::vector<double>>();
            } catch (const YAML::Exception &) {
                v.clear();
            }
            if (v.size() != 3) error(key, "every point must be a list of three numbers", item.Mark());
            out.push_back({v[0], v[1], v[2]});
        }
        return out;
    }

    [[noreturn]] void error(const std::string &key, const std::string &what,
                            std::optional<YAML::Mark> mark = std::nullopt) const {
        YAML::Mark m = mark ? *mark : (has(key) ? node_[key].Mark() : node_.Mark());
        std::ostringstream os;
        os << origin_;
        if (m.line >= 0) os << ':' << m.line + 1;
        os << ": field '" << join(key) << "': " << what;
        throw ValidationError(os.str());
    }

    void reject_unknown(std::initializer_list<const char *> known) const {
        if (!node_.IsMap()) return;
        for (const auto &kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (std::none_of(known.begin(), known.end(), [&](const char *s) { return k == s; }))
                error(k, "unknown field");
        }
    }

private:
    std::string join(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail_missing(const std::string &key) const {
        std::ostringstream os;
        os << origin_;
        if (node_.Mark().line >= 0) os << ':' << node_.Mark().line + 1;
        os << ": missing required field '" << join(key) << "'";
        throw ValidationError(os.str());
    }

    template <class T>
    T convert(const std::string &key) const {
        try {
            return node_[key].template as<T>();
        } catch (const YAML::Exception &) {
            error(key, "has the wrong type");
        }
    }

    YAML::Node node_;
    std::string origin_;
    std::string path_;
};

// ":line" of the deepest node along the dotted field named in a validation message.
std::string field_line(const YAML::Node &root, const std::string &message) {
    static const std::regex field("field '([^']+)'");
    std::smatch m;
    if (!std::regex_search(message, m, field)) return "";
    YAML::Node node;
    node.reset(root);
    int line = -1;
    std::stringstream path(m[1].str());
    for (std::string key; std::getline(path, key, '.');) {
        if (!node.IsMap() || !node[key]) break;
        const YAML::Node next = node[key];
        node.reset(next);
        line = node.Mark().line;
    }
    return line >= 0 ? ":" + std::to_string(line + 1) : "";
}

json point_json(const Point3 &p) { return json::array({p.x, p.y, p.z}); }

json points_json(const std::vector<Point3> &pts) {
    json a = json::array();
    for (const auto &p : pts) a.push_back(point_json(p));
    return a;
}

json data_fields(const ExperimentConfig &c) {
    json j;
    j["c0"] = c.c0;
    j["array"] = {{"radius", c.array.radius}, {"n_sources", c.array.n_sources}, {"n_receivers", c.array.n_receivers}};
    j["perturbation"] = {{"kind", to_string(c.kind)},
                         {"epsilon", c.epsilon},
                         {"alpha", c.alpha},
                         {"center", point_json(c.center)}};
    j["quadrature"] = {{"level", c.quad_level}};
    json src = {{"model", to_string(c.source)}};
    if (c.source == SourceKind::Blended) {
        src["pulse"] = {{"omega0", c.pulse.omega0}, {"bandwidth", c.pulse.bandwidth}};
        json d = {{"law", c.delays.law}};
        if (c.delays.law == "uniform") d["tau_max"] = c.delays.tau_max;
        else d["t"] = c.delays.t, d["pdf"] = c.delays.pdf;
        src["delays"] = d;
    } else {
        src["noise"] = {{"shape", to_string(c.noise.shape)},
                        {"omega0", c.noise.omega0},
                        {"bandwidth", c.noise.bandwidth},
                        {"duration", c.noise.duration}};
    }
    j["source"] = src;
    j["frequency"] = {{"grid", c.frequency.grid}, {"n_nodes", c.frequency.n_nodes}, {"period", c.frequency.period}};
    j["seed"] = c.seed;
    return j;
}

[[noreturn]] void bad(const std::string &field, const std::string &what) {
    throw ValidationError("field '" + field + "': " + what);
}

}  // namespace

DelayModel DelaySpec::model() const {
    if (law == "uniform") return DelayModel::uniform(tau_max);
    return DelayModel::tabulated(t, pdf);
}

double ExperimentConfig::eta() const {
    const double w0 = source == SourceKind::Blended ? pulse.omega0 : noise.omega0;
    return c0 / w0;
}

Perturbation ExperimentConfig::perturbation() const { return Perturbation(kind, epsilon, alpha, center); }

SphereArray ExperimentConfig::make_array() const {
    return SphereArray::fibonacci(array.radius, array.n_sources, array.n_receivers);
}

double ExperimentConfig::record_period() const {
    if (source == SourceKind::Stationary) return noise.duration;
    if (frequency.period > 0.0) return frequency.period;
    // delay spread, two array diameters and the pulse tails
    const double spread = 2.0 * delays.model().tau_max();
    return spread + 4.0 * array.radius / c0 + 12.0 / pulse.bandwidth;
}

FrequencyGrid ExperimentConfig::make_grid() const {
    const double w0 = source == SourceKind::Blended ? pulse.omega0 : noise.omega0;
    const double b = source == SourceKind::Blended ? pulse.bandwidth : noise.bandwidth;
    if (frequency.grid == "gauss_legendre") return FrequencyGrid::gauss_legendre(w0, b, frequency.n_nodes);
    return FrequencyGrid::dft_band(w0, b, record_period());
}

double ExperimentConfig::sample_interval() const {
    if (dt > 0.0) return dt;
    const double w0 = source == SourceKind::Blended ? pulse.omega0 : noise.omega0;
    const double b = source == SourceKind::Blended ? pulse.bandwidth : noise.bandwidth;
    return M_PI / (2.0 * (w0 + 4.0 * b));
}

std::vector<Point3> ExperimentConfig::image_points() const {
    const auto &s = image;
    if (s.type == "probe") {
        std::vector<Point3> pts{center};
        for (const auto &p : far_points(perturbation(), eta(), s.far_directions, s.far_offsets, s.far_radius)) pts.push_back(p);
        return pts;
    }
    if (s.type == "line") return line_grid(s.from, s.to, s.n);
    if (s.type == "plane") return plane_grid(s.center, s.u, s.v, s.half_extent, s.n);
    if (s.type == "box") return box_grid(s.center, s.half_extent, s.n);
    return s.points;
}

IntegrationMethod ExperimentConfig::integration_method() const {
    if (method == "product") return IntegrationMethod::Product;
    if (method == "axisymmetric") return IntegrationMethod::Axisymmetric;
    if (method == "qmc") return IntegrationMethod::QuasiMonteCarlo;
    return IntegrationMethod::Auto;
}

KernelModel ExperimentConfig::kernel_model() const {
    if (source == SourceKind::Blended) return KernelModel::blended(pulse, t_tau(delays.model()), make_grid());
    return KernelModel::stationary(noise, make_grid());
}

void ExperimentConfig::validate() {
    warnings.clear();
    if (!(c0 > 0.0) || !std::isfinite(c0)) bad("medium.c0", "must be positive");
    if (!(array.radius > 0.0)) bad("array.radius", "must be positive");
    if (array.n_sources < 1) bad("array.n_sources", "must be at least 1");
    if (array.n_receivers < 1) bad("array.n_receivers", "must be at least 1");
    if (!(epsilon > 0.0)) bad("perturbation.epsilon", "must be positive");
    if (!std::isfinite(alpha)) bad("perturbation.alpha", "must be finite");
    if (!center.finite()) bad("perturbation.center", "must be finite");
    if (quad_level < 1) bad("quadrature.level", "must be at least 1");
    try {
        if (source == SourceKind::Blended) {
            pulse.validate();
            (void)delays.model();
        } else {
            noise.validate();
        }
    } catch (const std::invalid_argument &e) {
        bad("source", e.what());
    }
    const double w0 = source == SourceKind::Blended ? pulse.omega0 : noise.omega0;
    const double b = source == SourceKind::Blended ? pulse.bandwidth : noise.bandwidth;
    if (!(w0 - 3.0 * b > 0.0)) bad("source", "frequency band omega0 ± 3b must lie inside positive frequencies");
    if (frequency.grid != "dft" && frequency.grid != "gauss_legendre") bad("frequency.grid", "must be dft or gauss_legendre");
    if (frequency.grid == "gauss_legendre" && source == SourceKind::Stationary)
        bad("frequency.grid", "stationary sources need the dft grid");
    if (frequency.n_nodes < 2) bad("frequency.n_nodes", "must be at least 2");
    if (frequency.period < 0.0) bad("frequency.period", "must be non-negative");
    if (source == SourceKind::Stationary && frequency.period > 0.0 && frequency.period != noise.duration)
        bad("frequency.period", "must equal the noise duration for stationary sources");
    if (dt < 0.0) bad("time.dt", "must be non-negative");

    const Perturbation p = [&] {
        try {
            return perturbation();
        } catch (const std::invalid_argument &e) {
            bad("perturbation", e.what());
        }
    }();
    if (10.0 * p.support_diameter() > array.radius)
        bad("array.radius", "the support must be small compared with the array (10 × diameter ≤ R)");

    const std::vector<std::string> types{"probe", "line", "plane", "box", "points"};
    if (std::find(types.begin(), types.end(), image.type) == types.end())
        bad("image.type", "must be one of probe, line, plane, box, points");
    if (image.type != "probe" && image.type != "points" && image.n == 0) bad("image.n", "must be positive");
    if (image.type == "points" && image.points.empty()) bad("image.points", "empty grid");
    if (realizations < 2) bad("ensemble.realizations", "must be at least 2");
    const std::vector<std::string> methods{"auto", "product", "axisymmetric", "qmc"};
    if (std::find(methods.begin(), methods.end(), method) == methods.end())
        bad("integration.method", "must be auto, product, axisymmetric or qmc");

    const SphereArray arr = make_array();
    sampling_adequate = arr.adequate_for(eta());
    if (!sampling_adequate) {
        std::ostringstream os;
        os << "sensor spacing " << arr.max_spacing() << " exceeds pi*eta = " << M_PI * eta()
           << "; discrete sums will not reproduce the continuum kernel";
        warnings.push_back(os.str());
    }
    if (source == SourceKind::Blended) {
        const double need = 2.0 * delays.model().tau_max() + 4.0 * array.radius / c0;
        if (record_period() < need) {
            std::ostringstream os;
            os << "record period " << record_period() << " is shorter than delay spread plus travel time " << need;
            warnings.push_back(os.str());
        }
    }
}

std::string ExperimentConfig::data_json() const { return data_fields(*this).dump(); }

std::string ExperimentConfig::canonical_json() const {
    json j = data_fields(*this);
    json img = {{"type", image.type}};
    if (image.type == "probe")
        img["far"] = {{"directions", image.far_directions}, {"offsets", image.far_offsets}, {"radius", image.far_radius}};
    else if (image.type == "line")
        img["from"] = point_json(image.from), img["to"] = point_json(image.to), img["n"] = image.n;
    else if (image.type == "points")
        img["points"] = points_json(image.points);
    else
        img["center"] = point_json(image.center), img["half_extent"] = image.half_extent, img["n"] = image.n;
    if (image.type == "plane") img["u"] = point_json(image.u), img["v"] = point_json(image.v);
    j["image"] = img;
    j["time"] = {{"dt", dt}};
    j["ensemble"] = {{"realizations", realizations}};
    j["integration"] = {{"method", method}};
    j["sweep"] = {{"mode", sweep.mode},
                  {"variable", sweep.variable},
                  {"values", sweep.values},
                  {"location", sweep.location},
                  {"observable", sweep.observable},
                  {"table_eta", sweep.table_eta},
                  {"table_eps_at", sweep.table_eps_at},
                  {"table_eps", sweep.table_eps},
                  {"table_eta_at", sweep.table_eta_at},
                  {"table_t_tau", sweep.table_t_tau}};
    return j.dump();
}

std::string sha256_hex(const std::string &bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical_json()); }
std::string ExperimentConfig::data_hash() const { return sha256_hex(data_json()); }

ExperimentConfig parse_config(const std::string &text, const std::string &origin) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ValidationError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap()) throw ValidationError(origin + ": top level must be a mapping");
    const Reader r(root, origin);
    r.reject_unknown({"medium", "array", "perturbation", "quadrature", "source", "frequency", "time", "image",
                      "ensemble", "seed", "output", "sweep", "integration"});
    ExperimentConfig c;

    if (auto m = r.optional_child("medium")) c.c0 = m->get_or("c0", 1.0);

    const Reader a = r.child("array");
    a.reject_unknown({"radius", "n_sources", "n_receivers"});
    c.array.radius = a.get<double>("radius");
    c.array.n_sources = a.get<std::size_t>("n_sources");
    c.array.n_receivers = a.get<std::size_t>("n_receivers");

    const Reader p = r.child("perturbation");
    p.reject_unknown({"kind", "epsilon", "alpha", "center"});
    try {
        c.kind = parse_perturbation_kind(p.get<std::string>("kind"));
    } catch (const std::invalid_argument &e) {
        p.error("kind", e.what());
    }
    c.epsilon = p.get<double>("epsilon");
    c.alpha = p.get_or("alpha", 1.0);
    c.center = p.point_or("center", {});

    if (auto q = r.optional_child("quadrature")) c.quad_level = q->get_or("level", 3);

    const Reader s = r.child("source");
    s.reject_unknown({"model", "pulse", "delays", "noise"});
    try {
        c.source = parse_source_kind(s.get<std::string>("model"));
    } catch (const std::invalid_argument &e) {
        s.error("model", e.what());
    }
    if (c.source == SourceKind::Blended) {
        const Reader pu = s.child("pulse");
        c.pulse.omega0 = pu.get<double>("omega0");
        c.pulse.bandwidth = pu.get_or("bandwidth", c.pulse.omega0 / 4.0);
        if (auto d = s.optional_child("delays")) {
            c.delays.law = d->get_or<std::string>("law", "uniform");
            if (c.delays.law == "uniform") {
                c.delays.tau_max = d->get<double>("tau_max");
            } else if (c.delays.law == "tabulated") {
                c.delays.t = d->get<std::vector<double>>("t");
                c.delays.pdf = d->get<std::vector<double>>("pdf");
            } else {
                d->error("law", "must be uniform or tabulated");
            }
            try {
                (void)c.delays.model();
            } catch (const std::invalid_argument &e) {
                d->error("law", e.what());
            }
        }
    } else {
        const Reader n = s.child("noise");
        try {
            c.noise.shape = parse_spectrum_shape(n.get_or<std::string>("shape", "gaussian"));
        } catch (const std::invalid_argument &e) {
            n.error("shape", e.what());
        }
        c.noise.omega0 = n.get<double>("omega0");
        c.noise.bandwidth = n.get_or("bandwidth", c.noise.omega0 / 4.0);
        c.noise.duration = n.get<double>("duration");
    }

    if (auto f = r.optional_child("frequency")) {
        c.frequency.grid = f->get_or<std::string>("grid", "dft");
        c.frequency.n_nodes = f->get_or<std::size_t>("n_nodes", 33);
        c.frequency.period = f->get_or("period", 0.0);
    }
    if (auto t = r.optional_child("time")) c.dt = t->get_or("dt", 0.0);

    if (auto im = r.optional_child("image")) {
        auto &g = c.image;
        g.type = im->get_or<std::string>("type", "probe");
        g.n = im->get_or<std::size_t>("n", 0);
        g.from = im->point_or("from", {});
        g.to = im->point_or("to", {});
        g.center = im->point_or("center", c.center);
        g.u = im->point_or("u", g.u);
        g.v = im->point_or("v", g.v);
        g.half_extent = im->get_or("half_extent", g.half_extent);
        if (im->has("points")) g.points = im->points("points");
        g.far_directions = im->get_or<std::size_t>("far_directions", 8);
        g.far_offsets = im->get_or<std::size_t>("far_offsets", 8);
        g.far_radius = im->get_or("far_radius", 0.5);
        if (g.type == "line" && !(im->has("from") && im->has("to"))) im->error("from", "line grids need from and to");
    }
    if (auto e = r.optional_child("ensemble")) c.realizations = e->get_or<std::size_t>("realizations", 100);
    c.seed = r.get_or<std::uint64_t>("seed", 1);
    if (auto o = r.optional_child("output")) c.out_dir = o->get_or<std::string>("dir", "out");
    if (auto i = r.optional_child("integration")) c.method = i->get_or<std::string>("method", "auto");

    if (auto sw = r.optional_child("sweep")) {
        auto &w = c.sweep;
        w.mode = sw->get_or<std::string>("mode", w.mode);
        w.variable = sw->get_or<std::string>("variable", w.variable);
        w.values = sw->get_or<std::vector<double>>("values", w.values);
        w.location = sw->get_or<std::string>("location", w.location);
        w.observable = sw->get_or<std::string>("observable", w.observable);
        w.table_eta = sw->get_or<std::vector<double>>("table_eta", w.table_eta);
        w.table_eps_at = sw->get_or("table_eps_at", w.table_eps_at);
        w.table_eps = sw->get_or<std::vector<double>>("table_eps", w.table_eps);
        w.table_eta_at = sw->get_or("table_eta_at", w.table_eta_at);
        w.table_t_tau = sw->get_or<std::vector<double>>("table_t_tau", w.table_t_tau);
    }

    try {
        c.validate();
    } catch (const ValidationError &e) {
        throw ValidationError(origin + field_line(root, e.what()) + ": " + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace blendimg
