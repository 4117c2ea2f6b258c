#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "blendimg/commands.hpp"
#include "blendimg/forward.hpp"

using namespace blendimg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char *kBase = R"(medium:
  c0: 1.0
array:
  radius: 2.0
  n_sources: 40
  n_receivers: 40
perturbation:
  kind: ball
  epsilon: 0.05
  alpha: ALPHA
source:
  model: blended
  pulse:
    omega0: 6.0
    bandwidth: 1.5
  delays:
    law: uniform
    tau_max: 2.0
image:
  type: probe
  far_directions: 2
  far_offsets: 4
ensemble:
  realizations: 4
seed: 11
sweep:
  mode: analytic
  variable: eps
  values: [0.001, 0.002, 0.004, 0.008]
  location: center
  observable: mean
)";

std::string base_config(const std::string &alpha = "1.0") {
    std::string s = kBase;
    s.replace(s.find("ALPHA"), 5, alpha);
    return s;
}

struct Workspace {
    fs::path dir;
    explicit Workspace(const std::string &name) : dir(fs::temp_directory_path() / ("blendimg_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }

    fs::path config(const std::string &text, const std::string &name = "exp.yaml") const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string &cmd, const fs::path &cfg, const fs::path &out, std::string *log = nullptr,
        const std::string &method = "spectral", std::optional<fs::path> data = {}) {
    CommandOptions o;
    o.config = cfg;
    o.out = out;
    o.method = method;
    o.data = data;
    std::ostringstream os;
    const int code = run_command(cmd, o, os);
    if (log) *log = os.str();
    return code;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("missing fields are named and exit with the validation code") {
    Workspace w("missing");
    std::string text = base_config();
    text.erase(text.find("  radius: 2.0\n"), 14);
    std::string log;
    CHECK(run("forward", w.config(text), w.dir / "out", &log) == kExitValidation);
    CHECK(log.find("array.radius") != std::string::npos);
    CHECK(!fs::exists(w.dir / "out" / "data.bin"));
}

TEST_CASE("bad values report the file line") {
    Workspace w("badvalue");
    std::string text = base_config();
    text.replace(text.find("epsilon: 0.05"), 13, "epsilon: -1");
    std::string log;
    CHECK(run("forward", w.config(text), w.dir / "out", &log) == kExitValidation);
    CHECK(log.find("perturbation.epsilon") != std::string::npos);
    CHECK(log.find("exp.yaml:9:") != std::string::npos);

    CHECK(run("forward", w.config(base_config() + "bogus: 1\n", "extra.yaml"), w.dir / "out", &log) == kExitValidation);
    CHECK(log.find("bogus") != std::string::npos);
}

TEST_CASE("zero amplitude writes zero data") {
    Workspace w("zero");
    REQUIRE(run("forward", w.config(base_config("0.0")), w.dir) == kExitOk);
    const DataMatrix d = read_data_binary(w.dir / "data.bin");
    CHECK(d.rows == 40);
    for (const auto &v : d.values) CHECK(v == cplx(0.0));
}

TEST_CASE("repeated forward runs are byte identical and carry provenance") {
    Workspace w("repeat");
    const fs::path cfg = w.config(base_config());
    REQUIRE(run("forward", cfg, w.dir / "a") == kExitOk);
    REQUIRE(run("forward", cfg, w.dir / "b") == kExitOk);
    for (const char *f : {"data.bin", "data.csv", "forward.json"}) CHECK(slurp(w.dir / "a" / f) == slurp(w.dir / "b" / f));
    const json j = json::parse(slurp(w.dir / "a" / "forward.json")).at("provenance");
    CHECK(j.contains("config_hash"));
    CHECK(j.at("seed") == 11);
    CHECK(slurp(w.dir / "a" / "data.csv").rfind("# {", 0) == 0);
    CHECK(json::parse(read_data_binary(w.dir / "a" / "data.bin").meta).contains("data_hash"));

    CommandOptions o;
    o.config = cfg;
    o.out = w.dir / "c";
    o.seed = 12;
    std::ostringstream log;
    REQUIRE(run_command("forward", o, log) == kExitOk);
    CHECK(slurp(w.dir / "a" / "data.bin") != slurp(w.dir / "c" / "data.bin"));
}

TEST_CASE("imaging paths agree and record provenance") {
    Workspace w("image");
    const fs::path cfg = w.config(base_config());
    REQUIRE(run("forward", cfg, w.dir) == kExitOk);
    REQUIRE(run("image", cfg, w.dir / "spectral", nullptr, "spectral", w.dir / "data.bin") == kExitOk);
    REQUIRE(run("image", cfg, w.dir / "corr", nullptr, "correlation", w.dir / "data.bin") == kExitOk);
    const json a = json::parse(slurp(w.dir / "spectral" / "image.json"));
    const json b = json::parse(slurp(w.dir / "corr" / "image.json"));
    CHECK(a.at("meta").contains("config_hash"));
    CHECK(a.at("meta").at("seed") == 11);
    CHECK(b.at("meta").at("method") == "correlation");
    CHECK(slurp(w.dir / "spectral" / "image.csv").rfind("# {", 0) == 0);
    const auto &va = a.at("points");
    const auto &vb = b.at("points");
    REQUIRE(va.size() == vb.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double x = va[i].at("value").get<double>(), y = vb[i].at("value").get<double>();
        num += (x - y) * (x - y);
        den += x * x;
    }
    CHECK(std::sqrt(num / den) < 1e-3);
    std::string log;
    CHECK(run("image", cfg, w.dir / "bad", &log, "fourier") == kExitValidation);
}

TEST_CASE("data from another configuration are refused") {
    Workspace w("mismatch");
    REQUIRE(run("forward", w.config(base_config()), w.dir) == kExitOk);
    std::string text = base_config();
    text.replace(text.find("epsilon: 0.05"), 13, "epsilon: 0.06");
    std::string log;
    CHECK(run("image", w.config(text, "other.yaml"), w.dir, &log, "spectral", w.dir / "data.bin") == kExitValidation);
    CHECK(log.find("refusing") != std::string::npos);
    CHECK(!fs::exists(w.dir / "image.csv"));
}

TEST_CASE("empty image grids are rejected") {
    Workspace w("empty");
    std::string text = base_config();
    text.replace(text.find("  type: probe\n"), 14, "  type: points\n  points: []\n");
    std::string log;
    CHECK(run("image", w.config(text), w.dir, &log) == kExitValidation);
    CHECK(log.find("image.points") != std::string::npos);
}

TEST_CASE("analytic sweeps resume from the cache and verify") {
    Workspace w("sweep");
    const fs::path cfg = w.config(base_config());
    std::string log;
    REQUIRE(run("sweep", cfg, w.dir, &log) == kExitOk);
    CHECK(log.find("0 from cache") != std::string::npos);
    const std::string first = slurp(w.dir / "sweep.csv");
    REQUIRE(run("sweep", cfg, w.dir, &log) == kExitOk);
    CHECK(log.find("4 from cache") != std::string::npos);
    CHECK(slurp(w.dir / "sweep.csv") == first);
    const json fit = json::parse(slurp(w.dir / "fit.json"));
    CHECK(fit.at("slope").get<double>() == doctest::Approx(3.0).epsilon(0.05));
    CHECK(fit.at("provenance").contains("config_hash"));
    CHECK(run("verify", cfg, w.dir, &log) == kExitOk);
}

TEST_CASE("verify detects tampered artifacts") {
    Workspace w("verify");
    const fs::path cfg = w.config(base_config());
    REQUIRE(run("forward", cfg, w.dir) == kExitOk);
    std::string log;
    CHECK(run("verify", cfg, w.dir, &log) == kExitOk);
    {
        std::fstream f(w.dir / "data.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-3, std::ios::end);
        f.put('\x7f');
    }
    CHECK(run("verify", cfg, w.dir, &log) == kExitReproducibility);
    std::string other = base_config();
    other.replace(other.find("seed: 11"), 8, "seed: 13");
    CHECK(run("verify", w.config(other, "other.yaml"), w.dir, &log) == kExitReproducibility);
    Workspace empty("verify_empty");
    CHECK(run("verify", cfg, empty.dir, &log) == kExitValidation);
}

TEST_CASE("stability reports are written") {
    Workspace w("stability");
    const fs::path cfg = w.config(base_config());
    REQUIRE(run("stability", cfg, w.dir) == kExitOk);
    const json j = json::parse(slurp(w.dir / "stability.json"));
    CHECK(j.at("n_realizations") == 4);
    CHECK(j.contains("checks"));
    CHECK(j.at("provenance").at("seed") == 11);
    CHECK(fs::exists(w.dir / "stability.txt"));
    CHECK(slurp(w.dir / "ensemble.csv").rfind("# {", 0) == 0);
}

TEST_CASE("command line front end") {
    const std::string exe = BLENDIMG_CLI;
    auto code = [](const std::string &cmd) {
        const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    CHECK(code(exe) == kExitValidation);
    CHECK(code(exe + " forward") == kExitValidation);
    CHECK(code(exe + " forward --config /nonexistent.yaml") == kExitValidation);
    Workspace w("front");
    const fs::path cfg = w.config(base_config());
    CHECK(code(exe + " forward --config " + cfg.string() + " --out " + (w.dir / "o").string() + " --workers 2") == kExitOk);
    CHECK(fs::exists(w.dir / "o" / "data.bin"));
    CHECK(code(exe + " image --config " + cfg.string() + " --out " + (w.dir / "o").string() + " --method wrong") ==
          kExitValidation);
    CHECK(code(exe + " --help") == kExitOk);
}

}
