#include "obflow/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace obflow {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& msg) {
    std::ostringstream os;
    os << source << ":" << line << ": " << msg;
    throw std::runtime_error(os.str());
}

double parse_double(const std::string& v, const std::string& source, int line,
                    const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail_at(source, line, "cannot parse value '" + v + "' for key '" + key + "' as a number");
    }
}

long long parse_int(const std::string& v, const std::string& source, int line,
                    const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail_at(source, line,
                "cannot parse value '" + v + "' for key '" + key + "' as an integer");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& source, int line,
                        const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        fail_at(source, line,
                "cannot parse value '" + v + "' for key '" + key + "' as an unsigned integer");
    }
}

bool parse_bool(const std::string& v, const std::string& source, int line,
                const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail_at(source, line,
            "cannot parse value '" + v + "' for key '" + key + "' as a bool (true/false/1/0)");
}

std::vector<double> parse_double_list(const std::string& v, const std::string& source, int line,
                                      const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail_at(source, line, "empty entry in list for key '" + key + "'");
        out.push_back(parse_double(item, source, line, key));
    }
    if (out.empty()) fail_at(source, line, "empty list for key '" + key + "'");
    return out;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

SimConfig parse_config_text(const std::string& text, const std::string& source_name) {
    SimConfig c;
    bool saw_s_b = false, saw_eps_cutoff = false, saw_snapshots = false;

    std::map<std::string, std::function<void(const std::string&, int)>> setters;
    auto dbl = [&](const std::string& key, double& field) {
        setters[key] = [&field, key, &source_name](const std::string& v, int line) {
            field = parse_double(v, source_name, line, key);
        };
    };
    dbl("mu", c.mu);
    dbl("lambda", c.lambda);
    dbl("kappa", c.kappa);
    dbl("alpha", c.alpha);
    dbl("rho0", c.rho0);
    dbl("theta0", c.theta0);
    dbl("eps_b", c.eps_b);
    dbl("L", c.L);
    dbl("s", c.s);
    dbl("dt", c.dt);
    dbl("T", c.T);
    dbl("truncation", c.truncation);
    setters["eps_cutoff"] = [&](const std::string& v, int line) {
        c.eps_cutoff = parse_double(v, source_name, line, "eps_cutoff");
        saw_eps_cutoff = true;
    };
    setters["s_b"] = [&](const std::string& v, int line) {
        c.s_b = parse_double(v, source_name, line, "s_b");
        saw_s_b = true;
    };
    setters["snapshot_times"] = [&](const std::string& v, int line) {
        c.snapshot_times = parse_double_list(v, source_name, line, "snapshot_times");
        saw_snapshots = true;
    };
    setters["n_copies"] = [&](const std::string& v, int line) {
        c.n_copies = static_cast<int>(parse_int(v, source_name, line, "n_copies"));
    };
    setters["picard_iterations"] = [&](const std::string& v, int line) {
        c.picard_iterations = static_cast<int>(parse_int(v, source_name, line, "picard_iterations"));
    };
    setters["seed"] = [&](const std::string& v, int line) {
        c.seed = parse_u64(v, source_name, line, "seed");
    };
    setters["freeze_rho"] = [&](const std::string& v, int line) {
        c.freeze_rho = parse_bool(v, source_name, line, "freeze_rho");
    };
    setters["heating_on"] = [&](const std::string& v, int line) {
        c.heating_on = parse_bool(v, source_name, line, "heating_on");
    };
    setters["weight_convention"] = [&](const std::string& v, int line) {
        if (v == "as_printed")
            c.weight_convention = WeightConvention::as_printed;
        else if (v == "none_on_temperature")
            c.weight_convention = WeightConvention::none_on_temperature;
        else
            fail_at(source_name, line,
                    "unknown weight_convention '" + v +
                        "' (expected as_printed or none_on_temperature)");
    };
    setters["theta_b2_mode"] = [&](const std::string& v, int line) {
        if (v == "one_sided")
            c.theta_b2_mode = ThetaB2Mode::one_sided;
        else if (v == "zero")
            c.theta_b2_mode = ThetaB2Mode::zero;
        else
            fail_at(source_name, line,
                    "unknown theta_b2_mode '" + v + "' (expected one_sided or zero)");
    };

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail_at(source_name, line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail_at(source_name, line_no, "missing key before '='");
        if (value.empty()) fail_at(source_name, line_no, "missing value for key '" + key + "'");
        const auto it = setters.find(key);
        if (it == setters.end()) fail_at(source_name, line_no, "unknown key '" + key + "'");
        it->second(value, line_no);
    }

    if (!saw_s_b) c.s_b = c.s / 10.0;
    if (!saw_eps_cutoff) c.eps_cutoff = c.s;
    if (!saw_snapshots) {
        c.snapshot_times.clear();
        for (const double frac : {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}) {
            const double raw_t = frac * c.T;
            c.snapshot_times.push_back(std::round(raw_t / c.dt) * c.dt);
        }
    }
    c.validate();
    return c;
}

SimConfig parse_config(const std::string& path) {
    return parse_config_text(read_bytes(path), path);
}

std::string serialize_config(const SimConfig& c) {
    std::ostringstream os;
    os << "mu = " << fmt17(c.mu) << "\n";
    os << "lambda = " << fmt17(c.lambda) << "\n";
    os << "kappa = " << fmt17(c.kappa) << "\n";
    os << "alpha = " << fmt17(c.alpha) << "\n";
    os << "rho0 = " << fmt17(c.rho0) << "\n";
    os << "theta0 = " << fmt17(c.theta0) << "\n";
    os << "eps_b = " << fmt17(c.eps_b) << "\n";
    os << "eps_cutoff = " << fmt17(c.eps_cutoff) << "\n";
    os << "L = " << fmt17(c.L) << "\n";
    os << "s = " << fmt17(c.s) << "\n";
    os << "s_b = " << fmt17(c.s_b) << "\n";
    os << "dt = " << fmt17(c.dt) << "\n";
    os << "T = " << fmt17(c.T) << "\n";
    os << "truncation = " << fmt17(c.truncation) << "\n";
    os << "snapshot_times = ";
    for (std::size_t i = 0; i < c.snapshot_times.size(); ++i)
        os << (i ? "," : "") << fmt17(c.snapshot_times[i]);
    os << "\n";
    os << "n_copies = " << c.n_copies << "\n";
    os << "picard_iterations = " << c.picard_iterations << "\n";
    os << "seed = " << c.seed << "\n";
    os << "freeze_rho = " << (c.freeze_rho ? "true" : "false") << "\n";
    os << "heating_on = " << (c.heating_on ? "true" : "false") << "\n";
    os << "weight_convention = "
       << (c.weight_convention == WeightConvention::as_printed ? "as_printed"
                                                               : "none_on_temperature")
       << "\n";
    os << "theta_b2_mode = "
       << (c.theta_b2_mode == ThetaB2Mode::one_sided ? "one_sided" : "zero") << "\n";
    return os.str();
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string snapshot_filename(double t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "fields_t%08.3f.csv", t);
    return buf;
}

WrittenFile write_snapshot(const FieldGrid& g, double t, const std::string& dir) {
    std::string body = "x1,x2,u1,u2,theta,rho,omega,phi,Theta1,Theta2\n";
    char buf[64];
    for (int lev = 0; lev < g.nlev(); ++lev) {
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t k = g.idx(i, lev);
            const double cols[10] = {g.x1(i),     g.x2(lev),  g.u1[k],  g.u2[k],
                                     g.theta[k],  g.rho[k],   g.omega[k], g.phi[k],
                                     g.Theta1[k], g.Theta2[k]};
            for (int c = 0; c < 10; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", cols[c]);
                body += buf;
                body += (c == 9) ? '\n' : ',';
            }
        }
    }
    const std::string name = snapshot_filename(t);
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_bytes(path, body);
    return {path, name, fnv1a64(body.data(), body.size())};
}

SnapshotTable read_snapshot(const std::string& path) {
    const std::string bytes = read_bytes(path);
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty snapshot file");
    if (trim(line) != "x1,x2,u1,u2,theta,rho,omega,phi,Theta1,Theta2")
        throw std::runtime_error(path + ": unexpected snapshot header '" + line + "'");
    SnapshotTable tb;
    std::vector<double>* cols[10] = {&tb.x1,  &tb.x2,    &tb.u1,  &tb.u2,     &tb.theta,
                                     &tb.rho, &tb.omega, &tb.phi, &tb.Theta1, &tb.Theta2};
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const char* p = line.c_str();
        for (int c = 0; c < 10; ++c) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) fail_at(path, line_no, "malformed numeric field");
            cols[c]->push_back(v);
            p = end;
            if (c < 9) {
                if (*p != ',') fail_at(path, line_no, "expected ',' between fields");
                ++p;
            }
        }
    }
    return tb;
}

WrittenFile write_particles(const Ensembles& e, const std::string& path) {
    std::string body = "site_i1,site_i2,kind,x1,x2,alive,phi_integral,det_W\n";
    char buf[64];
    auto emit = [&](const Particle& p) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,", p.site_i1, p.site_i2,
                      static_cast<int>(p.kind));
        body += buf;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g\n", p.pos.x, p.pos.y,
                      p.alive ? 1 : 0, p.phi_integral, det(p.W));
        body += buf;
    };
    for (const Particle& p : e.x) emit(p);
    for (const Particle& p : e.y) emit(p);
    for (const Particle& p : e.z) emit(p);
    write_bytes(path, body);
    return {path, std::filesystem::path(path).filename().string(),
            fnv1a64(body.data(), body.size())};
}

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

std::string checksum_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace

void write_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::json j;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["config"] = m.config_echo;
    j["start_time"] = m.start_time;
    j["end_time"] = m.end_time;
    j["threads"] = m.threads;
    j["wallclock_seconds"] = m.wallclock_seconds;
    j["complete"] = m.complete;
    j["error_counters"] = {{"interpolation_clamps", m.interpolation_clamps},
                           {"cfl_warnings", m.cfl_warnings}};
    j["snapshots"] = nlohmann::json::array();
    for (const ManifestSnapshot& s : m.snapshots)
        j["snapshots"].push_back(
            {{"t", s.t}, {"file", s.file}, {"fnv1a64", checksum_hex(s.checksum)}});
    write_bytes(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_echo = j.at("config").get<std::string>();
    m.start_time = j.at("start_time").get<std::string>();
    m.end_time = j.at("end_time").get<std::string>();
    m.threads = j.at("threads").get<int>();
    m.wallclock_seconds = j.at("wallclock_seconds").get<double>();
    m.complete = j.at("complete").get<bool>();
    m.interpolation_clamps = j.at("error_counters").at("interpolation_clamps").get<std::uint64_t>();
    m.cfl_warnings = j.at("error_counters").at("cfl_warnings").get<std::uint64_t>();
    for (const auto& s : j.at("snapshots")) {
        ManifestSnapshot ms;
        ms.t = s.at("t").get<double>();
        ms.file = s.at("file").get<std::string>();
        ms.checksum = std::stoull(s.at("fnv1a64").get<std::string>(), nullptr, 16);
        m.snapshots.push_back(ms);
    }
    return m;
}

namespace {

struct HeatmapSpec {
    const char* script;
    const char* stem;
    int column;  // 1-based CSV column
    const char* title;
};

}  // namespace

std::vector<std::string> emit_plot_scripts(const RunManifest& m, const std::string& dir) {
    if (m.snapshots.empty()) throw std::runtime_error("emit_plot_scripts: no snapshots listed");
    for (const ManifestSnapshot& s : m.snapshots) {
        const auto p = std::filesystem::path(dir) / s.file;
        if (!std::filesystem::exists(p))
            throw std::runtime_error("emit_plot_scripts: missing snapshot file '" + s.file + "'");
    }
    const SimConfig cfg = parse_config_text(m.config_echo, "<manifest config>");

    auto stamp = [](double t) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%08.3f", t);
        return std::string(buf);
    };
    auto preamble = [&](std::ostringstream& os) {
        os << "set datafile separator ','\n";
        os << "set terminal pngcairo size 1280,680\n";
        os << "set xrange [" << fmt17(-cfg.L) << ":" << fmt17(cfg.L) << "]\n";
    };

    std::vector<std::string> written;
    {
        std::ostringstream os;
        preamble(os);
        os << "set yrange [0:" << fmt17(cfg.L) << "]\n";
        os << "sc = 1.0\n";
        for (const ManifestSnapshot& s : m.snapshots) {
            os << "set output 'velocity_t" << stamp(s.t) << ".png'\n";
            os << "plot '" << s.file
               << "' every ::1 using 1:2:($3*sc):($4*sc) with vectors head filled lc rgb 'navy' "
                  "notitle\n";
        }
        const std::string path = (std::filesystem::path(dir) / "velocity_quiver.gp").string();
        write_bytes(path, os.str());
        written.push_back(path);
    }
    const HeatmapSpec maps[] = {
        {"theta_heatmap.gp", "theta", 5, "temperature"},
        {"rho_heatmap.gp", "rho", 6, "density"},
        {"omega_heatmap.gp", "omega", 7, "vorticity"},
        {"phi_heatmap.gp", "phi", 8, "expansion rate"},
    };
    for (const HeatmapSpec& hs : maps) {
        std::ostringstream os;
        preamble(os);
        os << "set yrange [0:" << fmt17(cfg.L) << "]\n";
        os << "set palette rgbformulae 33,13,10\n";
        for (const ManifestSnapshot& s : m.snapshots) {
            os << "set output '" << hs.stem << "_t" << stamp(s.t) << ".png'\n";
            os << "set title '" << hs.title << ", t = " << s.t << "'\n";
            os << "plot '" << s.file << "' every ::1 using 1:2:" << hs.column
               << " with points pt 5 ps 1.1 palette notitle\n";
        }
        const std::string path = (std::filesystem::path(dir) / hs.script).string();
        write_bytes(path, os.str());
        written.push_back(path);
    }
    {
        std::ostringstream os;
        preamble(os);
        os << "set yrange [0:" << fmt17(cfg.s) << "]\n";
        os << "sc = 1.0\n";
        os << "wall = " << fmt17(cfg.s) << "\n";
        for (const ManifestSnapshot& s : m.snapshots) {
            os << "set output 'wall_layer_t" << stamp(s.t) << ".png'\n";
            os << "plot '" << s.file
               << "' every ::1 using 1:($2<=wall?$2:1/0):($3*sc):($4*sc) with vectors head "
                  "filled lc rgb 'dark-red' notitle\n";
        }
        const std::string path = (std::filesystem::path(dir) / "wall_layer_quiver.gp").string();
        write_bytes(path, os.str());
        written.push_back(path);
    }
    return written;
}

}  // namespace obflow
