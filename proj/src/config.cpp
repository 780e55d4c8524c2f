#include "simstack/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace simstack {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Pulls typed values out of the tree, recording each key it touches and
// every problem it meets, so the caller can report them all at once.
class Reader {
public:
    Reader(const pt::ptree& tree, std::vector<std::string>& errs) : tree_(tree), errs_(errs) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) {
        used_.insert(section + "." + key);
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return trim(*v);
    }

    void get(const std::string& section, const std::string& key, double& out) {
        const auto v = raw(section, key);
        if (!v) return;
        double d{};
        const auto res = std::from_chars(v->data(), v->data() + v->size(), d);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size() || !std::isfinite(d)) {
            error(section, key, "expected a finite number, got '" + *v + "'");
            return;
        }
        out = d;
    }

    template <class Int>
    void get_int(const std::string& section, const std::string& key, Int& out) {
        const auto v = raw(section, key);
        if (!v) return;
        Int i{};
        const auto res = std::from_chars(v->data(), v->data() + v->size(), i);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
            error(section, key, "expected an integer, got '" + *v + "'");
            return;
        }
        out = i;
    }

    void get(const std::string& section, const std::string& key, bool& out) {
        const auto v = raw(section, key);
        if (!v) return;
        const std::string s = lower(*v);
        if (s == "true" || s == "yes" || s == "on" || s == "1") {
            out = true;
        } else if (s == "false" || s == "no" || s == "off" || s == "0") {
            out = false;
        } else {
            error(section, key, "expected true or false, got '" + *v + "'");
        }
    }

    void get(const std::string& section, const std::string& key, std::string& out) {
        const auto v = raw(section, key);
        if (v) out = *v;
    }

    std::optional<std::vector<int>> get_int_list(const std::string& section, const std::string& key) {
        const auto v = raw(section, key);
        if (!v) return std::nullopt;
        std::vector<int> out;
        for (const auto& item : split_list(*v)) {
            int i{};
            const auto res = std::from_chars(item.data(), item.data() + item.size(), i);
            if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
                error(section, key, "expected a comma-separated list of integers, got '" + *v + "'");
                return std::nullopt;
            }
            out.push_back(i);
        }
        return out;
    }

    void error(const std::string& section, const std::string& key, const std::string& msg) {
        errs_.push_back(section + "." + key + ": " + msg);
    }

    void report_unused(const std::string& kind) {
        for (const auto& [section, child] : tree_) {
            if (child.empty()) {
                if (!child.data().empty()) errs_.push_back(section + ": key outside of any [section]");
                continue;
            }
            for (const auto& [key, value] : child) {
                if (!used_.count(section + "." + key)) {
                    errs_.push_back(section + "." + key + ": unknown key, or not used by experiment kind '" + kind +
                                    "'");
                }
            }
        }
    }

private:
    const pt::ptree& tree_;
    std::vector<std::string>& errs_;
    std::set<std::string> used_;
};

std::string join_issues(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "invalid configuration (" << issues.size() << (issues.size() == 1 ? " problem)" : " problems)");
    for (const auto& i : issues) os << "\n  " << i;
    return os.str();
}

void check_positive(std::vector<std::string>& errs, const char* field, double v) {
    if (!(v > 0)) errs.push_back(std::string(field) + ": must be > 0");
}

}  // namespace

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::convergence: return "convergence";
        case ExperimentKind::layer_sweep: return "layer-sweep";
        case ExperimentKind::custom: return "custom";
    }
    return "unknown";
}

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::EE: return "EE";
        case RunMode::SE: return "SE";
        case RunMode::SS: return "SS";
    }
    return "unknown";
}

const char* to_string(PowerMode mode) { return mode == PowerMode::uniform ? "uniform" : "waterfilling"; }

const char* to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "json"; }

std::vector<RunMode> parse_modes(const std::string& text) {
    std::vector<RunMode> out;
    for (const auto& item : split_list(text)) {
        RunMode m;
        if (item == "EE") {
            m = RunMode::EE;
        } else if (item == "SE") {
            m = RunMode::SE;
        } else if (item == "SS") {
            m = RunMode::SS;
        } else {
            throw std::invalid_argument("unknown run mode '" + item + "' (expected EE, SE or SS)");
        }
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw std::invalid_argument("run mode '" + item + "' listed twice");
        }
        out.push_back(m);
    }
    if (out.empty()) throw std::invalid_argument("at least one run mode is required");
    return out;
}

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

SpacingCase standard_case(int id) {
    constexpr double half = 1.0 / 2.0;
    constexpr double third = 1.0 / 3.0;
    switch (id) {
        case 1: return {1, half, half, half};
        case 2: return {2, third, third, third};
        case 3: return {3, third, half, half};
        case 4: return {4, half, third, third};
    }
    throw std::invalid_argument("convergence case must be 1, 2, 3 or 4");
}

MediumProvider ExperimentConfig::provider() const {
    MediumProvider p;
    p.kind = medium;
    p.z0 = z0;
    const double lambda = wavelength();
    p.patch_area = patch_area_wl2 > 0 ? patch_area_wl2 * lambda * lambda : 0.0;
    return p;
}

ArrayGeometry ExperimentConfig::geometry_for_layers(int layers) const {
    ArrayGeometry g = layer_sweep_geometry(layers, frequency_hz, total_elements);
    g.dipole_length = dipole_length_wl * g.wavelength;
    g.dipole_radius = dipole_radius_wl * g.wavelength;
    return g;
}

ArrayGeometry ExperimentConfig::geometry_for_case(const SpacingCase& c) const {
    ArrayGeometry g = convergence_geometry(frequency_hz, c.l_x, c.l_y, c.l_z);
    g.dipole_length = dipole_length_wl * g.wavelength;
    g.dipole_radius = dipole_radius_wl * g.wavelength;
    return g;
}

ArrayGeometry ExperimentConfig::custom_geometry() const {
    ArrayGeometry g;
    g.wavelength = wavelength();
    g.n_y = n_y;
    g.n_z = n_z;
    g.layers = layer_counts.empty() ? 1 : layer_counts.front();
    g.l_x = l_x_wl * g.wavelength;
    g.l_y = l_y_wl * g.wavelength;
    g.l_z = l_z_wl * g.wavelength;
    g.dipole_length = dipole_length_wl * g.wavelength;
    g.dipole_radius = dipole_radius_wl * g.wavelength;
    return g;
}

std::vector<ArrayGeometry> ExperimentConfig::geometries() const {
    std::vector<ArrayGeometry> out;
    switch (kind) {
        case ExperimentKind::convergence:
            for (const auto& c : cases) out.push_back(geometry_for_case(c));
            break;
        case ExperimentKind::layer_sweep:
            for (int l : layer_counts) out.push_back(geometry_for_layers(l));
            break;
        case ExperimentKind::custom: out.push_back(custom_geometry()); break;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> e;
    const auto num = [](double v) { return format_double(v); };
    const auto ints = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    std::string mode_list;
    for (std::size_t i = 0; i < modes.size(); ++i) mode_list += (i ? "," : "") + std::string(to_string(modes[i]));

    e.emplace_back("experiment.kind", to_string(kind));
    e.emplace_back("experiment.name", name);
    e.emplace_back("experiment.monte_carlo_runs", std::to_string(monte_carlo_runs));
    e.emplace_back("experiment.seed", std::to_string(seed));
    e.emplace_back("experiment.modes", mode_list);
    e.emplace_back("experiment.custom_overrides", custom_overrides ? "true" : "false");
    e.emplace_back("geometry.frequency_ghz", num(frequency_hz / 1e9));
    e.emplace_back("geometry.dipole_length", num(dipole_length_wl));
    e.emplace_back("geometry.dipole_radius", num(dipole_radius_wl));
    if (kind == ExperimentKind::convergence) {
        std::vector<int> ids;
        for (const auto& c : cases) ids.push_back(c.id);
        e.emplace_back("geometry.cases", ints(ids));
    } else if (kind == ExperimentKind::layer_sweep) {
        e.emplace_back("geometry.layers", ints(layer_counts));
        e.emplace_back("geometry.total_elements", std::to_string(total_elements));
    } else {
        e.emplace_back("geometry.layers", ints(layer_counts));
        e.emplace_back("geometry.n_y", std::to_string(n_y));
        e.emplace_back("geometry.n_z", std::to_string(n_z));
        e.emplace_back("geometry.l_x", num(l_x_wl));
        e.emplace_back("geometry.l_y", num(l_y_wl));
        e.emplace_back("geometry.l_z", num(l_z_wl));
    }
    e.emplace_back("medium.provider", medium == MediumKind::dipole ? "dipole" : "rayleigh-sommerfeld");
    if (medium == MediumKind::dipole) {
        e.emplace_back("medium.z0", num(z0));
    } else {
        e.emplace_back("medium.patch_area", num(patch_area_wl2 > 0 ? patch_area_wl2 : dipole_length_wl * dipole_length_wl));
    }
    e.emplace_back("channel.users", std::to_string(users));
    e.emplace_back("channel.noise_psd", num(noise_psd));
    e.emplace_back("channel.p_max", num(p_max));
    e.emplace_back("channel.power", to_string(power));
    e.emplace_back("optimizer.max_iters", std::to_string(optimizer.max_iters));
    e.emplace_back("optimizer.step0", num(optimizer.armijo.step0));
    e.emplace_back("optimizer.backtrack", num(optimizer.armijo.backtrack));
    e.emplace_back("optimizer.sufficient_increase", num(optimizer.armijo.sufficient_increase));
    e.emplace_back("optimizer.max_backtracks", std::to_string(optimizer.armijo.max_backtracks));
    e.emplace_back("optimizer.fd_step", num(optimizer.fd_step));
    e.emplace_back("optimizer.tol", num(optimizer.tol));
    e.emplace_back("optimizer.init", to_string(init));
    e.emplace_back("output.path", output_dir);
    e.emplace_back("output.format", to_string(format));
    return e;
}

std::string ExperimentConfig::hash() const {
    // Where results are written does not change what they are.
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [key, value] : echo()) {
        if (key.rfind("output.", 0) == 0) continue;
        mix(key);
        mix("=");
        mix(value);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({"syntax error at line " + std::to_string(e.line()) + ": " + e.message()});
    }

    std::vector<std::string> errs;
    Reader r(tree, errs);
    ExperimentConfig cfg;

    std::string kind;
    r.get("experiment", "kind", kind);
    if (kind == "convergence") {
        cfg.kind = ExperimentKind::convergence;
    } else if (kind == "layer-sweep") {
        cfg.kind = ExperimentKind::layer_sweep;
    } else if (kind == "custom") {
        cfg.kind = ExperimentKind::custom;
    } else if (kind.empty()) {
        r.error("experiment", "kind", "required (convergence, layer-sweep or custom)");
    } else {
        r.error("experiment", "kind", "unknown kind '" + kind + "' (expected convergence, layer-sweep or custom)");
    }
    cfg.name = to_string(cfg.kind);
    r.get("experiment", "name", cfg.name);
    r.get_int("experiment", "monte_carlo_runs", cfg.monte_carlo_runs);
    if (cfg.monte_carlo_runs < 1) r.error("experiment", "monte_carlo_runs", "must be >= 1");
    r.get_int("experiment", "seed", cfg.seed);
    r.get("experiment", "custom_overrides", cfg.custom_overrides);

    std::string modes = cfg.kind == ExperimentKind::convergence ? "EE,SE" : "EE,SE,SS";
    r.get("experiment", "modes", modes);
    try {
        cfg.modes = parse_modes(modes);
    } catch (const std::invalid_argument& e) {
        r.error("experiment", "modes", e.what());
    }

    double freq_ghz = cfg.frequency_hz / 1e9;
    r.get("geometry", "frequency_ghz", freq_ghz);
    check_positive(errs, "geometry.frequency_ghz", freq_ghz);
    cfg.frequency_hz = freq_ghz * 1e9;
    r.get("geometry", "dipole_length", cfg.dipole_length_wl);
    r.get("geometry", "dipole_radius", cfg.dipole_radius_wl);
    check_positive(errs, "geometry.dipole_length", cfg.dipole_length_wl);
    check_positive(errs, "geometry.dipole_radius", cfg.dipole_radius_wl);
    if (cfg.dipole_radius_wl > 0 && cfg.dipole_length_wl > 0 && cfg.dipole_radius_wl >= cfg.dipole_length_wl / 2) {
        errs.emplace_back("geometry.dipole_radius: must be smaller than half the dipole length");
    }

    if (cfg.kind == ExperimentKind::convergence) {
        std::vector<int> ids{1, 2, 3, 4};
        if (auto v = r.get_int_list("geometry", "cases")) ids = *v;
        for (int id : ids) {
            if (id < 1 || id > 4) {
                r.error("geometry", "cases", "case " + std::to_string(id) + " does not exist (cases are 1 to 4)");
            } else {
                cfg.cases.push_back(standard_case(id));
            }
        }
        if (ids.empty()) r.error("geometry", "cases", "at least one case is required");
    } else if (cfg.kind == ExperimentKind::layer_sweep) {
        cfg.layer_counts = {2, 3, 4, 6};
        if (auto v = r.get_int_list("geometry", "layers")) cfg.layer_counts = *v;
        r.get_int("geometry", "total_elements", cfg.total_elements);
        if (cfg.layer_counts.empty()) r.error("geometry", "layers", "at least one layer count is required");
        if (!cfg.custom_overrides) {
            if (cfg.total_elements != 72) {
                r.error("geometry", "total_elements", "the layer sweep uses N L = 72; set custom_overrides to change it");
            }
            for (int l : cfg.layer_counts) {
                if (l != 2 && l != 3 && l != 4 && l != 6) {
                    r.error("geometry", "layers",
                            "L = " + std::to_string(l) + " is outside {2, 3, 4, 6}; set custom_overrides to allow it");
                }
            }
        }
        for (int l : cfg.layer_counts) {
            if (l < 2) {
                r.error("geometry", "layers", "every L must be >= 2");
            } else if (cfg.total_elements <= 0 || cfg.total_elements % (6 * l) != 0) {
                r.error("geometry", "total_elements",
                        std::to_string(cfg.total_elements) + " is not a multiple of 6 L for L = " + std::to_string(l));
            }
        }
    } else {
        cfg.layer_counts = {3};
        if (auto v = r.get_int_list("geometry", "layers")) cfg.layer_counts = *v;
        if (cfg.layer_counts.size() != 1 || cfg.layer_counts.front() < 1) {
            r.error("geometry", "layers", "custom runs take a single layer count >= 1");
        }
        r.get_int("geometry", "n_y", cfg.n_y);
        r.get_int("geometry", "n_z", cfg.n_z);
        r.get("geometry", "l_x", cfg.l_x_wl);
        r.get("geometry", "l_y", cfg.l_y_wl);
        r.get("geometry", "l_z", cfg.l_z_wl);
        if (cfg.n_y < 1) r.error("geometry", "n_y", "must be >= 1");
        if (cfg.n_z < 1) r.error("geometry", "n_z", "must be >= 1");
        check_positive(errs, "geometry.l_x", cfg.l_x_wl);
        check_positive(errs, "geometry.l_y", cfg.l_y_wl);
        check_positive(errs, "geometry.l_z", cfg.l_z_wl);
    }

    std::string provider = "dipole";
    r.get("medium", "provider", provider);
    if (provider == "dipole") {
        cfg.medium = MediumKind::dipole;
        r.get("medium", "z0", cfg.z0);
        check_positive(errs, "medium.z0", cfg.z0);
    } else if (provider == "rayleigh-sommerfeld" || provider == "rs") {
        cfg.medium = MediumKind::rayleigh_sommerfeld;
        r.get("medium", "patch_area", cfg.patch_area_wl2);
        if (cfg.patch_area_wl2 < 0) r.error("medium", "patch_area", "must be > 0");
    } else {
        r.error("medium", "provider", "unknown provider '" + provider + "' (expected dipole or rayleigh-sommerfeld)");
    }

    r.get_int("channel", "users", cfg.users);
    if (cfg.users < 1) r.error("channel", "users", "must be >= 1");
    r.get("channel", "noise_psd", cfg.noise_psd);
    check_positive(errs, "channel.noise_psd", cfg.noise_psd);
    r.get("channel", "p_max", cfg.p_max);
    check_positive(errs, "channel.p_max", cfg.p_max);
    std::string power = "uniform";
    r.get("channel", "power", power);
    if (power == "uniform") {
        cfg.power = PowerMode::uniform;
    } else if (power == "waterfilling") {
        cfg.power = PowerMode::waterfilling;
    } else {
        r.error("channel", "power", "unknown allocation '" + power + "' (expected uniform or waterfilling)");
    }

    auto& o = cfg.optimizer;
    r.get_int("optimizer", "max_iters", o.max_iters);
    r.get("optimizer", "step0", o.armijo.step0);
    r.get("optimizer", "backtrack", o.armijo.backtrack);
    r.get("optimizer", "sufficient_increase", o.armijo.sufficient_increase);
    r.get_int("optimizer", "max_backtracks", o.armijo.max_backtracks);
    r.get("optimizer", "fd_step", o.fd_step);
    r.get("optimizer", "tol", o.tol);
    if (o.max_iters < 0) r.error("optimizer", "max_iters", "must be >= 0");
    if (!(o.armijo.step0 > 0)) r.error("optimizer", "step0", "must be > 0");
    if (!(o.armijo.backtrack > 0 && o.armijo.backtrack < 1)) r.error("optimizer", "backtrack", "must lie in (0, 1)");
    if (!(o.armijo.sufficient_increase > 0 && o.armijo.sufficient_increase < 1)) {
        r.error("optimizer", "sufficient_increase", "must lie in (0, 1)");
    }
    if (o.armijo.max_backtracks < 0) r.error("optimizer", "max_backtracks", "must be >= 0");
    if (!(o.fd_step > 0)) r.error("optimizer", "fd_step", "must be > 0");
    if (!(o.tol >= 0)) r.error("optimizer", "tol", "must be >= 0");
    std::string init = "simplified-mrt";
    r.get("optimizer", "init", init);
    if (init == "simplified-mrt") {
        cfg.init = InitMode::simplified_mrt;
    } else if (init == "zeros") {
        cfg.init = InitMode::zeros;
    } else if (init == "random") {
        cfg.init = InitMode::random;
    } else {
        r.error("optimizer", "init", "unknown initializer '" + init + "' (expected simplified-mrt, zeros or random)");
    }

    r.get("output", "path", cfg.output_dir);
    if (cfg.output_dir.empty()) r.error("output", "path", "must not be empty");
    std::string format = "csv";
    r.get("output", "format", format);
    if (format == "csv") {
        cfg.format = OutputFormat::csv;
    } else if (format == "json") {
        cfg.format = OutputFormat::json;
    } else {
        r.error("output", "format", "unknown format '" + format + "' (expected csv or json)");
    }

    r.report_unused(to_string(cfg.kind));
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path.string() + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_geometries(const ExperimentConfig& cfg) {
    std::vector<std::string> errs;
    for (const auto& g : cfg.geometries()) {
        const std::string where = "geometry (L = " + std::to_string(g.layers) + ", N = " + std::to_string(g.elements()) + ")";
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            errs.push_back(where + ": " + e.what());
            continue;
        }
        if (cfg.medium != MediumKind::dipole) continue;
        if (g.n_z > 1 && g.l_z < g.dipole_length) {
            errs.push_back(where + ": l_z is shorter than the dipole length, so collinear elements overlap");
        }
        if (g.n_y > 1 && g.l_y <= g.dipole_radius) errs.push_back(where + ": l_y must exceed the dipole radius");
        if (g.layers > 1 && g.l_x <= g.dipole_radius) errs.push_back(where + ": l_x must exceed the dipole radius");
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
}

}  // namespace simstack
