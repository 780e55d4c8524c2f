#include "simstack/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace simstack {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string millis(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

void emit_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
    out << "# simstack " << kArtifactVersion << "\n";
    out << "# config_hash = " << result.config_hash << "\n";
    for (const auto& [key, value] : cfg.echo()) out << "# " << key << " = " << value << "\n";
    out << "# factorizations = " << result.factorizations << "\n";
    for (const auto& w : result.warnings) out << "# warning: " << w << "\n";

    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
    out << "\n";
    for (const auto& r : result.records) {
        out << r.experiment << ',' << to_string(r.mode) << ',' << r.layers << ',' << r.elements << ',' << r.realization
            << ',' << r.iteration << ',' << shortest(r.sum_rate) << ',' << millis(r.wallclock_ms) << ',' << r.seed
            << ',' << result.config_hash << "\n";
    }
}

void emit_json(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
    nlohmann::ordered_json doc;
    doc["artifact"] = "simstack";
    doc["version"] = kArtifactVersion;
    doc["config_hash"] = result.config_hash;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [key, value] : cfg.echo()) config[key] = value;
    doc["config"] = config;
    doc["factorizations"] = result.factorizations;
    doc["warnings"] = result.warnings;
    doc["columns"] = nlohmann::ordered_json::array();
    for (const char* c : kColumns) doc["columns"].push_back(c);
    auto& rows = doc["records"] = nlohmann::ordered_json::array();
    for (const auto& r : result.records) {
        nlohmann::ordered_json row;
        row["experiment"] = r.experiment;
        row["mode"] = to_string(r.mode);
        row["L"] = r.layers;
        row["N"] = r.elements;
        row["realization"] = r.realization;
        row["iteration"] = r.iteration;
        row["sum_rate_bps_hz"] = r.sum_rate;
        row["wallclock_ms"] = r.wallclock_ms;
        row["seed"] = r.seed;
        row["config_hash"] = result.config_hash;
        rows.push_back(std::move(row));
    }
    out << doc.dump(2) << "\n";
}

std::filesystem::path emit(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                           const ExperimentResult& result) {
    std::filesystem::create_directories(dir);
    const auto path = dir / (cfg.name + (cfg.format == OutputFormat::csv ? ".csv" : ".json"));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    if (cfg.format == OutputFormat::csv) {
        emit_csv(out, cfg, result);
    } else {
        emit_json(out, cfg, result);
    }
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
    return path;
}

}  // namespace simstack
