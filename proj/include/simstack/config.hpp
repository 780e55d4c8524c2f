#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "simstack/medium.hpp"
#include "simstack/optimizer.hpp"

namespace simstack {

enum class ExperimentKind { convergence, layer_sweep, custom };
enum class RunMode { EE, SE, SS };
enum class PowerMode { uniform, waterfilling };
enum class OutputFormat { csv, json };

const char* to_string(ExperimentKind kind);
const char* to_string(RunMode mode);
const char* to_string(PowerMode mode);
const char* to_string(OutputFormat format);

/// Parses "EE,SE,SS" style lists; throws std::invalid_argument on unknown or repeated modes.
std::vector<RunMode> parse_modes(const std::string& text);

/// Every problem found in a config file, one message per field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// One spacing case of the convergence study, in wavelengths.
struct SpacingCase {
    int id = 1;
    double l_x = 0.5;
    double l_y = 0.5;
    double l_z = 0.5;
};

/// The four convergence cases: lambda/2 everywhere, lambda/3 everywhere,
/// l_x = lambda/3 only, and l_y = l_z = lambda/3 only.
SpacingCase standard_case(int id);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::convergence;
    std::string name;
    int monte_carlo_runs = 20;
    std::uint64_t seed = 1;
    std::vector<RunMode> modes;
    bool custom_overrides = false;

    double frequency_hz = 28e9;
    double dipole_length_wl = 0.25;
    double dipole_radius_wl = 0.002;
    std::vector<SpacingCase> cases;   // convergence
    std::vector<int> layer_counts;    // layer-sweep; one entry for custom
    int total_elements = 72;          // layer-sweep
    int n_y = 6, n_z = 6;             // custom
    double l_x_wl = 0.5, l_y_wl = 0.5, l_z_wl = 0.5;  // custom

    MediumKind medium = MediumKind::dipole;
    double z0 = 50.0;
    double patch_area_wl2 = 0.0;  // <= 0: dipole_length^2

    int users = 2;
    double noise_psd = 1.0;
    double p_max = 2.0;
    PowerMode power = PowerMode::uniform;

    OptimizerSettings optimizer;
    InitMode init = InitMode::simplified_mrt;

    std::string output_dir = "results";
    OutputFormat format = OutputFormat::csv;

    double wavelength() const { return wavelength_from_frequency(frequency_hz); }
    MediumProvider provider() const;

    /// Geometry of one sweep point or spacing case, in meters.
    ArrayGeometry geometry_for_layers(int layers) const;
    ArrayGeometry geometry_for_case(const SpacingCase& c) const;
    ArrayGeometry custom_geometry() const;
    /// Every geometry the experiment will build.
    std::vector<ArrayGeometry> geometries() const;

    /// Resolved settings as (section.key, value), in a fixed order.
    std::vector<std::pair<std::string, std::string>> echo() const;
    /// FNV-1a over the echo, as 16 hex digits.
    std::string hash() const;
};

/// Parses INI-style text: [section] headers, key = value lines, ';' or '#' comments.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks the geometries for degenerate or invalid layouts, reporting all problems.
void validate_geometries(const ExperimentConfig& cfg);

}  // namespace simstack
