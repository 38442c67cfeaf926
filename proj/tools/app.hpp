#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbf/direct_solver.hpp"
#include "cbf/io.hpp"

namespace cbf::app {

enum class Mode { direct, inverse, verify, sweep };

const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int numerical_error = 3;
inline constexpr int not_converged = 4;
}  // namespace exit_code

/// Fully resolved run parameters. Defaults apply to keys absent from the file.
struct RunConfig {
    Mode mode = Mode::direct;
    std::string case_name;
    int nx = 32;
    int ny = 32;
    double dt = 2e-3;
    double T = 0.25;
    PhysicalParams params{0.05, 0.5, 0.5, 2.0};

    double tol = 1e-8;
    std::size_t max_iter = 100;
    double radius = 1.0;
    std::string phi_csv;

    double slack = 0.05;
    std::size_t random_pairs = 100;
    std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};

    std::vector<double> sweep_T{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> sweep_r{2.5};

    unsigned jobs = 1;
    std::uint64_t seed = 42;
    std::filesystem::path out = "cbf-out";

    SolverConfig solver_config() const;
    SolverConfig solver_config(double T_final) const;
    /// Every parameter that influences results (the output directory and the
    /// worker count are excluded).
    json to_json() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Parses INI text. Throws ConfigError with line or field diagnostics.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Runs one workflow and returns its exit status.
int run(const RunConfig& cfg);

/// Command-line entry point.
int run_cli(int argc, const char* const* argv);

}  // namespace cbf::app
