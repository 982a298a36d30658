// cli.hpp — Run configuration parsing, validation and the subcommand drivers behind `opgap`.
//
// A config is a flat list of `key = value` lines; `#` starts a comment. Grid values
// accept `linspace(a, b, n)`, `logspace(a, b, n)` (both endpoints inclusive) or an
// explicit list `[v1, v2, ...]`. Outputs start with a `#`-prefixed header that echoes
// the fully expanded config, so any output file can be parsed back into a RunConfig.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "opgap/chain_model.hpp"

namespace opgap::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class ExitCode : int {
    ok = 0,
    usage = 1,      // unknown subcommand or bad command-line flags
    config = 2,     // config does not parse or validate
    numerical = 3,  // a solver or fit failed
    io = 4,         // config unreadable or output unwritable
};

class ConfigError : public SpecError {
public:
    using SpecError::SpecError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, json };

OutputFormat parse_format(const std::string& s);

using ConfigValue = std::variant<bool, long long, double, std::string, std::vector<double>>;

/// Subcommands in the order they are documented.
const std::vector<std::string>& subcommands();
bool is_subcommand(std::string_view name);

struct RunConfig {
    std::string subcommand;
    std::map<std::string, ConfigValue> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    double real(const std::string& key, std::optional<double> fallback = std::nullopt) const;
    long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) const;
    bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
    std::string word(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
    std::vector<double> grid(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const;

    /// Chain parameters: length, w_plus, w_minus, gamma, dressed, q, geometry,
    /// boundary_extent and bond.<x> overrides.
    ChainSpec chain_spec() const;

    bool operator==(const RunConfig&) const = default;
};

/// Expands a grid expression; the result must be strictly ascending.
std::vector<double> parse_grid(std::string_view text);

/// Parses config text. Keys are checked against the known schema.
RunConfig parse_config(std::string_view text);

/// Checks the subcommand-specific requirements (required keys, seed, grid shapes).
void validate(const RunConfig& config);

/// Canonical `key = value` lines, one per entry, subcommand first.
std::vector<std::string> config_echo(const RunConfig& config);

/// Recovers the config from the header of a CSV or JSON output.
RunConfig parse_output_config(std::string_view output);

/// Runs the subcommand and renders its result. Threads only change wall time.
std::string run(const RunConfig& config, OutputFormat format, std::size_t threads = 0);

/// Whole command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv);

}  // namespace opgap::cli
