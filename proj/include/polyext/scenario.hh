#pragma once

#include <polyext/bundle.hh>

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyext::cli {

using nlohmann::json;

/// Schema problems of a scenario document, each prefixed with the JSON pointer of the offending value.
std::vector<std::string> validate_scenario(const json & config);

/// Throws SchemaError listing every problem.
void require_valid(const json & config);

class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(std::vector<std::string> problems);
    const std::vector<std::string> & problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

std::vector<std::string> builtin_names();
/// Scenario document of a builtin; throws InvalidArgument for unknown names.
json builtin_scenario(const std::string & name);

struct RunOptions {
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool svg = false;
    bool stability = false;
    bool write_files = true;
};

struct RunResult {
    json verdict;
    std::vector<std::string> mismatches; ///< failed expectations and unstable verdicts
    int exit_code = 0;
};

/// Runs every analysis of a validated scenario and writes verdict.json, the bundle CSVs,
/// witness CSVs and, on request, figures/*.svg into out_dir.
RunResult run_scenario(const json & config, const RunOptions & opts);

/// Root curves of an interval or circle bundle: real parts on top, imaginary parts below.
/// Sheets are followed through the edge matchings so every curve is one polyline.
void write_bundle_svg(const RootBundle & bundle, const std::string & title, std::ostream & out);

/// Writes write_bundle_svg output to `path`; throws InvalidArgument for other base kinds.
void emit_figures(const RootBundle & bundle, const std::string & path, const std::string & title);

}
