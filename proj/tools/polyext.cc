#include <polyext/error.hh>
#include <polyext/scenario.hh>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace polyext;
using nlohmann::json;

namespace {

json read_config(const std::string & path)
{
    std::ifstream f(path);
    if (! f)
        throw Error("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error & e) {
        throw Error(path + ": " + e.what());
    }
}

int report(const cli::RunResult & r, const std::string & out_dir)
{
    for (const auto & m : r.mismatches)
        std::cerr << "mismatch: " << m << '\n';
    const auto & an = r.verdict["analyses"];
    for (const auto & [name, v] : an.items())
        if (v.is_object() && v.contains("answer"))
            std::cout << name << ": " << v["answer"].get<std::string>() << '\n';
    std::cout << "status: " << r.verdict["status"].get<std::string>() << " (" << out_dir << "/verdict.json)\n";
    return r.exit_code;
}

}

int main(int argc, char ** argv)
{
    CLI::App app{"Root bundles of polynomials over C(X) and extension of endomorphisms"};
    app.require_subcommand(1);

    cli::RunOptions opts;
    int samples = 0;
    std::uint64_t seed = 0;
    auto add_flags = [&](CLI::App * sub) {
        sub->add_option("--samples", samples, "resolution: samples, torus grid side or samples per graph edge")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", seed, "seed for randomized trials");
        sub->add_flag("--svg", opts.svg, "write figures/*.svg");
        sub->add_flag("--stability", opts.stability, "re-run at 2n and 4n and compare verdicts");
    };

    std::string config_path;
    auto * run = app.add_subcommand("run", "run a scenario file");
    run->add_option("config", config_path, "scenario JSON")->required();
    add_flags(run);

    std::string builtin;
    auto * bi = app.add_subcommand("builtin", "run a builtin scenario");
    bi->add_option("name", builtin, "example1, example2, example3, torus or graphdemo")
        ->required()
        ->check(CLI::IsMember(cli::builtin_names()));
    add_flags(bi);

    std::string show_name;
    auto * show = app.add_subcommand("show", "print a builtin scenario as JSON");
    show->add_option("name", show_name)->required()->check(CLI::IsMember(cli::builtin_names()));

    std::string check_path;
    auto * check = app.add_subcommand("check", "validate a scenario file against the schema");
    check->add_option("config", check_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*show) {
            std::cout << cli::builtin_scenario(show_name).dump(2) << '\n';
            return 0;
        }
        if (*check) {
            auto problems = cli::validate_scenario(read_config(check_path));
            for (const auto & p : problems)
                std::cerr << p << '\n';
            return problems.empty() ? 0 : 1;
        }
        json config = *run ? read_config(config_path) : cli::builtin_scenario(builtin);
        if (samples > 0)
            opts.samples = samples;
        if ((*run && run->count("--seed")) || (*bi && bi->count("--seed")))
            opts.seed = seed;
        if (! ((*run && run->count("--out")) || (*bi && bi->count("--out"))))
            opts.out_dir = "out/" + config.value("name", std::string("scenario"));
        return report(cli::run_scenario(config, opts), opts.out_dir);
    } catch (const cli::SchemaError & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
