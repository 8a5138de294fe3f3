// Command-line driver: one subcommand per verification campaign plus `all`.
// Campaign checks land in <out>/<name>.report.jsonl and .summary.txt; the
// exit status is 0 exactly when every check passed.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "solvgeo/campaigns.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Verification campaigns for negatively curved solvable-group geometry"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t jobs = 1;
    auto* config_opt =
        app.add_option("--config", config_path, "JSON campaign configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    auto* out_opt = app.add_option("--out", out_dir, "override the report directory");
    app.add_option("--jobs", jobs, "split the campaign into this many merged shards")
        ->check(CLI::PositiveNumber);

    bool oracle_only = false;
    std::vector<std::string> names = solvgeo::campaign_names();
    names.push_back("all");
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(
            name, name == "all" ? "run every campaign" : "run the " + name + " campaign");
        sub->fallthrough();
        if (name == "distance")
            sub->add_flag("--oracle", oracle_only,
                          "run only the closed-form oracle comparison (single shard)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string chosen = app.get_subcommands().front()->get_name();

    try {
        solvgeo::campaign_config cfg;
        if (*config_opt) cfg = solvgeo::load_config(config_path);
        if (*seed_opt) cfg.seed = seed;
        if (*out_opt) cfg.out_dir = out_dir;

        solvgeo::report rep;
        if (chosen == "distance" && oracle_only) {
            solvgeo::validate_config(cfg);
            rep = solvgeo::run_distance(cfg, true);
            solvgeo::write_report(rep, cfg.out_dir, chosen);
        } else {
            rep = solvgeo::run_and_write(chosen, cfg, jobs);
        }
        std::cout << solvgeo::to_summary(rep);
        std::cout << "report: " << cfg.out_dir << "/" << chosen << ".report.jsonl\n";
        return solvgeo::all_passed(rep) ? 0 : 1;
    } catch (const solvgeo::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == solvgeo::errc::config_invalid ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
