#include <iostream>

#include <CLI11.hpp>

#include "wgi/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Averaged weak-grid inverter simulator"};
    app.require_subcommand(1);

    std::string scenario, out_path, param;
    int decimate = 0;
    std::vector<double> values;
    bool per_unit = false;

    auto* sim = app.add_subcommand("simulate", "run a scenario and write the trace as CSV");
    sim->add_option("--scenario", scenario, "scenario file or built-in name")->required();
    sim->add_option("--out", out_path, "output CSV path")->required();
    sim->add_option("--decimate", decimate, "keep every N-th sample (default: scenario setting)")->check(CLI::PositiveNumber);

    auto* tune = app.add_subcommand("tune", "print the synthesized gains as a scenario gains section");
    tune->add_option("--scenario", scenario, "scenario file or built-in name")->required();

    auto* sweep = app.add_subcommand("sweep", "run a scenario over a parameter grid and print per-run summaries");
    sweep->add_option("--scenario", scenario, "scenario file or built-in name")->required();
    sweep->add_option("--param", param, "X_g, v_g_magnitude or p_i")->required();
    sweep->add_option("--values", values, "grid values")->expected(0, -1);
    sweep->add_flag("--per-unit", per_unit, "values are per unit of Z_b, V_b or S_b");
    sweep->add_option("--out", out_path, "output CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    if (*sim) return wgi::cmd_simulate(scenario, out_path, decimate, std::cout, std::cerr);
    if (*tune) return wgi::cmd_tune(scenario, std::cout, std::cerr);
    if (out_path.empty()) return wgi::cmd_sweep(scenario, param, values, per_unit, std::cout, std::cerr);
    std::ofstream f(out_path);
    if (!f) {
        std::cerr << "error: cannot open output '" << out_path << "'\n";
        return 1;
    }
    return wgi::cmd_sweep(scenario, param, values, per_unit, f, std::cerr);
}
