#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flsim/runner.hpp"

namespace {

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        const std::string token = csv.substr(pos, comma - pos);
        if (!token.empty()) {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size()) {
                throw std::invalid_argument("bad value '" + token + "'");
            }
            out.push_back(v);
        }
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-robust federated learning simulator"};
    app.require_subcommand(1);

    std::string run_config;
    std::string run_out;
    CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("config", run_config, "config file")->required();
    run->add_option("--out", run_out, "output directory")->required();

    std::string sweep_config;
    std::string sweep_axis;
    std::string sweep_values;
    std::string sweep_out;
    CLI::App* sw = app.add_subcommand("sweep", "run one experiment per axis value");
    sw->add_option("config", sweep_config, "config file")->required();
    sw->add_option("--axis", sweep_axis, "bias_p | noniid_q | malicious_fraction")->required();
    sw->add_option("--values", sweep_values, "comma-separated value list")->required();
    sw->add_option("--out", sweep_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return flsim::kExitUsage;
    }

    if (run->parsed()) {
        return flsim::cmd_run(run_config, run_out);
    }

    std::vector<double> values;
    try {
        values = parse_value_list(sweep_values);
    } catch (const std::exception& e) {
        std::cerr << "usage error: --values: " << e.what() << "\n";
        return flsim::kExitUsage;
    }
    if (values.empty()) {
        std::cerr << "usage error: --values: empty list\n";
        return flsim::kExitUsage;
    }
    return flsim::cmd_sweep(sweep_config, sweep_axis, values, sweep_out);
}
