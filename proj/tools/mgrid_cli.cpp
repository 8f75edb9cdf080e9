// Command-line front end: `simulate` runs one scenario, `sweep` runs a grid of
// threshold or timing settings and tabulates reductions.

#include "mgrid/conductor.hpp"
#include "mgrid/errors.hpp"
#include "mgrid/export.hpp"
#include "mgrid/log.hpp"
#include "mgrid/metrics.hpp"
#include "mgrid/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using mgrid::scenario::Scenario;

struct Overrides {
    std::string mode;
    std::optional<double> e_opt, e_com, noise_sigma, duration;
    std::optional<std::uint64_t> seed;
    bool parallel = false;
};

void apply(Scenario& s, const Overrides& o) {
    if (!o.mode.empty()) s.mode = mgrid::scenario::parse_mode(o.mode);
    if (o.e_opt) s.thresholds.e_opt = *o.e_opt;
    if (o.e_com) s.thresholds.e_com = *o.e_com;
    if (o.noise_sigma) s.noise_sigma = *o.noise_sigma;
    if (o.seed) s.seed = *o.seed;
    if (o.parallel) s.parallel = true;
    if (o.duration) {
        s.duration = *o.duration;
        std::erase_if(s.events, [&](const auto& e) { return e.t > s.duration; });
    }
    s.validate();
}

void set_key(Scenario& s, const std::string& key, double v) {
    if (key == "e_opt") {
        s.thresholds.e_opt = v;
    } else if (key == "e_com") {
        s.thresholds.e_com = v;
    } else if (key == "T_s_mpc") {
        s.t_s_mpc = v;  // T_s stays fixed, so r = T_s_mpc / T_s changes
    } else if (key == "horizon") {
        s.horizon = static_cast<int>(v);
    } else {
        throw mgrid::ScenarioError("unsupported sweep key '" + key + "' (use e_opt, e_com, T_s_mpc or horizon)");
    }
}

std::pair<std::string, std::vector<double>> parse_grid(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw mgrid::ScenarioError("grid spec '" + spec + "' must read key=v1,v2,...");
    std::vector<double> vals;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw mgrid::ScenarioError("grid value '" + item + "' is not a number");
        }
    }
    if (vals.empty()) throw mgrid::ScenarioError("grid spec '" + spec + "' has no values");
    return {spec.substr(0, eq), vals};
}

int simulate(const std::string& path, const std::string& out_dir, const Overrides& o) {
    Scenario s = mgrid::scenario::load_scenario(path);
    apply(s, o);
    const auto out = mgrid::scenario::run(s);
    const auto m = mgrid::scenario::compute_metrics(out);
    mgrid::scenario::export_csv(out, m, out_dir);
    std::cout << "scenario " << s.name << " (" << out.mode << "): " << out.series.size() << " rows, "
              << "computation reduction " << mgrid::scenario::fmt9(m.reductions.avg_computation) << "%, "
              << "communication reduction " << mgrid::scenario::fmt9(m.reductions.avg_communication) << "%, "
              << "steady-state error " << mgrid::scenario::fmt9(m.steady_state_error_pct) << "%, wall "
              << mgrid::scenario::fmt9(out.wall_seconds) << " s\n";
    if (out.diverged) {
        std::cerr << "plant diverged: " << out.diagnostic << "\n";
        return 3;
    }
    return 0;
}

int sweep(const std::string& path, const std::string& out_dir, const std::vector<std::string>& grids,
          const Overrides& o) {
    Scenario base = mgrid::scenario::load_scenario(path);
    apply(base, o);
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    for (const auto& g : grids) axes.push_back(parse_grid(g));
    if (axes.empty()) throw mgrid::ScenarioError("sweep needs at least one --grid");

    std::filesystem::create_directories(out_dir);
    std::ofstream table(std::filesystem::path(out_dir) / "sweep.csv");
    for (const auto& a : axes) table << a.first << ',';
    table << "r,avg_computation_pct,avg_communication_pct,optimizations,transmissions,steady_state_error_pct,"
             "max_excursion_s,diverged\n";

    std::vector<std::size_t> idx(axes.size(), 0);
    int rc = 0;
    while (true) {
        Scenario s = base;
        std::string tag;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = axes[a].second[idx[a]];
            set_key(s, axes[a].first, v);
            tag += (tag.empty() ? "" : "_") + axes[a].first + "=" + mgrid::scenario::fmt9(v);
        }
        s.validate();
        const auto out = mgrid::scenario::run(s);
        const auto m = mgrid::scenario::compute_metrics(out);
        mgrid::scenario::export_csv(out, m, (std::filesystem::path(out_dir) / tag).string());
        for (std::size_t a = 0; a < axes.size(); ++a) table << mgrid::scenario::fmt9(axes[a].second[idx[a]]) << ',';
        table << s.ratio() << ',' << mgrid::scenario::fmt9(m.reductions.avg_computation) << ','
              << mgrid::scenario::fmt9(m.reductions.avg_communication) << ',' << m.opt_count << ',' << m.com_count
              << ',' << mgrid::scenario::fmt9(m.steady_state_error_pct) << ','
              << mgrid::scenario::fmt9(m.max_excursion) << ',' << (out.diverged ? 1 : 0) << '\n';
        std::cout << tag << ": computation " << mgrid::scenario::fmt9(m.reductions.avg_computation)
                  << "%, communication " << mgrid::scenario::fmt9(m.reductions.avg_communication) << "%\n";
        if (out.diverged) rc = 3;

        std::size_t a = 0;
        while (a < axes.size() && ++idx[a] == axes[a].second.size()) idx[a++] = 0;
        if (a == axes.size()) break;
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    mgrid::log::init_from_env();
    CLI::App app{"Event-triggered distributed MPC microgrid simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out";
    Overrides o;
    std::vector<std::string> grids;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--mode", o.mode, "etdmpc | time-triggered | pi");
        cmd->add_option("--e-opt", o.e_opt, "Optimization trigger threshold");
        cmd->add_option("--e-com", o.e_com, "Communication trigger threshold");
        cmd->add_option("--noise-sigma", o.noise_sigma, "Measurement noise standard deviation (V)");
        cmd->add_option("--seed", o.seed, "Noise seed");
        cmd->add_option("--duration", o.duration, "Override run length (s)");
        cmd->add_flag("--parallel", o.parallel, "Step agents concurrently");
    };
    CLI::App* sim = app.add_subcommand("simulate", "Run one scenario");
    add_common(sim);
    CLI::App* sw = app.add_subcommand("sweep", "Run a parameter grid");
    add_common(sw);
    sw->add_option("--grid", grids, "key=v1,v2,... (e_opt, e_com, T_s_mpc, horizon)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return simulate(scenario_path, out_dir, o);
        return sweep(scenario_path, out_dir, grids, o);
    } catch (const mgrid::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
