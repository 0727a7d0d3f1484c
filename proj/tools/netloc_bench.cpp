// netloc-bench: batch experiment runner. Loads a dataset or generates a
// scenario, runs the selected estimators, and writes metrics plus plot-ready
// per-pair error and density files.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "netloc/netloc.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

netloc::PathlossParams resolve_params(const std::string& arg) {
    if (arg == "indoors" || arg == "train" || arg == "outdoors")
        return netloc::named_params(arg);
    if (std::filesystem::exists(arg)) return netloc::io::load_pathloss_params(arg);
    const auto colon = arg.rfind(':');
    if (colon != std::string::npos) {
        const std::string path = arg.substr(0, colon);
        const std::string block = arg.substr(colon + 1);
        if (std::filesystem::exists(path))
            return netloc::io::load_pathloss_params(path, block);
    }
    throw std::runtime_error("cannot resolve --params '" + arg +
                             "': not a builtin name (indoors, train, outdoors) "
                             "or a readable file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "netloc-bench: estimate pairwise device distances from partial RSSI "
        "matrices and benchmark the estimation backends"};

    std::string scenario_arg, rssi_path, truth_path, params_arg, fit_path;
    std::string estimators_arg, out_dir, symmetrize_arg = "pre", timings_path;
    int repeats = 1, knn = 0, n_init = 5, max_iter = 300;
    int sdp_max_iter = 5000;
    std::uint64_t seed = 0;
    double drop_rate = 0.0, floor_dbm = -95.0, threshold_m = 2.0;
    double spring_eps = 0.1, spring_gamma = 0.0, sdp_tol = 1e-6, lle_reg = 1e-3;
    bool spring_momentum = false, spring_adaptive = false, dump_inputs = false;

    app.add_option("--scenario", scenario_arg,
                   "scenario preset name or spec file (presets: table, pocket, "
                   "pocket-detected, train, grocery, dense, sparse, large, mixed)");
    app.add_option("--rssi", rssi_path, "RSSI matrix file (dataset mode)");
    app.add_option("--truth", truth_path, "ground-truth positions file");
    app.add_option("--params", params_arg,
                   "pathloss parameters: indoors|train|outdoors, a params file, "
                   "or file:block");
    app.add_option("--fit", fit_path,
                   "fit pathloss parameters from a distance_m,rssi_dbm file");
    app.add_option("--estimators", estimators_arg,
                   "comma-separated estimator list (default: all)");
    app.add_option("--repeats", repeats, "number of repeats")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "base random seed");
    app.add_option("--drop-rate", drop_rate,
                   "randomly drop this fraction of RSSI readings before estimation");
    app.add_option("--floor-dbm", floor_dbm, "receiver noise floor (default -95)");
    app.add_option("--threshold-m", threshold_m,
                   "proximity threshold in meters (default 2)");
    app.add_option("--knn", knn, "neighbor count for isomap/lle (default min(n-1, 7))");
    app.add_option("--n-init", n_init, "random initializations for mds/spring");
    app.add_option("--max-iter", max_iter, "SMACOF iteration cap");
    app.add_option("--out", out_dir,
                   "output directory (default $NETLOC_OUT or ./out)");
    app.add_option("--symmetrize", symmetrize_arg,
                   "pre (average dBm, default) or post (average distances)")
        ->check(CLI::IsMember({"pre", "post"}));
    app.add_option("--spring-eps", spring_eps, "spring convergence displacement");
    app.add_option("--spring-gamma", spring_gamma, "spring step size (0 = 1/n)");
    app.add_flag("--spring-momentum", spring_momentum, "spring momentum update");
    app.add_flag("--spring-adaptive", spring_adaptive, "decay spring step over time");
    app.add_option("--sdp-tol", sdp_tol, "SDP solver residual tolerance");
    app.add_option("--sdp-max-iter", sdp_max_iter, "SDP solver iteration cap");
    app.add_option("--lle-reg", lle_reg, "LLE local Gram regularization");
    app.add_option("--timings", timings_path,
                   "write per-estimator wall-clock times to this file (timing "
                   "output is inherently non-deterministic)");
    app.add_flag("--dump-inputs", dump_inputs,
                 "write the per-repeat RSSI matrix and truth files");

    CLI11_PARSE(app, argc, argv);

    try {
        netloc::ExperimentConfig config;
        if (!scenario_arg.empty()) {
            config.scenario = std::filesystem::exists(scenario_arg)
                                  ? netloc::io::load_scenario(scenario_arg)
                                  : netloc::scenario_preset(scenario_arg);
        }
        config.rssi_path = rssi_path;
        config.truth_path = truth_path;
        if (!params_arg.empty() && !fit_path.empty())
            throw std::runtime_error("--params and --fit are mutually exclusive");
        if (!params_arg.empty()) config.params = resolve_params(params_arg);
        if (!fit_path.empty())
            config.params =
                netloc::fit_pathloss(netloc::io::load_distance_rssi_samples(fit_path));
        if (!estimators_arg.empty()) config.estimators = split_list(estimators_arg);
        config.repeats = repeats;
        config.seed = seed;
        config.drop_rate = drop_rate;
        config.threshold_m = threshold_m;
        if (!out_dir.empty()) {
            config.out_dir = out_dir;
        } else if (const char* env = std::getenv("NETLOC_OUT")) {
            config.out_dir = env;
        } else {
            config.out_dir = "out";
        }
        config.dump_inputs = dump_inputs;
        config.timings_path = timings_path;
        config.opts.floor_dbm = floor_dbm;
        config.opts.symmetrize_post = symmetrize_arg == "post";
        config.opts.knn = knn;
        config.opts.lle_reg = lle_reg;
        config.opts.mds_n_init = n_init;
        config.opts.mds_max_iter = max_iter;
        config.opts.spring.epsilon = spring_eps;
        config.opts.spring.gamma = spring_gamma;
        config.opts.spring.n_init = n_init;
        config.opts.spring.momentum = spring_momentum;
        config.opts.spring.adaptive_step = spring_adaptive;
        config.opts.sdp_tol = sdp_tol;
        config.opts.sdp_max_iter = sdp_max_iter;

        const netloc::ExperimentResult result = netloc::run_experiment(config);

        std::cout << "scenario " << result.scenario_label << ", " << repeats
                  << " repeat(s), seed " << seed << "\n";
        std::cout << "estimator        mean_abs_m  max_abs_m  mean_pct   max_pct"
                     "    tpr    fpr\n";
        for (const auto& row : result.rows) {
            char line[256];
            if (row.repeats_ok > 0) {
                std::snprintf(line, sizeof(line),
                              "%-15s %10.3f %10.3f %9.1f %9.1f %6s %6s",
                              row.name.c_str(), row.mean_abs_m, row.max_abs_m,
                              row.mean_pct, row.max_pct,
                              row.tpr ? std::to_string(*row.tpr).substr(0, 5).c_str() : "-",
                              row.fpr ? std::to_string(*row.fpr).substr(0, 5).c_str() : "-");
            } else {
                std::snprintf(line, sizeof(line), "%-15s failed on every repeat",
                              row.name.c_str());
            }
            std::cout << line << "\n";
        }
        std::cout << "outputs written to " << config.out_dir << "\n";
        return result.any_estimator_never_succeeded ? 2 : 0;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
