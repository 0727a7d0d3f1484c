#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netloc/direct.hpp"
#include "netloc/io.hpp"
#include "netloc/manifold.hpp"
#include "netloc/mds.hpp"
#include "netloc/measurements.hpp"
#include "netloc/metrics.hpp"
#include "netloc/sdp.hpp"
#include "netloc/simulator.hpp"
#include "netloc/spring.hpp"

namespace netloc {

struct EstimatorOptions {
    double floor_dbm = -95.0;
    bool symmetrize_post = false;  ///< pre-averaging is the default
    int knn = 0;                   ///< 0 selects min(n-1, 7)
    double lle_reg = 1e-3;
    int mds_n_init = 5;
    int mds_max_iter = 300;
    SpringOptions spring;
    int sdp_max_iter = 5000;
    double sdp_tol = 1e-6;
};

inline const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names = {
        "rss",    "rss-pre", "rss-post",   "mds-metric", "mds-nonmetric",
        "spring", "sdp",     "sdp-spring", "isomap",     "lle"};
    return names;
}

/// One estimator call: compensated RSSI matrix in, complete symmetric
/// distance estimates out.
inline DistanceEstimateMatrix run_estimator(const std::string& name,
                                            const RssiMatrix& rssi,
                                            const PathlossParams& params,
                                            const EstimatorOptions& opts,
                                            std::uint64_t seed) {
    auto symmetrize = [&](const RssiMatrix& m) {
        return opts.symmetrize_post ? symmetrize_post(m, params)
                                    : symmetrize_pre(m, params);
    };
    const int knn = opts.knn > 0 ? opts.knn : default_knn(rssi.size());

    if (name == "rss")
        return estimate_direct(rssi, params, DirectVariant::raw, opts.floor_dbm);
    if (name == "rss-pre")
        return estimate_direct(rssi, params, DirectVariant::pre_averaged,
                               opts.floor_dbm);
    if (name == "rss-post")
        return estimate_direct(rssi, params, DirectVariant::post_averaged,
                               opts.floor_dbm);
    if (name == "mds-metric") {
        const MeasurementSet ms =
            symmetrize(impute_noise_floor(rssi, opts.floor_dbm));
        SmacofOptions so;
        so.metric = true;
        so.n_init = opts.mds_n_init;
        so.max_iter = opts.mds_max_iter;
        so.seed = seed;
        return smacof(ms, so).config.to_distances();
    }
    if (name == "mds-nonmetric") {
        const MeasurementSet ms = symmetrize(rssi);
        SmacofOptions so;
        so.metric = false;
        so.n_init = opts.mds_n_init;
        so.max_iter = opts.mds_max_iter;
        so.seed = seed;
        return rescale_to_mean(smacof(ms, so).config, ms).to_distances();
    }
    if (name == "spring") {
        const MeasurementSet ms = symmetrize(rssi);
        SpringOptions so = opts.spring;
        so.seed = seed;
        return spring_localize(ms, so).to_distances();
    }
    if (name == "sdp" || name == "sdp-spring") {
        const MeasurementSet ms = symmetrize(rssi);
        const SdpSolution sol = solve_sdp(SdpProblem::from_measurements(ms),
                                          opts.sdp_max_iter, opts.sdp_tol, seed);
        if (name == "sdp") return sol.config.to_distances();
        SpringOptions so = opts.spring;
        so.seed = seed;
        return refine_with_spring(sol, ms, so).to_distances();
    }
    if (name == "isomap") return isomap(symmetrize(rssi), knn).to_distances();
    if (name == "lle")
        return lle(symmetrize(rssi), knn, opts.lle_reg).to_distances();

    std::string valid;
    for (const auto& known : estimator_names()) valid += " " + known;
    throw std::invalid_argument("unknown estimator '" + name + "' (valid:" +
                                valid + ")");
}

struct ExperimentConfig {
    std::optional<ScenarioSpec> scenario;  ///< scenario mode
    std::string rssi_path;                 ///< dataset mode
    std::string truth_path;
    std::optional<PathlossParams> params;  ///< inversion params override
    std::vector<std::string> estimators = estimator_names();
    int repeats = 1;
    std::uint64_t seed = 0;
    double drop_rate = 0.0;
    double threshold_m = 2.0;
    std::string out_dir = "out";
    bool dump_inputs = false;
    bool write_outputs = true;
    std::string timings_path;  ///< empty disables the (non-deterministic) timing file
    EstimatorOptions opts;

    void validate() const {
        if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
        if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
            throw std::invalid_argument("drop rate must be in [0, 1]");
        if (!(threshold_m > 0.0))
            throw std::invalid_argument("threshold must be > 0");
        if (estimators.empty())
            throw std::invalid_argument("no estimators selected");
        for (const auto& name : estimators)
            if (std::find(estimator_names().begin(), estimator_names().end(),
                          name) == estimator_names().end()) {
                std::string valid;
                for (const auto& known : estimator_names()) valid += " " + known;
                throw std::invalid_argument("unknown estimator '" + name +
                                            "' (valid:" + valid + ")");
            }
        if (scenario.has_value() == (!rssi_path.empty()))
            throw std::invalid_argument(
                "exactly one input is required: a scenario or an RSSI matrix file");
        if (!rssi_path.empty() && truth_path.empty())
            throw std::invalid_argument(
                "dataset mode requires a truth positions file");
    }
};

struct EstimatorAggregate {
    std::string name;
    int repeats_ok = 0;
    int repeats_failed = 0;
    double mean_abs_m = 0.0;  ///< mean over repeats of per-repeat means
    double max_abs_m = 0.0;   ///< max over repeats of per-repeat maxes
    double mean_pct = 0.0;
    double max_pct = 0.0;
    std::optional<double> tpr;  ///< mean over repeats where defined
    std::optional<double> fpr;
    double runtime_s = 0.0;
    int runtime_calls = 0;
    std::vector<PairError> samples;     ///< pooled per-pair errors
    std::vector<std::string> failures;  ///< per-repeat error messages
};

struct ExperimentResult {
    std::vector<EstimatorAggregate> rows;
    std::string scenario_label;
    bool any_estimator_never_succeeded = false;
};

namespace detail {

inline void write_header_block(std::ofstream& out, const ExperimentConfig& config,
                               const std::string& label) {
    out << "# netloc-bench output\n";
    out << "# scenario=" << label << '\n';
    if (!config.rssi_path.empty()) out << "# rssi=" << config.rssi_path << '\n';
    if (!config.truth_path.empty()) out << "# truth=" << config.truth_path << '\n';
    out << "# seed=" << config.seed << '\n';
    out << "# repeats=" << config.repeats << '\n';
    out << "# drop_rate=" << io::format_double(config.drop_rate) << '\n';
    out << "# floor_dbm=" << io::format_double(config.opts.floor_dbm) << '\n';
    out << "# threshold_m=" << io::format_double(config.threshold_m) << '\n';
    out << "# symmetrize=" << (config.opts.symmetrize_post ? "post" : "pre") << '\n';
    out << "# estimators=";
    for (std::size_t k = 0; k < config.estimators.size(); ++k)
        out << (k ? "," : "") << config.estimators[k];
    out << '\n';
    out << "# aggregation=mean-of-means,max-of-maxes,mean-of-defined-rates\n";
}

inline std::string optional_cell(const std::optional<double>& v) {
    return v ? io::format_double(*v) : std::string();
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

inline void write_outputs(const ExperimentResult& result,
                          const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const std::string label = result.scenario_label;

    auto metrics = open_output(config.out_dir + "/metrics.csv");
    write_header_block(metrics, config, label);
    metrics << "scenario,estimator,repeats_ok,repeats_failed,mean_abs_m,"
               "max_abs_m,mean_pct,max_pct,tpr,fpr\n";
    for (const auto& row : result.rows) {
        metrics << label << ',' << row.name << ',' << row.repeats_ok << ','
                << row.repeats_failed << ',';
        if (row.repeats_ok > 0)
            metrics << io::format_double(row.mean_abs_m) << ','
                    << io::format_double(row.max_abs_m) << ','
                    << io::format_double(row.mean_pct) << ','
                    << io::format_double(row.max_pct);
        else
            metrics << ",,,";
        metrics << ',' << optional_cell(row.tpr) << ',' << optional_cell(row.fpr)
                << '\n';
    }

    auto samples = open_output(config.out_dir + "/samples.csv");
    write_header_block(samples, config, label);
    samples << "estimator,i,j,true_m,estimate_m,abs_err_m,pct_err\n";
    for (const auto& row : result.rows)
        for (const auto& pe : row.samples)
            samples << row.name << ',' << pe.i << ',' << pe.j << ','
                    << io::format_double(pe.true_m) << ','
                    << io::format_double(pe.estimate_m) << ','
                    << io::format_double(pe.abs_m) << ','
                    << io::format_double(pe.pct) << '\n';

    for (const auto& row : result.rows) {
        if (row.samples.size() < 2) continue;
        for (const bool percent : {false, true}) {
            std::vector<double> values;
            values.reserve(row.samples.size());
            for (const auto& pe : row.samples)
                values.push_back(percent ? pe.pct : pe.abs_m);
            const DensityReport density = error_density(values);
            auto out = open_output(config.out_dir + "/density_" + row.name +
                                   (percent ? "_pct" : "_abs") + ".csv");
            write_header_block(out, config, label);
            if (density.point_mass) {
                out << "# point_mass=" << io::format_double(density.point) << '\n';
                out << "x,pdf,cdf\n";
                continue;
            }
            out << "x,pdf,cdf\n";
            for (std::size_t g = 0; g < density.grid.size(); ++g)
                out << io::format_double(density.grid[g]) << ','
                    << io::format_double(density.pdf[g]) << ','
                    << io::format_double(density.cdf[g]) << '\n';
        }
    }

    auto failures = open_output(config.out_dir + "/failures.log");
    for (const auto& row : result.rows)
        for (const auto& msg : row.failures)
            failures << row.name << ": " << msg << '\n';

    if (!config.timings_path.empty()) {
        auto timings = open_output(config.timings_path);
        timings << "estimator,calls,total_s,mean_s\n";
        for (const auto& row : result.rows) {
            timings << row.name << ',' << row.runtime_calls << ','
                    << io::format_double(row.runtime_s) << ','
                    << io::format_double(row.runtime_calls > 0
                                             ? row.runtime_s / row.runtime_calls
                                             : 0.0)
                    << '\n';
        }
    }
}

}  // namespace detail

/// Runs every selected estimator over every repeat, evaluates against the
/// ground truth, aggregates, and writes the output files. A failure of one
/// estimator in one repeat never disturbs the other rows.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    // dataset mode loads once; scenario mode regenerates per repeat
    RssiMatrix dataset_rssi;
    Eigen::MatrixXd dataset_truth;
    std::string label;
    if (!config.rssi_path.empty()) {
        dataset_rssi = io::load_rssi_matrix(config.rssi_path);
        const auto positions = io::load_positions(config.truth_path);
        if (positions.rows() != dataset_rssi.size())
            throw std::runtime_error(
                config.truth_path + ": " + std::to_string(positions.rows()) +
                " positions for a " + std::to_string(dataset_rssi.size()) +
                "-device RSSI matrix (" + config.rssi_path + ")");
        dataset_truth.resize(positions.rows(), positions.rows());
        for (Eigen::Index i = 0; i < positions.rows(); ++i)
            for (Eigen::Index j = 0; j < positions.rows(); ++j)
                dataset_truth(i, j) = (positions.row(i) - positions.row(j)).norm();
        label = std::filesystem::path(config.rssi_path).stem().string();
    } else {
        label = config.scenario->name;
    }

    PathlossParams params;
    if (config.params) {
        params = *config.params;
    } else if (config.scenario && !config.scenario->use_empirical) {
        params = config.scenario->params;
    } else {
        throw std::invalid_argument(
            "pathloss parameters are required (pass --params or --fit) when the "
            "input does not carry parametric ones");
    }
    params.validate();

    ExperimentResult result;
    result.scenario_label = label;
    result.rows.resize(config.estimators.size());
    for (std::size_t e = 0; e < config.estimators.size(); ++e)
        result.rows[e].name = config.estimators[e];
    std::vector<RuntimeAccumulator> runtimes(config.estimators.size());
    std::vector<double> tpr_sum(config.estimators.size(), 0.0);
    std::vector<int> tpr_count(config.estimators.size(), 0);
    std::vector<double> fpr_sum(config.estimators.size(), 0.0);
    std::vector<int> fpr_count(config.estimators.size(), 0);

    for (int repeat = 0; repeat < config.repeats; ++repeat) {
        const std::uint64_t repeat_seed =
            Rng::mix(config.seed, static_cast<std::uint64_t>(repeat));
        RssiMatrix rssi;
        Eigen::MatrixXd truth;
        Eigen::Matrix<double, Eigen::Dynamic, 2> truth_positions;
        if (config.scenario) {
            ScenarioSpec spec = *config.scenario;
            spec.seed = repeat_seed;
            const GroundTruth gt = generate_positions(spec);
            truth = gt.distances;
            truth_positions = gt.positions;
            rssi = synthesize_rssi(gt, spec);
        } else {
            rssi = dataset_rssi;
            truth = dataset_truth;
        }
        if (config.drop_rate > 0.0)
            rssi = drop_random(rssi, config.drop_rate,
                               Rng::mix(repeat_seed, 0x64726f70));
        if (rssi.has_compensation()) rssi = rssi.apply_compensation();
        if (config.write_outputs && config.dump_inputs) {
            std::filesystem::create_directories(config.out_dir);
            io::save_rssi_matrix(rssi, config.out_dir + "/rssi_r" +
                                           std::to_string(repeat) + ".csv");
            if (config.scenario)
                io::save_positions(truth_positions,
                                   config.out_dir + "/truth_r" +
                                       std::to_string(repeat) + ".csv");
        }

        for (std::size_t e = 0; e < config.estimators.size(); ++e) {
            auto& agg = result.rows[e];
            try {
                const std::uint64_t est_seed =
                    Rng::mix(repeat_seed, 0x1000 + static_cast<std::uint64_t>(e));
                const DistanceEstimateMatrix estimate = runtimes[e].time([&] {
                    return run_estimator(agg.name, rssi, params, config.opts,
                                         est_seed);
                });
                const ErrorStats stats = error_stats(truth, estimate);
                const ConfusionRates rates =
                    proximity_confusion(truth, estimate, config.threshold_m);
                agg.mean_abs_m += stats.mean_abs_m;
                agg.mean_pct += stats.mean_pct;
                agg.max_abs_m = std::max(agg.max_abs_m, stats.max_abs_m);
                agg.max_pct = std::max(agg.max_pct, stats.max_pct);
                if (rates.tpr) {
                    tpr_sum[e] += *rates.tpr;
                    ++tpr_count[e];
                }
                if (rates.fpr) {
                    fpr_sum[e] += *rates.fpr;
                    ++fpr_count[e];
                }
                for (const auto& pe : stats.samples) agg.samples.push_back(pe);
                ++agg.repeats_ok;
            } catch (const std::exception& ex) {
                ++agg.repeats_failed;
                agg.failures.push_back("repeat " + std::to_string(repeat) + ": " +
                                       ex.what());
            }
        }
    }

    for (std::size_t e = 0; e < result.rows.size(); ++e) {
        auto& agg = result.rows[e];
        agg.runtime_s = runtimes[e].total_seconds();
        agg.runtime_calls = runtimes[e].calls();
        if (agg.repeats_ok > 0) {
            agg.mean_abs_m /= agg.repeats_ok;
            agg.mean_pct /= agg.repeats_ok;
        } else {
            result.any_estimator_never_succeeded = true;
        }
        if (tpr_count[e] > 0) agg.tpr = tpr_sum[e] / tpr_count[e];
        if (fpr_count[e] > 0) agg.fpr = fpr_sum[e] / fpr_count[e];
    }

    if (config.write_outputs) detail::write_outputs(result, config);
    return result;
}

}  // namespace netloc
