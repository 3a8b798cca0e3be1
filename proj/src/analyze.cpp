#include "adex/pipeline/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "adex/pipeline/csv.hpp"
#include "adex/pipeline/svg.hpp"
#include "adex/rng.hpp"

namespace adex::pipe {

std::array<const char*, kParamCount> param_names() {
    return {"a_code", "b_code", "g_tauw_code", "v_r_code"};
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double f = pos - static_cast<double>(i);
    return v[i] * (1 - f) + v[i + 1] * f;
}

std::vector<double> trace_times(double duration_ms) {
    std::vector<double> t(kTraceLen);
    for (int q = 0; q < kTraceLen; ++q) t[q] = sample_time_ms(q, duration_ms);
    return t;
}

}  // namespace

PredictiveReport analyze_posterior(snpe::Posterior& posterior, const RunConfig& cfg,
                                   const NormalizedTrace& x_star, const std::string& out_dir) {
    const auto names = param_names();
    PredictiveReport report;
    report.n_samples = cfg.analysis_samples;

    // --- posterior samples (integer codes, rejection inside the prior box) ---
    const std::vector<DigitalParams> samples =
        posterior.propose(cfg.analysis_samples, Rng::split(cfg.analysis_seed, 1));

    std::array<std::vector<double>, kParamCount> cols;
    CsvTable sample_table;
    sample_table.comments.push_back("posterior samples, integer parameter codes in [0,1022]");
    sample_table.header.assign(names.begin(), names.end());
    for (const auto& s : samples) {
        std::vector<double> row(kParamCount);
        for (int j = 0; j < kParamCount; ++j) {
            row[j] = s[j];
            cols[j].push_back(s[j]);
        }
        sample_table.rows.push_back(std::move(row));
    }
    write_csv(out_dir + "/posterior_samples.csv", sample_table);

    for (int j = 0; j < kParamCount; ++j) {
        report.sample_median[j] = quantile(cols[j], 0.5);
        report.ci_lo[j] = quantile(cols[j], 0.025);
        report.ci_hi[j] = quantile(cols[j], 0.975);
    }
    for (int i = 0; i < kParamCount; ++i)
        for (int j = 0; j < kParamCount; ++j)
            report.correlation[i][j] = i == j ? 1.0 : pearson(cols[i], cols[j]);
    report.corr_b_gtauw_negative = report.correlation[1][2] < 0.0;

    // --- 1-D marginal histograms ---
    {
        constexpr int kBins = 50;
        CsvTable hist;
        hist.header = {"param_index", "bin_lo", "bin_hi", "count"};
        hist.comments.push_back("param_index: 0=a_code 1=b_code 2=g_tauw_code 3=v_r_code");
        const double width = static_cast<double>(kCodeMax + 1) / kBins;
        for (int j = 0; j < kParamCount; ++j) {
            std::array<long, kBins> counts{};
            for (double v : cols[j]) {
                int b = static_cast<int>(v / width);
                if (b >= kBins) b = kBins - 1;
                ++counts[b];
            }
            for (int b = 0; b < kBins; ++b)
                hist.rows.push_back({static_cast<double>(j), b * width, (b + 1) * width,
                                     static_cast<double>(counts[b])});
        }
        write_csv(out_dir + "/posterior_marginals.csv", hist);
    }

    // --- 2-D pairwise scatter data + SVG ---
    for (int i = 0; i < kParamCount; ++i) {
        for (int j = i + 1; j < kParamCount; ++j) {
            CsvTable pair;
            pair.header = {names[i], names[j]};
            for (std::size_t r = 0; r < samples.size(); ++r)
                pair.rows.push_back({cols[i][r], cols[j][r]});
            const std::string base = std::string("pair_") + names[i] + "__" + names[j];
            write_csv(out_dir + "/" + base + ".csv", pair);

            SvgSeries dots;
            dots.x = cols[i];
            dots.y = cols[j];
            dots.color = "#1f4e8c";
            SvgSeries truth;
            truth.x = {static_cast<double>(cfg.target_codes[i])};
            truth.y = {static_cast<double>(cfg.target_codes[j])};
            truth.color = "#c02020";
            truth.label = "target";
            svg_scatter_plot(out_dir + "/" + base + ".svg", {dots, truth},
                             "posterior samples", names[i], names[j]);
        }
    }

    // --- posterior-predictive traces vs trial-to-trial baseline ---
    const std::vector<double> times = trace_times(cfg.device.duration_ms);
    std::vector<SvgSeries> overlay;
    {
        SvgSeries target_series;
        target_series.x = times;
        target_series.y.assign(x_star.begin(), x_star.end());
        target_series.color = "black";
        target_series.label = "target";
        overlay.push_back(std::move(target_series));
    }

    CsvTable pred_table;
    pred_table.header = {"time_ms", "target"};
    std::vector<NormalizedTrace> pred_traces;
    const std::vector<DigitalParams> draws =
        posterior.propose(cfg.analysis_predictive, Rng::split(cfg.analysis_seed, 2));
    const char* palette[] = {"#c02020", "#2a7f2a", "#2040c0", "#b07010"};
    for (int k = 0; k < cfg.analysis_predictive; ++k) {
        const NormalizedTrace trace =
            run_experiment(draws[k], cfg.device, Rng::split(cfg.analysis_seed, 100 + k));
        pred_traces.push_back(trace);
        const TraceMetrics m =
            trace_metrics(trace, x_star, cfg.spike_threshold, cfg.device.duration_ms);
        report.predictive_mse.push_back(m.mse);
        report.predictive_spike_count_delta.push_back(m.spike_count_delta);
        report.predictive_spike_time_deltas_ms.push_back(m.spike_time_deltas_ms);
        pred_table.header.push_back("draw" + std::to_string(k + 1));
        SvgSeries s;
        s.x = times;
        s.y.assign(trace.begin(), trace.end());
        s.color = palette[k % 4];
        s.label = "draw " + std::to_string(k + 1);
        overlay.push_back(std::move(s));
    }
    for (int q = 0; q < kTraceLen; ++q) {
        std::vector<double> row{times[q], static_cast<double>(x_star[q])};
        for (const auto& tr : pred_traces) row.push_back(tr[q]);
        pred_table.rows.push_back(std::move(row));
    }
    write_csv(out_dir + "/predictive_traces.csv", pred_table);
    svg_line_plot(out_dir + "/predictive_traces.svg", overlay, "posterior-predictive traces",
                  "time [ms]", "normalized membrane", 900, 420);

    for (int t = 0; t < cfg.analysis_trials; ++t) {
        const NormalizedTrace trial =
            run_experiment(cfg.target_codes, cfg.device, Rng::split(cfg.analysis_seed, 1000 + t));
        report.baseline_mse.push_back(
            trace_metrics(trial, x_star, cfg.spike_threshold, cfg.device.duration_ms).mse);
    }
    report.predictive_mse_median = quantile(report.predictive_mse, 0.5);
    report.baseline_mse_median = quantile(report.baseline_mse, 0.5);

    // --- report JSON ---
    nlohmann::json j;
    j["n_samples"] = report.n_samples;
    for (int i = 0; i < kParamCount; ++i) {
        j["median"][names[i]] = report.sample_median[i];
        j["ci95_lo"][names[i]] = report.ci_lo[i];
        j["ci95_hi"][names[i]] = report.ci_hi[i];
        j["target"][names[i]] = cfg.target_codes[i];
        for (int k = 0; k < kParamCount; ++k)
            j["correlation"][names[i]][names[k]] = report.correlation[i][k];
    }
    j["predictive_mse"] = report.predictive_mse;
    j["predictive_mse_median"] = report.predictive_mse_median;
    j["predictive_spike_count_delta"] = report.predictive_spike_count_delta;
    j["predictive_spike_time_deltas_ms"] = report.predictive_spike_time_deltas_ms;
    j["baseline_mse"] = report.baseline_mse;
    j["baseline_mse_median"] = report.baseline_mse_median;
    j["corr_b_gtauw_negative"] = report.corr_b_gtauw_negative;
    std::ofstream out(out_dir + "/predictive_report.json", std::ios::trunc);
    if (!out) throw IoError("cannot write predictive report");
    out << j.dump(2) << "\n";

    return report;
}

}  // namespace adex::pipe
