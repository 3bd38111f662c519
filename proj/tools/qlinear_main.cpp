#include "qlinear/checkpoint.hpp"
#include "qlinear/config.hpp"
#include "qlinear/eval.hpp"
#include "qlinear/report.hpp"
#include "qlinear/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace fs = std::filesystem;
using namespace qlinear;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::optional<long> horizon;
    std::optional<long> lookback;
    std::optional<int> m;
    std::optional<std::string> ratios;
    std::optional<std::string> grid;
};

TrainConfig effective_config(const CommonOpts& o) {
    TrainConfig cfg = o.config_path.empty() ? TrainConfig{} : parse_config_file(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.variant) cfg.variant = variant_from_name(*o.variant);
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.lookback) cfg.lookback = *o.lookback;
    if (o.m) cfg.m = *o.m;
    if (o.ratios) cfg.split_ratios = parse_ratios(*o.ratios);
    if (o.grid) {
        cfg.grid_m.clear();
        std::stringstream ss(*o.grid);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.grid_m.push_back(std::stoi(item));
    }
    return cfg;
}

void warn_if_off_grid(const TrainConfig& cfg) {
    static const std::set<int> canonical{1, 2, 4, 6, 8, 16, 32, 64, 128, 256, 512, 1024};
    if (!canonical.count(cfg.m))
        std::cerr << "warning: m = " << cfg.m
                  << " is outside the canonical grid {1,2,4,6,8,16,32,64,128,256,512,1024}; "
                     "accepted for a single training run\n";
}

struct PreparedData {
    TimeSeriesDataset raw;
    ChannelStats stats;
    SplitSegments segments;
};

PreparedData prepare(const TrainConfig& cfg, const std::string& data_path) {
    PreparedData d;
    d.raw = load_csv(data_path, cfg.date_column);
    const auto sizes = split_sizes(d.raw.rows(), cfg.split_spec());
    d.stats = cfg.standardize ? fit_standardizer(d.raw.slice(0, sizes[0]))
                              : ChannelStats::identity(d.raw.channels());
    if (!cfg.standardize) d.stats.channel_names = d.raw.channel_names;
    const TimeSeriesDataset standardized = apply_standardizer(d.raw, d.stats);
    d.segments = windowing_segments(standardized, cfg.split_spec(), cfg.lookback, cfg.horizon);
    return d;
}

int cmd_train(const CommonOpts& o) {
    const TrainConfig cfg = effective_config(o);
    warn_if_off_grid(cfg);
    const PreparedData data = prepare(cfg, o.data_path);

    auto [params, report] = train_model(cfg, data.segments.train, data.segments.val);

    fs::create_directories(o.out_dir);
    save_stats(data.stats, (fs::path(o.out_dir) / "stats.txt").string());
    Checkpoint ckpt{std::move(params), "stats.txt", cfg.seed, cfg.split_ratios,
                    cfg.lookback_bridging, cfg.standardize};
    save_checkpoint(ckpt, (fs::path(o.out_dir) / "model.ckpt").string());
    const std::string echo = effective_config_text(cfg, o.data_path);
    write_file_atomic((fs::path(o.out_dir) / "train_report.txt").string(),
                      train_report_text(report, echo, "model.ckpt"));

    std::cout << "trained " << variant_name(cfg.variant) << " m=" << cfg.m
              << " best_epoch=" << report.best_epoch
              << " best_val_mae=" << fmt_g17(report.best_val_mae) << "\n";
    return 0;
}

int cmd_gridsearch(const CommonOpts& o) {
    TrainConfig cfg = effective_config(o);
    const PreparedData data = prepare(cfg, o.data_path);
    const std::string echo = effective_config_text(cfg, o.data_path);

    fs::create_directories(o.out_dir);
    // Train each grid entry and persist its report as soon as it finishes, so
    // an interrupted run leaves the completed entries behind.
    std::vector<int> grid = cfg.grid_m;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    GridResult result;
    std::vector<std::pair<int, double>> val_by_m;
    std::vector<ModelParams> trained;
    for (int m : grid) {
        TrainConfig run = cfg;
        run.m = m;
        auto [params, report] = train_model(run, data.segments.train, data.segments.val);
        write_file_atomic((fs::path(o.out_dir) / ("report_m" + std::to_string(m) + ".txt")).string(),
                          train_report_text(report, effective_config_text(run, o.data_path)));
        val_by_m.emplace_back(m, report.best_val_mae);
        result.entries.push_back(GridEntry{m, report.best_val_mae, report.parameter_count,
                                           std::move(report)});
        trained.push_back(std::move(params));
    }
    result.best_m = pick_best_m(val_by_m);
    for (size_t i = 0; i < grid.size(); ++i)
        if (grid[i] == result.best_m) {
            result.best_params = std::move(trained[i]);
            result.best_val_mae = val_by_m[i].second;
        }
    const EvalMetrics test = evaluate_median(result.best_params, data.segments.test);
    result.test_mae = test.mae;
    result.test_mse = test.mse;

    save_stats(data.stats, (fs::path(o.out_dir) / "stats.txt").string());
    Checkpoint ckpt{std::move(result.best_params), "stats.txt", cfg.seed, cfg.split_ratios,
                    cfg.lookback_bridging, cfg.standardize};
    save_checkpoint(ckpt, (fs::path(o.out_dir) / "model.ckpt").string());
    write_file_atomic((fs::path(o.out_dir) / "summary.txt").string(),
                      grid_summary_text(result, echo));

    std::cout << "selected m=" << result.best_m << " val_mae=" << fmt_g17(result.best_val_mae)
              << " test_mae=" << fmt_g17(result.test_mae) << "\n";
    return 0;
}

struct EvalOpts {
    std::string checkpoint_path;
    std::string data_path;
    std::string split = "test";
    std::string out_csv;
    bool diagnostics = false;
};

struct LoadedModel {
    Checkpoint ckpt;
    SplitSegments segments;
};

LoadedModel load_for_eval(const EvalOpts& o) {
    LoadedModel lm;
    lm.ckpt = load_checkpoint(o.checkpoint_path);
    const ChannelStats stats =
        load_stats(resolve_stats_path(o.checkpoint_path, lm.ckpt.stats_ref));
    TimeSeriesDataset ds = load_csv(o.data_path);
    if (ds.channels() != lm.ckpt.params.channels)
        throw std::runtime_error("dataset has " + std::to_string(ds.channels()) +
                                 " channels but the checkpoint was trained on " +
                                 std::to_string(lm.ckpt.params.channels));
    const TimeSeriesDataset standardized = apply_standardizer(ds, stats);
    const SplitSpec spec{lm.ckpt.split_ratios, lm.ckpt.lookback_bridging};
    lm.segments = windowing_segments(standardized, spec, lm.ckpt.params.lookback,
                                     lm.ckpt.params.horizon);
    return lm;
}

const TimeSeriesDataset& pick_split(const LoadedModel& lm, const std::string& split) {
    if (split == "train") return lm.segments.train;
    if (split == "val") return lm.segments.val;
    if (split == "test") return lm.segments.test;
    throw std::runtime_error("unknown split '" + split + "' (expected train, val or test)");
}

int cmd_evaluate(const EvalOpts& o, const std::string& data_path) {
    const LoadedModel lm = load_for_eval(o);
    const TimeSeriesDataset& segment = pick_split(lm, o.split);
    const EvalMetrics m = evaluate_median(lm.ckpt.params, segment);

    MetricsRow row;
    row.dataset = fs::path(data_path).filename().string();
    row.variant = lm.ckpt.params.variant;
    row.lookback = lm.ckpt.params.lookback;
    row.horizon = lm.ckpt.params.horizon;
    row.m = lm.ckpt.params.slots.count();
    row.split = o.split;
    row.mae = m.mae;
    row.mse = m.mse;
    row.parameter_count = param_count(lm.ckpt.params);
    row.seed = lm.ckpt.seed;
    std::cout << metrics_report_text({row});

    if (o.diagnostics) {
        const std::vector<double> levels{0.1, 0.5, 0.9};
        const auto pb = per_level_pinball(lm.ckpt.params, segment, levels);
        std::cout << "# per-level diagnostics"
                  << (lm.ckpt.params.slots.shared_embedding ? "" : " (extrapolated from slot-0 embedding)")
                  << "\n";
        for (size_t i = 0; i < levels.size(); ++i)
            std::cout << "# pinball[" << levels[i] << "] = " << fmt_g17(pb[i]) << " coverage["
                      << levels[i] << "] = "
                      << fmt_g17(coverage_at_level(lm.ckpt.params, segment, levels[i])) << "\n";
        std::cout << "# crossing_rate[0.1,0.9] = "
                  << fmt_g17(crossing_rate(lm.ckpt.params, segment, 0.1, 0.9)) << "\n";
    }
    return 0;
}

int cmd_forecast(const EvalOpts& o, const std::string& data_path) {
    const LoadedModel lm = load_for_eval(o);
    const TimeSeriesDataset& segment = pick_split(lm, o.split);
    const ModelParams& p = lm.ckpt.params;
    const WindowStream ws(segment, p.lookback, p.horizon, false);

    std::ostringstream os;
    os << "# dataset=" << fs::path(data_path).filename().string()
       << " variant=" << variant_name(p.variant) << " lookback=" << p.lookback << " horizon=" << p.horizon
       << " m=" << p.slots.count() << " seed=" << lm.ckpt.seed << " split=" << o.split << "\n";
    const bool dated = !segment.timestamps.empty();
    os << "window_start";
    if (dated) os << ",last_input_time";
    for (long h = 0; h < p.horizon; ++h)
        for (long c = 0; c < p.channels; ++c)
            os << ",t+" << (h + 1) << "_"
               << (c < static_cast<long>(segment.channel_names.size())
                       ? segment.channel_names[c]
                       : "ch" + std::to_string(c));
    os << "\n";

    const long h0 = p.out_len() - p.horizon;
    for (long first = 0; first < ws.count(); first += 256) {
        const long n = std::min<long>(256, ws.count() - first);
        const WindowBatch batch = ws.batch(first, n);
        const BatchForward bf = forward_batch(p, batch.inputs, n);
        const Matrix y = slot_forecast(bf, p.slots.embedded(0));
        for (long j = 0; j < n; ++j) {
            const long s = batch.window_start_indices[j];
            os << s;
            if (dated) os << "," << segment.timestamps[s + p.lookback - 1];
            for (long h = 0; h < p.horizon; ++h)
                for (long c = 0; c < p.channels; ++c)
                    os << "," << fmt_g17(y(h0 + h, j * p.channels + c));
            os << "\n";
        }
    }
    write_file_atomic(o.out_csv, os.str());
    std::cout << "wrote " << ws.count() << " forecasts to " << o.out_csv << "\n";
    return 0;
}

int cmd_baseline(const std::string& data_path, long lookback, long horizon, const std::string& ratios,
                 bool bridging, std::optional<std::string> date_column) {
    TimeSeriesDataset ds = load_csv(data_path, date_column);
    SplitSpec spec{parse_ratios(ratios), bridging};
    const auto sizes = split_sizes(ds.rows(), spec);
    const ChannelStats stats = fit_standardizer(ds.slice(0, sizes[0]));
    const TimeSeriesDataset standardized = apply_standardizer(ds, stats);
    const SplitSegments seg = windowing_segments(standardized, spec, lookback, horizon);
    const EvalMetrics m = repeat_metrics(seg.test, lookback, horizon);
    std::cout << "repeat_mae = " << fmt_g17(m.mae) << "\n"
              << "repeat_mse = " << fmt_g17(m.mse) << "\n"
              << "windows = " << m.windows << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qlinear: implicit multi-quantile linear forecasting"};
    app.require_subcommand(1);

    CommonOpts opts;
    EvalOpts eopts;
    std::string ratios = "6:2:2";
    bool no_bridging = false;
    std::optional<std::string> date_column;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", opts.config_path, "configuration file");
        cmd->add_option("--data", opts.data_path, "input CSV")->required();
        if (needs_out) cmd->add_option("--out", opts.out_dir, "output directory")->required();
        cmd->add_option("--seed", opts.seed, "override the seed");
        cmd->add_option("--variant", opts.variant, "ql, qd or qn");
        cmd->add_option("--horizon", opts.horizon, "forecast horizon H");
        cmd->add_option("--lookback", opts.lookback, "input window length lookback");
        cmd->add_option("--m", opts.m, "number of quantile slots");
        cmd->add_option("--ratios", opts.ratios, "split ratios, e.g. 6:2:2");
    };

    CLI::App* train = app.add_subcommand("train", "train one model");
    add_common(train, true);

    CLI::App* grid = app.add_subcommand("gridsearch", "grid search over M");
    add_common(grid, true);
    grid->add_option("--grid", opts.grid, "comma-separated M grid, e.g. 1,4,16");

    CLI::App* evaluate = app.add_subcommand("evaluate", "metrics for a checkpoint");
    evaluate->add_option("--checkpoint", eopts.checkpoint_path, "model checkpoint")->required();
    evaluate->add_option("--data", eopts.data_path, "input CSV")->required();
    evaluate->add_option("--split", eopts.split, "train, val or test (default test)");
    evaluate->add_flag("--diagnostics", eopts.diagnostics, "per-level pinball/coverage/crossing");

    CLI::App* forecast = app.add_subcommand("forecast", "write median forecasts to CSV");
    forecast->add_option("--checkpoint", eopts.checkpoint_path, "model checkpoint")->required();
    forecast->add_option("--data", eopts.data_path, "input CSV")->required();
    forecast->add_option("--out", eopts.out_csv, "output CSV path")->required();
    forecast->add_option("--split", eopts.split, "train, val or test (default test)");

    long b_lookback = 336, b_horizon = 96;
    CLI::App* baseline = app.add_subcommand("baseline", "Repeat heuristic on the test split");
    baseline->add_option("--data", opts.data_path, "input CSV")->required();
    baseline->add_option("--lookback", b_lookback, "input window length lookback");
    baseline->add_option("--horizon", b_horizon, "forecast horizon H")->required();
    baseline->add_option("--ratios", ratios, "split ratios (default 6:2:2)");
    baseline->add_flag("--no-bridging", no_bridging, "disable lookback bridging");
    baseline->add_option("--date-column", date_column, "name of the date column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) return cmd_train(opts);
        if (grid->parsed()) return cmd_gridsearch(opts);
        if (evaluate->parsed()) return cmd_evaluate(eopts, eopts.data_path);
        if (forecast->parsed()) return cmd_forecast(eopts, eopts.data_path);
        if (baseline->parsed())
            return cmd_baseline(opts.data_path, b_lookback, b_horizon, ratios, !no_bridging, date_column);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
