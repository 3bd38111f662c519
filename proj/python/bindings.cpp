#include "qlinear/checkpoint.hpp"
#include "qlinear/config.hpp"
#include "qlinear/eval.hpp"
#include "qlinear/loss.hpp"
#include "qlinear/preprocess.hpp"
#include "qlinear/report.hpp"
#include "qlinear/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace qlinear;

namespace {

// Split / standardize / window exactly the way the CLI does, then train.
std::tuple<ModelParams, TrainReport, ChannelStats> fit(const TrainConfig& cfg,
                                                       const TimeSeriesDataset& ds) {
    const auto sizes = split_sizes(ds.rows(), cfg.split_spec());
    const ChannelStats stats = cfg.standardize ? fit_standardizer(ds.slice(0, sizes[0]))
                                               : ChannelStats::identity(ds.channels());
    const TimeSeriesDataset standardized = apply_standardizer(ds, stats);
    const SplitSegments seg = windowing_segments(standardized, cfg.split_spec(), cfg.lookback, cfg.horizon);
    auto [params, report] = train_model(cfg, seg.train, seg.val);
    return {std::move(params), std::move(report), stats};
}

ModelParams make_model(const ModelSpec& spec, long channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return init_model(spec, channels, rng);
}

}  // namespace

PYBIND11_MODULE(_qlinear, mod) {
    mod.doc() = "Implicit multi-quantile linear forecasting (QLinear / QNLinear / QDLinear)";

    py::enum_<Variant>(mod, "Variant")
        .value("QL", Variant::QL)
        .value("QD", Variant::QD)
        .value("QN", Variant::QN);

    py::class_<TimeSeriesDataset>(mod, "TimeSeriesDataset")
        .def(py::init([](const Matrix& values, std::vector<std::string> names, std::string freq) {
                 TimeSeriesDataset ds;
                 ds.values = values;
                 ds.channel_names = std::move(names);
                 ds.frequency = std::move(freq);
                 return ds;
             }),
             py::arg("values"), py::arg("channel_names") = std::vector<std::string>{},
             py::arg("frequency") = "")
        .def_readwrite("values", &TimeSeriesDataset::values)
        .def_readwrite("channel_names", &TimeSeriesDataset::channel_names)
        .def_readwrite("frequency", &TimeSeriesDataset::frequency)
        .def_readonly("timestamps", &TimeSeriesDataset::timestamps)
        .def_property_readonly("rows", &TimeSeriesDataset::rows)
        .def_property_readonly("channels", &TimeSeriesDataset::channels)
        .def("slice", &TimeSeriesDataset::slice);

    py::class_<ChannelStats>(mod, "ChannelStats")
        .def_readonly("mean", &ChannelStats::mean)
        .def_readonly("std_dev", &ChannelStats::std_dev)
        .def_static("identity", &ChannelStats::identity);

    py::class_<SplitSpec>(mod, "SplitSpec")
        .def(py::init([](std::array<double, 3> ratios, bool bridging) {
                 return SplitSpec{ratios, bridging};
             }),
             py::arg("ratios") = std::array<double, 3>{0.6, 0.2, 0.2},
             py::arg("lookback_bridging") = true)
        .def_readwrite("ratios", &SplitSpec::ratios)
        .def_readwrite("lookback_bridging", &SplitSpec::lookback_bridging);

    py::class_<DataSplits>(mod, "DataSplits")
        .def_readonly("train", &DataSplits::train)
        .def_readonly("val", &DataSplits::val)
        .def_readonly("test", &DataSplits::test);

    py::class_<QuantileSlots>(mod, "QuantileSlots")
        .def_static("create", &QuantileSlots::create, py::arg("m"),
                    py::arg("shared_embedding") = false)
        .def_readonly("levels", &QuantileSlots::levels)
        .def_readonly("weights", &QuantileSlots::weights)
        .def_readonly("biases", &QuantileSlots::biases)
        .def_property_readonly("m", &QuantileSlots::count)
        .def("embedded", [](const QuantileSlots& s) {
            std::vector<double> out(s.count());
            for (int i = 0; i < s.count(); ++i) out[i] = s.embedded(i);
            return out;
        })
        .def("resample", [](QuantileSlots& s, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            s.resample(rng);
        });

    py::class_<ModelSpec>(mod, "ModelSpec")
        .def(py::init<>())
        .def_readwrite("variant", &ModelSpec::variant)
        .def_readwrite("lookback", &ModelSpec::lookback)
        .def_readwrite("horizon", &ModelSpec::horizon)
        .def_readwrite("m", &ModelSpec::m)
        .def_readwrite("reconstruct", &ModelSpec::reconstruct)
        .def_readwrite("shared_embedding", &ModelSpec::shared_embedding)
        .def_readwrite("literal_eq3", &ModelSpec::literal_eq3)
        .def_readwrite("subsampled_trend", &ModelSpec::subsampled_trend)
        .def_readwrite("per_channel_heads", &ModelSpec::per_channel_heads)
        .def_readwrite("moving_average_window", &ModelSpec::moving_average_window);

    py::class_<ModelParams>(mod, "ModelParams")
        .def_readonly("variant", &ModelParams::variant)
        .def_readonly("lookback", &ModelParams::lookback)
        .def_readonly("horizon", &ModelParams::horizon)
        .def_readonly("channels", &ModelParams::channels)
        .def_readonly("reconstruct", &ModelParams::reconstruct)
        .def_readonly("slots", &ModelParams::slots)
        .def_property_readonly("out_len", &ModelParams::out_len);

    py::class_<TrainConfig>(mod, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("variant", &TrainConfig::variant)
        .def_readwrite("lookback", &TrainConfig::lookback)
        .def_readwrite("horizon", &TrainConfig::horizon)
        .def_readwrite("m", &TrainConfig::m)
        .def_readwrite("reconstruct", &TrainConfig::reconstruct)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("beta1", &TrainConfig::beta1)
        .def_readwrite("beta2", &TrainConfig::beta2)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("moving_average_window", &TrainConfig::moving_average_window)
        .def_readwrite("shared_embedding", &TrainConfig::shared_embedding)
        .def_readwrite("literal_eq3", &TrainConfig::literal_eq3)
        .def_readwrite("subsampled_trend", &TrainConfig::subsampled_trend)
        .def_readwrite("per_channel_heads", &TrainConfig::per_channel_heads)
        .def_readwrite("split_ratios", &TrainConfig::split_ratios)
        .def_readwrite("lookback_bridging", &TrainConfig::lookback_bridging)
        .def_readwrite("standardize", &TrainConfig::standardize)
        .def_readwrite("grid_m", &TrainConfig::grid_m)
        .def_property_readonly("resolved_lr", &TrainConfig::resolved_lr);

    py::class_<EpochRecord>(mod, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("train_loss", &EpochRecord::train_loss)
        .def_readonly("val_mae", &EpochRecord::val_mae)
        .def_readonly("seconds", &EpochRecord::seconds);

    py::class_<TrainReport>(mod, "TrainReport")
        .def_readonly("epochs", &TrainReport::epochs)
        .def_readonly("best_epoch", &TrainReport::best_epoch)
        .def_readonly("best_val_mae", &TrainReport::best_val_mae)
        .def_readonly("wall_seconds", &TrainReport::wall_seconds)
        .def_readonly("parameter_count", &TrainReport::parameter_count);

    py::class_<EvalMetrics>(mod, "EvalMetrics")
        .def_readonly("mae", &EvalMetrics::mae)
        .def_readonly("mse", &EvalMetrics::mse)
        .def_readonly("windows", &EvalMetrics::windows);

    py::class_<LossBreakdown>(mod, "LossBreakdown")
        .def_readonly("total", &LossBreakdown::total)
        .def_readonly("main_term", &LossBreakdown::main_term)
        .def_readonly("aux_term", &LossBreakdown::aux_term)
        .def_readonly("per_slot", &LossBreakdown::per_slot);

    mod.def("load_csv", &load_csv, py::arg("path"), py::arg("date_column") = std::nullopt);
    mod.def("split_sizes", [](long rows, const SplitSpec& spec) { return split_sizes(rows, spec); });
    mod.def("chronological_split", &chronological_split);
    mod.def("fit_standardizer", &fit_standardizer);
    mod.def("apply_standardizer", &apply_standardizer);
    mod.def("invert_standardizer", &invert_standardizer);
    mod.def(
        "make_windows",
        [](const TimeSeriesDataset& ds, long lookback, long horizon, bool reconstruct, long stride) {
            const WindowStream ws(ds, lookback, horizon, reconstruct, stride);
            const WindowBatch all = ws.batch(0, ws.count());
            const long c = ds.channels();
            py::list out;
            for (long j = 0; j < all.count(); ++j)
                out.append(py::make_tuple(Matrix(all.input(j)), Matrix(all.target(j)),
                                          all.window_start_indices[j]));
            return out;
        },
        py::arg("ds"), py::arg("lookback"), py::arg("horizon"), py::arg("reconstruct") = false,
        py::arg("stride") = 1,
        "Materializes every (input, target, start) window; intended for modest datasets.");

    mod.def("embed_level", &embed_level, py::arg("alpha"), py::arg("w"), py::arg("b"));
    mod.def("add_embedding", &add_embedding);
    mod.def("moving_average", &moving_average);
    mod.def("decompose", [](const Matrix& z, int w) {
        Decomposition d = decompose(z, w);
        return py::make_tuple(std::move(d.trend), std::move(d.season));
    });
    mod.def("normalize_last", [](const Matrix& z) {
        Normalization n = normalize_last(z);
        return py::make_tuple(std::move(n.normed), RowVector(n.last));
    });

    mod.def("init_model", &make_model, py::arg("spec"), py::arg("channels"), py::arg("seed") = 1);
    mod.def("param_count", &param_count);
    mod.def("forward_one_slot", &forward_one_slot);
    mod.def("forward_all_slots", &forward_all_slots);
    mod.def("forward_at_level", &forward_at_level);

    mod.def("pinball", &pinball, py::arg("y"), py::arg("yhat"), py::arg("alpha"));
    mod.def("multitask_loss", &multitask_loss, py::arg("targets"), py::arg("forecasts"),
            py::arg("slots"), py::arg("n_channels"));

    mod.def("fit", &fit, py::arg("config"), py::arg("dataset"),
            py::call_guard<py::gil_scoped_release>(),
            "Split, standardize, window and train; returns (params, report, stats).");
    mod.def("evaluate_median", &evaluate_median, py::arg("params"), py::arg("segment"),
            py::arg("eval_batch") = 256);
    mod.def("per_level_pinball", &per_level_pinball, py::arg("params"), py::arg("segment"),
            py::arg("levels"), py::arg("eval_batch") = 256);
    mod.def("coverage_at_level", &coverage_at_level, py::arg("params"), py::arg("segment"),
            py::arg("level"), py::arg("eval_batch") = 256);
    mod.def("crossing_rate", &crossing_rate, py::arg("params"), py::arg("segment"),
            py::arg("lo_level"), py::arg("hi_level"), py::arg("eval_batch") = 256);

    mod.def("mae", &mae);
    mod.def("mse", &mse);
    mod.def("coverage", &coverage);
    mod.def("repeat_baseline", &repeat_baseline, py::arg("x"), py::arg("horizon"));
    mod.def("repeat_metrics", &repeat_metrics, py::arg("segment"), py::arg("lookback"), py::arg("horizon"));

    mod.def("save_checkpoint",
            [](const ModelParams& params, const std::string& stats_ref, std::uint64_t seed,
               const std::string& path) {
                save_checkpoint(Checkpoint{params, stats_ref, seed}, path);
            },
            py::arg("params"), py::arg("stats_ref"), py::arg("seed"), py::arg("path"));
    mod.def("load_checkpoint", [](const std::string& path) {
        Checkpoint c = load_checkpoint(path);
        return py::make_tuple(std::move(c.params), c.stats_ref, c.seed);
    });

#ifdef QLINEAR_VERSION
    mod.attr("__version__") = QLINEAR_VERSION;
#else
    mod.attr("__version__") = "dev";
#endif
}
