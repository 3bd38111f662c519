#include "qlinear/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qlinear {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_on(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = line.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec == std::errc() && p == e) return std::isfinite(out);
    // from_chars rejects a leading '+'; fall back to strtod for those.
    char* endp = nullptr;
    out = std::strtod(s.c_str(), &endp);
    return endp == s.c_str() + s.size() && std::isfinite(out);
}

bool iequals(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

}  // namespace

TimeSeriesDataset TimeSeriesDataset::slice(long start, long len) const {
    TimeSeriesDataset out;
    out.values = values.middleRows(start, len);
    out.channel_names = channel_names;
    out.frequency = frequency;
    if (!timestamps.empty())
        out.timestamps.assign(timestamps.begin() + start, timestamps.begin() + start + len);
    return out;
}

ChannelStats ChannelStats::identity(long channels) {
    ChannelStats s;
    s.mean = Vector::Zero(channels);
    s.std_dev = Vector::Ones(channels);
    s.channel_names.assign(channels, "");
    return s;
}

TimeSeriesDataset load_csv(const std::string& path, const std::optional<std::string>& date_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    std::vector<std::string> header = split_on(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header.empty() || (header.size() == 1 && header[0].empty()))
        throw std::runtime_error("missing header row in " + path);

    long date_idx = -1;
    if (date_column) {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == *date_column) date_idx = static_cast<long>(i);
        if (date_idx < 0)
            throw std::runtime_error("date column '" + *date_column + "' not found in " + path);
    } else if (!header.empty() && iequals(header[0], "date")) {
        date_idx = 0;
    }

    std::vector<double> cells;          // row-major numeric cells
    std::vector<std::string> stamps;
    long n_rows = 0;
    long file_line = 1;
    bool auto_checked = date_column.has_value();

    while (std::getline(in, line)) {
        ++file_line;
        std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<std::string> fields = split_on(t, ',');
        if (fields.size() != header.size())
            throw std::runtime_error(path + ": line " + std::to_string(file_line) + " has " +
                                     std::to_string(fields.size()) + " fields, header has " +
                                     std::to_string(header.size()));
        if (!auto_checked) {
            // No date column named and header[0] wasn't "date": if the first
            // cell of the first data row is non-numeric, treat column 0 as dates.
            double probe;
            if (date_idx < 0 && !parse_double(fields[0], probe)) date_idx = 0;
            auto_checked = true;
        }
        for (size_t i = 0; i < fields.size(); ++i) {
            if (static_cast<long>(i) == date_idx) {
                stamps.push_back(trim(fields[i]));
                continue;
            }
            double v;
            if (!parse_double(fields[i], v))
                throw std::runtime_error(path + ": non-numeric value '" + trim(fields[i]) +
                                         "' at line " + std::to_string(file_line) + ", column '" +
                                         header[i] + "' (index " + std::to_string(i) + ")");
            cells.push_back(v);
        }
        ++n_rows;
    }

    const long n_cols = static_cast<long>(header.size()) - (date_idx >= 0 ? 1 : 0);
    if (n_cols < 1) throw std::runtime_error(path + ": no numeric columns");
    if (n_rows < 2)
        throw std::runtime_error(path + ": need at least 2 data rows, got " + std::to_string(n_rows));

    TimeSeriesDataset ds;
    ds.values.resize(n_rows, n_cols);
    for (long r = 0; r < n_rows; ++r)
        for (long c = 0; c < n_cols; ++c) ds.values(r, c) = cells[r * n_cols + c];
    for (size_t i = 0; i < header.size(); ++i)
        if (static_cast<long>(i) != date_idx) ds.channel_names.push_back(header[i]);
    if (date_idx >= 0) ds.timestamps = std::move(stamps);
    return ds;
}

std::array<long, 3> split_sizes(long rows, const SplitSpec& spec) {
    double sum = 0.0;
    for (double r : spec.ratios) {
        if (r < 0.0) throw std::runtime_error("split ratios must be non-negative");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("split ratios must sum to 1, got " + std::to_string(sum));
    // The +1e-9 nudge absorbs one-ulp product rounding so exact rational
    // boundaries (e.g. 69680 * 6/10) floor to the intended integer.
    const long n0 = static_cast<long>(std::floor(static_cast<double>(rows) * spec.ratios[0] + 1e-9));
    const long n1 = static_cast<long>(std::floor(static_cast<double>(rows) * spec.ratios[1] + 1e-9));
    const long n2 = rows - n0 - n1;
    if (n0 < 1 || n1 < 1 || n2 < 1)
        throw std::runtime_error("degenerate split: sizes " + std::to_string(n0) + "/" +
                                 std::to_string(n1) + "/" + std::to_string(n2) + " of " +
                                 std::to_string(rows) + " rows");
    return {n0, n1, n2};
}

DataSplits chronological_split(const TimeSeriesDataset& ds, const SplitSpec& spec) {
    const auto n = split_sizes(ds.rows(), spec);
    return DataSplits{ds.slice(0, n[0]), ds.slice(n[0], n[1]), ds.slice(n[0] + n[1], n[2])};
}

SplitSegments windowing_segments(const TimeSeriesDataset& ds, const SplitSpec& spec,
                                 long lookback, long horizon) {
    const auto n = split_sizes(ds.rows(), spec);
    const long ctx_val = spec.lookback_bridging ? std::min(lookback, n[0]) : 0;
    const long ctx_test = spec.lookback_bridging ? std::min(lookback, n[0] + n[1]) : 0;

    SplitSegments seg;
    seg.sizes = n;
    seg.contexts = {0, ctx_val, ctx_test};
    seg.train = ds.slice(0, n[0]);
    seg.val = ds.slice(n[0] - ctx_val, n[1] + ctx_val);
    seg.test = ds.slice(n[0] + n[1] - ctx_test, n[2] + ctx_test);

    const char* names[3] = {"train", "val", "test"};
    const long lens[3] = {seg.train.rows(), seg.val.rows(), seg.test.rows()};
    for (int i = 0; i < 3; ++i)
        if (lens[i] < lookback + horizon)
            throw std::runtime_error(std::string(names[i]) + " split too short for (lookback=" +
                                     std::to_string(lookback) + ", horizon=" + std::to_string(horizon) +
                                     "): " + std::to_string(lens[i]) + " rows");
    return seg;
}

ChannelStats fit_standardizer(const TimeSeriesDataset& train) {
    const long rows = train.rows(), cols = train.channels();
    if (rows < 1) throw std::runtime_error("cannot fit standardizer on an empty split");
    ChannelStats stats;
    stats.mean.resize(cols);
    stats.std_dev.resize(cols);
    stats.channel_names = train.channel_names;
    for (long c = 0; c < cols; ++c) {
        const auto col = train.values.col(c);
        if (col.minCoeff() == col.maxCoeff())
            throw std::runtime_error("zero-variance channel '" +
                                     (c < static_cast<long>(train.channel_names.size())
                                          ? train.channel_names[c]
                                          : std::to_string(c)) +
                                     "' (index " + std::to_string(c) + ")");
        const double m = col.mean();
        const double var = (col.array() - m).square().sum() / static_cast<double>(rows);
        const double s = std::sqrt(var);
        if (!(s > 0.0))
            throw std::runtime_error("zero-variance channel at index " + std::to_string(c));
        stats.mean[c] = m;
        stats.std_dev[c] = s;
    }
    return stats;
}

static void check_channels(const TimeSeriesDataset& ds, const ChannelStats& stats) {
    if (ds.channels() != stats.mean.size())
        throw std::runtime_error("channel-count mismatch: dataset has " +
                                 std::to_string(ds.channels()) + ", stats have " +
                                 std::to_string(stats.mean.size()));
}

TimeSeriesDataset apply_standardizer(const TimeSeriesDataset& ds, const ChannelStats& stats) {
    check_channels(ds, stats);
    TimeSeriesDataset out = ds;
    for (long c = 0; c < ds.channels(); ++c)
        out.values.col(c) = (ds.values.col(c).array() - stats.mean[c]) / stats.std_dev[c];
    return out;
}

TimeSeriesDataset invert_standardizer(const TimeSeriesDataset& ds, const ChannelStats& stats) {
    check_channels(ds, stats);
    TimeSeriesDataset out = ds;
    for (long c = 0; c < ds.channels(); ++c)
        out.values.col(c) = ds.values.col(c).array() * stats.std_dev[c] + stats.mean[c];
    return out;
}

void save_stats(const ChannelStats& stats, const std::string& path) {
    std::ostringstream os;
    os << "# qlinear channel stats v1\n";
    os << "channels = " << stats.mean.size() << "\n";
    char buf[64];
    for (long c = 0; c < stats.mean.size(); ++c) {
        const std::string name =
            c < static_cast<long>(stats.channel_names.size()) ? stats.channel_names[c] : "";
        os << "channel." << c << ".name = " << name << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", stats.mean[c]);
        os << "channel." << c << ".mean = " << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", stats.std_dev[c]);
        os << "channel." << c << ".std = " << buf << "\n";
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write stats file: " + path);
    f << os.str();
}

ChannelStats load_stats(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open stats file: " + path);
    std::string line;
    long channels = -1;
    ChannelStats stats;
    while (std::getline(f, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ": malformed stats line: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "channels") {
            channels = std::stol(value);
            stats.mean = Vector::Zero(channels);
            stats.std_dev = Vector::Zero(channels);
            stats.channel_names.assign(channels, "");
            continue;
        }
        if (key.rfind("channel.", 0) != 0 || channels < 0)
            throw std::runtime_error(path + ": unknown stats key: " + key);
        const size_t dot = key.find('.', 8);
        if (dot == std::string::npos) throw std::runtime_error(path + ": malformed key: " + key);
        const long idx = std::stol(key.substr(8, dot - 8));
        const std::string field = key.substr(dot + 1);
        if (idx < 0 || idx >= channels)
            throw std::runtime_error(path + ": channel index out of range in key: " + key);
        if (field == "name")
            stats.channel_names[idx] = value;
        else if (field == "mean")
            stats.mean[idx] = std::strtod(value.c_str(), nullptr);
        else if (field == "std")
            stats.std_dev[idx] = std::strtod(value.c_str(), nullptr);
        else
            throw std::runtime_error(path + ": unknown stats field: " + field);
    }
    if (channels < 0) throw std::runtime_error(path + ": missing 'channels' entry");
    return stats;
}

WindowStream::WindowStream(const TimeSeriesDataset& segment, long lookback, long horizon,
                           bool reconstruct, long stride)
    : values_(&segment.values), lookback_(lookback), horizon_(horizon), stride_(stride),
      reconstruct_(reconstruct) {
    if (lookback < 1 || horizon < 1 || stride < 1)
        throw std::runtime_error("windowing requires lookback >= 1, horizon >= 1, stride >= 1");
    const long rows = values_->rows();
    if (rows < lookback + horizon)
        throw std::runtime_error("series too short for windowing: " + std::to_string(rows) +
                                 " rows < lookback + horizon = " + std::to_string(lookback + horizon));
    count_ = (rows - lookback - horizon) / stride + 1;
}

WindowBatch WindowStream::gather(const std::vector<long>& ids) const {
    const long c = values_->cols();
    const long b = static_cast<long>(ids.size());
    const long tlen = target_len();
    WindowBatch batch;
    batch.n_channels = c;
    batch.inputs.resize(lookback_, b * c);
    batch.targets.resize(tlen, b * c);
    batch.window_start_indices.reserve(b);
    for (long j = 0; j < b; ++j) {
        const long id = ids[j];
        if (id < 0 || id >= count_) throw std::runtime_error("window index out of range");
        const long s = id * stride_;
        const long tstart = reconstruct_ ? s : s + lookback_;
        for (long k = 0; k < c; ++k) {
            batch.inputs.col(j * c + k) = values_->col(k).segment(s, lookback_);
            batch.targets.col(j * c + k) = values_->col(k).segment(tstart, tlen);
        }
        batch.window_start_indices.push_back(s);
    }
    return batch;
}

WindowBatch WindowStream::batch(long first, long n) const {
    std::vector<long> ids(n);
    for (long i = 0; i < n; ++i) ids[i] = first + i;
    return gather(ids);
}

WindowStream make_windows(const TimeSeriesDataset& ds, long lookback, long horizon,
                          bool reconstruct, long stride) {
    return WindowStream(ds, lookback, horizon, reconstruct, stride);
}

}  // namespace qlinear
