#pragma once

#include "qlinear/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace qltest {

inline std::filesystem::path temp_dir() {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("qlinear_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream f(path);
    f << contents;
    return path.string();
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

inline qlinear::TimeSeriesDataset random_dataset(long rows, long cols, unsigned seed,
                                                 double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    qlinear::TimeSeriesDataset ds;
    ds.values.resize(rows, cols);
    for (long c = 0; c < cols; ++c)
        for (long r = 0; r < rows; ++r) ds.values(r, c) = dist(rng);
    for (long c = 0; c < cols; ++c) ds.channel_names.push_back("ch" + std::to_string(c));
    return ds;
}

inline qlinear::Matrix random_matrix(long rows, long cols, unsigned seed,
                                     double lo = -1.0, double hi = 1.0) {
    return random_dataset(rows, cols, seed, lo, hi).values;
}

inline qlinear::TimeSeriesDataset gaussian_walk(long rows, long cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    qlinear::TimeSeriesDataset ds;
    ds.values.resize(rows, cols);
    for (long c = 0; c < cols; ++c) {
        double x = 0.0;
        for (long r = 0; r < rows; ++r) {
            x += noise(rng);
            ds.values(r, c) = x;
        }
    }
    for (long c = 0; c < cols; ++c) ds.channel_names.push_back("w" + std::to_string(c));
    return ds;
}

// Two-tap linear recurrences (sinusoids) are exactly representable by one
// linear layer over the window, so noiseless training can drive the loss to 0.
inline qlinear::TimeSeriesDataset sine_dataset(long rows, long cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    qlinear::TimeSeriesDataset ds;
    ds.values.resize(rows, cols);
    for (long c = 0; c < cols; ++c) {
        const double w = 0.05 + 0.1 * (c + 1);
        const double p = phase(rng);
        for (long r = 0; r < rows; ++r) ds.values(r, c) = std::sin(w * r + p);
    }
    for (long c = 0; c < cols; ++c) ds.channel_names.push_back("s" + std::to_string(c));
    return ds;
}

inline std::string dataset_to_csv(const qlinear::TimeSeriesDataset& ds, bool date_column) {
    std::string out;
    if (date_column) out += "date";
    for (size_t c = 0; c < ds.channel_names.size(); ++c) {
        if (c > 0 || date_column) out += ",";
        out += ds.channel_names[c];
    }
    out += "\n";
    char buf[64];
    for (long r = 0; r < ds.rows(); ++r) {
        if (date_column) out += "2020-01-01T" + std::to_string(r);
        for (long c = 0; c < ds.channels(); ++c) {
            if (c > 0 || date_column) out += ",";
            std::snprintf(buf, sizeof(buf), "%.17g", ds.values(r, c));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace qltest
