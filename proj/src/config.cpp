#include "qlinear/config.hpp"

#include "qlinear/report.hpp"

#include <cctype>
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

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw std::runtime_error("config key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

long parse_int(const std::string& v, const std::string& key) {
    const double d = parse_num(v, key);
    const long i = static_cast<long>(d);
    if (static_cast<double>(i) != d)
        throw std::runtime_error("config key '" + key + "': expected an integer, got '" + v + "'");
    return i;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<int>(parse_int(item, key)));
    }
    if (out.empty()) throw std::runtime_error("config key '" + key + "': empty list");
    return out;
}

}  // namespace

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> parts{};
    std::stringstream ss(text);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ':')) {
        if (i >= 3) throw std::runtime_error("split ratios need exactly 3 parts: " + text);
        parts[i++] = parse_num(trim(item), "split_ratios");
    }
    if (i != 3) throw std::runtime_error("split ratios need exactly 3 parts: " + text);
    const double sum = parts[0] + parts[1] + parts[2];
    if (!(sum > 0)) throw std::runtime_error("split ratios must have a positive sum: " + text);
    for (double& p : parts) p /= sum;
    return parts;
}

void apply_config_entry(TrainConfig& cfg, const std::string& section,
                        const std::string& key, const std::string& value) {
    const std::string full = section + "." + key;
    if (section == "data") {
        if (key == "split_ratios") cfg.split_ratios = parse_ratios(value);
        else if (key == "lookback_bridging") cfg.lookback_bridging = parse_bool(value, full);
        else if (key == "standardize") cfg.standardize = parse_bool(value, full);
        else if (key == "date_column") cfg.date_column = value;
        else throw std::runtime_error("unknown config key '" + full + "'");
    } else if (section == "model") {
        if (key == "variant") cfg.variant = variant_from_name(value);
        else if (key == "lookback") cfg.lookback = parse_int(value, full);
        else if (key == "horizon") cfg.horizon = parse_int(value, full);
        else if (key == "m") cfg.m = static_cast<int>(parse_int(value, full));
        else if (key == "reconstruct") cfg.reconstruct = parse_bool(value, full);
        else if (key == "moving_average_window") cfg.moving_average_window = static_cast<int>(parse_int(value, full));
        else if (key == "shared_embedding") cfg.shared_embedding = parse_bool(value, full);
        else if (key == "literal_eq3") cfg.literal_eq3 = parse_bool(value, full);
        else if (key == "subsampled_trend") cfg.subsampled_trend = parse_bool(value, full);
        else if (key == "per_channel_heads") cfg.per_channel_heads = parse_bool(value, full);
        else throw std::runtime_error("unknown config key '" + full + "'");
    } else if (section == "train") {
        if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(value, full));
        else if (key == "learning_rate") {
            if (value == "auto") cfg.learning_rate.reset();
            else cfg.learning_rate = parse_num(value, full);
        }
        else if (key == "beta1") cfg.beta1 = parse_num(value, full);
        else if (key == "beta2") cfg.beta2 = parse_num(value, full);
        else if (key == "epsilon") cfg.epsilon = parse_num(value, full);
        else if (key == "max_epochs") cfg.max_epochs = static_cast<int>(parse_int(value, full));
        else if (key == "patience") cfg.patience = static_cast<int>(parse_int(value, full));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, full));
        else throw std::runtime_error("unknown config key '" + full + "'");
    } else if (section == "grid") {
        if (key == "m_values") cfg.grid_m = parse_int_list(value, full);
        else throw std::runtime_error("unknown config key '" + full + "'");
    } else {
        throw std::runtime_error("unknown config section '[" + section + "]'");
    }
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    TrainConfig cfg;
    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'key = value', got '" + t + "'");
        if (section.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": key outside any [section]");
        try {
            apply_config_entry(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string effective_config_text(const TrainConfig& cfg, const std::string& data_path) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) {
        os << "# config." << k << " = " << v << "\n";
    };
    kv("data.path", data_path);
    kv("data.split_ratios", fmt_g17(cfg.split_ratios[0]) + ":" + fmt_g17(cfg.split_ratios[1]) +
                                ":" + fmt_g17(cfg.split_ratios[2]));
    kv("data.lookback_bridging", cfg.lookback_bridging ? "true" : "false");
    kv("data.standardize", cfg.standardize ? "true" : "false");
    kv("data.date_column", cfg.date_column ? *cfg.date_column : "(auto)");
    kv("model.variant", variant_name(cfg.variant));
    kv("model.lookback", std::to_string(cfg.lookback));
    kv("model.horizon", std::to_string(cfg.horizon));
    kv("model.m", std::to_string(cfg.m));
    kv("model.reconstruct", cfg.reconstruct ? "true" : "false");
    kv("model.moving_average_window", std::to_string(cfg.moving_average_window));
    kv("model.shared_embedding", cfg.shared_embedding ? "true" : "false");
    kv("model.literal_eq3", cfg.literal_eq3 ? "true" : "false");
    kv("model.subsampled_trend", cfg.subsampled_trend ? "true" : "false");
    kv("model.per_channel_heads", cfg.per_channel_heads ? "true" : "false");
    kv("train.batch_size", std::to_string(cfg.batch_size));
    kv("train.learning_rate", fmt_g17(cfg.resolved_lr()));
    kv("train.beta1", fmt_g17(cfg.beta1));
    kv("train.beta2", fmt_g17(cfg.beta2));
    kv("train.epsilon", fmt_g17(cfg.epsilon));
    kv("train.max_epochs", std::to_string(cfg.max_epochs));
    kv("train.patience", std::to_string(cfg.patience));
    kv("train.seed", std::to_string(cfg.seed));
    {
        std::string g;
        for (size_t i = 0; i < cfg.grid_m.size(); ++i)
            g += (i ? "," : "") + std::to_string(cfg.grid_m[i]);
        kv("grid.m_values", g);
    }
    return os.str();
}

}  // namespace qlinear
