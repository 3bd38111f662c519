#include "qlinear/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qlinear {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string train_report_text(const TrainReport& report, const std::string& config_echo,
                              const std::string& checkpoint_ref) {
    std::ostringstream os;
    os << "# qlinear train report\n";
    os << config_echo;
    os << "# parameter_count = " << report.parameter_count << "\n";
    if (!checkpoint_ref.empty()) os << "# checkpoint = " << checkpoint_ref << "\n";
    os << "# columns: epoch train_loss val_mae elapsed_sec\n";
    for (const auto& e : report.epochs)
        os << e.epoch << " " << fmt_g17(e.train_loss) << " " << fmt_g17(e.val_mae) << " "
           << fmt_g17(e.seconds) << "\n";
    os << "# best_epoch = " << report.best_epoch << "\n";
    os << "# best_val_mae = " << fmt_g17(report.best_val_mae) << "\n";
    os << "# wall_seconds = " << fmt_g17(report.wall_seconds) << "\n";
    return os.str();
}

std::string grid_summary_text(const GridResult& result, const std::string& config_echo) {
    std::ostringstream os;
    os << "# qlinear gridsearch summary\n";
    os << config_echo;
    os << "# columns: m val_mae param_count best_epoch\n";
    for (const auto& e : result.entries)
        os << e.m << " " << fmt_g17(e.val_mae) << " " << e.parameter_count << " "
           << e.report.best_epoch << "\n";
    os << "# selected_m = " << result.best_m << "\n";
    os << "# selected_val_mae = " << fmt_g17(result.best_val_mae) << "\n";
    os << "# selected_test_mae = " << fmt_g17(result.test_mae) << "\n";
    os << "# selected_test_mse = " << fmt_g17(result.test_mse) << "\n";
    return os.str();
}

std::string metrics_report_text(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << "# qlinear metrics report\n";
    os << "# columns: dataset variant lookback horizon m split mae mse param_count seed\n";
    for (const auto& r : rows)
        os << r.dataset << " " << variant_name(r.variant) << " " << r.lookback << " " << r.horizon
           << " " << r.m << " " << r.split << " " << fmt_g17(r.mae) << " " << fmt_g17(r.mse)
           << " " << r.parameter_count << " " << r.seed << "\n";
    return os.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f << contents;
        if (!f) throw std::runtime_error("failed writing " + tmp);
    }
    fs::rename(tmp, path);
}

}  // namespace qlinear
