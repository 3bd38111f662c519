#include "qlinear/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace qlinear {

namespace {

constexpr char kMagic[8] = {'Q', 'L', 'I', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
void put_u8(std::ostream& os, std::uint8_t v) { put_bytes(os, &v, 1); }
void put_u32(std::ostream& os, std::uint32_t v) { put_bytes(os, &v, 4); }
void put_u64(std::ostream& os, std::uint64_t v) { put_bytes(os, &v, 8); }
void put_f64(std::ostream& os, double v) { put_bytes(os, &v, 8); }
void put_string(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    put_bytes(os, s.data(), s.size());
}

void get_bytes(std::istream& is, void* p, size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error(std::string("truncated checkpoint while reading ") + what);
}
std::uint8_t get_u8(std::istream& is, const char* what) {
    std::uint8_t v;
    get_bytes(is, &v, 1, what);
    return v;
}
std::uint32_t get_u32(std::istream& is, const char* what) {
    std::uint32_t v;
    get_bytes(is, &v, 4, what);
    return v;
}
std::uint64_t get_u64(std::istream& is, const char* what) {
    std::uint64_t v;
    get_bytes(is, &v, 8, what);
    return v;
}
double get_f64(std::istream& is, const char* what) {
    double v;
    get_bytes(is, &v, 8, what);
    return v;
}
std::string get_string(std::istream& is, const char* what) {
    const std::uint32_t n = get_u32(is, what);
    std::string s(n, '\0');
    if (n) get_bytes(is, s.data(), n, what);
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    const ModelParams& p = ckpt.params;

    put_bytes(os, kMagic, sizeof(kMagic));
    put_u32(os, kVersion);
    put_u8(os, static_cast<std::uint8_t>(p.variant));
    put_u32(os, static_cast<std::uint32_t>(p.lookback));
    put_u32(os, static_cast<std::uint32_t>(p.horizon));
    put_u32(os, static_cast<std::uint32_t>(p.channels));
    put_u8(os, p.reconstruct);
    put_u8(os, p.channel_sharing);
    put_u8(os, p.literal_eq3);
    put_u8(os, p.subsampled_trend);
    put_u8(os, p.slots.shared_embedding);
    put_u32(os, static_cast<std::uint32_t>(p.moving_average_window));
    put_u32(os, static_cast<std::uint32_t>(p.slots.count()));
    put_u64(os, ckpt.seed);
    for (double r : ckpt.split_ratios) put_f64(os, r);
    put_u8(os, ckpt.lookback_bridging);
    put_u8(os, ckpt.standardize);
    put_string(os, ckpt.stats_ref);

    put_u32(os, static_cast<std::uint32_t>(p.head_sets.size()));
    for (const auto& set : p.head_sets) {
        put_u32(os, static_cast<std::uint32_t>(set.heads.size()));
        for (const auto& h : set.heads) {
            put_u32(os, static_cast<std::uint32_t>(h.W.rows()));
            put_u32(os, static_cast<std::uint32_t>(h.W.cols()));
            for (long r = 0; r < h.W.rows(); ++r)
                for (long c = 0; c < h.W.cols(); ++c) put_f64(os, h.W(r, c));
            for (long i = 0; i < h.b.size(); ++i) put_f64(os, h.b(i));
        }
    }
    put_u32(os, static_cast<std::uint32_t>(p.slots.embedding_count()));
    for (double w : p.slots.weights) put_f64(os, w);
    for (double b : p.slots.biases) put_f64(os, b);
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[8];
    get_bytes(is, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + " is not a qlinear checkpoint (bad magic)");
    const std::uint32_t version = get_u32(is, "version");
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint format version " +
                                 std::to_string(version) + " (expected " +
                                 std::to_string(kVersion) + ")");

    Checkpoint ckpt;
    ModelParams& p = ckpt.params;
    const std::uint8_t variant = get_u8(is, "variant");
    if (variant > 2) throw std::runtime_error("corrupt checkpoint: bad variant tag");
    p.variant = static_cast<Variant>(variant);
    p.lookback = get_u32(is, "lookback");
    p.horizon = get_u32(is, "horizon");
    p.channels = get_u32(is, "channels");
    p.reconstruct = get_u8(is, "reconstruct");
    p.channel_sharing = get_u8(is, "channel_sharing");
    p.literal_eq3 = get_u8(is, "literal_eq3");
    p.subsampled_trend = get_u8(is, "subsampled_trend");
    const bool shared_embedding = get_u8(is, "shared_embedding");
    p.moving_average_window = static_cast<int>(get_u32(is, "moving_average_window"));
    const std::uint32_t m = get_u32(is, "m");
    ckpt.seed = get_u64(is, "seed");
    for (double& r : ckpt.split_ratios) r = get_f64(is, "split_ratios");
    ckpt.lookback_bridging = get_u8(is, "lookback_bridging");
    ckpt.standardize = get_u8(is, "standardize");
    ckpt.stats_ref = get_string(is, "stats_ref");

    p.slots = QuantileSlots::create(static_cast<int>(m), shared_embedding);
    const std::uint32_t n_sets = get_u32(is, "head_set_count");
    p.head_sets.resize(n_sets);
    for (auto& set : p.head_sets) {
        const std::uint32_t n_heads = get_u32(is, "head_count");
        set.heads.resize(n_heads);
        for (auto& h : set.heads) {
            const std::uint32_t rows = get_u32(is, "W rows");
            const std::uint32_t cols = get_u32(is, "W cols");
            h.W.resize(rows, cols);
            for (std::uint32_t r = 0; r < rows; ++r)
                for (std::uint32_t c = 0; c < cols; ++c) h.W(r, c) = get_f64(is, "W");
            h.b.resize(cols);
            for (std::uint32_t i = 0; i < cols; ++i) h.b(i) = get_f64(is, "b");
        }
    }
    const std::uint32_t n_embed = get_u32(is, "embedding_count");
    if (n_embed != static_cast<std::uint32_t>(p.slots.embedding_count()))
        throw std::runtime_error("corrupt checkpoint: embedding count mismatch");
    for (auto& w : p.slots.weights) w = get_f64(is, "embed_w");
    for (auto& b : p.slots.biases) b = get_f64(is, "embed_b");
    return ckpt;
}

std::string resolve_stats_path(const std::string& checkpoint_path, const std::string& stats_ref) {
    namespace fs = std::filesystem;
    fs::path ref(stats_ref);
    if (ref.is_absolute()) return ref.string();
    return (fs::path(checkpoint_path).parent_path() / ref).string();
}

}  // namespace qlinear
