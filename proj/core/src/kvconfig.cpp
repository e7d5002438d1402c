#include "lmsc/kvconfig.hpp"

#include <sstream>

namespace lmsc {

namespace {
std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
} // namespace

KVList KVList::parse(const std::string& text) {
    KVList kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        kv.items.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

std::string KVList::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : items) out << k << " = " << v << "\n";
    return out.str();
}

bool KVList::has(const std::string& key) const {
    for (const auto& [k, v] : items)
        if (k == key) return true;
    return false;
}

std::optional<std::string> KVList::get(const std::string& key) const {
    for (const auto& [k, v] : items)
        if (k == key) return v;
    return std::nullopt;
}

std::vector<std::string> KVList::get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : items)
        if (k == key) out.push_back(v);
    return out;
}

void KVList::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : items)
        if (k == key) {
            v = value;
            return;
        }
    items.emplace_back(key, value);
}

std::string KVList::get_or(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

std::int64_t KVList::get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stoll(*v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + *v + "'");
    }
}

double KVList::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + *v + "'");
    }
}

bool KVList::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "on" || *v == "1") return true;
    if (*v == "false" || *v == "off" || *v == "0") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + *v + "'");
}

std::vector<std::int64_t> parse_int_list(const std::string& s) {
    std::vector<std::int64_t> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        try {
            out.push_back(std::stoll(cur));
        } catch (const std::exception&) {
            throw ConfigError("expected comma-separated integers, got '" + s + "'");
        }
    }
    return out;
}

std::string join_int_list(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

void model_config_to_kv(const ModelConfig& cfg, KVList& kv) {
    kv.set("model.num_classes", std::to_string(cfg.num_classes));
    kv.set("model.nx", std::to_string(cfg.grid.nx));
    kv.set("model.ny", std::to_string(cfg.grid.ny));
    kv.set("model.nz", std::to_string(cfg.grid.nz));
    kv.set("model.voxel_size", std::to_string(cfg.grid.voxel_size));
    kv.set("model.channels", join_int_list({cfg.channels.begin(), cfg.channels.end()}));
    kv.set("model.head_width", std::to_string(cfg.head_width));
    kv.set("model.aspp_dilations", join_int_list({cfg.aspp_dilations.begin(), cfg.aspp_dilations.end()}));
    kv.set("model.decoder", cfg.decoder_mode == DecoderMode::multiscale ? "multiscale" : "vanilla");
    kv.set("model.upsample", cfg.upsample_mode == UpsampleMode::deconv ? "deconv" : "nearest");
    kv.set("model.aspp", cfg.head_aspp ? "on" : "off");
    kv.set("model.init_seed", std::to_string(cfg.init_seed));
}

ModelConfig model_config_from_kv(const KVList& kv) {
    ModelConfig cfg;
    cfg.num_classes = static_cast<int>(kv.get_int("model.num_classes", cfg.num_classes));
    cfg.grid.nx = kv.get_int("model.nx", cfg.grid.nx);
    cfg.grid.ny = kv.get_int("model.ny", cfg.grid.ny);
    cfg.grid.nz = kv.get_int("model.nz", cfg.grid.nz);
    cfg.grid.voxel_size = kv.get_double("model.voxel_size", cfg.grid.voxel_size);
    if (auto s = kv.get("model.channels")) {
        cfg.channels.clear();
        for (auto v : parse_int_list(*s)) cfg.channels.push_back(static_cast<int>(v));
    } else if (cfg.grid.nz != 32) {
        // default schedule tracks the grid height when none is given
        cfg.channels = {static_cast<int>(cfg.grid.nz), static_cast<int>(cfg.grid.nz) + 16,
                        static_cast<int>(cfg.grid.nz) + 32, static_cast<int>(cfg.grid.nz) + 48};
    }
    cfg.head_width = static_cast<int>(kv.get_int("model.head_width", cfg.head_width));
    if (auto s = kv.get("model.aspp_dilations")) {
        cfg.aspp_dilations.clear();
        for (auto v : parse_int_list(*s)) cfg.aspp_dilations.push_back(static_cast<int>(v));
    }
    const std::string dm = kv.get_or("model.decoder", "multiscale");
    if (dm == "multiscale")
        cfg.decoder_mode = DecoderMode::multiscale;
    else if (dm == "vanilla")
        cfg.decoder_mode = DecoderMode::vanilla;
    else
        throw ConfigError("model.decoder: expected 'multiscale' or 'vanilla'");
    const std::string um = kv.get_or("model.upsample", "deconv");
    if (um == "deconv")
        cfg.upsample_mode = UpsampleMode::deconv;
    else if (um == "nearest")
        cfg.upsample_mode = UpsampleMode::nearest;
    else
        throw ConfigError("model.upsample: expected 'deconv' or 'nearest'");
    cfg.head_aspp = kv.get_bool("model.aspp", cfg.head_aspp);
    cfg.init_seed = static_cast<std::uint64_t>(kv.get_int("model.init_seed", 1));
    return cfg;
}

} // namespace lmsc
