#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lmsc/common.hpp"
#include "lmsc/model.hpp"

namespace lmsc {

// Flat dotted-key structured text: one "key = value" per line, '#' comments.
// Keys may repeat (e.g. manifest sample lines); order is preserved.
struct KVList {
    std::vector<std::pair<std::string, std::string>> items;

    static KVList parse(const std::string& text);
    std::string serialize() const;

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;
    std::vector<std::string> get_all(const std::string& key) const;
    void set(const std::string& key, const std::string& value); // replace or append

    std::string get_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

std::vector<std::int64_t> parse_int_list(const std::string& s);
std::string join_int_list(const std::vector<std::int64_t>& v);

// ModelConfig <-> "model.*" keys.
void model_config_to_kv(const ModelConfig& cfg, KVList& kv);
ModelConfig model_config_from_kv(const KVList& kv);

} // namespace lmsc
