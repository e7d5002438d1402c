#include "lmsc/dataset.hpp"

#include <fstream>
#include <sstream>

#include "lmsc/kvconfig.hpp"

namespace lmsc {

DatasetManifest DatasetManifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("manifest not readable: " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    KVList kv = KVList::parse(buf.str());

    DatasetManifest m;
    m.dims.nx = kv.get_int("nx", 256);
    m.dims.ny = kv.get_int("ny", 256);
    m.dims.nz = kv.get_int("nz", 32);
    m.dims.voxel_size = kv.get_double("voxel_size", 0.2);
    m.dims.validate();
    m.num_classes = static_cast<int>(kv.get_int("num_classes", 19));

    for (const auto& entry : kv.get_all("map")) {
        std::istringstream ms(entry);
        std::string tok;
        while (ms >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw DataError("manifest label map entry '" + tok + "': expected raw:internal");
            m.label_map.emplace_back(static_cast<std::uint16_t>(std::stoul(tok.substr(0, colon))),
                                     static_cast<std::uint16_t>(std::stoul(tok.substr(colon + 1))));
        }
    }

    const auto base = file.parent_path();
    for (const auto& entry : kv.get_all("sample")) {
        std::istringstream ss(entry);
        std::string occ, lab;
        if (!(ss >> occ >> lab))
            throw DataError("manifest sample entry '" + entry + "': expected '<occ> <labels>'");
        auto resolve = [&base](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };
        m.samples.emplace_back(resolve(occ), resolve(lab));
    }
    return m;
}

void DatasetManifest::save(const std::filesystem::path& file) const {
    KVList kv;
    kv.set("nx", std::to_string(dims.nx));
    kv.set("ny", std::to_string(dims.ny));
    kv.set("nz", std::to_string(dims.nz));
    kv.set("voxel_size", std::to_string(dims.voxel_size));
    kv.set("num_classes", std::to_string(num_classes));
    std::string map_str;
    for (std::size_t i = 0; i < label_map.size(); ++i) {
        if (i) map_str += " ";
        map_str += std::to_string(label_map[i].first) + ":" + std::to_string(label_map[i].second);
    }
    kv.items.emplace_back("map", map_str);
    const auto base = file.parent_path();
    for (const auto& [occ, lab] : samples)
        kv.items.emplace_back("sample", std::filesystem::relative(occ, base).string() + " " +
                                            std::filesystem::relative(lab, base).string());
    std::ofstream out(file);
    if (!out) throw DataError("manifest not writable: " + file.string());
    out << kv.serialize();
}

Sample load_sample(const DatasetManifest& m, std::size_t index) {
    const auto& [occ_path, lab_path] = m.samples.at(index);
    std::ifstream occ_in(occ_path, std::ios::binary);
    if (!occ_in) throw DataError("occupancy file not readable: " + occ_path.string());
    std::ifstream lab_in(lab_path, std::ios::binary);
    if (!lab_in) throw DataError("label file not readable: " + lab_path.string());
    Sample s{load_occupancy(occ_in, m.dims), load_labels(lab_in, m.dims, m.label_map)};
    return s;
}

std::vector<Sample> load_all(const DatasetManifest& m) {
    std::vector<Sample> out;
    out.reserve(m.samples.size());
    for (std::size_t i = 0; i < m.samples.size(); ++i) out.push_back(load_sample(m, i));
    return out;
}

} // namespace lmsc
