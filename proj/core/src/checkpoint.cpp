#include "lmsc/checkpoint.hpp"

#include <cstring>

#include "lmsc/kvconfig.hpp"

namespace lmsc {

namespace {

constexpr char kMagic[8] = {'L', 'M', 'S', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void write_i64(std::ostream& out, std::int64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    write_i64(out, static_cast<std::int64_t>(u));
}

void write_f64_buf(std::ostream& out, const std::vector<scalar>& v) {
    for (scalar s : v) write_f64(out, static_cast<double>(s));
}

std::uint32_t read_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (in.gcount() != 4) throw CheckpointError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::int64_t read_i64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (in.gcount() != 8) throw CheckpointError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return static_cast<std::int64_t>(v);
}

double read_f64(std::istream& in) {
    const std::int64_t i = read_i64(in);
    const std::uint64_t u = static_cast<std::uint64_t>(i);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}

void read_f64_buf(std::istream& in, std::vector<scalar>& v) {
    for (auto& s : v) s = static_cast<scalar>(read_f64(in));
}

std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    if (n > (1u << 24)) throw CheckpointError("checkpoint: unreasonable string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (in.gcount() != static_cast<std::streamsize>(n)) throw CheckpointError("checkpoint truncated");
    return s;
}

} // namespace

void checkpoint_save(LMSCNetModel& model, const AdamState* adam, std::ostream& out) {
    out.write(kMagic, 8);
    write_u32(out, kVersion);

    KVList kv;
    model_config_to_kv(model.config, kv);
    const std::string cfg = kv.serialize();
    write_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    auto params = model.parameters();
    out.put(adam ? 1 : 0);
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (auto& p : params) {
        write_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(out, static_cast<std::uint32_t>(p.value.ndim()));
        for (auto e : p.value.shape()) write_i64(out, e);
        write_f64_buf(out, p.value.data());
    }
    if (adam) {
        write_i64(out, adam->step);
        write_f64(out, static_cast<double>(adam->beta1));
        write_f64(out, static_cast<double>(adam->beta2));
        write_f64(out, static_cast<double>(adam->eps));
        for (std::size_t i = 0; i < params.size(); ++i) {
            write_f64_buf(out, adam->m[i]);
            write_f64_buf(out, adam->v[i]);
        }
    }
    if (!out) throw CheckpointError("checkpoint: write failed");
}

Checkpoint checkpoint_load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError("checkpoint: bad magic");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));

    const std::string cfg_text = read_string(in);
    ModelConfig cfg = model_config_from_kv(KVList::parse(cfg_text));

    Checkpoint ck;
    ck.model = build(cfg);
    auto params = ck.model.parameters();

    char has_adam = 0;
    in.get(has_adam);
    if (!in) throw CheckpointError("checkpoint truncated");
    const std::uint32_t count = read_u32(in);
    if (count != params.size())
        throw CheckpointError("checkpoint: parameter count mismatch, expected " +
                              std::to_string(params.size()) + " got " + std::to_string(count));
    for (auto& p : params) {
        const std::string name = read_string(in);
        if (name != p.name)
            throw CheckpointError("checkpoint: parameter order mismatch at '" + name + "'");
        const std::uint32_t nd = read_u32(in);
        if (nd != p.value.ndim()) throw CheckpointError("checkpoint: rank mismatch for " + name);
        for (std::size_t d = 0; d < nd; ++d)
            if (read_i64(in) != p.value.dim(d))
                throw CheckpointError("checkpoint: shape mismatch for " + name);
        read_f64_buf(in, p.value.data());
    }
    if (has_adam) {
        AdamState s;
        s.step = read_i64(in);
        s.beta1 = static_cast<scalar>(read_f64(in));
        s.beta2 = static_cast<scalar>(read_f64(in));
        s.eps = static_cast<scalar>(read_f64(in));
        for (auto& p : params) {
            std::vector<scalar> m(p.value.data().size()), v(p.value.data().size());
            read_f64_buf(in, m);
            read_f64_buf(in, v);
            s.m.push_back(std::move(m));
            s.v.push_back(std::move(v));
        }
        ck.adam = std::move(s);
    }
    if (!in) throw CheckpointError("checkpoint truncated");
    return ck;
}

} // namespace lmsc
