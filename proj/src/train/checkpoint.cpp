#include "semiseg/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "semiseg/core/error.hpp"

namespace semiseg {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'E', 'G', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_floats(std::ostream& out, const std::vector<float>& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void read_floats(std::istream& in, std::vector<float>& v, const char* what) {
    const std::uint64_t size = read_u64(in);
    if (size != v.size()) {
        throw ConfigError("checkpoint " + std::string(what) + " block has " +
                          std::to_string(size) + " values, model expects " +
                          std::to_string(v.size()));
    }
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, ReferenceModel& model, Sgd* optimizer,
                     const CheckpointMeta& meta) {
    const auto params = model.parameters();
    const auto buffers = model.buffers();
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write checkpoint: " + path.string());
        out.write(kMagic, sizeof kMagic);
        write_u64(out, meta.iteration);
        write_f64(out, meta.best_miou);
        write_u64(out, params.size());
        for (const Param* p : params) write_floats(out, p->value);
        write_u64(out, buffers.size());
        for (const auto* b : buffers) write_floats(out, *b);
        write_u64(out, optimizer ? params.size() : 0);
        if (optimizer) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                write_floats(out, optimizer->momentum_buffer(i));
            }
        }
        if (!out) throw DataError("short write on checkpoint: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, ReferenceModel& model,
                               Sgd* optimizer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw DataError("not a checkpoint file: " + path.string());
    }
    CheckpointMeta meta;
    meta.iteration = read_u64(in);
    meta.best_miou = read_f64(in);

    const auto params = model.parameters();
    const auto buffers = model.buffers();
    if (read_u64(in) != params.size()) {
        throw ConfigError("checkpoint parameter-block count mismatch: " + path.string());
    }
    for (Param* p : params) read_floats(in, p->value, "parameter");
    if (read_u64(in) != buffers.size()) {
        throw ConfigError("checkpoint buffer count mismatch: " + path.string());
    }
    for (auto* b : buffers) read_floats(in, *b, "buffer");

    const std::uint64_t momentum_blocks = read_u64(in);
    if (optimizer) {
        if (momentum_blocks != params.size()) {
            throw ConfigError("checkpoint lacks optimizer state: " + path.string());
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            read_floats(in, optimizer->momentum_buffer(i), "momentum");
        }
    }
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return meta;
}

} // namespace semiseg
