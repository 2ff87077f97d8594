#include "semiseg/util/npy.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "semiseg/core/error.hpp"

namespace semiseg::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) os << shape[i] << ", ";
    os << ")";
    return os.str();
}

void write_raw(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               const char* descr, const void* data, std::size_t bytes) {
    std::string header = std::string("{'descr': '") + descr +
                         "', 'fortran_order': False, 'shape': " + shape_str(shape) + ", }";
    // Pad so that magic(6) + version(2) + len(2) + header is a multiple of 64.
    std::size_t unpadded = 10 + header.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    header.append(padded - unpadded, ' ');
    header.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(kMagic, 6);
    out.put('\x01');
    out.put('\x00');
    const std::uint16_t len = static_cast<std::uint16_t>(header.size());
    out.put(static_cast<char>(len & 0xff));
    out.put(static_cast<char>(len >> 8));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw DataError("short write: " + path.string());
}

struct Header {
    std::vector<std::size_t> shape;
    std::string descr;
    std::size_t offset;
};

Header read_header(std::ifstream& in, const std::filesystem::path& path) {
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0) {
        throw DataError("not an npy file: " + path.string());
    }
    char ver[2];
    in.read(ver, 2);
    if (ver[0] != 1) throw DataError("unsupported npy version in " + path.string());
    unsigned char lo = 0, hi = 0;
    in.read(reinterpret_cast<char*>(&lo), 1);
    in.read(reinterpret_cast<char*>(&hi), 1);
    const std::size_t header_len = lo | (static_cast<std::size_t>(hi) << 8);
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw DataError("truncated npy header: " + path.string());

    Header h;
    h.offset = 10 + header_len;

    auto dpos = header.find("'descr'");
    if (dpos == std::string::npos) throw DataError("npy header missing descr: " + path.string());
    auto colon = header.find(':', dpos);
    auto v1 = header.find('\'', colon);
    auto v2 = header.find('\'', v1 + 1);
    h.descr = header.substr(v1 + 1, v2 - v1 - 1);

    if (header.find("'fortran_order': False") == std::string::npos) {
        throw DataError("fortran-order npy files are not supported: " + path.string());
    }

    auto spos = header.find("'shape'");
    auto p1 = header.find('(', spos);
    auto p2 = header.find(')', p1);
    std::string dims = header.substr(p1 + 1, p2 - p1 - 1);
    std::istringstream ds(dims);
    std::string tok;
    while (std::getline(ds, tok, ',')) {
        std::string t;
        for (char c : tok)
            if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
        if (!t.empty()) h.shape.push_back(std::stoull(t));
    }
    return h;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

void write(const std::filesystem::path& path, const FloatArray& array) {
    if (array.data.size() != element_count(array.shape)) {
        throw DataError("npy shape/data mismatch writing " + path.string());
    }
    write_raw(path, array.shape, "<f4", array.data.data(), array.data.size() * sizeof(float));
}

void write(const std::filesystem::path& path, const ByteArray& array) {
    if (array.data.size() != element_count(array.shape)) {
        throw DataError("npy shape/data mismatch writing " + path.string());
    }
    write_raw(path, array.shape, "|u1", array.data.data(), array.data.size());
}

FloatArray read_float(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    Header h = read_header(in, path);
    if (h.descr != "<f4") {
        throw DataError("expected float32 npy, got '" + h.descr + "' in " + path.string());
    }
    FloatArray a;
    a.shape = h.shape;
    a.data.resize(element_count(h.shape));
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(float)));
    if (!in) throw DataError("truncated npy data: " + path.string());
    return a;
}

ByteArray read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    Header h = read_header(in, path);
    if (h.descr != "|u1") {
        throw DataError("expected uint8 npy, got '" + h.descr + "' in " + path.string());
    }
    ByteArray a;
    a.shape = h.shape;
    a.data.resize(element_count(h.shape));
    in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(a.data.size()));
    if (!in) throw DataError("truncated npy data: " + path.string());
    return a;
}

} // namespace semiseg::npy
