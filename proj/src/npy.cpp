#include "cpal/npy.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "npy reader assumes a little-endian host");

namespace cpal {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

// Pulls the value following `key` out of the header dict. The writer below
// and numpy itself both emit the canonical single-quoted form.
std::string dict_value(const std::string& header, const std::string& key) {
    const std::string quoted = "'" + key + "'";
    std::size_t pos = header.find(quoted);
    if (pos == std::string::npos)
        throw FormatError("npy: header missing key " + key);
    pos = header.find(':', pos + quoted.size());
    if (pos == std::string::npos)
        throw FormatError("npy: malformed header near " + key);
    ++pos;
    while (pos < header.size() && header[pos] == ' ') ++pos;
    if (pos >= header.size())
        throw FormatError("npy: malformed header near " + key);

    if (header[pos] == '\'') {
        std::size_t end = header.find('\'', pos + 1);
        if (end == std::string::npos)
            throw FormatError("npy: unterminated string in header");
        return header.substr(pos + 1, end - pos - 1);
    }
    if (header[pos] == '(') {
        std::size_t end = header.find(')', pos + 1);
        if (end == std::string::npos)
            throw FormatError("npy: unterminated tuple in header");
        return header.substr(pos, end - pos + 1);
    }
    std::size_t end = header.find_first_of(",}", pos);
    if (end == std::string::npos)
        throw FormatError("npy: malformed header near " + key);
    std::string v = header.substr(pos, end - pos);
    while (!v.empty() && v.back() == ' ') v.pop_back();
    return v;
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
    if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')')
        throw FormatError("npy: shape is not a tuple");
    std::vector<std::size_t> shape;
    std::string inner = tuple.substr(1, tuple.size() - 2);
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::string digits;
        for (char c : tok)
            if (c >= '0' && c <= '9') digits += c;
        if (digits.empty()) continue;  // trailing comma in "(3,)"
        shape.push_back(static_cast<std::size_t>(std::stoull(digits)));
    }
    if (shape.empty())
        throw FormatError("npy: rank-0 arrays are not supported");
    for (std::size_t d : shape)
        if (d == 0) throw FormatError("npy: zero-length dimension");
    return shape;
}

}  // namespace

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[8];
    if (!in.read(magic, 8)) throw FormatError("npy: file too short for magic");
    if (std::memcmp(magic, kMagic, 6) != 0)
        throw FormatError("npy: bad magic bytes in " + path.string());
    if (magic[6] != 1 || magic[7] != 0)
        throw FormatError("npy: unsupported version (want 1.0)");

    unsigned char len_bytes[2];
    if (!in.read(reinterpret_cast<char*>(len_bytes), 2))
        throw FormatError("npy: truncated header length");
    std::size_t header_len = static_cast<std::size_t>(len_bytes[0]) |
                             (static_cast<std::size_t>(len_bytes[1]) << 8);

    std::string header(header_len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
        throw FormatError("npy: truncated header");

    const std::string descr = dict_value(header, "descr");
    const std::string fortran = dict_value(header, "fortran_order");
    const std::vector<std::size_t> shape = parse_shape(dict_value(header, "shape"));

    if (fortran != "False")
        throw FormatError("npy: fortran_order files are rejected (row-major only)");

    std::size_t n = Tensor::numel(shape);
    std::vector<double> out(n);

    if (descr == "<f8") {
        if (!in.read(reinterpret_cast<char*>(out.data()),
                     static_cast<std::streamsize>(n * sizeof(double))))
            throw FormatError("npy: truncated f8 payload");
    } else if (descr == "<f4") {
        std::vector<float> buf(n);
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(n * sizeof(float))))
            throw FormatError("npy: truncated f4 payload");
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(buf[i]);
    } else {
        throw UnsupportedDtypeError("npy: unsupported dtype " + descr +
                                    " (only <f4 and <f8 are handled)");
    }
    return Tensor(shape, std::move(out));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path, NpyDtype dtype) {
    if (t.rank() == 0) throw DimensionError("npy: refusing to save rank-0 tensor");

    std::string dict = "{'descr': '";
    dict += (dtype == NpyDtype::f64) ? "<f8" : "<f4";
    dict += "', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        dict += std::to_string(t.shape[i]);
        if (i + 1 < t.shape.size()) dict += ", ";
    }
    if (t.shape.size() == 1) dict += ",";
    dict += "), }";

    // magic(6) + version(2) + header_len(2) + dict + padding, total % 64 == 0
    std::size_t unpadded = 10 + dict.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict += '\n';
    std::size_t header_len = dict.size();
    if (header_len > 0xFFFF) throw FormatError("npy: header too large for v1.0");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 6);
    const char version[2] = {1, 0};
    out.write(version, 2);
    const unsigned char len_bytes[2] = {static_cast<unsigned char>(header_len & 0xFF),
                                        static_cast<unsigned char>((header_len >> 8) & 0xFF)};
    out.write(reinterpret_cast<const char*>(len_bytes), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));

    if (dtype == NpyDtype::f64) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    } else {
        std::vector<float> buf(t.data.size());
        for (std::size_t i = 0; i < t.data.size(); ++i)
            buf[i] = static_cast<float>(t.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cpal
