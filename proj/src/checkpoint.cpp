#include "steerdial/checkpoint.hpp"

#include <fstream>

#include "steerdial/errors.hpp"

namespace steerdial::ckpt {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'C', 'K'};

void write_raw(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError("checkpoint write failed");
}

void read_raw(std::istream& in, void* data, std::size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("unexpected end of checkpoint");
}

}  // namespace

void write_header(std::ostream& out, const std::string& kind) {
    write_raw(out, kMagic, 4);
    std::uint32_t version = kVersion;
    write_raw(out, &version, sizeof(version));
    write_string(out, kind);
}

std::string read_header(std::istream& in) {
    char magic[4];
    read_raw(in, magic, 4);
    if (std::string(magic, 4) != std::string(kMagic, 4)) throw FormatError("bad magic");
    std::uint32_t version = 0;
    read_raw(in, &version, sizeof(version));
    if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version));
    return read_string(in);
}

void write_u64(std::ostream& out, std::uint64_t v) { write_raw(out, &v, sizeof(v)); }

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    read_raw(in, &v, sizeof(v));
    return v;
}

void write_i64(std::ostream& out, std::int64_t v) { write_raw(out, &v, sizeof(v)); }

std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    read_raw(in, &v, sizeof(v));
    return v;
}

void write_f64(std::ostream& out, double v) { write_raw(out, &v, sizeof(v)); }

double read_f64(std::istream& in) {
    double v = 0;
    read_raw(in, &v, sizeof(v));
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    if (!s.empty()) write_raw(out, s.data(), s.size());
}

std::string read_string(std::istream& in) {
    std::uint64_t n = read_u64(in);
    if (n > (1ull << 30)) throw FormatError("implausible string length");
    std::string s(n, '\0');
    if (n) read_raw(in, s.data(), n);
    return s;
}

void write_string_list(std::ostream& out, const std::vector<std::string>& items) {
    write_u64(out, items.size());
    for (const auto& s : items) write_string(out, s);
}

std::vector<std::string> read_string_list(std::istream& in) {
    std::uint64_t n = read_u64(in);
    if (n > (1ull << 30)) throw FormatError("implausible list length");
    std::vector<std::string> items;
    items.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) items.push_back(read_string(in));
    return items;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    if (m.size()) write_raw(out, m.data(), sizeof(Scalar) * static_cast<std::size_t>(m.size()));
}

Matrix read_matrix(std::istream& in) {
    std::uint64_t rows = read_u64(in);
    std::uint64_t cols = read_u64(in);
    if (rows > (1ull << 24) || cols > (1ull << 24)) throw FormatError("implausible matrix shape");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    if (m.size()) read_raw(in, m.data(), sizeof(Scalar) * static_cast<std::size_t>(m.size()));
    return m;
}

void write_vector(std::ostream& out, const Vector& v) {
    write_u64(out, static_cast<std::uint64_t>(v.size()));
    if (v.size()) write_raw(out, v.data(), sizeof(Scalar) * static_cast<std::size_t>(v.size()));
}

Vector read_vector(std::istream& in) {
    std::uint64_t n = read_u64(in);
    if (n > (1ull << 30)) throw FormatError("implausible vector length");
    Vector v(static_cast<Index>(n));
    if (v.size()) read_raw(in, v.data(), sizeof(Scalar) * static_cast<std::size_t>(v.size()));
    return v;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::string peek_kind(const std::string& path) {
    auto in = open_for_read(path);
    return read_header(in);
}

}  // namespace steerdial::ckpt
