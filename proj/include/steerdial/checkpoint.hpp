#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "steerdial/math.hpp"

namespace steerdial::ckpt {

inline constexpr std::uint32_t kVersion = 1;

// Every checkpoint starts with "SDCK", a format version, and a kind tag
// identifying the component the parameters belong to.
void write_header(std::ostream& out, const std::string& kind);
// Returns the kind tag; throws FormatError on bad magic or version.
std::string read_header(std::istream& in);

void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);

void write_i64(std::ostream& out, std::int64_t v);
std::int64_t read_i64(std::istream& in);

void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);

void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in);

void write_string_list(std::ostream& out, const std::vector<std::string>& items);
std::vector<std::string> read_string_list(std::istream& in);

void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

void write_vector(std::ostream& out, const Vector& v);
Vector read_vector(std::istream& in);

std::ofstream open_for_write(const std::string& path);
std::ifstream open_for_read(const std::string& path);

// Peeks the kind tag of a checkpoint file without loading parameters.
std::string peek_kind(const std::string& path);

}  // namespace steerdial::ckpt
