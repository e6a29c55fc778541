#include <sparsenl/io.hpp>
#include <sparsenl/error.hpp>
#include <json.hpp>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace sparsenl::io {
namespace {

constexpr std::array<char, 4> kMagic = {'S', 'P', 'C', 'T'};

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_number(const std::string& field, double& out)
{
    const std::string t = trim(field);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

bool parse_row(const std::string& line, std::vector<double>& row)
{
    row.clear();
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        double x;
        if (!parse_number(field, x)) return false;
        row.push_back(x);
    }
    return !row.empty();
}

template <class T>
T read_le(std::istream& in)
{
    std::array<unsigned char, sizeof(T)> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!in) throw IoError("binary matrix: unexpected end of input");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    if constexpr (sizeof(T) == 8) {
        return std::bit_cast<T>(bits);
    } else {
        return static_cast<T>(bits);
    }
}

template <class T>
void write_le(std::ostream& out, T value)
{
    std::uint64_t bits;
    if constexpr (sizeof(T) == 8) {
        bits = std::bit_cast<std::uint64_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    std::array<char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    }
    out.write(buf.data(), buf.size());
}

std::ifstream open_in(const std::filesystem::path& path, bool binary)
{
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

} // namespace

Matrix read_matrix_csv(std::istream& in)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::vector<double> row;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (!parse_row(line, row)) {
            if (first) {
                first = false;
                continue;
            }
            throw IoError("csv: non-numeric field on line " + std::to_string(lineno));
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("csv: ragged row on line " + std::to_string(lineno));
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw IoError("csv: no numeric rows");
    Matrix M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    }
    return M;
}

Matrix read_matrix_csv(const std::filesystem::path& path)
{
    auto in = open_in(path, false);
    return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& M)
{
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
}

Matrix read_matrix_binary(std::istream& in)
{
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw IoError("binary matrix: bad magic (expected SPCT)");
    const auto n = read_le<std::uint32_t>(in);
    const auto p = read_le<std::uint32_t>(in);
    if (n == 0 || p == 0) throw IoError("binary matrix: zero dimension");
    Matrix M(n, p);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < p; ++j) M(i, j) = read_le<double>(in);
    }
    return M;
}

Matrix read_matrix_binary(const std::filesystem::path& path)
{
    auto in = open_in(path, true);
    return read_matrix_binary(in);
}

void write_matrix_binary(std::ostream& out, const Matrix& M)
{
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(M.rows()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(M.cols()));
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) write_le<double>(out, M(i, j));
    }
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& M)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_matrix_binary(out, M);
}

Matrix read_matrix(const std::filesystem::path& path)
{
    auto in = open_in(path, true);
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    const bool binary = in.gcount() == 4 && magic == kMagic;
    in.clear();
    in.seekg(0);
    return binary ? read_matrix_binary(in) : read_matrix_csv(in);
}

Vector parse_vector(const std::string& text)
{
    const std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(std::string("vector json: ") + e.what());
        }
        Vector v(j.size());
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) throw IoError("vector json: non-numeric entry");
            v(i) = j[i].get<double>();
        }
        return v;
    }
    std::istringstream in(t);
    const Matrix M = read_matrix_csv(in);
    if (M.cols() != 1) throw IoError("vector csv must have a single column");
    return M.col(0);
}

Vector read_vector(const std::filesystem::path& path)
{
    auto in = open_in(path, false);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_vector(ss.str());
}

std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace sparsenl::io
