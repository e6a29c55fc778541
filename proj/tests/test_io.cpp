#include <doctest.h>
#include <sparsenl/error.hpp>
#include <sparsenl/io.hpp>
#include <sparsenl/rng.hpp>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sparsenl;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    return fs::temp_directory_path() / ("sparsenl_io_" + std::to_string(::getpid()) + "_" + name);
}

} // namespace

TEST_CASE("csv matrices")
{
    std::istringstream with_header("x1,x2\n1,2\n3.5,-4\n");
    const Matrix A = io::read_matrix_csv(with_header);
    REQUIRE(A.rows() == 2);
    REQUIRE(A.cols() == 2);
    CHECK(A(1, 0) == 3.5);
    CHECK(A(1, 1) == -4.0);

    std::istringstream plain("1, 2, 3\n\n4,5,6\n");
    CHECK(io::read_matrix_csv(plain).rows() == 2);

    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(io::read_matrix_csv(ragged), IoError);
    std::istringstream junk("1,2\n3,abc\n");
    CHECK_THROWS_AS(io::read_matrix_csv(junk), IoError);
    std::istringstream empty("a,b\n");
    CHECK_THROWS_AS(io::read_matrix_csv(empty), IoError);

    // Written values read back bit for bit.
    Rng rng(4);
    Matrix M(5, 3);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 3; ++j) M(i, j) = rng.normal() * 1e-3;
    std::ostringstream out;
    io::write_matrix_csv(out, M);
    std::istringstream back(out.str());
    CHECK(io::read_matrix_csv(back) == M);
}

TEST_CASE("binary matrices")
{
    Matrix M(2, 3);
    M << 1, 2, 3, -0.1, 1e-300, 7;
    std::stringstream buf;
    io::write_matrix_binary(buf, M);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "SPCT");
    CHECK(bytes.size() == 4 + 8 + 6 * 8);
    CHECK(io::read_matrix_binary(buf) == M);

    std::istringstream bad("XXXX");
    CHECK_THROWS_AS(io::read_matrix_binary(bad), IoError);
    std::istringstream truncated(bytes.substr(0, 20));
    CHECK_THROWS_AS(io::read_matrix_binary(truncated), IoError);

    // read_matrix dispatches on the magic bytes.
    const fs::path bin = temp_path("m.bin");
    io::write_matrix_binary(bin, M);
    CHECK(io::read_matrix(bin) == M);
    const fs::path csv = temp_path("m.csv");
    {
        std::ofstream f(csv);
        io::write_matrix_csv(f, M);
    }
    CHECK(io::read_matrix(csv) == M);
    fs::remove(bin);
    fs::remove(csv);
    CHECK_THROWS_AS(io::read_matrix(temp_path("missing")), IoError);
}

TEST_CASE("vectors")
{
    const Vector a = io::parse_vector("[1, 2.5, -3]");
    REQUIRE(a.size() == 3);
    CHECK(a(2) == -3.0);
    const Vector b = io::parse_vector("y\n1\n2\n");
    REQUIRE(b.size() == 2);
    CHECK(b(1) == 2.0);
    CHECK_THROWS_AS(io::parse_vector("[1, \"a\"]"), IoError);
    CHECK_THROWS_AS(io::parse_vector("1,2\n3,4\n"), IoError);

    const fs::path p = temp_path("v.json");
    {
        std::ofstream f(p);
        f << "[0.25, 4]";
    }
    CHECK(io::read_vector(p)(0) == 0.25);
    fs::remove(p);
}

TEST_CASE("format_double round-trips")
{
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
        const double x = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
        CHECK(std::stod(io::format_double(x)) == x);
    }
    CHECK(io::format_double(0.5) == "0.5");
}
