#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "cpal/errors.hpp"
#include "cpal/npy.hpp"
#include "cpal/rng.hpp"
#include "cpal/tensor.hpp"

using namespace cpal;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("cpal_npy_" + name);
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("tensor shape and accessors") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.rank() == 2);
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 6.0);
    t.at(0, 1) = 9.0;
    CHECK(t.data[1] == 9.0);

    Tensor r3 = Tensor::zeros({2, 2, 2});
    r3.at(1, 0, 1) = 4.0;
    CHECK(r3.data[5] == 4.0);

    CHECK_THROWS_AS(Tensor({2, 2}, {1.0}), DimensionError);
    CHECK(shape_string({3, 4, 5}) == "[3,4,5]");
}

TEST_CASE("validate_finite flags NaN and infinity") {
    Tensor ok({2}, {1.0, -2.0});
    CHECK(validate_finite(ok));
    Tensor bad({2}, {1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_FALSE(validate_finite(bad));
    Tensor inf({1}, {std::numeric_limits<double>::infinity()});
    CHECK_FALSE(validate_finite(inf));
}

TEST_CASE("f64 round trip preserves every bit") {
    Rng rng(11);
    std::vector<double> data(2 * 5 * 3);
    for (double& v : data) v = rng.normal() * 1e3;
    Tensor t({2, 5, 3}, data);

    const auto path = temp_file("roundtrip.npy");
    save_tensor(t, path);
    const Tensor back = load_tensor(path);
    REQUIRE(back.shape == t.shape);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.data[i] == t.data[i]);

    const auto path2 = temp_file("roundtrip2.npy");
    save_tensor(back, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("f32 payloads widen to f64") {
    Tensor t({4}, {1.5, -2.25, 0.1, 3e7});
    const auto path = temp_file("f32.npy");
    save_tensor(t, path, NpyDtype::f32);
    const Tensor back = load_tensor(path);
    REQUIRE(back.shape == t.shape);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(back.data[i] == static_cast<double>(static_cast<float>(t.data[i])));
}

TEST_CASE("written header is v1.0 with 64-byte aligned payload") {
    Tensor t({3, 2}, {1, 2, 3, 4, 5, 6});
    const auto path = temp_file("header.npy");
    save_tensor(t, path);
    const std::string bytes = read_bytes(path);
    REQUIRE(bytes.size() > 10);
    CHECK(bytes[0] == '\x93');
    CHECK(bytes.substr(1, 5) == "NUMPY");
    CHECK(bytes[6] == '\x01');
    CHECK(bytes[7] == '\x00');
    const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                   (static_cast<unsigned char>(bytes[9]) << 8);
    CHECK((10 + header_len) % 64 == 0);
    CHECK(bytes[10 + header_len - 1] == '\n');
    CHECK(bytes.size() == 10 + header_len + 6 * 8);
    CHECK(bytes.find("'descr': '<f8'") != std::string::npos);
    CHECK(bytes.find("'fortran_order': False") != std::string::npos);
    CHECK(bytes.find("(3, 2)") != std::string::npos);
}

TEST_CASE("malformed files are rejected") {
    Tensor t({2, 2}, {1, 2, 3, 4});
    const auto good = temp_file("good.npy");
    save_tensor(t, good);
    const std::string bytes = read_bytes(good);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_tensor(temp_file("no_such_file.npy")), IoError);
    }
    SUBCASE("bad magic") {
        std::string b = bytes;
        b[0] = 'X';
        const auto p = temp_file("bad_magic.npy");
        write_bytes(p, b);
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
    SUBCASE("unsupported version") {
        std::string b = bytes;
        b[6] = '\x02';
        const auto p = temp_file("bad_version.npy");
        write_bytes(p, b);
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
    SUBCASE("truncated payload") {
        const auto p = temp_file("truncated.npy");
        write_bytes(p, bytes.substr(0, bytes.size() - 4));
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
    SUBCASE("integer dtype") {
        std::string b = bytes;
        const auto pos = b.find("<f8");
        b.replace(pos, 3, "<i8");
        const auto p = temp_file("int_dtype.npy");
        write_bytes(p, b);
        CHECK_THROWS_AS(load_tensor(p), UnsupportedDtypeError);
    }
    SUBCASE("fortran order") {
        std::string b = bytes;
        const auto pos = b.find("False");
        b.replace(pos, 5, "True "); // keep the header length unchanged
        const auto p = temp_file("fortran.npy");
        write_bytes(p, b);
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
}

TEST_CASE("rank-0 and zero-extent shapes are rejected") {
    Tensor scalarish({1}, {42.0});
    const auto base = temp_file("shape_edit.npy");
    save_tensor(scalarish, base);
    std::string bytes = read_bytes(base);

    SUBCASE("rank-0") {
        std::string b = bytes;
        const auto pos = b.find("(1,)");
        REQUIRE(pos != std::string::npos);
        b.replace(pos, 4, "()  ");
        const auto p = temp_file("rank0.npy");
        write_bytes(p, b);
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
    SUBCASE("zero extent") {
        std::string b = bytes;
        const auto pos = b.find("(1,)");
        REQUIRE(pos != std::string::npos);
        b.replace(pos, 4, "(0,)");
        const auto p = temp_file("zerodim.npy");
        // drop the payload so the size matches an empty array
        write_bytes(p, b.substr(0, b.size() - 8));
        CHECK_THROWS_AS(load_tensor(p), FormatError);
    }
    SUBCASE("saving an empty tensor is refused") {
        Tensor empty;
        CHECK_THROWS_AS(save_tensor(empty, temp_file("empty.npy")), DimensionError);
    }
}

TEST_CASE("rng reproducibility and ranges") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Rng c(5), d(5);
    for (int i = 0; i < 1000; ++i) CHECK(c.normal() == d.normal());
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    Rng e(9);
    for (int i = 0; i < 100; ++i) CHECK(e.index(7) < 7);
}
