#ifndef HSIKME_MATRIX_IO_HPP
#define HSIKME_MATRIX_IO_HPP

// Binary matrix + JSON descriptor container shared by feature tables,
// random feature maps and SVM models.
//
//   <base>.json  {"rows": R, "cols": C, "dtype": "float64", "byte_order": "little",
//                 "data_file": "<base>.bin", ...caller fields...}
//   <base>.bin   R*C little-endian IEEE-754 doubles, row-major

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "hsikme/error.hpp"

namespace hsikme {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StoredMatrix {
    RowMatrix values;
    nlohmann::json descriptor;
};

namespace detail {

inline std::filesystem::path with_suffix(std::filesystem::path base, const char* suffix)
{
    base += suffix;
    return base;
}

} // namespace detail

inline void write_matrix(const std::filesystem::path& base, const RowMatrix& values, nlohmann::json descriptor)
{
    static_assert(std::endian::native == std::endian::little, "matrix container assumes a little-endian host");
    const auto bin = detail::with_suffix(base, ".bin");
    descriptor["rows"] = values.rows();
    descriptor["cols"] = values.cols();
    descriptor["dtype"] = "float64";
    descriptor["byte_order"] = "little";
    descriptor["data_file"] = bin.filename().string();

    std::ofstream meta(detail::with_suffix(base, ".json"));
    if (!meta)
        throw IoError("cannot write " + base.string() + ".json");
    meta << descriptor.dump(2) << "\n";

    std::ofstream out(bin, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + bin.string());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

inline StoredMatrix read_matrix(const std::filesystem::path& base)
{
    std::ifstream meta(detail::with_suffix(base, ".json"));
    if (!meta)
        throw IoError("cannot open " + base.string() + ".json");
    StoredMatrix out;
    try {
        meta >> out.descriptor;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed matrix descriptor: " + std::string(e.what()));
    }
    const auto& d = out.descriptor;
    if (!d.contains("rows") || !d.contains("cols") || d.value("dtype", "") != "float64")
        throw FormatError("matrix descriptor lacks rows/cols or has unsupported dtype");
    const auto rows = d["rows"].get<Eigen::Index>();
    const auto cols = d["cols"].get<Eigen::Index>();
    const auto bin = base.parent_path() / d.value("data_file", detail::with_suffix(base, ".bin").filename().string());

    std::ifstream in(bin, std::ios::binary | std::ios::ate);
    if (!in)
        throw IoError("cannot open " + bin.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != static_cast<std::size_t>(rows * cols) * sizeof(double))
        throw TruncationError("matrix payload " + bin.string() + " has " + std::to_string(size) +
                              " bytes, descriptor implies " + std::to_string(rows * cols * 8));
    in.seekg(0);
    out.values.resize(rows, cols);
    in.read(reinterpret_cast<char*>(out.values.data()), static_cast<std::streamsize>(size));
    return out;
}

} // namespace hsikme

#endif // HSIKME_MATRIX_IO_HPP
