#ifndef HSIKME_ENVI_HPP
#define HSIKME_ENVI_HPP

/*
 * ENVI raster ingestion and output.
 *
 * A cube is a plain-text header (`foo.hdr`) plus a raw binary sibling
 * (`foo`, `foo.img`, `foo.dat`, `foo.raw`, `foo.bsq`, `foo.bil` or `foo.bip`).
 * Supported data types: 2 (int16), 4 (float32), 5 (float64), 12 (uint16);
 * byte order 0 (little endian) or 1 (big endian); interleave bsq/bil/bip.
 * Everything is converted to double, band-interleaved-by-pixel.
 *
 * Ground truth is read from a CSV grid (one row per image row) or, when the
 * path ends in `.hdr`, from a single-band integer ENVI raster.
 */

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hsikme/error.hpp"
#include "hsikme/image.hpp"

namespace hsikme {

enum class Interleave { bsq, bil, bip };

inline std::string to_string(Interleave il)
{
    switch (il) {
    case Interleave::bsq: return "bsq";
    case Interleave::bil: return "bil";
    case Interleave::bip: return "bip";
    }
    return "bsq";
}

struct EnviHeader {
    std::size_t samples = 0; // width
    std::size_t lines = 0;   // height
    std::size_t bands = 0;
    Interleave interleave = Interleave::bsq;
    int data_type = 4;
    int byte_order = 0;
    std::size_t header_offset = 0;
    std::vector<double> wavelengths;
};

namespace detail {

inline std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::size_t parse_size(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0)
            throw FormatError("ENVI header key '" + key + "' is not a non-negative integer: " + value);
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
        throw FormatError("ENVI header key '" + key + "' is not an integer: " + value);
    }
}

inline std::size_t element_size(int data_type)
{
    switch (data_type) {
    case 2: return 2;
    case 4: return 4;
    case 5: return 8;
    case 12: return 2;
    default:
        throw FormatError("unsupported ENVI data type " + std::to_string(data_type) +
                          " (supported: 2, 4, 5, 12)");
    }
}

inline double decode_value(const unsigned char* p, int data_type, bool swap)
{
    unsigned char buf[8];
    const std::size_t n = element_size(data_type);
    std::memcpy(buf, p, n);
    if (swap)
        std::reverse(buf, buf + n);
    switch (data_type) {
    case 2: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
    case 4: { float v; std::memcpy(&v, buf, 4); return v; }
    case 5: { double v; std::memcpy(&v, buf, 8); return v; }
    case 12: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
    default: return 0.0;
    }
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

inline EnviHeader parse_envi_header(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).rfind("ENVI", 0) != 0)
        throw FormatError("ENVI header must start with the 'ENVI' magic line");

    std::map<std::string, std::string> fields;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (!detail::trim(line).empty() && detail::trim(line).front() != ';')
                throw FormatError("ENVI header line without '=': " + line);
            continue;
        }
        std::string key = detail::lower(detail::trim(line.substr(0, eq)));
        std::string value = detail::trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '{') {
            while (value.find('}') == std::string::npos) {
                std::string more;
                if (!std::getline(in, more))
                    throw FormatError("unterminated '{' in ENVI header key '" + key + "'");
                value += " " + detail::trim(more);
            }
            value = detail::trim(value.substr(1, value.find('}') - 1));
        }
        auto [it, inserted] = fields.emplace(key, value);
        if (!inserted && it->second != value)
            throw FormatError("contradictory values for ENVI header key '" + key + "'");
    }

    auto require = [&](const std::string& key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end())
            throw FormatError("ENVI header is missing required key '" + key + "'");
        return it->second;
    };

    EnviHeader h;
    h.samples = detail::parse_size("samples", require("samples"));
    h.lines = detail::parse_size("lines", require("lines"));
    h.bands = detail::parse_size("bands", require("bands"));
    if (h.samples == 0 || h.lines == 0 || h.bands == 0)
        throw FormatError("ENVI header declares an empty cube");

    const std::string il = detail::lower(require("interleave"));
    if (il == "bsq")
        h.interleave = Interleave::bsq;
    else if (il == "bil")
        h.interleave = Interleave::bil;
    else if (il == "bip")
        h.interleave = Interleave::bip;
    else
        throw FormatError("unknown ENVI interleave '" + il + "'");

    h.data_type = static_cast<int>(detail::parse_size("data type", require("data type")));
    detail::element_size(h.data_type);

    if (auto it = fields.find("byte order"); it != fields.end()) {
        h.byte_order = static_cast<int>(detail::parse_size("byte order", it->second));
        if (h.byte_order > 1)
            throw FormatError("ENVI byte order must be 0 or 1");
    }
    if (auto it = fields.find("header offset"); it != fields.end())
        h.header_offset = detail::parse_size("header offset", it->second);

    if (auto it = fields.find("wavelength"); it != fields.end()) {
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (item.empty())
                continue;
            try {
                h.wavelengths.push_back(std::stod(item));
            } catch (const std::logic_error&) {
                throw FormatError("non-numeric wavelength entry '" + item + "'");
            }
        }
        if (h.wavelengths.size() != h.bands)
            throw FormatError("ENVI header lists " + std::to_string(h.wavelengths.size()) +
                              " wavelengths for " + std::to_string(h.bands) + " bands");
    }
    return h;
}

/// Finds the binary sibling of an ENVI header.
inline std::filesystem::path envi_data_path(const std::filesystem::path& header_path)
{
    namespace fs = std::filesystem;
    fs::path stem = header_path;
    if (detail::lower(stem.extension().string()) == ".hdr")
        stem.replace_extension();
    for (const char* ext : {"", ".img", ".dat", ".raw", ".bsq", ".bil", ".bip"}) {
        fs::path candidate = stem;
        candidate += ext;
        if (candidate != header_path && fs::is_regular_file(candidate))
            return candidate;
    }
    throw IoError("no binary data file found next to " + header_path.string());
}

/// Decodes a raw payload into band-interleaved-by-pixel doubles.
inline std::vector<double> decode_envi_payload(const EnviHeader& h, const std::vector<unsigned char>& bytes)
{
    const std::size_t esize = detail::element_size(h.data_type);
    const std::size_t count = h.samples * h.lines * h.bands;
    const std::size_t expected = h.header_offset + count * esize;
    if (bytes.size() != expected)
        throw TruncationError("ENVI binary holds " + std::to_string(bytes.size()) + " bytes, header implies " +
                              std::to_string(expected));

    const bool host_little = std::endian::native == std::endian::little;
    const bool swap = (h.byte_order == 0) != host_little;
    const unsigned char* base = bytes.data() + h.header_offset;

    std::vector<double> out(count);
    const std::size_t w = h.samples, d = h.bands, ht = h.lines;
    for (std::size_t r = 0; r < ht; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t b = 0; b < d; ++b) {
                std::size_t src = 0;
                switch (h.interleave) {
                case Interleave::bsq: src = (b * ht + r) * w + c; break;
                case Interleave::bil: src = (r * d + b) * w + c; break;
                case Interleave::bip: src = (r * w + c) * d + b; break;
                }
                const double v = detail::decode_value(base + src * esize, h.data_type, swap);
                if (!std::isfinite(v))
                    throw FormatError("ENVI payload contains a non-finite value");
                out[(r * w + c) * d + b] = v;
            }
    return out;
}

inline HyperspectralImage load_envi(const std::filesystem::path& header_path)
{
    std::ifstream in(header_path);
    if (!in)
        throw IoError("cannot open ENVI header " + header_path.string());
    const EnviHeader h = parse_envi_header(in);
    const auto bytes = detail::read_file_bytes(envi_data_path(header_path));
    return {h.lines, h.samples, h.bands, decode_envi_payload(h, bytes), h.wavelengths};
}

/// Writes `header_path` and its `.img` sibling. data_type 5 (float64) makes
/// a write/load round trip bit-exact; 4 rounds to float32.
inline void write_envi(const HyperspectralImage& image, const std::filesystem::path& header_path,
                       Interleave interleave = Interleave::bsq, int data_type = 5)
{
    if (data_type != 4 && data_type != 5)
        throw ParameterError("write_envi supports data types 4 and 5 only");
    std::filesystem::path data_path = header_path;
    data_path.replace_extension(".img");

    const std::size_t ht = image.height(), w = image.width(), d = image.bands();
    {
        std::ofstream hdr(header_path);
        if (!hdr)
            throw IoError("cannot write " + header_path.string());
        hdr << "ENVI\n"
            << "description = {hsikme cube}\n"
            << "samples = " << w << "\n"
            << "lines = " << ht << "\n"
            << "bands = " << d << "\n"
            << "header offset = 0\n"
            << "file type = ENVI Standard\n"
            << "data type = " << data_type << "\n"
            << "interleave = " << to_string(interleave) << "\n"
            << "byte order = " << (std::endian::native == std::endian::little ? 0 : 1) << "\n";
        if (!image.band_centers().empty()) {
            hdr << "wavelength = {";
            std::ostringstream ws;
            ws.precision(17);
            for (std::size_t b = 0; b < d; ++b)
                ws << (b ? ", " : "") << image.band_centers()[b];
            hdr << ws.str() << "}\n";
        }
    }

    std::ofstream out(data_path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + data_path.string());
    auto put = [&](double v) {
        if (data_type == 5) {
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        } else {
            const float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), sizeof f);
        }
    };
    auto at = [&](std::size_t r, std::size_t c, std::size_t b) { return image.spectrum(r, c)[b]; };
    switch (interleave) {
    case Interleave::bsq:
        for (std::size_t b = 0; b < d; ++b)
            for (std::size_t r = 0; r < ht; ++r)
                for (std::size_t c = 0; c < w; ++c)
                    put(at(r, c, b));
        break;
    case Interleave::bil:
        for (std::size_t r = 0; r < ht; ++r)
            for (std::size_t b = 0; b < d; ++b)
                for (std::size_t c = 0; c < w; ++c)
                    put(at(r, c, b));
        break;
    case Interleave::bip:
        for (double v : image.data())
            put(v);
        break;
    }
}

inline GroundTruthMap parse_ground_truth_csv(std::istream& in, std::size_t height, std::size_t width)
{
    std::vector<int> labels;
    labels.reserve(height * width);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            cell = detail::trim(cell);
            long long v = 0;
            try {
                std::size_t used = 0;
                v = std::stoll(cell, &used);
                if (used != cell.size())
                    throw FormatError("non-integer ground truth entry '" + cell + "'");
            } catch (const std::logic_error&) {
                throw FormatError("non-integer ground truth entry '" + cell + "'");
            }
            if (v < 0)
                throw FormatError("negative ground truth label " + std::to_string(v));
            labels.push_back(static_cast<int>(v));
            ++cols;
        }
        if (cols != width)
            throw ShapeError("ground truth row " + std::to_string(rows) + " has " + std::to_string(cols) +
                             " entries, expected " + std::to_string(width));
        ++rows;
    }
    if (rows != height)
        throw ShapeError("ground truth has " + std::to_string(rows) + " rows, expected " + std::to_string(height));
    return {height, width, std::move(labels)};
}

inline GroundTruthMap load_ground_truth(const std::filesystem::path& path, std::size_t height, std::size_t width)
{
    if (detail::lower(path.extension().string()) == ".hdr") {
        const HyperspectralImage raster = load_envi(path);
        if (raster.bands() != 1)
            throw FormatError("ground truth raster must have exactly one band");
        if (raster.height() != height || raster.width() != width)
            throw ShapeError("ground truth raster is " + std::to_string(raster.height()) + "x" +
                             std::to_string(raster.width()) + ", expected " + std::to_string(height) + "x" +
                             std::to_string(width));
        std::vector<int> labels;
        labels.reserve(raster.pixel_count());
        for (double v : raster.data()) {
            if (v < 0)
                throw FormatError("negative ground truth label in raster");
            if (v != std::floor(v))
                throw FormatError("non-integer ground truth label in raster");
            labels.push_back(static_cast<int>(v));
        }
        return {height, width, std::move(labels)};
    }
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open ground truth " + path.string());
    return parse_ground_truth_csv(in, height, width);
}

inline void write_label_csv(std::span<const int> labels, std::size_t height, std::size_t width,
                            const std::filesystem::path& path)
{
    if (labels.size() != height * width)
        throw ShapeError("label count does not match height*width");
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c)
            out << (c ? "," : "") << labels[r * width + c];
        out << "\n";
    }
}

inline void write_ground_truth_csv(const GroundTruthMap& gt, const std::filesystem::path& path)
{
    write_label_csv(gt.labels(), gt.height(), gt.width(), path);
}

/// Reads a label CSV of unknown extent (used by `render`).
inline GroundTruthMap load_label_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t rows = 0, width = 0;
    std::stringstream all;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty())
            continue;
        const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
        if (rows == 0)
            width = cols;
        all << line << "\n";
        ++rows;
    }
    if (rows == 0)
        throw FormatError("empty label file " + path.string());
    return parse_ground_truth_csv(all, rows, width);
}

} // namespace hsikme

#endif // HSIKME_ENVI_HPP
