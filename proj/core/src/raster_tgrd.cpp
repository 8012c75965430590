#include "quadmap/errors.hpp"
#include "quadmap/raster.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace quadmap {

namespace {

static_assert(std::endian::native == std::endian::little,
              "TGRD I/O assumes a little-endian host");

constexpr char kMagic[4] = {'T', 'G', 'R', 'D'};
constexpr std::size_t kHeaderBytes = 4 + 3 * 4 + 3 * 8 + 4 + 4;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, std::size_t& offset, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw FormatError("TGRD file '" + path.string() + "': truncated at byte offset " +
                          std::to_string(offset));
    }
    offset += sizeof(T);
    return v;
}

Crs crs_from_code(std::uint32_t code, const std::filesystem::path& path) {
    switch (code) {
    case 3857:
        return Crs::WebMercator;
    case 4326:
        return Crs::Wgs84;
    default:
        throw FormatError("TGRD file '" + path.string() + "': unsupported CRS code " +
                          std::to_string(code) + " (expected 3857 or 4326)");
    }
}

} // namespace

void write_tgrd(const QuadRaster& r, const std::filesystem::path& path) {
    if (!r.spec.valid() || r.bands < 1 ||
        r.data.size() != static_cast<std::size_t>(r.bands) * r.plane_size()) {
        throw ArgumentError("raster invariants violated, refusing to write '" + path.string() +
                            "'");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(kMagic, 4);
    put(out, static_cast<std::uint32_t>(r.spec.width));
    put(out, static_cast<std::uint32_t>(r.spec.height));
    put(out, static_cast<std::uint32_t>(r.bands));
    put(out, r.spec.pixel_size);
    put(out, r.spec.origin_x);
    put(out, r.spec.origin_y);
    put(out, static_cast<std::uint32_t>(r.crs));
    put(out, r.nodata);
    out.write(reinterpret_cast<const char*>(r.data.data()),
              static_cast<std::streamsize>(r.data.size() * sizeof(float)));
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

QuadRaster read_tgrd(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::size_t offset = 0;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("TGRD file '" + path.string() +
                          "': bad magic at byte offset 0 (expected 'TGRD')");
    }
    offset = 4;
    QuadRaster r;
    const auto width = take<std::uint32_t>(in, offset, path);
    const auto height = take<std::uint32_t>(in, offset, path);
    const auto bands = take<std::uint32_t>(in, offset, path);
    r.spec.pixel_size = take<double>(in, offset, path);
    r.spec.origin_x = take<double>(in, offset, path);
    r.spec.origin_y = take<double>(in, offset, path);
    const auto crs_code = take<std::uint32_t>(in, offset, path);
    r.nodata = take<float>(in, offset, path);
    if (width == 0 || height == 0 || bands == 0 ||
        static_cast<std::uint64_t>(width) * height * bands > (1ull << 32)) {
        throw FormatError("TGRD file '" + path.string() + "': implausible header at byte offset " +
                          std::to_string(kHeaderBytes));
    }
    r.spec.width = static_cast<int>(width);
    r.spec.height = static_cast<int>(height);
    r.bands = static_cast<int>(bands);
    r.crs = crs_from_code(crs_code, path);
    const std::size_t count = static_cast<std::size_t>(width) * height * bands;
    r.data.resize(count);
    in.read(reinterpret_cast<char*>(r.data.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) {
        const std::size_t got = static_cast<std::size_t>(in.gcount());
        throw FormatError("TGRD file '" + path.string() + "': truncated at byte offset " +
                          std::to_string(offset + got) + " (expected " +
                          std::to_string(kHeaderBytes + count * sizeof(float)) + " bytes)");
    }
    return r;
}

} // namespace quadmap
