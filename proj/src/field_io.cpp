#include "pflow/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pflow {

static_assert(std::endian::native == std::endian::little,
              "PFLOW1 writer assumes a little-endian host");

namespace {

constexpr char kMagic[6] = {'P', 'F', 'L', 'O', 'W', '1'};

void write_header(std::ofstream& out, const Grid& g, uint32_t ncomp) {
    out.write(kMagic, 6);
    const uint32_t nx = static_cast<uint32_t>(g.nx), ny = static_cast<uint32_t>(g.ny);
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&ny), 4);
    out.write(reinterpret_cast<const char*>(&ncomp), 4);
    const double ox = g.origin.x(), oy = g.origin.y(), h = g.h;
    out.write(reinterpret_cast<const char*>(&ox), 8);
    out.write(reinterpret_cast<const char*>(&oy), 8);
    out.write(reinterpret_cast<const char*>(&h), 8);
}

void write_plane(std::ofstream& out, const ArrayXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

} // namespace

void write_snapshot(const std::string& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
    write_header(out, f.grid, 1);
    write_plane(out, f.v);
    if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

void write_snapshot(const std::string& path, const VectorField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
    write_header(out, f.grid, 2);
    write_plane(out, f.x);
    write_plane(out, f.y);
    if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kMagic, 6) != 0)
        throw std::runtime_error("read_snapshot: bad magic in " + path);
    uint32_t nx, ny, ncomp;
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&ny), 4);
    in.read(reinterpret_cast<char*>(&ncomp), 4);
    double ox, oy, h;
    in.read(reinterpret_cast<char*>(&ox), 8);
    in.read(reinterpret_cast<char*>(&oy), 8);
    in.read(reinterpret_cast<char*>(&h), 8);
    if (!in) throw std::runtime_error("read_snapshot: truncated header in " + path);

    Snapshot s;
    s.grid = Grid(Vector2d(ox, oy), h, static_cast<int>(nx), static_cast<int>(ny),
                  Boundary::open);
    s.ncomp = static_cast<int>(ncomp);
    for (uint32_t c = 0; c < ncomp; ++c) {
        ArrayXd plane(static_cast<Eigen::Index>(nx) * ny);
        in.read(reinterpret_cast<char*>(plane.data()),
                static_cast<std::streamsize>(plane.size() * sizeof(double)));
        if (!in) throw std::runtime_error("read_snapshot: truncated data in " + path);
        s.components.push_back(std::move(plane));
    }
    return s;
}

} // namespace pflow
