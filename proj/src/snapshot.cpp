#include "ahm/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace ahm {

static_assert(std::endian::native == std::endian::little, "AHMF1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'H', 'M', 'F', '0', '0', '0', '1'};

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ConfigError("truncated AHMF1 file");
    return v;
}

}  // namespace

const ScalarField2& Snapshot::component(const std::string& name) const {
    for (const auto& c : components)
        if (c.name == name) return c.values;
    throw ConfigError("snapshot has no component '" + name + "'");
}

void write_snapshot(const std::string& path, const Snapshot& s) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.grid.n()));
    put<double>(out, s.grid.half_width());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.components.size()));
    for (const auto& c : s.components) {
        require_same_grid(c.values.grid(), s.grid, "write_snapshot");
        put<std::uint32_t>(out, static_cast<std::uint32_t>(c.name.size()));
        out.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
    }
    for (const auto& c : s.components)
        out.write(reinterpret_cast<const char*>(c.values.data()),
                  static_cast<std::streamsize>(c.values.size() * sizeof(double)));
    if (!out) throw ConfigError("failed writing " + path);
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw ConfigError(path + " is not an AHMF1 file");
    const auto n = get<std::uint32_t>(in);
    const auto hw = get<double>(in);
    const auto count = get<std::uint32_t>(in);
    Grid2 grid(hw, static_cast<int>(n));
    Snapshot s{grid, {}};
    for (std::uint32_t c = 0; c < count; ++c) {
        const auto len = get<std::uint32_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw ConfigError("truncated AHMF1 header");
        s.components.push_back({std::move(name), ScalarField2(grid)});
    }
    for (auto& c : s.components) {
        in.read(reinterpret_cast<char*>(c.values.data()),
                static_cast<std::streamsize>(c.values.size() * sizeof(double)));
        if (!in) throw ConfigError("truncated AHMF1 data");
    }
    return s;
}

void write_snapshot_csv(const std::string& path, const Snapshot& s) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << "x,y";
    for (const auto& c : s.components) out << ',' << c.name;
    out << '\n' << std::setprecision(17);
    for (int j = 0; j < s.grid.n(); ++j)
        for (int i = 0; i < s.grid.n(); ++i) {
            out << s.grid.x(i) << ',' << s.grid.y(j);
            for (const auto& c : s.components) out << ',' << c.values(i, j);
            out << '\n';
        }
}

}  // namespace ahm
