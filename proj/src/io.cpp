#include "infheat/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace infheat {

namespace fs = std::filesystem;

std::string fnv1a_hex(std::string_view text)
{
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[hash & 0xf];
        hash >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_radial_csv(const fs::path& path, const RadialProfile& p)
{
    auto out = open_out(path);
    out << "r,u\n";
    for (std::size_t i = 0; i < p.size(); ++i)
        out << format_double(p.center(i)) << ',' << format_double(p[i]) << '\n';
}

void write_field_csv(const fs::path& path, const Field& f)
{
    auto out = open_out(path);
    const Grid& g = *f.grid;
    static constexpr const char* names[] = {"x", "y", "z"};
    for (int a = 0; a < g.dim(); ++a)
        out << names[a] << ',';
    out << "u\n";
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.kind(k) == NodeKind::exterior)
            continue;
        g.coordinates(k, x);
        for (double v : x)
            out << format_double(v) << ',';
        out << format_double(f.values[k]) << '\n';
    }
}

void write_binary(const fs::path& path, const BinaryDump& dump)
{
    auto out = open_out(path, std::ios::out | std::ios::binary);
    nlohmann::json header = dump.header;
    header["count"] = dump.data.size();
    header["encoding"] = "f64le";
    out << header.dump() << '\n';
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(dump.data.data()),
                  static_cast<std::streamsize>(dump.data.size() * sizeof(double)));
    } else {
        for (double v : dump.data) {
            auto bits = __builtin_bswap64(std::bit_cast<std::uint64_t>(v));
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

BinaryDump read_binary(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": missing header line");
    BinaryDump dump;
    try {
        dump.header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": bad header: " + e.what());
    }
    if (dump.header.value("encoding", "") != "f64le")
        throw std::runtime_error(path.string() + ": unsupported encoding");
    const auto count = dump.header.at("count").get<std::size_t>();
    dump.data.resize(count);
    in.read(reinterpret_cast<char*>(dump.data.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw std::runtime_error(path.string() + ": truncated data");
    if constexpr (std::endian::native != std::endian::little) {
        for (double& v : dump.data)
            v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
    }
    return dump;
}

BinaryDump radial_dump(const RadialProfile& p)
{
    BinaryDump d;
    d.header = {{"kind", "radial"},
                {"t", p.t()},
                {"r_max", p.r_max()},
                {"dims", {p.size()}},
                {"spacing", {p.dr()}},
                {"outer", p.outer().kind == OuterBoundary::dirichlet ? "dirichlet" : "zero_flux"},
                {"outer_value", p.outer().value}};
    d.data.assign(p.values().begin(), p.values().end());
    return d;
}

RadialProfile radial_from_dump(const BinaryDump& dump)
{
    const auto& h = dump.header;
    if (h.value("kind", "") != "radial")
        throw std::runtime_error("dump is not a radial profile");
    RadialBoundary outer{h.at("outer").get<std::string>() == "dirichlet" ? OuterBoundary::dirichlet
                                                                           : OuterBoundary::zero_flux,
                         h.at("outer_value").get<double>()};
    RadialProfile p(h.at("r_max").get<double>(), dump.data.size(), outer, h.at("t").get<double>());
    std::copy(dump.data.begin(), dump.data.end(), p.values().begin());
    return p;
}

BinaryDump field_dump(const Field& f, const nlohmann::json& extra)
{
    const Grid& g = *f.grid;
    nlohmann::json dims = nlohmann::json::array();
    nlohmann::json spacing = nlohmann::json::array();
    nlohmann::json lower = nlohmann::json::array();
    nlohmann::json upper = nlohmann::json::array();
    for (int a = 0; a < g.dim(); ++a) {
        dims.push_back(g.nodes(a));
        spacing.push_back(g.spacing(a));
        lower.push_back(g.lower(a));
        upper.push_back(g.upper(a));
    }
    BinaryDump d;
    d.header = {{"kind", "grid"}, {"t", f.t}, {"dims", dims}, {"spacing", spacing}, {"lower", lower}, {"upper", upper}};
    for (const auto& [k, v] : extra.items())
        d.header[k] = v;
    d.data = f.values;
    return d;
}

Field field_from_dump(const BinaryDump& dump, std::shared_ptr<const Grid> grid)
{
    const auto& h = dump.header;
    if (h.value("kind", "") != "grid")
        throw std::runtime_error("dump is not a grid field");
    const auto dims = h.at("dims").get<std::vector<std::size_t>>();
    if (static_cast<int>(dims.size()) != grid->dim())
        throw std::runtime_error("dump dimension does not match the grid");
    for (int a = 0; a < grid->dim(); ++a)
        if (dims[static_cast<std::size_t>(a)] != grid->nodes(a))
            throw std::runtime_error("dump node counts do not match the grid");
    if (dump.data.size() != grid->size())
        throw std::runtime_error("dump size does not match the grid");
    return Field{std::move(grid), dump.data, h.at("t").get<double>()};
}

DiagnosticsWriter::DiagnosticsWriter(const fs::path& path) : out_(open_out(path))
{
    out_ << "t,max_abs,min,support,dt\n";
}

void DiagnosticsWriter::row(double t, double max_abs, double min, double support, double dt)
{
    out_ << format_double(t) << ',' << format_double(max_abs) << ',' << format_double(min) << ','
         << format_double(support) << ',' << format_double(dt) << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return nlohmann::json::parse(in);
}

}  // namespace infheat
