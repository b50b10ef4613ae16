#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infheat/grid.hpp"
#include "infheat/radial.hpp"

namespace infheat {

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// `r,u` rows at cell centres.
void write_radial_csv(const std::filesystem::path& path, const RadialProfile& p);
/// `x[,y[,z]],u` rows for every active node.
void write_field_csv(const std::filesystem::path& path, const Field& f);

/// A one-line JSON header followed by raw little-endian doubles.
struct BinaryDump {
    nlohmann::json header;
    std::vector<double> data;
};

void write_binary(const std::filesystem::path& path, const BinaryDump& dump);
BinaryDump read_binary(const std::filesystem::path& path);

BinaryDump radial_dump(const RadialProfile& p);
RadialProfile radial_from_dump(const BinaryDump& dump);

/// Header carries dims, lower/upper corners, spacing and time; `extra` is merged in.
BinaryDump field_dump(const Field& f, const nlohmann::json& extra = nlohmann::json::object());
/// Rebuilds the field on `grid`; throws if the header geometry disagrees.
Field field_from_dump(const BinaryDump& dump, std::shared_ptr<const Grid> grid);

/// CSV with header `t,max_abs,min,support,dt`.
class DiagnosticsWriter {
public:
    explicit DiagnosticsWriter(const std::filesystem::path& path);
    void row(double t, double max_abs, double min, double support, double dt);

private:
    std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

}  // namespace infheat
