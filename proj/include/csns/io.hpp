#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csns/solver.hpp"

namespace csns {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Shortest round-trip decimal for doubles, so replayed artifacts compare
// bit-exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 1469598103934665603ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash_file: cannot open " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

inline std::string hash_string(const std::string& s) {
    const std::uint64_t h = fnv1a64(s.data(), s.size());
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

// Field snapshot format (shared by every module):
//   magic "CSNS" | u32 version | f64 n | f64 L | u32 ncomp |
//   per component, n^3 interleaved (re,im) f64 pairs in row-major k order.
// All little-endian IEEE-754 binary64.
inline constexpr std::uint32_t kSnapshotVersion = 1;

inline void write_field_snapshot(const fs::path& path, const SpectralField& u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field_snapshot: cannot open " + path.string());
    out.write("CSNS", 4);
    const std::uint32_t ver = kSnapshotVersion;
    out.write(reinterpret_cast<const char*>(&ver), 4);
    const double nd = static_cast<double>(u.grid().n);
    const double L = u.grid().period;
    out.write(reinterpret_cast<const char*>(&nd), 8);
    out.write(reinterpret_cast<const char*>(&L), 8);
    const std::uint32_t nc = static_cast<std::uint32_t>(u.ncomp());
    out.write(reinterpret_cast<const char*>(&nc), 4);
    for (int c = 0; c < u.ncomp(); ++c)
        for (const Complex& v : u.comp(c)) {
            const double re = v.real(), im = v.imag();
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
    if (!out) throw std::runtime_error("write_field_snapshot: write failed");
}

inline SpectralField read_field_snapshot(const fs::path& path,
                                         double dealias_fraction = 2.0 / 3.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field_snapshot: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "CSNS", 4) != 0)
        throw std::runtime_error("read_field_snapshot: bad magic in " + path.string());
    std::uint32_t ver = 0, nc = 0;
    double nd = 0, L = 0;
    in.read(reinterpret_cast<char*>(&ver), 4);
    if (ver != kSnapshotVersion)
        throw std::runtime_error("read_field_snapshot: unsupported version");
    in.read(reinterpret_cast<char*>(&nd), 8);
    in.read(reinterpret_cast<char*>(&L), 8);
    in.read(reinterpret_cast<char*>(&nc), 4);
    const PeriodicGrid g = make_grid(static_cast<int>(nd), L, dealias_fraction);
    SpectralField u(g, static_cast<int>(nc));
    for (int c = 0; c < u.ncomp(); ++c)
        for (Complex& v : u.comp(c)) {
            double re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            v = Complex(re, im);
        }
    if (!in) throw std::runtime_error("read_field_snapshot: truncated file");
    return u;
}

inline void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_text_file: cannot open " + path.string());
    out << content;
}

inline void write_json(const fs::path& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

// Diagnostics CSV: one row per step.
inline void write_diagnostics_csv(const fs::path& path,
                                  const std::vector<StepDiagnostics>& rows) {
    std::string s = "t,l3,linf,besov_sp,residual,iterations\n";
    for (const auto& d : rows) {
        s += format_double(d.t) + "," + format_double(d.l3) + "," +
             format_double(d.linf) + "," + format_double(d.besov_sp) + "," +
             format_double(d.residual) + "," + std::to_string(d.iterations) + "\n";
    }
    write_text_file(path, s);
}

inline void write_besov_report(const fs::path& csv_path, const fs::path& json_path,
                               const SpectralField& u, const BesovSpec& spec) {
    const auto rows = besov_breakdown(u, spec);
    std::string s = "j,weight,block_lp,contribution\n";
    for (const auto& r : rows)
        s += std::to_string(r.j) + "," + format_double(r.weight) + "," +
             format_double(r.block_lp) + "," + format_double(r.contribution) + "\n";
    write_text_file(csv_path, s);
    Json j;
    j["norm"] = besov_norm(u, spec);
    j["spec"] = {{"s", spec.s}, {"p", spec.p}, {"q", spec.q}};
    j["window"] = {{"j_min", spec.window.j_min}, {"j_max", spec.window.j_max}};
    write_json(json_path, j);
}

// Trajectory persistence: a directory of snapshots plus a manifest with the
// sample times and solver config.
inline void write_trajectory(const fs::path& dir, const Trajectory& tr,
                             const Json& config, const Json& norms = Json::object()) {
    fs::create_directories(dir);
    Json manifest;
    manifest["times"] = Json::array();
    manifest["snapshots"] = Json::array();
    for (std::size_t i = 0; i < tr.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "snap_%06zu.csns", i);
        write_field_snapshot(dir / name, tr.field(i));
        manifest["times"].push_back(tr.times()[i]);
        manifest["snapshots"].push_back(name);
    }
    manifest["config"] = config;
    manifest["norms"] = norms;
    write_json(dir / "manifest.json", manifest);
}

inline Trajectory read_trajectory(const fs::path& dir,
                                  double dealias_fraction = 2.0 / 3.0) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("read_trajectory: no manifest in " + dir.string());
    Json manifest = Json::parse(in);
    std::vector<double> times;
    std::vector<SpectralField> fields;
    for (std::size_t i = 0; i < manifest["times"].size(); ++i) {
        times.push_back(manifest["times"][i].get<double>());
        fields.push_back(read_field_snapshot(
            dir / manifest["snapshots"][i].get<std::string>(), dealias_fraction));
    }
    return Trajectory(std::move(times), std::move(fields));
}

}  // namespace csns
