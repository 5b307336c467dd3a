#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obflow/config.hpp"
#include "obflow/grid.hpp"
#include "obflow/particles.hpp"

namespace obflow {

// key = value text format, '#' starts a comment, unknown keys rejected.
// Omitted keys fall back to the reference-experiment defaults; s_b, eps_cutoff
// and snapshot_times follow s (s/10, s) and T ({0, T/3, 2T/3, T}) unless given
// explicitly. Errors carry "<source>:<line>:" prefixes.
SimConfig parse_config(const std::string& path);
SimConfig parse_config_text(const std::string& text, const std::string& source_name);

// Full-precision key = value listing; parse_config_text() on the result
// reproduces the struct exactly.
std::string serialize_config(const SimConfig& c);

std::uint64_t fnv1a64(const void* data, std::size_t n);

struct WrittenFile {
    std::string path;       // full path of the emitted file
    std::string name;       // bare file name
    std::uint64_t checksum; // fnv1a64 of the emitted bytes
};

// fields_t{t:08.3}.csv with header x1,x2,u1,u2,theta,rho,omega,phi,Theta1,Theta2,
// nodes in row-major order (x2 level outer, x1 inner), %.17g values.
std::string snapshot_filename(double t);
WrittenFile write_snapshot(const FieldGrid& g, double t, const std::string& dir);

struct SnapshotTable {
    std::vector<double> x1, x2, u1, u2, theta, rho, omega, phi, Theta1, Theta2;
    std::size_t rows() const { return x1.size(); }
};
SnapshotTable read_snapshot(const std::string& path);

// Optional particle dump: site_i1, site_i2, kind, x1, x2, alive, phi_integral, det_W.
WrittenFile write_particles(const Ensembles& e, const std::string& path);

struct ManifestSnapshot {
    double t = 0.0;
    std::string file;          // relative to the manifest directory
    std::uint64_t checksum = 0;
};

struct RunManifest {
    std::string version;
    std::uint64_t seed = 0;
    std::string config_echo;   // serialize_config() text
    std::string start_time, end_time;  // ISO-8601 UTC
    int threads = 1;
    double wallclock_seconds = 0.0;
    bool complete = false;
    std::uint64_t interpolation_clamps = 0;
    std::uint64_t cfl_warnings = 0;
    std::vector<ManifestSnapshot> snapshots;
};

std::string iso8601_utc_now();
void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Six gnuplot scripts per run: velocity quiver, theta/rho/omega/phi heatmaps,
// and the near-wall quiver restricted to x2 in [0, s]. Scripts reference the
// snapshot CSVs by relative name; a manifest entry without its file is an error.
std::vector<std::string> emit_plot_scripts(const RunManifest& m, const std::string& dir);

}  // namespace obflow
