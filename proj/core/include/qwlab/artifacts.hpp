#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "qwlab/numcore.hpp"

namespace qwlab {

/*
 * Output artifacts share a few conventions so that runs are comparable and
 * byte-reproducible under fixed seeds:
 *   - CSV: comma separated, '.' decimal point, one header line, LF endings,
 *     doubles printed with %.17g so values round-trip exactly
 *   - images: binary PGM (P5), 16 bit, big-endian samples as the format
 *     requires, plus a JSON sidecar holding the physical scale
 *   - every run directory gets a manifest.json listing the produced files
 *     with sizes and FNV-1a checksums
 */

// %.17g with NaN/inf normalized to "nan", "inf", "-inf"
std::string csv_number(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// scales data linearly so the brightest pixel maps to 65535; returns the
// physical value of one grey level (0 when the image is empty of light).
// A sidecar <path>.json records the scale and dimensions.
double write_pgm16(const std::string& path, const RVec& data, int width,
                   int height);

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::string& path);
std::string checksum_hex(std::uint64_t h);

struct ManifestFile {
  std::string name;
  std::uint64_t bytes = 0;
  std::string checksum;  // fnv1a64, hex
};

struct RunManifest {
  std::string command;
  std::string version;
  std::string timestamp;  // ISO-8601 UTC
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::vector<ManifestFile> files;
};

// honors SOURCE_DATE_EPOCH so archived runs can be reproduced byte for byte
std::string manifest_timestamp();

void add_manifest_file(RunManifest& m, const std::string& dir,
                       const std::string& name);

// writes <dir>/manifest.json with files sorted by name
void write_manifest(const std::string& dir, const RunManifest& m);

RunManifest load_manifest(const std::string& path);

// recomputes size and checksum of every listed file; logs one line per file
bool verify_manifest(const std::string& manifest_path, std::ostream& log);

void ensure_dir(const std::string& path);

}  // namespace qwlab
