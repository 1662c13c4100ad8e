#include "qwlab/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace qwlab {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os << ',';
    os << header[i];
  }
  os << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("csv row width mismatch in '" + path + "'");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << row[i];
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

double write_pgm16(const std::string& path, const RVec& data, int width,
                   int height) {
  if (width <= 0 || height <= 0 ||
      static_cast<long long>(width) * height != data.size()) {
    throw std::invalid_argument("pgm dimensions do not match data size");
  }
  if (!all_finite(data) || data.minCoeff() < 0.0) {
    throw std::invalid_argument("pgm data must be finite and non-negative");
  }
  double max = data.maxCoeff();
  double scale = max > 0 ? max / 65535.0 : 0.0;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> buf(static_cast<std::size_t>(data.size()) * 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    unsigned level =
        max > 0 ? static_cast<unsigned>(std::lround(data[i] / max * 65535.0))
                : 0u;
    if (level > 65535u) level = 65535u;
    buf[2 * i] = static_cast<unsigned char>(level >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(level & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("write failed for '" + path + "'");

  nlohmann::ordered_json side;
  side["width"] = width;
  side["height"] = height;
  side["max_value"] = max;
  side["counts_per_level"] = scale;
  std::ofstream js(path + ".json", std::ios::binary);
  if (!js) throw std::runtime_error("cannot write '" + path + ".json'");
  js << side.dump(2) << '\n';
  return scale;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string checksum_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_timestamp() {
  std::time_t t;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_manifest_file(RunManifest& m, const std::string& dir,
                       const std::string& name) {
  std::string path = dir + "/" + name;
  ManifestFile f;
  f.name = name;
  f.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(path));
  f.checksum = checksum_hex(fnv1a64_file(path));
  m.files.push_back(std::move(f));
}

void write_manifest(const std::string& dir, const RunManifest& m) {
  std::vector<ManifestFile> files = m.files;
  std::sort(files.begin(), files.end(),
            [](const ManifestFile& a, const ManifestFile& b) {
              return a.name < b.name;
            });

  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["timestamp"] = m.timestamp;
  j["seed"] = m.seed;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) j["config"][k] = v;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"name", f.name},
                          {"bytes", f.bytes},
                          {"fnv1a64", f.checksum}});
  }
  std::string path = dir + "/manifest.json";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path + "'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("manifest parse error in '" + path +
                             "': " + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.timestamp = j.at("timestamp").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("config")) {
    for (auto it = j["config"].begin(); it != j["config"].end(); ++it) {
      m.config[it.key()] = it.value().get<std::string>();
    }
  }
  for (const auto& jf : j.at("files")) {
    ManifestFile f;
    f.name = jf.at("name").get<std::string>();
    f.bytes = jf.at("bytes").get<std::uint64_t>();
    f.checksum = jf.at("fnv1a64").get<std::string>();
    m.files.push_back(std::move(f));
  }
  return m;
}

bool verify_manifest(const std::string& manifest_path, std::ostream& log) {
  RunManifest m = load_manifest(manifest_path);
  std::string dir =
      std::filesystem::path(manifest_path).parent_path().string();
  if (dir.empty()) dir = ".";
  bool ok = true;
  for (const auto& f : m.files) {
    std::string path = dir + "/" + f.name;
    std::error_code ec;
    auto bytes = std::filesystem::file_size(path, ec);
    if (ec) {
      log << "MISSING   " << f.name << "\n";
      ok = false;
      continue;
    }
    if (bytes != f.bytes ||
        checksum_hex(fnv1a64_file(path)) != f.checksum) {
      log << "MISMATCH  " << f.name << "\n";
      ok = false;
    } else {
      log << "OK        " << f.name << "\n";
    }
  }
  return ok;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory '" + path +
                             "': " + ec.message());
  }
}

}  // namespace qwlab
