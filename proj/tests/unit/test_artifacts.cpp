#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "qwlab/artifacts.hpp"

using namespace qwlab;

namespace {

std::string temp_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() /
             (std::string("qwlab_art_") + tag + "_" +
              std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("csv numbers round-trip and normalize non-finite values") {
  CHECK(csv_number(0.5) == "0.5");
  CHECK(csv_number(0.0) == "0");
  CHECK(csv_number(-3.0) == "-3");
  CHECK(csv_number(std::nan("")) == "nan");
  CHECK(csv_number(HUGE_VAL) == "inf");
  CHECK(csv_number(-HUGE_VAL) == "-inf");
  // 17 significant digits reproduce the double exactly
  double v = 0.1;
  CHECK(std::stod(csv_number(v)) == v);
  v = 1.0 / 3.0;
  CHECK(std::stod(csv_number(v)) == v);
}

TEST_CASE("csv files have LF line endings and stable bytes") {
  std::string dir = temp_dir("csv");
  std::string path = dir + "/t.csv";
  write_csv(path, {"a", "b"}, {{"1", "2"}, {"0.5", "nan"}});
  CHECK(slurp(path) == "a,b\n1,2\n0.5,nan\n");

  CHECK_THROWS_AS(write_csv(path, {"a", "b"}, {{"1"}}), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pgm16 writes big-endian samples scaled to the peak") {
  std::string dir = temp_dir("pgm");
  std::string path = dir + "/img.pgm";
  RVec data(4);
  data << 0.0, 1.0, 2.0, 4.0;
  double scale = write_pgm16(path, data, 2, 2);
  CHECK(scale == doctest::Approx(4.0 / 65535.0));

  std::string bytes = slurp(path);
  const std::string header = "P5\n2 2\n65535\n";
  REQUIRE(bytes.size() == header.size() + 8);
  CHECK(bytes.substr(0, header.size()) == header);
  auto sample = [&](int i) {
    auto hi = static_cast<unsigned char>(bytes[header.size() + 2 * i]);
    auto lo = static_cast<unsigned char>(bytes[header.size() + 2 * i + 1]);
    return hi * 256 + lo;
  };
  CHECK(sample(0) == 0);
  CHECK(sample(1) == 16384);  // round(1/4 * 65535)
  CHECK(sample(2) == 32768);
  CHECK(sample(3) == 65535);

  auto sidecar = nlohmann::json::parse(slurp(path + ".json"));
  CHECK(sidecar.at("width") == 2);
  CHECK(sidecar.at("height") == 2);
  CHECK(sidecar.at("max_value").get<double>() == 4.0);
  CHECK(sidecar.at("counts_per_level").get<double>() ==
        doctest::Approx(scale));

  // a dark frame keeps all-zero samples and a zero scale
  double zscale = write_pgm16(dir + "/z.pgm", RVec::Zero(4), 2, 2);
  CHECK(zscale == 0.0);

  CHECK_THROWS_AS(write_pgm16(dir + "/bad.pgm", data, 3, 2),
                  std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ull);
  CHECK(checksum_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
  CHECK(checksum_hex(0x1ull) == "0000000000000001");
}

TEST_CASE("manifest round-trips and verification flags tampering") {
  std::string dir = temp_dir("man");
  write_csv(dir + "/data.csv", {"x"}, {{"1"}});
  write_csv(dir + "/other.csv", {"y"}, {{"2"}});

  RunManifest m;
  m.command = "demo";
  m.version = "0.0.0";
  m.timestamp = "2023-11-14T22:13:20Z";
  m.seed = 42;
  m.config["seed"] = "42";
  add_manifest_file(m, dir, "other.csv");
  add_manifest_file(m, dir, "data.csv");
  write_manifest(dir, m);

  RunManifest back = load_manifest(dir + "/manifest.json");
  CHECK(back.command == "demo");
  CHECK(back.seed == 42);
  CHECK(back.config.at("seed") == "42");
  REQUIRE(back.files.size() == 2);
  // files come back sorted by name regardless of insertion order
  CHECK(back.files[0].name == "data.csv");
  CHECK(back.files[1].name == "other.csv");
  CHECK(back.files[0].bytes == 4);

  std::ostringstream log;
  CHECK(verify_manifest(dir + "/manifest.json", log));
  CHECK(log.str().find("OK") != std::string::npos);
  CHECK(log.str().find("MISMATCH") == std::string::npos);

  {
    std::ofstream os(dir + "/data.csv", std::ios::binary);
    os << "x\n9\n";
  }
  std::ostringstream log2;
  CHECK(!verify_manifest(dir + "/manifest.json", log2));
  CHECK(log2.str().find("MISMATCH") != std::string::npos);

  std::filesystem::remove(dir + "/other.csv");
  std::ostringstream log3;
  CHECK(!verify_manifest(dir + "/manifest.json", log3));
  CHECK(log3.str().find("MISSING") != std::string::npos);

  std::filesystem::remove_all(dir);
}

TEST_CASE("timestamps honor SOURCE_DATE_EPOCH") {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  CHECK(manifest_timestamp() == "2023-11-14T22:13:20Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
  // without the pin the stamp is current and well-formed
  std::string now = manifest_timestamp();
  CHECK(now.size() == 20);
  CHECK(now.back() == 'Z');
  CHECK(now.substr(0, 2) == "20");
}

TEST_CASE("ensure_dir builds nested paths and tolerates repeats") {
  std::string dir = temp_dir("dirs");
  std::string nested = dir + "/a/b/c";
  ensure_dir(nested);
  CHECK(std::filesystem::is_directory(nested));
  ensure_dir(nested);
  CHECK(std::filesystem::is_directory(nested));
  std::filesystem::remove_all(dir);
}
