#include <doctest.h>

#include "additivity/errors.hpp"
#include "additivity/manifest.hpp"
#include "test_helpers.hpp"

using namespace additivity;
using test_helpers::TempDir;
using test_helpers::write_file;

TEST_CASE("manifest round trip preserves every field") {
  TempDir dir;
  RunManifest m;
  m.command = "fit";
  m.models = {"mC3"};
  m.dataset_path = "stories.csv";
  m.dataset_hash = "0123456789abcdef";
  m.config.chains = 3;
  m.config.seed = 424242;
  m.config.target_accept = 0.85;
  m.config.parallel_chains = false;
  m.engine_version = "0.1.0";
  m.created_utc = "2026-01-01T00:00:00Z";
  m.extra = {{"model.0.name", "mC3"}, {"param", "bVC"}};

  auto path = dir.file("manifest.json");
  write_manifest(m, path);
  RunManifest back = load_manifest(path);
  CHECK(back.command == m.command);
  CHECK(back.models == m.models);
  CHECK(back.dataset_path == m.dataset_path);
  CHECK(back.dataset_hash == m.dataset_hash);
  CHECK(back.config.chains == 3);
  CHECK(back.config.seed == 424242);
  CHECK(back.config.target_accept == 0.85);
  CHECK(back.config.parallel_chains == false);
  CHECK(back.engine_version == m.engine_version);
  CHECK(back.created_utc == m.created_utc);
  CHECK(back.extra == m.extra);
}

TEST_CASE("manifest loading reports structural problems") {
  TempDir dir;
  CHECK_THROWS_AS(load_manifest(dir.file("absent.json")), IoError);
  CHECK_THROWS_AS(load_manifest(write_file(dir, "bad.json", "not json")),
                  ValidationError);
  CHECK_THROWS_AS(
      load_manifest(write_file(dir, "partial.json", R"({"command":"fit"})")),
      ValidationError);
}

TEST_CASE("file hashing is content-sensitive and stable") {
  TempDir dir;
  auto a = write_file(dir, "a.txt", "hello\n");
  auto b = write_file(dir, "b.txt", "hello\n");
  auto c = write_file(dir, "c.txt", "hellp\n");
  CHECK(file_hash_hex(a) == file_hash_hex(b));
  CHECK(file_hash_hex(a) != file_hash_hex(c));
  CHECK(file_hash_hex(a).size() == 16);
  CHECK_THROWS_AS(file_hash_hex(dir.file("missing.bin")), IoError);
}

TEST_CASE("timestamps are ISO-8601 UTC") {
  std::string ts = utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
}
