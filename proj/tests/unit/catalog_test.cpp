#include <doctest.h>

#include "epilogue/catalog/catalog.hpp"
#include "epilogue/codec/digest.hpp"
#include "support/generators.hpp"
#include "support/http_fixture.hpp"
#include "support/store_helpers.hpp"

using namespace epilogue;
using namespace epilogue::catalog;
namespace t = epilogue::testing;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

Manifest base_manifest(const std::string& name, const std::string& version) {
  Manifest m;
  m.name = name;
  m.version = version;
  m.description = "toy pick and place demonstrations";
  m.citation = "@misc{toy, title={Toy}}";
  m.license = "CC-BY-4.0";
  m.homepage = "https://example.org/toy";
  return m;
}

std::vector<EpisodeRecord> numbered_episodes(t::Rng& rng, std::size_t n, std::int64_t first_id) {
  std::vector<EpisodeRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto e = t::flat_episode(rng, 3, 2, t::uniform(rng, 1, 6), t::coin(rng));
    e.metadata = Nested{{"id", Nested(Tensor::scalar<std::int64_t>(first_id + static_cast<std::int64_t>(i)))}};
    out.push_back(std::move(e));
  }
  return out;
}

DatasetSchema numbered_schema() {
  auto schema = t::flat_schema(3, 2);
  schema.episode_metadata = FeatureSpec{{"id", scalar_spec(DType::i64)}};
  return schema;
}

std::vector<std::int64_t> ids(std::vector<EpisodeRecord> eps) {
  std::vector<std::int64_t> out;
  for (const auto& e : eps) out.push_back(e.metadata.find("id")->leaf().values<std::int64_t>()[0]);
  return out;
}

// Store of one dataset "toy" with a 12-episode train split over two files
// and a 3-episode test split.
struct Fixture {
  t::TempDir dir;
  Catalog catalog{dir / "store", dir / "cache"};
  fs::path train_a = dir / "train-a.rlds";
  fs::path train_b = dir / "train-b.rlds";
  fs::path test = dir / "test.rlds";
  std::vector<EpisodeRecord> train_episodes;

  Fixture() {
    t::Rng rng(5);
    auto a = numbered_episodes(rng, 7, 0);
    auto b = numbered_episodes(rng, 5, 7);
    t::write_episodes(train_a, numbered_schema(), a);
    t::write_episodes(train_b, numbered_schema(), b);
    t::write_episodes(test, numbered_schema(), numbered_episodes(rng, 3, 100));
    train_episodes = a;
    train_episodes.insert(train_episodes.end(), b.begin(), b.end());
  }
  Manifest manifest(const std::string& version = "1.0.0") {
    return describe_files(base_manifest("toy", version), {{"train", {train_a, train_b}}, {"test", {test}}});
  }
};

}  // namespace

TEST_CASE("split expressions") {
  CHECK(parse_split_expr("train") == SplitExpr{"train", 0, std::nullopt});
  CHECK(parse_split_expr("train[:10]") == SplitExpr{"train", 0, 10});
  CHECK(parse_split_expr("train[3:7]") == SplitExpr{"train", 3, 7});
  CHECK(parse_split_expr("train[4:]") == SplitExpr{"train", 4, std::nullopt});
  CHECK(parse_split_expr("train[4:4]") == SplitExpr{"train", 4, 4});
  for (const char* bad : {"train[5:3]", "train[", "train[:]", "train[a:b]", "", "[1:2]", "train[1:2]x",
                          "train[-1:2]", "train[:10%]", "train[99999999999999999999:]"}) {
    INFO(bad);
    CHECK(code_of([&] { parse_split_expr(bad); }) == ErrorCode::bad_split_expr);
  }
  for (const char* s : {"train", "train[:10]", "train[3:7]", "train[4:]"}) {
    CHECK(to_string(parse_split_expr(s)) == s);
  }
}

TEST_CASE("semver parsing and ordering") {
  CHECK(parse_semver("1.2.3"));
  CHECK(parse_semver("1.2.3-rc.1")->prerelease == "rc.1");
  CHECK_FALSE(parse_semver("1.2"));
  CHECK_FALSE(parse_semver("01.2.3"));
  CHECK(semver_less(*parse_semver("1.2.3"), *parse_semver("1.10.0")));
  CHECK(semver_less(*parse_semver("2.0.0-rc"), *parse_semver("2.0.0")));
  CHECK_FALSE(semver_less(*parse_semver("2.0.0"), *parse_semver("2.0.0")));
}

TEST_CASE("manifest document round-trips with exact field names") {
  Fixture fx;
  auto m = fx.manifest();
  auto doc = manifest_to_json(m);
  for (const char* key : {"name", "version", "description", "citation", "license", "homepage", "splits",
                          "schema_digest"}) {
    CHECK(doc.contains(key));
  }
  CHECK(doc["splits"]["train"][0].contains("url"));
  CHECK(doc["splits"]["train"][0].contains("sha256"));
  CHECK(doc["splits"]["train"][0]["episode_count"] == 7);
  CHECK(manifest_from_json(doc) == m);
  CHECK(manifest_from_json(nlohmann::json::parse(serialize_manifest(m))) == m);
  CHECK(m.schema_digest == codec::sha256_hex(canonical_schema_document(numbered_schema())));

  auto bad = m;
  bad.version = "one";
  CHECK(code_of([&] { validate_manifest(bad); }) == ErrorCode::invalid_argument);
  bad = m;
  bad.splits["train"][0].sha256 = "";
  CHECK(code_of([&] { validate_manifest(bad); }) == ErrorCode::invalid_argument);
  bad = m;
  bad.name = "a/b";
  CHECK(code_of([&] { validate_manifest(bad); }) == ErrorCode::invalid_argument);
}

TEST_CASE("register, list and duplicate detection") {
  Fixture fx;
  fx.catalog.register_dataset(fx.manifest());
  CHECK(fx.catalog.list() == std::vector<std::string>{"toy@1.0.0"});
  CHECK(fs::exists(fx.dir / "store" / "toy" / "1.0.0" / "manifest.json"));
  CHECK(fs::exists(fx.dir / "store" / ".lock"));
  CHECK(code_of([&] { fx.catalog.register_dataset(fx.manifest()); }) == ErrorCode::duplicate_version);
  fx.catalog.register_dataset(fx.manifest("1.10.0"));
  fx.catalog.register_dataset(fx.manifest("1.2.0"));
  CHECK(fx.catalog.list() == std::vector<std::string>{"toy@1.0.0", "toy@1.2.0", "toy@1.10.0"});
  CHECK(fx.catalog.manifest("toy").version == "1.10.0");
  CHECK(fx.catalog.manifest("toy@1.2.0").version == "1.2.0");
  CHECK(code_of([&] { fx.catalog.manifest("toy@9.9.9"); }) == ErrorCode::unknown_dataset);
  CHECK(code_of([&] { fx.catalog.manifest("nope"); }) == ErrorCode::unknown_dataset);
}

TEST_CASE("register rejects tampered files and foreign schemas") {
  Fixture fx;
  auto m = fx.manifest();
  auto bytes = t::read_bytes(fx.train_b);
  bytes[bytes.size() / 2] ^= 0x01;
  t::write_bytes(fx.train_b, bytes);
  auto message = error_text([&] { fx.catalog.register_dataset(m); });
  CHECK(message.find("CHECKSUM_MISMATCH") != std::string::npos);
  CHECK(message.find(fx.train_b.filename().string()) != std::string::npos);
  CHECK(fx.catalog.list().empty());

  Fixture other;
  auto wrong = other.manifest();
  wrong.schema_digest = codec::sha256_hex(std::string_view("not the schema"));
  CHECK(code_of([&] { other.catalog.register_dataset(wrong); }) == ErrorCode::schema_digest_mismatch);

  t::Rng rng(6);
  const auto odd = other.dir / "odd.rlds";
  t::write_episodes(odd, t::flat_schema(4, 2), {t::flat_episode(rng, 4, 2, 3, false)});
  CHECK(code_of([&] {
          describe_files(base_manifest("mixed", "1.0.0"), {{"train", {other.train_a, odd}}});
        }) == ErrorCode::schema_digest_mismatch);
}

TEST_CASE("load splits and ranges") {
  Fixture fx;
  fx.catalog.register_dataset(fx.manifest());
  auto all = fx.catalog.load("toy", "train");
  CHECK(all.episode_count == 12);
  auto full = std::move(all.episodes).collect();
  CHECK(full == fx.train_episodes);
  CHECK(all.schema == numbered_schema());

  CHECK(ids(fx.catalog.load("toy", "train[:10]").episodes.collect()) ==
        std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(ids(fx.catalog.load("toy@1.0.0", "train[6:8]").episodes.collect()) == std::vector<std::int64_t>{6, 7});
  CHECK(ids(fx.catalog.load("toy", "train[10:]").episodes.collect()) == std::vector<std::int64_t>{10, 11});
  CHECK(fx.catalog.load("toy", "train[:100]").episode_count == 12);
  CHECK(fx.catalog.load("toy", "train[50:60]").episodes.collect().empty());
  CHECK(fx.catalog.load("toy", "test").episode_count == 3);

  CHECK(code_of([&] { fx.catalog.load("toy", "train[5:3]"); }) == ErrorCode::bad_split_expr);
  CHECK(code_of([&] { fx.catalog.load("toy", "validation"); }) == ErrorCode::unknown_split);
  CHECK(code_of([&] { fx.catalog.load("other", "train"); }) == ErrorCode::unknown_dataset);
}

TEST_CASE("every range equals the slice of the full split") {
  Fixture fx;
  fx.catalog.register_dataset(fx.manifest());
  t::Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = t::uniform(rng, 0, 14);
    const auto b = t::uniform(rng, a, 15);
    auto got = fx.catalog.load("toy", "train[" + std::to_string(a) + ":" + std::to_string(b) + "]").episodes.collect();
    const auto lo = std::min<std::size_t>(a, 12);
    const auto hi = std::min<std::size_t>(b, 12);
    std::vector<EpisodeRecord> want(fx.train_episodes.begin() + lo, fx.train_episodes.begin() + hi);
    REQUIRE(got == want);
  }
}

TEST_CASE("load detects files changed after registration") {
  Fixture fx;
  fx.catalog.register_dataset(fx.manifest());
  auto bytes = t::read_bytes(fx.train_a);
  bytes[40] ^= 0x80;
  t::write_bytes(fx.train_a, bytes);
  CHECK(code_of([&] { fx.catalog.load("toy", "train[:1]"); }) == ErrorCode::checksum_mismatch);
  CHECK(fx.catalog.load("toy", "test").episode_count == 3);
}

TEST_CASE("manifest bytes depend only on the register calls") {
  Fixture fx;
  t::TempDir other;
  Catalog second(other / "store", other / "cache");
  for (const char* v : {"1.0.0", "0.3.1"}) {
    fx.catalog.register_dataset(fx.manifest(v));
    second.register_dataset(fx.manifest(v));
  }
  for (const char* v : {"1.0.0", "0.3.1"}) {
    CHECK(t::read_bytes(fx.dir / "store" / "toy" / v / "manifest.json") ==
          t::read_bytes(other / "store" / "toy" / v / "manifest.json"));
  }
}

TEST_CASE("fetch caches by checksum and verifies downloads") {
  t::TempDir dir;
  t::FileServer server;
  const std::string body(100000, 'x');
  server.serve("/data.rlds", body);
  const FileEntry entry{server.url("/data.rlds"), codec::sha256_hex(body), 0};

  auto first = fetch(entry, dir / "cache");
  CHECK_FALSE(first.cache_hit);
  CHECK(first.attempts == 1);
  CHECK(first.path == dir / "cache" / "sha256" / entry.sha256);
  CHECK(codec::sha256_file(first.path) == entry.sha256);
  auto second = fetch(entry, dir / "cache");
  CHECK(second.cache_hit);
  CHECK(second.path == first.path);
  CHECK(server.hits("/data.rlds") == 1);

  server.serve("/corrupt.rlds", body + "!");
  const FileEntry corrupt{server.url("/corrupt.rlds"), codec::sha256_hex(std::string(5, 'y')), 0};
  CHECK(code_of([&] { fetch(corrupt, dir / "cache"); }) == ErrorCode::checksum_mismatch);
  CHECK_FALSE(fs::exists(dir / "cache" / "sha256" / corrupt.sha256));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "cache" / "sha256")) ++files;
  CHECK(files == 1);

  // A damaged cache entry is replaced rather than trusted.
  t::write_bytes(first.path, {1, 2, 3});
  auto refetched = fetch(entry, dir / "cache");
  CHECK_FALSE(refetched.cache_hit);
  CHECK(server.hits("/data.rlds") == 2);
}

TEST_CASE("fetch retry policy") {
  t::TempDir dir;
  std::vector<std::chrono::milliseconds> sleeps;
  FetchOptions options;
  options.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  options.timeout = std::chrono::seconds(2);
  const std::string sha = codec::sha256_hex(std::string_view("x"));

  const FileEntry unreachable{"http://127.0.0.1:" + std::to_string(t::closed_port()) + "/f", sha, 0};
  auto message = error_text([&] { fetch(unreachable, dir / "cache", options); });
  CHECK(message.find("NETWORK_FAILURE") != std::string::npos);
  CHECK(message.find("3 attempt") != std::string::npos);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500),
                                                           std::chrono::milliseconds(1000)});

  t::FileServer server;
  server.serve("/flaky", "x", 503);
  sleeps.clear();
  CHECK(code_of([&] { fetch({server.url("/flaky"), sha, 0}, dir / "cache", options); }) ==
        ErrorCode::network_failure);
  CHECK(server.hits("/flaky") == 3);
  CHECK(code_of([&] { fetch({server.url("/missing"), sha, 0}, dir / "cache", options); }) ==
        ErrorCode::network_failure);
  CHECK(server.hits("/missing") == 1);
}

TEST_CASE("fetch copies file URLs") {
  t::TempDir dir;
  t::write_bytes(dir / "local.bin", {1, 2, 3, 4});
  const std::string sha = codec::sha256_file(dir / "local.bin");
  auto res = fetch({"file://" + (dir / "local.bin").string(), sha, 0}, dir / "cache");
  CHECK(t::read_bytes(res.path) == std::vector<std::uint8_t>{1, 2, 3, 4});
}

TEST_CASE("load fetches remote files into the cache") {
  Fixture fx;
  t::FileServer server;
  auto bytes = t::read_bytes(fx.train_a);
  server.serve("/train-a.rlds", std::string(bytes.begin(), bytes.end()));
  auto m = fx.manifest("2.0.0");
  m.splits["train"][0].location = server.url("/train-a.rlds");
  fx.catalog.register_dataset(m);
  CHECK(server.hits("/train-a.rlds") == 0);
  CHECK(fx.catalog.load("toy", "train").episodes.collect() == fx.train_episodes);
  CHECK(fx.catalog.load("toy", "train[:2]").episode_count == 2);
  CHECK(server.hits("/train-a.rlds") == 1);
}

TEST_CASE("base64 round trip") {
  t::Rng rng(8);
  for (int n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> data(n);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    CHECK(codec::base64_decode(codec::base64_encode(data)) == data);
  }
  const std::string text = "hello";
  CHECK(codec::base64_encode({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}) == "aGVsbG8=");
}
