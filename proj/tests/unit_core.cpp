// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "textmim/config.hpp"
#include "textmim/io.hpp"
#include "textmim/rng.hpp"
#include "textmim/vocab.hpp"

using namespace textmim;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "textmim_unit_core";
  fs::create_directories(dir);
  return dir;
}
}  // namespace

TEST_CASE("rng streams are reproducible and state round-trips") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(7);
  c.normal();  // leave a cached spare value in the state
  const std::string state = c.serialize_state();
  Rng d;
  d.deserialize_state(state);
  for (int i = 0; i < 10; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("rng utilities behave") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  auto picks = rng.sample_without_replacement(10, 10);
  std::sort(picks.begin(), picks.end());
  for (int i = 0; i < 10; ++i) CHECK(picks[i] == i);

  // categorical respects zero weights
  for (int i = 0; i < 200; ++i) CHECK(rng.categorical({0.0, 1.0, 0.0}) == 1);
  CHECK_THROWS(rng.categorical({0.0, 0.0}));

  // normal() has roughly the right first two moments
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("derived seeds differ by tag and index") {
  CHECK(derive_seed(5, "a") != derive_seed(5, "b"));
  CHECK(derive_seed(5, std::uint64_t{1}) != derive_seed(5, std::uint64_t{2}));
}

TEST_CASE("npy round-trips arbitrary shapes") {
  const auto dir = temp_dir();
  std::vector<float> data(2 * 3 * 4);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i) * 0.25f;
  io::save_npy(dir / "a.npy", data, {2, 3, 4});
  std::vector<std::size_t> shape;
  auto loaded = io::load_npy(dir / "a.npy", shape);
  CHECK(shape == std::vector<std::size_t>{2, 3, 4});
  CHECK(loaded == data);

  io::save_npy(dir / "b.npy", {1.f, 2.f}, {2});
  loaded = io::load_npy(dir / "b.npy", shape);
  CHECK(shape == std::vector<std::size_t>{2});
  CHECK(loaded == std::vector<float>{1.f, 2.f});
}

TEST_CASE("sha256 matches known vectors") {
  CHECK(io::sha256_hex(std::string{}) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex(std::string{"abc"}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config parses, overrides, and serializes canonically") {
  const auto cfg_text = R"(
# a comment
model.enc_dim = 128
visual.mask_ratio = 0.45   # trailing comment
flag = true
name = toy run
)";
  Config cfg = Config::from_string(cfg_text);
  CHECK(cfg.get_int("model.enc_dim", 0) == 128);
  CHECK(cfg.get_double("visual.mask_ratio", 0) == doctest::Approx(0.45));
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_str("name", "") == "toy run");
  CHECK(cfg.get_int("absent", 7) == 7);

  cfg.apply_overrides({"model.enc_dim=64", "new.key = 3"});
  CHECK(cfg.get_int("model.enc_dim", 0) == 64);
  CHECK(cfg.get_int("new.key", 0) == 3);

  CHECK_THROWS(Config::from_string("no_equals_sign_here\n"));
  CHECK_THROWS(cfg.get_int("name", 0));

  Config again = Config::from_string(cfg.canonical_text());
  CHECK(again.canonical_text() == cfg.canonical_text());
}

TEST_CASE("vocab construction, lookups, and file round-trip") {
  Vocab v = Vocab::from_chars("abc", /*with_blank=*/true);
  CHECK(v.size() == 5);
  CHECK(v.eos_id == 3);
  CHECK(v.blank_id == 4);
  CHECK(v.char_id('b') == 1);
  CHECK(v.char_of(2) == 'c');
  CHECK_THROWS_WITH_AS(v.char_id('z'), "character 'z' is not in the vocabulary",
                       std::out_of_range);

  const auto dir = temp_dir();
  v.save(dir / "vocab.txt");
  Vocab w = Vocab::load(dir / "vocab.txt");
  CHECK(w.entries == v.entries);
  CHECK(w.eos_id == v.eos_id);
  CHECK(w.blank_id == v.blank_id);

  Vocab no_blank = Vocab::from_chars("xy", false);
  CHECK(no_blank.blank_id == -1);
  no_blank.save(dir / "vocab2.txt");
  CHECK(Vocab::load(dir / "vocab2.txt").blank_id == -1);
}

TEST_CASE("label encoding follows the padding contract") {
  Vocab v = Vocab::from_chars("ab", false);  // a:0 b:1 eos:2
  const LabelSeq s = encode_label("ab", v, 4);
  CHECK(s.ids == std::vector<int>{0, 1, 2, 2});
  CHECK(s.true_length == 2);

  const LabelSeq empty = encode_label("", v, 3);
  CHECK(empty.ids == std::vector<int>{2, 2, 2});
  CHECK(empty.true_length == 0);

  // boundary: text exactly fills the positions, no EOS present
  const LabelSeq full = encode_label("abab", v, 4);
  CHECK(full.ids == std::vector<int>{0, 1, 0, 1});
  CHECK(full.true_length == 4);

  CHECK_THROWS(encode_label("aaaaa", v, 4));
  CHECK_THROWS(encode_label("az", v, 4));
}

TEST_CASE("label round-trip: decode(encode(t)) == t") {
  Vocab v = Vocab::from_chars("abcdef", false);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    std::string text;
    const int len = static_cast<int>(rng.uniform_index(8));
    for (int k = 0; k < len; ++k)
      text.push_back("abcdef"[rng.uniform_index(6)]);
    CHECK(decode_label(encode_label(text, v, 10).ids, v) == text);
  }
}

TEST_CASE("ctc greedy collapse") {
  // frames [a, a, blank, b] -> "ab"
  CHECK(ctc_collapse({0, 0, 9, 1}, 9) == std::vector<int>{0, 1});
  CHECK(ctc_collapse({9, 9, 9}, 9).empty());
  CHECK(ctc_collapse({0, 9, 0}, 9) == std::vector<int>{0, 0});
  CHECK(ctc_collapse({}, 9).empty());
}
