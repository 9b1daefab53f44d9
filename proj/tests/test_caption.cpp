#include <doctest.h>

#include <random>

#include "caption/caption.hpp"
#include "core/errors.hpp"
#include "core/transcript_io.hpp"
#include "oracles.hpp"
#include "prompts/templates.hpp"
#include "support.hpp"

using namespace cycleprompt;
using namespace cycleprompt::caption;
namespace fs = std::filesystem;

namespace {

image::Image coordinate_image(int w, int h, std::uint8_t tag) {
  image::Image img(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto p = oracle::panel_pixel(x, y, tag);
      img.set(x, y, p[0], p[1], p[2]);
    }
  return img;
}

std::vector<std::string> listing_texts(const std::string& name) {
  std::vector<std::string> out;
  for (const auto& e : core::parse_compat(testing::fixture_text("listings/" + name))) out.push_back(e.text);
  return out;
}

}  // namespace

TEST_SUITE("caption") {

TEST_CASE("caption prompts match the golden files") {
  CHECK(render_discriminator_prompt("black cat on sofa") ==
        testing::fixture_text("prompts/caption_discriminator.txt"));
  CHECK(std::string(prompts::kZeroShotCaption) == testing::fixture_text("prompts/zero_shot_caption.txt"));
  CHECK(std::string(prompts::kCaptionDiscriminator).find("about 130 words or less") != std::string::npos);
  CHECK(composite_name(3) == "composite_3.png");
}

TEST_CASE("composite geometry over random size pairs") {
  testing::TempDir dir;
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> side(1, 48);
  std::uniform_int_distribution<int> pad(0, 12);
  for (int trial = 0; trial < 20; ++trial) {
    const oracle::Geometry g{side(rng), side(rng), side(rng), side(rng), pad(rng)};
    CAPTURE(trial);
    image::write_png(coordinate_image(g.wl, g.hl, 10), dir / "l.png");
    image::write_png(coordinate_image(g.wr, g.hr, 200), dir / "r.png");
    build_composite({dir / "l.png", dir / "r.png", dir / "c.png", g.pad});
    const auto out = image::decode_file(dir / "c.png");
    REQUIRE(out.width == g.width());
    REQUIRE(out.height == g.height());
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) {
        const auto want = oracle::expected_pixel(g, x, y, 10, 200);
        const auto* got = out.pixel(x, y);
        if (got[0] != want[0] || got[1] != want[1] || got[2] != want[2]) {
          FAIL("pixel mismatch at " << x << "," << y);
        }
      }
  }
}

TEST_CASE("composite rejects undecodable inputs") {
  testing::TempDir dir;
  testing::write_text(dir / "bad.png", "not an image");
  testing::write_solid_png(dir / "ok.png", 3, 3, 1, 1, 1);
  CHECK_THROWS_AS(build_composite({dir / "bad.png", dir / "ok.png", dir / "c.png", 10}), ImageDecodeError);
  CHECK_THROWS_AS(build_composite({dir / "ok.png", dir / "ok.png", dir / "c.png", -1}), PreconditionError);
}

TEST_CASE("preamble stripping") {
  CHECK(strip_preamble("New description: a red bus on a street.") == "A red bus on a street.");
  CHECK(strip_preamble("Updated description:\n\"A red bus.\"") == "A red bus.");
  CHECK(strip_preamble("The reference image shows a red bus.") == "A red bus.");
  CHECK(strip_preamble("The image on the left depicts two dogs.") == "Two dogs.");
  CHECK(strip_preamble("  A plain caption.  ") == "A plain caption.");
  CHECK(strip_preamble("a lowercase caption") == "a lowercase caption");
  CHECK(strip_preamble("New description:") == "New description:");
  // Mentions later in the text stay.
  CHECK(strip_preamble("A bus. The left image shows more.") == "A bus. The left image shows more.");
}

TEST_CASE("word counting") {
  CHECK(word_count("") == 0);
  CHECK(word_count("one  two\nthree\tfour") == 4);
}

TEST_CASE("caption cycle layout and records") {
  testing::TempDir dir;
  const auto input = testing::write_solid_png(dir / "in" / "cat.jpg.png", 20, 12, 30, 60, 90);
  auto vision = std::make_shared<providers::MockProvider>();
  vision->set_script(providers::MockProvider::kGlobalScope, {"c0", "New description: c1", "c2", "c3", "c4"});
  auto painter = std::make_shared<providers::MockProvider>();
  std::vector<std::string> logged;
  CaptionOptions opts;
  opts.word_budget = 1;
  opts.log = [&logged](const std::string& m) { logged.push_back(m); };
  const CaptionPack pack(testing::chat_binding(vision), testing::image_binding(painter), dir / "run", opts);
  const auto t = run_caption_cycle(input, pack, caption_cycle_config(4));

  REQUIRE(t.records.size() == 5);
  CHECK(t.stop_reason == core::StopReason::kMaxCycles);
  CHECK(t.records[1].output_y.text_payload() == "C1");
  CHECK(fs::exists(dir / "run" / kOriginalName));
  for (int i = 1; i <= 5; ++i) CHECK(fs::exists(dir / "run" / generated_name(i)));
  for (int i = 1; i <= 4; ++i) {
    CHECK(fs::exists(dir / "run" / composite_name(i)));
    CHECK(t.records[i - 1].verdict.evidence == composite_name(i));
  }
  CHECK_FALSE(fs::exists(dir / "run" / composite_name(5)));
  CHECK(painter->image_calls() == 5);
  CHECK(vision->chat_calls() == 5);
  CHECK(logged.empty());  // one-word captions fit
  // The discriminator sees the composite and the current caption.
  const auto log = vision->chat_log();
  CHECK(log[1].messages[0].image_refs.at(0).filename() == "composite_1.png");
  CHECK(log[1].messages[0].text == render_discriminator_prompt("c0"));
  CHECK(core::check_invariants(t).empty());
}

TEST_CASE("over-budget captions are logged, not cut") {
  testing::TempDir dir;
  const auto input = testing::write_solid_png(dir / "x.png", 8, 8, 0, 0, 0);
  auto vision = std::make_shared<providers::MockProvider>();
  vision->set_script(providers::MockProvider::kGlobalScope, {"one two three", "four five six seven"});
  std::vector<std::string> logged;
  CaptionOptions opts;
  opts.word_budget = 2;
  opts.log = [&logged](const std::string& m) { logged.push_back(m); };
  const CaptionPack pack(testing::chat_binding(vision), testing::image_binding(std::make_shared<providers::MockProvider>()),
                         dir / "run", opts);
  const auto t = run_caption_cycle(input, pack, caption_cycle_config(1));
  CHECK(t.records.back().output_y.text_payload() == "four five six seven");
  CHECK(logged.size() == 2);
}

TEST_CASE("undecodable input fails before any provider call") {
  testing::TempDir dir;
  testing::write_text(dir / "x.png", "garbage");
  auto vision = std::make_shared<providers::MockProvider>();
  const CaptionPack pack(testing::chat_binding(vision), testing::image_binding(vision), dir / "run");
  CHECK_THROWS_AS(pack.initial_caption(dir / "x.png"), ImageDecodeError);
  CHECK(vision->chat_calls() == 0);
  auto cfg = caption_cycle_config(2);
  cfg.hint_strategy = core::HintStrategy::kLiteralAlg1;
  CHECK_THROWS_AS(run_caption_cycle(dir / "x.png", pack, cfg), PreconditionError);
}

TEST_CASE("reference cycle listings replay byte for byte") {
  for (const std::string name : {"vqav2.jsonl", "figureqa.jsonl"}) {
    CAPTURE(name);
    testing::TempDir dir;
    const auto input = testing::write_solid_png(dir / "img.png", 16, 16, 200, 100, 50);
    auto vision = std::make_shared<providers::MockProvider>();
    vision->set_script(providers::MockProvider::kGlobalScope, listing_texts(name));
    const CaptionPack pack(testing::chat_binding(vision),
                           testing::image_binding(std::make_shared<providers::MockProvider>()), dir / "run");
    const auto t = run_caption_cycle(input, pack, caption_cycle_config(4));
    CHECK(core::export_compat(t) == testing::fixture_text("listings/" + name));
  }
}

TEST_CASE("zero-shot caption uses the baseline prompt") {
  testing::TempDir dir;
  const auto input = testing::write_solid_png(dir / "x.png", 8, 8, 0, 0, 0);
  auto vision = std::make_shared<providers::MockProvider>();
  vision->set_script(providers::MockProvider::kGlobalScope, {"A black square."});
  const CaptionPack pack(testing::chat_binding(vision), {}, dir / "run");
  CHECK(pack.zero_shot_caption(input) == "A black square.");
  CHECK(vision->chat_log()[0].messages.back().text == prompts::kZeroShotCaption);
}

}  // TEST_SUITE
