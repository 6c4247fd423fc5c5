#include <doctest.h>

#include <random>

#include "rppg/detect.hpp"
#include "support.hpp"

using namespace rppg;
using test_support::TempDir;

namespace {

std::int64_t brute_sum(const GrayFrame& g, const Rect& r) {
  std::int64_t s = 0;
  for (int y = r.y; y < r.bottom(); ++y) {
    for (int x = r.x; x < r.right(); ++x) s += g.at(x, y);
  }
  return s;
}

// 16x16 window: bright lower half against a dark upper half.
Cascade edge_cascade(double tree_threshold = 200.0) {
  CascadeTree tree;
  tree.feature = {{{0, 0, 16, 8}, -1.0}, {{0, 8, 16, 8}, 1.0}};
  tree.threshold = tree_threshold;
  tree.pass_value = 1.0;
  tree.fail_value = 0.0;
  return {16, 16, {{0.5, {tree}}}};
}

GrayFrame planted_frame(int w, int h, int px, int py) {
  GrayFrame g(w, h, 128);
  for (int y = py; y < py + 16; ++y) {
    for (int x = px; x < px + 16; ++x) g.at(x, y) = y < py + 8 ? 0 : 255;
  }
  return g;
}

bool window_passes(const Cascade& c, const GrayFrame& g, const Rect& win, double scale) {
  return evaluate_window(c, integral_image(g), squared_integral_image(g), win, scale);
}

}  // namespace

TEST_CASE("integral image examples") {
  const auto zero = integral_image(GrayFrame(3, 3, 0));
  for (int y = 0; y <= 3; ++y) {
    for (int x = 0; x <= 3; ++x) CHECK(zero.at(x, y) == 0);
  }
  const auto ones = integral_image(GrayFrame(3, 3, 1));
  CHECK(ones.at(3, 3) == 9);
  CHECK(rect_sum(ones, {0, 0, 3, 3}) == 9);

  const auto g = test_support::random_gray(8, 8, 1);
  const auto ii = integral_image(g);
  CHECK(ii.at(8, 8) == brute_sum(g, {0, 0, 8, 8}));
  CHECK(rect_sum(ii, {1, 1, 4, 3}) == brute_sum(g, {1, 1, 4, 3}));
  for (int k = 0; k <= 8; ++k) {
    CHECK(ii.at(k, 0) == 0);
    CHECK(ii.at(0, k) == 0);
  }
  for (int y = 1; y <= 8; ++y) {
    for (int x = 1; x <= 8; ++x) {
      CHECK(ii.at(x, y) >= ii.at(x - 1, y));
      CHECK(ii.at(x, y) >= ii.at(x, y - 1));
    }
  }
}

TEST_CASE("rect_sum matches brute force on 1000 random cases") {
  std::mt19937 rng(7);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const int w = std::uniform_int_distribution<int>(1, 40)(rng);
    const int h = std::uniform_int_distribution<int>(1, 40)(rng);
    const auto g = test_support::random_gray(w, h, static_cast<std::uint32_t>(i));
    const int rx = std::uniform_int_distribution<int>(0, w - 1)(rng);
    const int ry = std::uniform_int_distribution<int>(0, h - 1)(rng);
    const int rw = std::uniform_int_distribution<int>(1, w - rx)(rng);
    const int rh = std::uniform_int_distribution<int>(1, h - ry)(rng);
    const Rect r{rx, ry, rw, rh};
    if (rect_sum(integral_image(g), r) != brute_sum(g, r)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("rect_sum contract") {
  const auto ii = integral_image(GrayFrame(3, 3, 1));
  CHECK_THROWS_AS(rect_sum(ii, {0, 0, 0, 2}), Error);
  CHECK_THROWS_AS(rect_sum(ii, {2, 2, 2, 1}), Error);
  CHECK_THROWS_AS(rect_sum(ii, {-1, 0, 1, 1}), Error);
}

TEST_CASE("squared integral image") {
  GrayFrame g(2, 2, 0);
  g.at(0, 0) = 3;
  g.at(1, 1) = 255;
  CHECK(squared_integral_image(g).at(2, 2) == 9 + 255 * 255);
}

TEST_CASE("cascade validation and JSON round-trip") {
  TempDir dir("cascade");
  const auto c = edge_cascade();
  save_cascade(dir / "c.json", c);
  const auto back = load_cascade(dir / "c.json");
  CHECK(back.window_w == 16);
  REQUIRE(back.stages.size() == 1);
  CHECK(back.stages[0].trees[0].feature[1].rect == Rect{0, 8, 16, 8});
  CHECK(cascade_to_json(back) == test_support::read_file(dir / "c.json"));

  const auto minimal = parse_cascade(
      R"({"window":[4,4],"stages":[{"threshold":0,"trees":[{"rects":[[0,0,4,4,1]],"threshold":0,"pass":1,"fail":0}]}]})");
  CHECK(minimal.stages.size() == 1);

  CHECK_THROWS_AS(parse_cascade(
                      R"({"window":[4,4],"stages":[{"threshold":0,"trees":[{"rects":[[0,0,5,4,1]],"threshold":0,"pass":1,"fail":0}]}]})"),
                  Error);
  CHECK_THROWS_AS(parse_cascade(R"({"window":[4,4],"stages":[]})"), Error);
  CHECK_THROWS_AS(parse_cascade(R"({"window":[4,4]})"), Error);
  CHECK_THROWS_AS(parse_cascade("not json"), Error);
}

TEST_CASE("evaluate_window on a constant window") {
  const GrayFrame flat(16, 16, 90);
  for (const double fail : {0.0, 1.0}) {
    auto c = edge_cascade(0.5);
    c.stages[0].trees[0].fail_value = fail;
    // Zero response < 0.5 → fail_value, compared with stage threshold 0.5.
    CHECK(window_passes(c, flat, {0, 0, 16, 16}, 1.0) == (fail >= 0.5));
  }
  const GrayFrame flat32(32, 32, 90);
  auto c = edge_cascade(0.0);  // zero response passes a zero threshold at any scale
  CHECK(window_passes(c, flat32, {0, 0, 16, 16}, 1.0) == window_passes(c, flat32, {0, 0, 32, 32}, 2.0));
  CHECK(window_passes(c, flat32, {0, 0, 32, 32}, 2.0));
}

TEST_CASE("evaluate_window on a hand-evaluated two-rect feature") {
  const auto g = planted_frame(16, 16, 0, 0);
  // Response = (8·16·255 − 0) / σ with σ = 127.5 → 256.
  CHECK(window_passes(edge_cascade(256.0), g, {0, 0, 16, 16}, 1.0));
  CHECK_FALSE(window_passes(edge_cascade(256.001), g, {0, 0, 16, 16}, 1.0));
  CHECK_THROWS_AS(window_passes(edge_cascade(), g, {1, 0, 16, 16}, 1.0), Error);
  CHECK_THROWS_AS(window_passes(edge_cascade(), g, {0, 0, 16, 16}, 0.5), Error);
}

TEST_CASE("evaluate_window ignores a constant offset for zero-sum features") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = test_support::random_gray(16, 16, static_cast<std::uint32_t>(trial));
    for (auto& v : g.data) v = static_cast<std::uint8_t>(v / 2);
    auto shifted = g;
    const int offset = std::uniform_int_distribution<int>(1, 120)(rng);
    for (auto& v : shifted.data) v = static_cast<std::uint8_t>(v + offset);
    for (const double t : {-2.0, 0.0, 0.5, 2.0}) {
      const auto c = edge_cascade(t);
      CHECK(window_passes(c, g, {0, 0, 16, 16}, 1.0) == window_passes(c, shifted, {0, 0, 16, 16}, 1.0));
    }
  }
}

TEST_CASE("group_rects hand cases") {
  const Rect a{10, 10, 20, 20};
  SUBCASE("three identical rects") {
    const std::vector<Rect> in{a, a, a};
    const auto out = group_rects(in, 2, 0.2);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == a);
  }
  SUBCASE("isolated rect is dropped") {
    const std::vector<Rect> in{a};
    CHECK(group_rects(in, 2, 0.2).empty());
  }
  SUBCASE("two clusters yield their means") {
    const std::vector<Rect> in{{10, 10, 20, 20}, {11, 10, 20, 20}, {12, 13, 20, 20},
                               {100, 50, 30, 30}, {102, 52, 30, 30}, {101, 51, 30, 33}};
    const auto out = group_rects(in, 2, 0.2);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == Rect{11, 11, 20, 20});
    CHECK(out[1] == Rect{101, 51, 30, 31});
  }
  SUBCASE("transitive chain forms one cluster") {
    const std::vector<Rect> in{{0, 0, 20, 20}, {3, 0, 20, 20}, {6, 0, 20, 20}};
    // 0↔6 differ by 6 > 4 but both link through 3.
    const auto out = group_rects(in, 2, 0.2);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == Rect{3, 0, 20, 20});
  }
  CHECK_THROWS_AS(group_rects(std::vector<Rect>{a}, 0, 0.0), Error);
  CHECK_THROWS_AS(group_rects(std::vector<Rect>{a}, 0, 1.0), Error);
}

TEST_CASE("group_rects properties on random candidates") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Rect> in;
    const int n = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < n; ++i) {
      in.push_back({std::uniform_int_distribution<int>(0, 60)(rng), std::uniform_int_distribution<int>(0, 60)(rng),
                    std::uniform_int_distribution<int>(10, 14)(rng), std::uniform_int_distribution<int>(10, 14)(rng)});
    }
    const auto out = group_rects(in, 1, 0.2);
    CHECK(out.size() <= in.size());
    // Each output lies inside the hull of all candidates.
    for (const auto& r : out) {
      bool x_ok = false, y_ok = false;
      for (const auto& c : in) {
        x_ok |= c.x <= r.x;
        y_ok |= c.y <= r.y;
      }
      CHECK(x_ok);
      CHECK(y_ok);
    }
  }
}

TEST_CASE("detect_faces finds a planted pattern") {
  const auto g = planted_frame(64, 64, 24, 20);
  const auto boxes = detect_faces(edge_cascade(), g, {});
  REQUIRE(boxes.size() == 1);
  const double cx = boxes[0].x + boxes[0].w / 2.0;
  const double cy = boxes[0].y + boxes[0].h / 2.0;
  CHECK(std::abs(cx - 32.0) <= 1.0);
  CHECK(std::abs(cy - 28.0) <= 1.0);
  CHECK(boxes == detect_faces(edge_cascade(), g, {}));
  CHECK(boxes == detect_faces(edge_cascade(), g, {}, Exec::serial));
}

TEST_CASE("detect_faces edge cases") {
  auto unreachable = edge_cascade();
  unreachable.stages[0].threshold = 2.0;
  CHECK(detect_faces(unreachable, planted_frame(64, 64, 24, 20), {}).empty());
  CHECK(detect_faces(edge_cascade(), GrayFrame(64, 64, 128), {}).empty());
  CHECK(detect_faces(edge_cascade(), GrayFrame(8, 8, 0), {}).empty());
  DetectParams bad;
  bad.scale_factor = 1.0;
  CHECK_THROWS_AS(detect_faces(edge_cascade(), GrayFrame(64, 64), bad), Error);
}

TEST_CASE("detect_faces sorts by descending area") {
  GrayFrame g(96, 64, 128);
  const auto small = planted_frame(16, 16, 0, 0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) g.at(x + 8, y + 8) = small.at(x, y);
  }
  // A 32x32 version of the pattern further right.
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) g.at(x + 50, y + 20) = y < 16 ? 0 : 255;
  }
  const auto boxes = detect_faces(edge_cascade(), g, {});
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0].area() > boxes[1].area());
  CHECK(boxes[0].x > 40);
}

TEST_CASE("track_roi manual and hold-last") {
  VideoClip clip{64, 64, 30.0, std::vector<RgbFrame>(5, RgbFrame(64, 64))};
  const auto manual = track_roi(clip, RoiSource::fixed({10, 10, 40, 40}));
  CHECK(manual.size() == 5);
  for (const auto& b : manual) CHECK(b == Rect{10, 10, 40, 40});

  const Rect b{1, 2, 3, 4}, c{5, 6, 7, 8};
  const std::vector<std::optional<FaceBox>> d{b, std::nullopt, b};
  CHECK(hold_last(d) == std::vector<FaceBox>{b, b, b});
  const std::vector<std::optional<FaceBox>> lead{std::nullopt, std::nullopt, c, std::nullopt, b};
  CHECK(hold_last(lead) == std::vector<FaceBox>{c, c, c, c, b});
  const std::vector<std::optional<FaceBox>> none(3);
  CHECK_THROWS_AS(hold_last(none), Error);
}

TEST_CASE("track_roi with a cascade") {
  const auto face = planted_frame(64, 64, 24, 20);
  auto to_rgb = [](const GrayFrame& g) {
    RgbFrame f(g.width, g.height);
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        for (int k = 0; k < 3; ++k) f.pixel(x, y)[k] = g.at(x, y);
      }
    }
    return f;
  };
  VideoClip clip{64, 64, 30.0, {to_rgb(face), to_rgb(GrayFrame(64, 64, 128)), to_rgb(face)}};
  const auto boxes = track_roi(clip, RoiSource::detector(edge_cascade()));
  REQUIRE(boxes.size() == 3);
  CHECK(boxes[0] == boxes[1]);
  CHECK(boxes[1] == boxes[2]);
  CHECK(boxes == track_roi(clip, RoiSource::detector(edge_cascade()), Exec::serial));

  VideoClip blank{64, 64, 30.0, std::vector<RgbFrame>(3, to_rgb(GrayFrame(64, 64, 128)))};
  CHECK_THROWS_AS(track_roi(blank, RoiSource::detector(edge_cascade())), Error);
  CHECK_THROWS_AS(track_roi(VideoClip{64, 64, 30.0, {}}, RoiSource::fixed({0, 0, 4, 4})), Error);
}

TEST_CASE("OpenCV cascade XML conversion") {
  TempDir dir("xml");
  test_support::write_file(dir / "tiny.xml", R"(<?xml version="1.0"?>
<opencv_storage>
<cascade type_id="opencv-cascade-classifier">
  <stageType>BOOST</stageType>
  <featureType>HAAR</featureType>
  <height>12</height>
  <width>10</width>
  <stageParams><maxWeakCount>2</maxWeakCount></stageParams>
  <featureParams><maxCatCount>0</maxCatCount></featureParams>
  <stageNum>1</stageNum>
  <stages>
    <_>
      <maxWeakCount>2</maxWeakCount>
      <stageThreshold>-0.5</stageThreshold>
      <weakClassifiers>
        <_>
          <internalNodes>0 -1 1 0.25</internalNodes>
          <leafValues>-0.75 0.5</leafValues></_>
        <_>
          <internalNodes>0 -1 0 -0.125</internalNodes>
          <leafValues>0.25 -1.5</leafValues></_>
      </weakClassifiers></_>
  </stages>
  <features>
    <_>
      <rects>
        <_>0 0 10 6 -1.</_>
        <_>0 6 10 6 1.</_></rects></_>
    <_>
      <rects>
        <_>2 2 6 8 -1.</_>
        <_>4 2 2 8 3.</_></rects>
      <tilted>0</tilted></_>
  </features>
</cascade>
</opencv_storage>
)");
  const auto c = convert_opencv_cascade(dir / "tiny.xml");
  CHECK(c.window_w == 10);
  CHECK(c.window_h == 12);
  REQUIRE(c.stages.size() == 1);
  CHECK(c.stages[0].threshold == -0.5);
  REQUIRE(c.stages[0].trees.size() == 2);
  const auto& t0 = c.stages[0].trees[0];
  CHECK(t0.feature.size() == 2);
  CHECK(t0.feature[1].rect == Rect{4, 2, 2, 8});
  CHECK(t0.feature[1].weight == 3.0);
  CHECK(t0.threshold == doctest::Approx(0.25 * 8 * 10));
  CHECK(t0.fail_value == -0.75);
  CHECK(t0.pass_value == 0.5);
  CHECK(c.stages[0].trees[1].feature[0].rect == Rect{0, 0, 10, 6});

  test_support::write_file(dir / "bad.xml", "<opencv_storage><x/></opencv_storage>");
  CHECK_THROWS_AS(convert_opencv_cascade(dir / "bad.xml"), Error);
}
