#include <doctest.h>

#include <random>
#include <sstream>

#include "envclass/error.hpp"
#include "envclass/random.hpp"
#include "envclass/trajstore.hpp"
#include "support.hpp"

using namespace envclass;
using testing::meta;

namespace {

const char* kHeader = "dataset_id,scene_id,agent_id,kind,frame,x_m,y_m\n";

DatasetBundle parse(const std::string& body, const std::vector<SceneMeta>& scenes = {meta("s1", "d1")}) {
  std::istringstream in(std::string(kHeader) + body);
  return read_normalized(in, "mem.csv", scenes);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::Data;
}

}  // namespace

TEST_CASE("normalized: three rows make one track") {
  const auto b = parse("d1,s1,p1,pedestrian,0,0,0\nd1,s1,p1,pedestrian,1,0.1,0\nd1,s1,p1,pedestrian,2,0.2,0\n");
  REQUIRE(b.tracks.size() == 1);
  CHECK(b.tracks[0].points.size() == 3);
  CHECK(b.tracks[0].kind == AgentKind::Pedestrian);
  CHECK(b.tracks[0].points[2].time_s == doctest::Approx(0.2));
}

TEST_CASE("normalized: rows out of order are sorted by frame") {
  const auto b = parse("d1,s1,p1,pedestrian,2,2,0\nd1,s1,p1,pedestrian,0,0,0\nd1,s1,p1,pedestrian,1,1,0\n");
  REQUIRE(b.tracks.size() == 1);
  CHECK(b.tracks[0].points[0].frame == 0);
  CHECK(b.tracks[0].points[2].position.x == 2.0);
}

TEST_CASE("normalized: duplicate frame names the later line") {
  try {
    parse("d1,s1,p1,pedestrian,0,0,0\nd1,s1,p1,pedestrian,1,0,0\nd1,s1,p1,pedestrian,1,5,5\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("mem.csv:4") != std::string::npos);
  }
}

TEST_CASE("normalized: header only gives an empty bundle") {
  const auto b = parse("");
  CHECK(b.tracks.empty());
}

TEST_CASE("normalized: malformed rows carry their line number") {
  try {
    parse("d1,s1,p1,pedestrian,0,0,0\nd1,s1,p1,pedestrian,1,abc,0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK(kind_of([] { parse("d1,s1,p1,pedestrian,0,0\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("d1,s1,p1,robot,0,0,0\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] {
          std::istringstream in("scene,agent\n");
          read_normalized(in, "x", {meta("s1", "d1")});
        }) == ErrorKind::Parse);
}

TEST_CASE("normalized: missing scene metadata names the scene") {
  try {
    parse("d1,ghost,p1,pedestrian,0,0,0\nd1,ghost,p1,pedestrian,1,0,0\n");
    FAIL("expected a reference error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Reference);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("normalized: single-point tracks are dropped with a warning") {
  const auto b = parse("d1,s1,p1,pedestrian,0,0,0\nd1,s1,p2,pedestrian,0,0,0\nd1,s1,p2,pedestrian,1,1,0\n");
  REQUIRE(b.tracks.size() == 1);
  CHECK(b.tracks[0].agent_id == "p2");
  CHECK(b.report.short_tracks_dropped == 1);
  CHECK(b.report.warnings.size() == 1);
}

TEST_CASE("normalized: coincident points are kept") {
  const auto b = parse("d1,s1,p1,pedestrian,0,3,3\nd1,s1,p1,pedestrian,1,3,3\n");
  CHECK(b.tracks.size() == 1);
}

TEST_CASE("scene metadata: object or array, validated") {
  const auto one = parse_scene_meta(R"({"scene_id":"a","dataset_id":"d","frame_rate_hz":25,"area_m2":10})");
  REQUIRE(one.size() == 1);
  CHECK(one[0].frame_rate_hz == 25.0);
  const auto two = parse_scene_meta(
      R"([{"scene_id":"b","dataset_id":"d","frame_rate_hz":25,"area_m2":10},
          {"scene_id":"a","dataset_id":"d","frame_rate_hz":10,"area_m2":5}])");
  CHECK(two.size() == 2);
  CHECK(kind_of([] { parse_scene_meta(R"({"scene_id":"a","dataset_id":"d","frame_rate_hz":0,"area_m2":10})"); }) ==
        ErrorKind::Config);
  CHECK(kind_of([] { parse_scene_meta(R"({"scene_id":"a","dataset_id":"d","frame_rate_hz":10,"area_m2":-1})"); }) ==
        ErrorKind::Config);
  const auto back = parse_scene_meta(scene_meta_to_json(two));
  CHECK(back.size() == 2);
}

TEST_CASE("sdd: lost rows dropped, box center, labels") {
  const std::string text =
      "1 0 0 2 2 0 0 0 0 \"Pedestrian\"\n"
      "1 0 0 2 2 1 1 0 0 \"Pedestrian\"\n"
      "1 2 0 4 2 2 0 0 0 \"Pedestrian\"\n"
      "2 0 0 2 2 0 0 0 0 \"Biker\"\n"
      "2 0 0 2 2 1 0 0 0 \"Biker\"\n"
      "3 0 0 2 2 0 0 0 0 \"Car\"\n"
      "3 0 0 2 2 1 0 0 0 \"Car\"\n"
      "4 0 0 2 2 0 0 0 0 \"Unicycle\"\n"
      "4 0 0 2 2 1 0 0 0 \"Unicycle\"\n";
  std::istringstream in(text);
  const auto b = read_sdd(in, "ann.txt", meta("s1", "sdd", 30.0), Homography::identity());
  REQUIRE(b.tracks.size() == 4);
  CHECK(b.report.lost_rows_dropped == 1);
  const auto& p = b.tracks[0];
  CHECK(p.agent_id == "1");
  CHECK(p.kind == AgentKind::Pedestrian);
  REQUIRE(p.points.size() == 2);  // frame 1 was lost
  CHECK(p.points[0].position.x == 1.0);
  CHECK(p.points[0].position.y == 1.0);
  CHECK(p.points[1].frame == 2);
  CHECK(b.tracks[1].kind == AgentKind::Other);
  CHECK(b.tracks[2].kind == AgentKind::Vehicle);
  CHECK(b.tracks[3].kind == AgentKind::Other);
  CHECK(b.report.unknown_labels == 2);
  CHECK(b.report.warnings.size() == 1);
}

TEST_CASE("sdd: homography maps the box center") {
  const auto h = parse_homography("[0.5, 0, 10, 0, 0.25, -2, 0, 0, 1]");
  std::istringstream in("7 0 0 4 8 0 0 0 0 \"Cart\"\n7 4 0 8 8 1 0 0 0 \"Cart\"\n");
  const auto b = read_sdd(in, "a", meta("s1", "sdd"), h);
  REQUIRE(b.tracks.size() == 1);
  CHECK(b.tracks[0].kind == AgentKind::Vehicle);
  CHECK(b.tracks[0].points[0].position.x == doctest::Approx(11.0));
  CHECK(b.tracks[0].points[0].position.y == doctest::Approx(-1.0));
  CHECK(b.tracks[0].points[1].position.x == doctest::Approx(13.0));
  CHECK(kind_of([] { parse_homography("[1,2,3]"); }) == ErrorKind::Config);
}

TEST_CASE("sdd: dropping lost rows never changes a retained row") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::ostringstream all, kept;
    for (int id = 0; id < 4; ++id) {
      for (int f = 0; f < 20; ++f) {
        const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
        const int lost = rng.bernoulli(0.3) ? 1 : 0;
        std::ostringstream row;
        row << id << ' ' << x << ' ' << y << ' ' << x + 3 << ' ' << y + 4 << ' ' << f << ' ' << lost
            << " 0 0 \"Pedestrian\"\n";
        all << row.str();
        if (!lost) kept << row.str();
      }
    }
    std::istringstream a(all.str()), k(kept.str());
    const auto ba = read_sdd(a, "a", meta("s", "d"), Homography::identity());
    const auto bk = read_sdd(k, "k", meta("s", "d"), Homography::identity());
    REQUIRE(ba.tracks.size() == bk.tracks.size());
    for (std::size_t i = 0; i < ba.tracks.size(); ++i) {
      REQUIRE(ba.tracks[i].points.size() == bk.tracks[i].points.size());
      for (std::size_t j = 0; j < ba.tracks[i].points.size(); ++j) {
        CHECK(ba.tracks[i].points[j].frame == bk.tracks[i].points[j].frame);
        CHECK(ba.tracks[i].points[j].position.x == bk.tracks[i].points[j].position.x);
        CHECK(ba.tracks[i].points[j].position.y == bk.tracks[i].points[j].position.y);
      }
    }
    CHECK_NOTHROW(validate(ba));
  }
}

TEST_CASE("generic: column map relabels a file") {
  const auto map = parse_column_map(R"({"id":"trackId","frame":"frame","x":"xCenter","y":"yCenter"})");
  std::istringstream in("recordingId,trackId,frame,xCenter,yCenter\n0,12,0,1.5,2.5\n0,12,1,1.6,2.5\n");
  const auto b = read_generic(in, "ind.csv", map, meta("s1", "ind", 25.0));
  REQUIRE(b.tracks.size() == 1);
  CHECK(b.tracks[0].points.size() == 2);
  CHECK(b.tracks[0].kind == AgentKind::Pedestrian);
  CHECK(b.tracks[0].points[1].position.x == 1.6);
}

TEST_CASE("generic: unmapped required column is a config error") {
  CHECK(kind_of([] { parse_column_map(R"({"id":"a","frame":"f","x":"x"})"); }) == ErrorKind::Config);
  ColumnMap m;
  m.id = "a";
  m.frame = "f";
  m.x = "x";
  std::istringstream in("a,f,x,y\n");
  CHECK(kind_of([&] { read_generic(in, "g", m, meta("s1", "d")); }) == ErrorKind::Config);
}

TEST_CASE("generic: kind values match case-insensitively") {
  const auto map = parse_column_map(R"({"id":"id","frame":"f","x":"x","y":"y","kind":"class"})");
  std::istringstream in("id,f,x,y,class\n1,0,0,0,CAR\n1,1,1,0,CAR\n2,0,0,0,Pedestrian\n2,1,0,1,Pedestrian\n");
  const auto b = read_generic(in, "g", map, meta("s1", "d"));
  REQUIRE(b.tracks.size() == 2);
  CHECK(b.tracks[0].kind == AgentKind::Vehicle);
  CHECK(b.tracks[1].kind == AgentKind::Pedestrian);
}

TEST_CASE("round trip: write then read gives identical tracks") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SceneMeta> scenes{meta("a", "d1", 10.0), meta("b", "d2", 25.0)};
    std::vector<Track> tracks;
    for (int i = 0; i < 6; ++i) {
      const std::string scene = i % 2 ? "b" : "a";
      const double fps = i % 2 ? 25.0 : 10.0;
      std::vector<std::pair<std::int64_t, Vec2>> pts;
      std::int64_t f = static_cast<std::int64_t>(rng.index(5));
      const auto n = 2 + rng.index(30);
      for (std::size_t k = 0; k < n; ++k) {
        pts.push_back({f, Vec2{rng.normal(0, 50), rng.normal(0, 1e-3)}});
        f += 1 + static_cast<std::int64_t>(rng.index(3));
      }
      const AgentKind kinds[] = {AgentKind::Pedestrian, AgentKind::Vehicle, AgentKind::Other};
      tracks.push_back(testing::make_track("agent" + std::to_string(i), kinds[i % 3], scene, pts, fps));
    }
    const auto b = testing::bundle_of(scenes, tracks);
    std::stringstream ss;
    write_normalized(b, ss);
    const auto back = read_normalized(ss, "rt", scenes);
    REQUIRE(back.tracks.size() == b.tracks.size());
    for (std::size_t i = 0; i < b.tracks.size(); ++i) {
      CHECK(back.tracks[i].agent_id == b.tracks[i].agent_id);
      CHECK(back.tracks[i].kind == b.tracks[i].kind);
      REQUIRE(back.tracks[i].points.size() == b.tracks[i].points.size());
      for (std::size_t j = 0; j < b.tracks[i].points.size(); ++j) {
        CHECK(back.tracks[i].points[j].frame == b.tracks[i].points[j].frame);
        CHECK(back.tracks[i].points[j].time_s == b.tracks[i].points[j].time_s);
        CHECK(back.tracks[i].points[j].position.x == b.tracks[i].points[j].position.x);
        CHECK(back.tracks[i].points[j].position.y == b.tracks[i].points[j].position.y);
      }
    }
  }
}

TEST_CASE("merge: scene clash and agent clash are rejected") {
  auto a = testing::bundle_of({meta("s", "d")},
                              {testing::line_track("p", AgentKind::Pedestrian, "s", 0, 3, {0, 0}, {1, 0})});
  auto same = a;
  CHECK_THROWS_AS(merge_into(a, same), Error);
  auto clash = testing::bundle_of({meta("s", "other")}, {});
  CHECK_THROWS_AS(merge_into(a, clash), Error);
  auto fine = testing::bundle_of({meta("t", "d")},
                                 {testing::line_track("p", AgentKind::Pedestrian, "t", 0, 3, {0, 0}, {1, 0})});
  merge_into(a, fine);
  CHECK(a.tracks.size() == 2);
  CHECK(a.scenes.size() == 2);
  CHECK_NOTHROW(validate(a));
}

TEST_CASE("validate: catches broken invariants") {
  auto b = testing::bundle_of({meta("s", "d")},
                              {testing::line_track("p", AgentKind::Pedestrian, "s", 0, 3, {0, 0}, {1, 0})});
  auto bad = b;
  bad.tracks[0].points[2].frame = 1;
  CHECK_THROWS_AS(validate(bad), Error);
  bad = b;
  bad.tracks[0].points.resize(1);
  CHECK_THROWS_AS(validate(bad), Error);
  bad = b;
  bad.tracks[0].scene_id = "nope";
  CHECK_THROWS_AS(validate(bad), Error);
  bad = b;
  bad.tracks[0].points[1].position.x = std::nan("");
  CHECK_THROWS_AS(validate(bad), Error);
}
