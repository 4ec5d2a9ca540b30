#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "strokealign/dataio.hpp"
#include "test_helpers.hpp"

using namespace strokealign;
using namespace strokealign::testing;

TEST_CASE("parse_stroke_xml maps strokes and points in document order") {
    std::string xml = R"(<?xml version="1.0"?>
<WhiteboardCaptureSession>
  <WhiteboardDescription><SensorLocation corner="top_left"/></WhiteboardDescription>
  <StrokeSet>
    <Stroke colour="black" start_time="1.0" end_time="2.0">
      <Point x="1" y="2" time="1.0"/>
      <Point x="3" y="4" time="1.5"/>
    </Stroke>
  </StrokeSet>
</WhiteboardCaptureSession>)";
    DatasetRecord rec = parse_stroke_xml(xml);
    REQUIRE(rec.seq.strokes.size() == 1);
    REQUIRE(rec.seq.strokes[0].points.size() == 2);
    CHECK(rec.seq.strokes[0].points[0].x == 1.0);
    CHECK(rec.seq.strokes[0].points[1].y == 4.0);
}

TEST_CASE("parse_stroke_xml with two strokes flags each stroke head") {
    std::string xml = R"(<StrokeSet>
  <Stroke><Point x="0" y="0"/><Point x="1" y="1"/></Stroke>
  <Stroke><Point x="5" y="5"/></Stroke>
</StrokeSet>)";
    DatasetRecord rec = parse_stroke_xml(xml);
    REQUIRE(rec.seq.strokes.size() == 2);
    CHECK(sos_flag(rec.seq, 0));
    CHECK_FALSE(sos_flag(rec.seq, 1));
    CHECK(sos_flag(rec.seq, 2));
}

TEST_CASE("parse_stroke_xml distinct errors") {
    CHECK_THROWS_WITH_AS(parse_stroke_xml("<StrokeSet></StrokeSet>"),
                         doctest::Contains("empty stroke set"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_stroke_xml("<a><b></a>"), doctest::Contains("malformed xml"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(
        parse_stroke_xml(R"(<StrokeSet><Stroke><Point x="zap" y="1"/></Stroke></StrokeSet>)"),
        doctest::Contains("non-numeric"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_stroke_xml("<Nothing/>"), doctest::Contains("StrokeSet"),
                         std::runtime_error);
}

TEST_CASE("record line format round trip") {
    Rng rng(12);
    std::vector<DatasetRecord> records;
    for (int k = 0; k < 100; ++k) {
        DatasetRecord rec;
        rec.id = "rec-" + std::to_string(k);
        if (k % 3 == 0) rec.transcript = "some words " + std::to_string(k);
        StrokeSequence seq = random_sequence(rng, 4, 6, 200.0);
        // keep coordinates on the six-decimal grid the format guarantees
        for (auto& s : seq.strokes)
            for (auto& p : s.points) {
                p.x = std::round(p.x * 1e3) / 1e3;
                p.y = std::round(p.y * 1e3) / 1e3;
            }
        if (k % 4 == 0) seq.eos_suffix = 1 + rng.below(seq.point_count());
        rec.seq = seq;
        records.push_back(std::move(rec));
    }

    auto path = std::filesystem::temp_directory_path() / "strokealign_records.txt";
    write_records(path.string(), records);
    std::vector<DatasetRecord> back = read_records(path.string());
    REQUIRE(back.size() == records.size());
    for (std::size_t k = 0; k < records.size(); ++k) {
        CHECK(back[k].id == records[k].id);
        CHECK(back[k].transcript == records[k].transcript);
        CHECK(back[k].seq.eos_suffix == records[k].seq.eos_suffix);
        REQUIRE(back[k].seq.strokes.size() == records[k].seq.strokes.size());
        auto a = flatten(records[k].seq), b = flatten(back[k].seq);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].y == b[i].y);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("read_records: empty file and malformed lines") {
    auto dir = std::filesystem::temp_directory_path();
    auto empty_path = dir / "strokealign_empty.txt";
    std::ofstream(empty_path.string()).close();
    CHECK(read_records(empty_path.string()).empty());
    std::filesystem::remove(empty_path);

    auto bad_path = dir / "strokealign_bad.txt";
    {
        std::ofstream f(bad_path.string());
        f << "good\t\t0,0;1,1\n";
        f << "truncated\t\t0,\n";
    }
    CHECK_THROWS_WITH_AS(read_records(bad_path.string()), doctest::Contains(":2:"),
                         std::runtime_error);
    std::filesystem::remove(bad_path);

    CHECK_THROWS_AS(read_records("/nonexistent/records.txt"), std::runtime_error);
}

TEST_CASE("record parsing validates markers") {
    CHECK_THROWS_WITH_AS(parse_record_line("a\t\t0,0;1,1,S"),
                         doctest::Contains("sos marker"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_record_line("a\t\t0,0,E;1,1"),
                         doctest::Contains("suffix"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_record_line("a\t\t0,0,Q"), doctest::Contains("marker"),
                         std::runtime_error);
    // S on a stroke head and a trailing eos are fine
    DatasetRecord ok = parse_record_line("a\t\t0,0,S;1,1|2,2,S,E");
    CHECK(ok.seq.strokes.size() == 2);
    CHECK(ok.seq.eos_suffix == 1);
}

TEST_CASE("synth_generate determinism and shape properties") {
    SynthSpec spec{SynthKind::Line, 7, 5, 0.0};
    StrokeSequence a = synth_generate(spec);
    StrokeSequence b = synth_generate(spec);
    CHECK(flatten(a).size() == 5);
    auto fa = flatten(a), fb = flatten(b);
    for (std::size_t k = 0; k < fa.size(); ++k) {
        CHECK(fa[k].x == fb[k].x);
        CHECK(fa[k].y == fb[k].y);
    }

    // jitter-free lines are collinear
    Point p0 = fa.front(), p1 = fa.back();
    for (const auto& p : fa) {
        double cross = (p1.x - p0.x) * (p.y - p0.y) - (p1.y - p0.y) * (p.x - p0.x);
        CHECK(std::fabs(cross) < 1e-9 * (1.0 + std::fabs(p1.x - p0.x) * 100.0));
    }

    StrokeSequence cross_shape = synth_generate({SynthKind::MultiStrokeCross, 3, 24, 0.0});
    CHECK(cross_shape.strokes.size() == 2);
    CHECK(stroke_starts(cross_shape).size() == 2);

    // every kind yields a valid, finite sequence
    for (auto kind : {SynthKind::Line, SynthKind::Arc, SynthKind::Zigzag, SynthKind::Loop,
                      SynthKind::MultiStrokeCross}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            StrokeSequence s = synth_generate({kind, seed, 16, 0.4});
            validate(s);
            CHECK(s.point_count() >= 2);
        }
    }
}
