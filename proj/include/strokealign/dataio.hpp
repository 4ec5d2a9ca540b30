#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokealign/stroke.hpp"

namespace strokealign {

struct DatasetRecord {
    std::string id;
    StrokeSequence seq;
    std::optional<std::string> transcript;
};

/// Parses an IAM-On style XML document: one Stroke per StrokeSet/Stroke
/// element, points in document order, time attributes validated but
/// dropped. The record id is left empty for the caller to assign.
DatasetRecord parse_stroke_xml(const std::string& xml);

/// Line-delimited record format, one record per line:
///   id<TAB>transcript<TAB>strokes
/// where strokes is `x,y[,S][,E];x,y;...|x,y;...` — `|` separates strokes,
/// `;` separates points, S/E mark sos/eos. Coordinates carry up to six
/// fractional digits. An empty transcript field means no transcript.
std::string format_record(const DatasetRecord& rec);
DatasetRecord parse_record_line(const std::string& line);

std::vector<DatasetRecord> read_records(const std::string& path);
void write_records(const std::string& path, std::span<const DatasetRecord> records);

enum class SynthKind { Line, Arc, Zigzag, Loop, MultiStrokeCross };

struct SynthSpec {
    SynthKind kind = SynthKind::Line;
    std::uint64_t seed = 0;
    std::size_t n_points = 32;
    double jitter = 0.0;
};

SynthKind synth_kind_from_string(const std::string& name);

/// Deterministic synthetic stroke sequence: a pure function of the spec.
/// The seed drives placement and size; jitter adds seeded Gaussian noise.
StrokeSequence synth_generate(const SynthSpec& spec);

}  // namespace strokealign
