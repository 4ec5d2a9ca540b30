#include "strokealign/dataio.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "strokealign/rng.hpp"

namespace strokealign {

namespace {

double parse_number(std::string_view text, const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw std::runtime_error(std::string("non-numeric ") + what + ": '" +
                                 std::string(text) + "'");
    return value;
}

/// Fixed six fractional digits with trailing zeros trimmed.
std::string format_coord(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
    std::string s(buf, ptr);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t at = 0;
    while (true) {
        std::size_t next = text.find(sep, at);
        if (next == std::string_view::npos) {
            out.push_back(text.substr(at));
            return out;
        }
        out.push_back(text.substr(at, next - at));
        at = next + 1;
    }
}

const boost::property_tree::ptree* find_node(const boost::property_tree::ptree& pt,
                                             const std::string& name) {
    for (const auto& [key, child] : pt) {
        if (key == name) return &child;
        if (const auto* found = find_node(child, name)) return found;
    }
    return nullptr;
}

}  // namespace

DatasetRecord parse_stroke_xml(const std::string& xml) {
    namespace bpt = boost::property_tree;
    bpt::ptree pt;
    std::istringstream is(xml);
    try {
        bpt::read_xml(is, pt);
    } catch (const bpt::xml_parser_error& err) {
        throw std::runtime_error(std::string("malformed xml: ") + err.what());
    }

    const bpt::ptree* stroke_set = find_node(pt, "StrokeSet");
    if (stroke_set == nullptr) throw std::runtime_error("empty stroke set: no StrokeSet element");

    DatasetRecord rec;
    for (const auto& [key, stroke_node] : *stroke_set) {
        if (key != "Stroke") continue;
        Stroke stroke;
        for (const auto& [pkey, point_node] : stroke_node) {
            if (pkey != "Point") continue;
            auto attrs = point_node.get_child_optional("<xmlattr>");
            if (!attrs) throw std::runtime_error("point without attributes");
            auto x = attrs->get_optional<std::string>("x");
            auto y = attrs->get_optional<std::string>("y");
            if (!x || !y) throw std::runtime_error("point missing x or y attribute");
            Point p{parse_number(*x, "point attribute"), parse_number(*y, "point attribute")};
            if (auto t = attrs->get_optional<std::string>("time"))
                parse_number(*t, "time attribute");  // validated, then dropped
            stroke.points.push_back(p);
        }
        if (stroke.points.empty()) throw std::runtime_error("stroke with no points");
        rec.seq.strokes.push_back(std::move(stroke));
    }
    if (rec.seq.strokes.empty()) throw std::runtime_error("empty stroke set");
    validate(rec.seq);
    return rec;
}

std::string format_record(const DatasetRecord& rec) {
    if (rec.id.empty()) throw std::invalid_argument("record id is empty");
    if (rec.id.find_first_of("\t\n") != std::string::npos)
        throw std::invalid_argument("record id contains tab or newline");
    if (rec.transcript && rec.transcript->find_first_of("\t\n") != std::string::npos)
        throw std::invalid_argument("transcript contains tab or newline");
    validate(rec.seq);

    std::string out = rec.id;
    out += '\t';
    if (rec.transcript) out += *rec.transcript;
    out += '\t';
    std::size_t n = rec.seq.point_count();
    std::size_t flat = 0;
    for (std::size_t s = 0; s < rec.seq.strokes.size(); ++s) {
        if (s > 0) out += '|';
        const auto& points = rec.seq.strokes[s].points;
        for (std::size_t k = 0; k < points.size(); ++k, ++flat) {
            if (k > 0) out += ';';
            out += format_coord(points[k].x);
            out += ',';
            out += format_coord(points[k].y);
            if (k == 0) out += ",S";
            if (flat + rec.seq.eos_suffix >= n) out += ",E";
        }
    }
    return out;
}

DatasetRecord parse_record_line(const std::string& line) {
    std::vector<std::string_view> fields = split(line, '\t');
    if (fields.size() != 3)
        throw std::runtime_error("expected 3 tab-separated fields, got " +
                                 std::to_string(fields.size()));
    DatasetRecord rec;
    rec.id = std::string(fields[0]);
    if (rec.id.empty()) throw std::runtime_error("empty record id");
    if (!fields[1].empty()) rec.transcript = std::string(fields[1]);
    if (fields[2].empty()) throw std::runtime_error("empty stroke data");

    std::size_t flat = 0;
    std::vector<std::size_t> eos_indices;
    for (std::string_view stroke_text : split(fields[2], '|')) {
        Stroke stroke;
        std::size_t point_in_stroke = 0;
        for (std::string_view point_text : split(stroke_text, ';')) {
            std::vector<std::string_view> parts = split(point_text, ',');
            if (parts.size() < 2) throw std::runtime_error("truncated point record");
            Point p{parse_number(parts[0], "coordinate"), parse_number(parts[1], "coordinate")};
            for (std::size_t k = 2; k < parts.size(); ++k) {
                if (parts[k] == "S") {
                    if (point_in_stroke != 0)
                        throw std::runtime_error("sos marker not at a stroke start");
                } else if (parts[k] == "E") {
                    eos_indices.push_back(flat);
                } else {
                    throw std::runtime_error("unknown point marker: '" + std::string(parts[k]) +
                                             "'");
                }
            }
            stroke.points.push_back(p);
            ++flat;
            ++point_in_stroke;
        }
        if (stroke.points.empty()) throw std::runtime_error("empty stroke");
        rec.seq.strokes.push_back(std::move(stroke));
    }

    if (!eos_indices.empty()) {
        for (std::size_t k = 0; k < eos_indices.size(); ++k)
            if (eos_indices[k] != flat - eos_indices.size() + k)
                throw std::runtime_error("eos markers do not form a suffix");
        rec.seq.eos_suffix = eos_indices.size();
    }
    validate(rec.seq);
    return rec;
}

std::vector<DatasetRecord> read_records(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<DatasetRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(parse_record_line(line));
        } catch (const std::exception& err) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + err.what());
        }
    }
    return out;
}

void write_records(const std::string& path, std::span<const DatasetRecord> records) {
    std::ofstream f(path, std::ios::binary);  // binary: keep \n exact
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& rec : records) f << format_record(rec) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

SynthKind synth_kind_from_string(const std::string& name) {
    if (name == "line") return SynthKind::Line;
    if (name == "arc") return SynthKind::Arc;
    if (name == "zigzag") return SynthKind::Zigzag;
    if (name == "loop") return SynthKind::Loop;
    if (name == "cross") return SynthKind::MultiStrokeCross;
    throw std::invalid_argument("unknown synth kind: " + name);
}

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

Stroke sampled_curve(std::size_t n, const std::function<Point(double)>& curve) {
    Stroke s;
    s.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        s.points.push_back(curve(static_cast<double>(k) / static_cast<double>(n - 1)));
    return s;
}

}  // namespace

StrokeSequence synth_generate(const SynthSpec& spec) {
    std::size_t n = std::max<std::size_t>(2, spec.n_points);
    Rng rng(spec.seed);
    StrokeSequence seq;

    switch (spec.kind) {
        case SynthKind::Line: {
            double y0 = 15.0 + 30.0 * rng.uniform();
            double len = 60.0 + 60.0 * rng.uniform();
            double angle = (rng.uniform() - 0.5) * 0.6;
            double dx = len * std::cos(angle), dy = len * std::sin(angle);
            seq.strokes.push_back(
                sampled_curve(n, [&](double t) { return Point{t * dx, y0 + t * dy}; }));
            break;
        }
        case SynthKind::Arc: {
            double r = 20.0 + 20.0 * rng.uniform();
            double cy = 30.0 + 10.0 * (rng.uniform() - 0.5);
            seq.strokes.push_back(sampled_curve(n, [&](double t) {
                double a = kTau / 2.0 * (1.0 - t);
                return Point{r + r * std::cos(a), cy - r * std::sin(a)};
            }));
            break;
        }
        case SynthKind::Zigzag: {
            double w = 25.0 + 15.0 * rng.uniform();
            double h = 15.0 + 15.0 * rng.uniform();
            double y0 = 30.0;
            Stroke corners;
            corners.points = {{0.0, y0}, {w, y0 - h}, {2.0 * w, y0 + h}, {3.0 * w, y0 - h}};
            StrokeSequence tmp;
            tmp.strokes.push_back(corners);
            seq = resample_equidistant(tmp, n);
            break;
        }
        case SynthKind::Loop: {
            double r = 18.0 + 12.0 * rng.uniform();
            double cx = r * 2.2, cy = 30.0;
            seq.strokes.push_back(sampled_curve(n, [&](double t) {
                double a = kTau * t;
                return Point{cx + 2.0 * r * std::sin(a), cy + r * std::sin(2.0 * a)};
            }));
            break;
        }
        case SynthKind::MultiStrokeCross: {
            double height = 30.0 + 10.0 * rng.uniform();
            double bar_y = 10.0 + 0.3 * height;
            double bar_half = 10.0 + 6.0 * rng.uniform();
            std::size_t n1 = std::max<std::size_t>(2, 2 * n / 3);
            std::size_t n2 = std::max<std::size_t>(2, n - n1);
            seq.strokes.push_back(sampled_curve(
                n1, [&](double t) { return Point{bar_half, 10.0 + t * height}; }));
            seq.strokes.push_back(sampled_curve(
                n2, [&](double t) { return Point{2.0 * bar_half * t, bar_y}; }));
            break;
        }
    }

    if (spec.jitter > 0.0) {
        for (auto& s : seq.strokes)
            for (auto& p : s.points) {
                p.x += rng.normal(0.0, spec.jitter);
                p.y += rng.normal(0.0, spec.jitter);
            }
    }
    return seq;
}

}  // namespace strokealign
