#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlt/types.hpp"

namespace mlt {

/// All features of one sequence, as ingested from files.
struct SequenceBundle {
    std::vector<Detection> detections;
    std::vector<DptTracklet> dpts;
    int frame_count{0};
    int image_width{0};   // 0 when unknown
    int image_height{0};
};

struct DetectionsFile {
    std::vector<Detection> detections;
    int rejected_rows{0};  // rows dropped for nonpositive extent
};

struct DptFile {
    std::vector<DptTracklet> tracklets;
    int dropped_short{0};  // length-1 tracklets dropped
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

inline double parse_double(const std::string& s, const char* path, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string(path) + ": parse error at line " +
                                 std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const char* path, int line_no) {
    const double v = parse_double(s, path, line_no);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw std::runtime_error(std::string(path) + ": parse error at line " +
                                 std::to_string(line_no) + ": expected integer, got '" + s + "'");
    return i;
}

/// Prints a coordinate with at most two decimals, trailing zeros trimmed.
inline std::string format_coord(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

}  // namespace detail

/// Reads a MOT-layout detection file:
///   frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
/// Top-left corners are converted to box centers. Rows with nonpositive
/// width or height are dropped and counted in the result metadata.
inline DetectionsFile read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open detections file: " + path);
    DetectionsFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() < 7)
            throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                     ": expected at least 7 fields, got " + std::to_string(f.size()));
        Detection d;
        d.frame = detail::parse_int(f[0], path.c_str(), line_no);
        const double left = detail::parse_double(f[2], path.c_str(), line_no);
        const double top = detail::parse_double(f[3], path.c_str(), line_no);
        d.width = detail::parse_double(f[4], path.c_str(), line_no);
        d.height = detail::parse_double(f[5], path.c_str(), line_no);
        d.confidence = detail::parse_double(f[6], path.c_str(), line_no);
        d.center = {left + d.width * 0.5, top + d.height * 0.5};
        if (d.frame < 0)
            throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                     ": negative frame");
        if (d.width <= 0.0 || d.height <= 0.0) {
            ++out.rejected_rows;
            continue;
        }
        out.detections.push_back(d);
    }
    return out;
}

/// Reads the flat DPT file: header-free rows `track_id,frame,x,y,r,g,b`.
/// Rows are grouped by id and frames must be consecutive within a group.
/// Tracklets of length 1 are dropped with a warning count.
inline DptFile read_dpts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open DPT file: " + path);
    std::map<int, DptTracklet> by_id;
    std::vector<int> order;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 7)
            throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                     ": expected 7 fields, got " + std::to_string(f.size()));
        const int id = detail::parse_int(f[0], path.c_str(), line_no);
        DptPoint p;
        p.frame = detail::parse_int(f[1], path.c_str(), line_no);
        p.pos = {detail::parse_double(f[2], path.c_str(), line_no),
                 detail::parse_double(f[3], path.c_str(), line_no)};
        p.color = {detail::parse_double(f[4], path.c_str(), line_no),
                   detail::parse_double(f[5], path.c_str(), line_no),
                   detail::parse_double(f[6], path.c_str(), line_no)};
        if (p.frame < 0)
            throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                     ": negative frame");
        for (double c : {p.color.r, p.color.g, p.color.b})
            if (c < 0.0 || c > 255.0)
                throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                         ": color channel out of [0,255]");
        auto [it, inserted] = by_id.try_emplace(id, DptTracklet{id, {}});
        if (inserted) order.push_back(id);
        auto& trk = it->second;
        if (!trk.points.empty() && p.frame != trk.points.back().frame + 1)
            throw std::runtime_error(path + ": gap in tracklet " + std::to_string(id) +
                                     " at line " + std::to_string(line_no));
        trk.points.push_back(p);
    }
    DptFile out;
    for (int id : order) {
        auto& trk = by_id.at(id);
        if (trk.points.size() < 2) {
            ++out.dropped_short;
            continue;
        }
        out.tracklets.push_back(std::move(trk));
    }
    return out;
}

/// Writes trajectories in the MOT results layout, one row per box, sorted by
/// frame then id. Detected boxes carry conf 1, interpolated/extrapolated 0.5.
inline void write_results(const std::string& path, const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open results file for writing: " + path);
    std::vector<std::pair<int, const Trajectory*>> ids;
    for (const auto& t : trajectories) {
        for (const auto& [id, ptr] : ids)
            if (id == t.id) throw std::runtime_error("write_results: duplicate trajectory id " +
                                                     std::to_string(t.id));
        ids.emplace_back(t.id, &t);
    }
    struct Row { int frame; int id; const TrajectoryBox* box; };
    std::vector<Row> rows;
    for (const auto& t : trajectories)
        for (const auto& b : t.boxes) rows.push_back({b.frame, t.id, &b});
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    for (const auto& r : rows) {
        const auto& b = *r.box;
        out << r.frame << ',' << r.id << ','
            << detail::format_coord(b.center.x - b.width * 0.5) << ','
            << detail::format_coord(b.center.y - b.height * 0.5) << ','
            << detail::format_coord(b.width) << ','
            << detail::format_coord(b.height) << ','
            << (b.provenance == Provenance::detected ? "1" : "0.5")
            << ",-1,-1,-1\n";
    }
    if (!out) throw std::runtime_error("write error: " + path);
}

/// Writes detections in the MOT layout (id -1, raw confidence).
inline void write_detections(const std::string& path, const std::vector<Detection>& dets) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open detections file for writing: " + path);
    for (const auto& d : dets) {
        char conf[64];
        std::snprintf(conf, sizeof(conf), "%.6f", d.confidence);
        std::string c(conf);
        while (!c.empty() && c.back() == '0') c.pop_back();
        if (!c.empty() && c.back() == '.') c.pop_back();
        out << d.frame << ",-1," << detail::format_coord(d.center.x - d.width * 0.5) << ','
            << detail::format_coord(d.center.y - d.height * 0.5) << ','
            << detail::format_coord(d.width) << ',' << detail::format_coord(d.height) << ',' << c
            << ",-1,-1,-1\n";
    }
    if (!out) throw std::runtime_error("write error: " + path);
}

/// Writes the flat DPT layout; colors are serialized as integers.
inline void write_dpts(const std::string& path, const std::vector<DptTracklet>& tracklets) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open DPT file for writing: " + path);
    for (const auto& t : tracklets)
        for (const auto& p : t.points)
            out << t.id << ',' << p.frame << ',' << detail::format_coord(p.pos.x) << ','
                << detail::format_coord(p.pos.y) << ',' << static_cast<int>(p.color.r) << ','
                << static_cast<int>(p.color.g) << ',' << static_cast<int>(p.color.b) << '\n';
    if (!out) throw std::runtime_error("write error: " + path);
}

/// Reads a MOT-layout file with real ids (ground truth or results) into
/// trajectories. conf == 1 marks detected boxes, anything else interpolated.
inline std::vector<Trajectory> read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
    std::map<int, Trajectory> by_id;
    std::vector<int> order;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() < 7)
            throw std::runtime_error(path + ": parse error at line " + std::to_string(line_no) +
                                     ": expected at least 7 fields, got " + std::to_string(f.size()));
        const int frame = detail::parse_int(f[0], path.c_str(), line_no);
        const int id = detail::parse_int(f[1], path.c_str(), line_no);
        TrajectoryBox b;
        b.frame = frame;
        b.width = detail::parse_double(f[4], path.c_str(), line_no);
        b.height = detail::parse_double(f[5], path.c_str(), line_no);
        const double left = detail::parse_double(f[2], path.c_str(), line_no);
        const double top = detail::parse_double(f[3], path.c_str(), line_no);
        b.center = {left + b.width * 0.5, top + b.height * 0.5};
        const double conf = detail::parse_double(f[6], path.c_str(), line_no);
        b.provenance = conf == 1.0 ? Provenance::detected : Provenance::interpolated;
        auto [it, inserted] = by_id.try_emplace(id, Trajectory{id, {}, -1});
        if (inserted) order.push_back(id);
        it->second.boxes.push_back(b);
    }
    std::vector<Trajectory> out;
    for (int id : order) {
        auto& t = by_id.at(id);
        std::sort(t.boxes.begin(), t.boxes.end(),
                  [](const TrajectoryBox& a, const TrajectoryBox& b) { return a.frame < b.frame; });
        out.push_back(std::move(t));
    }
    return out;
}

/// Parses the JSON configuration. Missing keys take defaults, unknown keys
/// and type mismatches are errors.
inline TrackerConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("config: top level must be a JSON object");
    TrackerConfig cfg;

    auto get_number = [&](const char* key, double& slot) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number())
            throw std::runtime_error(std::string("config: key '") + key + "' must be a number");
        slot = j.at(key).get<double>();
    };
    auto get_int = [&](const char* key, int& slot) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer())
            throw std::runtime_error(std::string("config: key '") + key + "' must be an integer");
        slot = j.at(key).get<int>();
    };

    static const char* known[] = {
        "v_max", "a_max", "f_max", "sigma_dist", "mu_dist", "sigma_angle", "batch_len",
        "ncut_runs", "k_sweep_halfwidth", "affinity_floor", "c_in", "c_out",
        "confidence_epsilon", "static_dpt_threshold", "direction_variance_threshold",
        "iou_match_threshold", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw std::runtime_error("config: unknown key '" + it.key() + "'");
    }

    get_number("v_max", cfg.v_max);
    get_number("a_max", cfg.a_max);
    get_int("f_max", cfg.f_max);
    get_number("sigma_dist", cfg.sigma_dist);
    get_number("mu_dist", cfg.mu_dist);
    get_number("sigma_angle", cfg.sigma_angle);
    get_int("batch_len", cfg.batch_len);
    get_int("ncut_runs", cfg.ncut_runs);
    get_int("k_sweep_halfwidth", cfg.k_sweep_halfwidth);
    get_number("affinity_floor", cfg.affinity_floor);
    get_number("c_in", cfg.c_in);
    get_number("c_out", cfg.c_out);
    get_number("confidence_epsilon", cfg.confidence_epsilon);
    get_number("static_dpt_threshold", cfg.static_dpt_threshold);
    get_number("direction_variance_threshold", cfg.direction_variance_threshold);
    get_number("iou_match_threshold", cfg.iou_match_threshold);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0)
            throw std::runtime_error("config: key 'seed' must be a nonnegative integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }

    auto require = [](bool cond, const char* msg) {
        if (!cond) throw std::runtime_error(std::string("config: ") + msg);
    };
    require(cfg.v_max > 0.0, "v_max must be > 0");
    require(cfg.a_max > 0.0, "a_max must be > 0");
    require(cfg.f_max >= 1, "f_max must be >= 1");
    require(cfg.sigma_dist > 0.0, "sigma_dist must be > 0");
    require(cfg.mu_dist >= 0.0, "mu_dist must be >= 0");
    require(cfg.sigma_angle > 0.0, "sigma_angle must be > 0");
    require(cfg.batch_len >= 2, "batch_len must be >= 2");
    require(cfg.ncut_runs >= 1, "ncut_runs must be >= 1");
    require(cfg.k_sweep_halfwidth >= 0, "k_sweep_halfwidth must be >= 0");
    require(cfg.affinity_floor >= 0.0 && cfg.affinity_floor < 1.0, "affinity_floor must be in [0,1)");
    require(cfg.confidence_epsilon > 0.0 && cfg.confidence_epsilon < 0.5,
            "confidence_epsilon must be in (0,0.5)");
    require(cfg.static_dpt_threshold >= 0.0, "static_dpt_threshold must be >= 0");
    require(cfg.direction_variance_threshold >= 0.0, "direction_variance_threshold must be >= 0");
    require(cfg.iou_match_threshold > 0.0 && cfg.iou_match_threshold <= 1.0,
            "iou_match_threshold must be in (0,1]");
    return cfg;
}

inline TrackerConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config: invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace mlt
