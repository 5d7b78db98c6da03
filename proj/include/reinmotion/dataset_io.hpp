#pragma once

// Motion directories: one motion file per sequence plus index.json listing file
// names, condition ids and (for generated data) artifact records.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reinmotion/metrics.hpp"
#include "reinmotion/motion_io.hpp"
#include "reinmotion/synthdata.hpp"

namespace reinmotion {

inline constexpr const char* kIndexFile = "index.json";

inline std::string numbered_name(const std::string& prefix, std::size_t i, std::size_t count) {
    const std::size_t digits = std::max<std::size_t>(4, std::to_string(count > 0 ? count - 1 : 0).size());
    std::ostringstream os;
    os << prefix << std::setw(static_cast<int>(digits)) << std::setfill('0') << i << ".json";
    return os.str();
}

inline nlohmann::json to_json(const ArtifactRecord& r) {
    nlohmann::json j{{"expected", to_json(r.expected)}, {"target_reward_drop", r.target_reward_drop}};
    if (r.spec) {
        j["kind"] = to_string(r.spec->kind);
        j["first_frame"] = r.spec->first_frame;
        j["last_frame"] = r.spec->last_frame;
        j["magnitude"] = r.spec->magnitude;
    } else {
        j["kind"] = nullptr;
    }
    return j;
}

inline ArtifactRecord artifact_record_from_json(const nlohmann::json& j) {
    ArtifactRecord r;
    r.expected = sample_metrics_from_json(j.at("expected"));
    r.target_reward_drop = j.at("target_reward_drop").get<std::vector<double>>();
    if (!j.at("kind").is_null()) {
        r.spec = ArtifactSpec{artifact_kind_from_string(j.at("kind").get<std::string>()),
                              j.at("first_frame").get<std::size_t>(), j.at("last_frame").get<std::size_t>(),
                              j.at("magnitude").get<double>()};
    }
    return r;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create directory " + dir.string() + (ec ? ": " + ec.message() : ""));
    }
}

/// Writes motion_XXXX.json files and index.json. `extra` is merged into the index.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir, const nlohmann::json& extra = {}) {
    ensure_directory(dir);
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.batch.size(); ++i) {
        const std::string name = numbered_name("motion_", i, ds.batch.size());
        write_motion(ds.batch.sequences[i], dir / name);
        const int c = ds.batch.condition_ids[i];
        nlohmann::json e{{"file", name}, {"condition_id", c}};
        if (c >= 0 && static_cast<std::size_t>(c) < ds.class_names.size()) e["condition"] = ds.class_names[c];
        if (i < ds.records.size()) e["artifact"] = to_json(ds.records[i]);
        entries.push_back(std::move(e));
    }
    nlohmann::json index{{"version", 1}, {"class_names", ds.class_names}, {"entries", std::move(entries)}};
    if (extra.is_object()) {
        for (auto it = extra.begin(); it != extra.end(); ++it) index[it.key()] = it.value();
    }
    write_text_file(dir / kIndexFile, index.dump(2) + "\n");
}

struct LoadedDataset {
    Dataset data;
    std::vector<std::string> files;
    bool has_records = false;
};

inline nlohmann::json read_index(const std::filesystem::path& dir) {
    try {
        return nlohmann::json::parse(read_text_file(dir / kIndexFile));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument((dir / kIndexFile).string() + ": " + e.what());
    }
}

/// Reads a directory written by write_dataset (or by the sample command).
inline LoadedDataset read_dataset(const std::filesystem::path& dir) {
    const nlohmann::json index = read_index(dir);
    LoadedDataset out;
    try {
        out.data.class_names = index.at("class_names").get<std::vector<std::string>>();
        out.has_records = true;
        for (const auto& e : index.at("entries")) {
            const std::string file = e.at("file").get<std::string>();
            out.files.push_back(file);
            out.data.batch.sequences.push_back(read_motion(dir / file));
            out.data.batch.condition_ids.push_back(e.at("condition_id").get<int>());
            if (e.contains("artifact")) {
                out.data.records.push_back(artifact_record_from_json(e.at("artifact")));
            } else {
                out.has_records = false;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument((dir / kIndexFile).string() + ": " + e.what());
    }
    if (!out.has_records) out.data.records.clear();
    out.data.batch.validate();
    return out;
}

}  // namespace reinmotion
