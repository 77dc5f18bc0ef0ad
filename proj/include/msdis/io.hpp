/*
 * Copyright (c) 2026, the msdis authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msdis/calibration.hpp"
#include "msdis/common.hpp"
#include "msdis/detector.hpp"
#include "msdis/harness.hpp"

namespace msdis {

/// Shortest decimal form that parses back to the same double, so emitted
/// files are byte-stable across runs.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "snr_db,pd,pd_halfwidth,rmse_m,n_associated,mean_count\n";
    for (const MetricsRow& row : rows) {
        out += format_double(row.snr_db);
        out += ',';
        out += format_double(row.pd);
        out += ',';
        out += format_double(row.pd_halfwidth);
        out += ',';
        out += format_double(row.rmse_m);
        out += ',';
        out += std::to_string(row.n_associated);
        out += ',';
        out += format_double(row.mean_count);
        out += '\n';
    }
    return out;
}

inline nlohmann::json record_to_json(const TrialRecord& rec) {
    nlohmann::json j;
    j["snr_db"] = rec.snr_db;
    j["trial"] = rec.trial;
    j["seed"] = rec.seed;
    j["detected"] = rec.detected;
    if (std::isnan(rec.error_m))
        j["error_m"] = nullptr;
    else
        j["error_m"] = rec.error_m;
    j["count"] = rec.reported_count;
    j["termination"] = to_string(rec.termination);
    return j;
}

/// One compact JSON object per line, in trial order.
inline std::string records_jsonl(const std::vector<TrialRecord>& records) {
    std::string out;
    for (const TrialRecord& rec : records) {
        out += record_to_json(rec).dump();
        out += '\n';
    }
    return out;
}

/// Thresholds produced by one calibration run: the subspace penalty and the
/// matched-filter threshold at the same false-alarm target.
struct CalibrationFile {
    CalibrationResult result;
    double mf_threshold = 0.0;
};

inline nlohmann::json calibration_to_json(const CalibrationFile& file) {
    nlohmann::json j;
    j["eta"] = file.result.eta;
    j["target_pfa"] = file.result.target_pfa;
    j["achieved_pfa"] = file.result.achieved_pfa;
    j["achieved_halfwidth"] = file.result.achieved_halfwidth;
    j["trials"] = file.result.trials;
    j["seed"] = file.result.seed;
    j["method"] = file.result.method;
    j["mf_threshold"] = file.mf_threshold;
    return j;
}

inline CalibrationFile calibration_from_json(const nlohmann::json& j) {
    CalibrationFile file;
    try {
        file.result.eta = j.at("eta").get<double>();
        file.result.target_pfa = j.at("target_pfa").get<double>();
        file.result.achieved_pfa = j.at("achieved_pfa").get<double>();
        file.result.achieved_halfwidth = j.at("achieved_halfwidth").get<double>();
        file.result.trials = j.at("trials").get<int>();
        file.result.seed = j.at("seed").get<std::uint64_t>();
        file.result.method = j.at("method").get<std::string>();
        file.mf_threshold = j.at("mf_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad calibration file: ") + e.what());
    }
    return file;
}

inline std::string serialize_calibration(const CalibrationFile& file) {
    return calibration_to_json(file).dump(2) + "\n";
}

inline CalibrationFile parse_calibration(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("calibration file is not valid JSON: ") + e.what());
    }
    return calibration_from_json(j);
}

inline nlohmann::json report_to_json(const DetectionReport& report) {
    nlohmann::json j;
    j["targets"] = nlohmann::json::array();
    for (const TargetEstimate& t : report.targets) {
        nlohmann::json gains = nlohmann::json::array();
        for (Index n = 0; n < t.gains.rows(); ++n) {
            nlohmann::json row = nlohmann::json::array();
            for (Index p = 0; p < t.gains.cols(); ++p)
                row.push_back({t.gains(n, p).real(), t.gains(n, p).imag()});
            gains.push_back(row);
        }
        j["targets"].push_back({{"x", t.location.x()},
                                {"y", t.location.y()},
                                {"score", t.score},
                                {"iteration", t.iteration},
                                {"gain_rank_deficient", t.gain_rank_deficient},
                                {"gains", gains}});
    }
    j["termination"] = to_string(report.termination);
    j["tests_run"] = report.tests_run;
    if (!report.score_maps.empty()) {
        j["score_maps"] = nlohmann::json::array();
        for (const ScoreMap& map : report.score_maps)
            j["score_maps"].push_back({{"iteration", map.iteration}, {"scores", map.scores}});
    }
    return j;
}

inline nlohmann::json scoremap_to_json(const ScoreMapBundle& bundle, const SearchGrid& grid) {
    nlohmann::json j;
    j["grid"] = {{"spacing", grid.spacing}, {"points", nlohmann::json::array()}};
    for (const Vec2& p : grid.points) j["grid"]["points"].push_back({p.x(), p.y()});
    j["truths"] = nlohmann::json::array();
    for (const Vec2& t : bundle.truths) j["truths"].push_back({t.x(), t.y()});
    j["snr_db"] = bundle.snr_db;
    j["seed"] = bundle.seed;
    j["msdis"] = report_to_json(bundle.msdis);
    j["jdl-sic"] = report_to_json(bundle.jdl);
    return j;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << content;
    if (!out) throw UsageError("failed while writing '" + path + "'");
}

}  // namespace msdis
