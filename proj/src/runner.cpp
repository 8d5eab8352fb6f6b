#include "flsim/runner.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "flsim/config.hpp"
#include "flsim/errors.hpp"

namespace fs = std::filesystem;

namespace flsim {

namespace {

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_metrics_csv(const std::vector<RoundMetrics>& metrics, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "round,test_accuracy,backdoor_success,skipped,num_filtered\n";
    for (const RoundMetrics& m : metrics) {
        out << m.round << ',' << format_double(m.test_accuracy) << ',';
        if (m.backdoor_success) {
            out << format_double(*m.backdoor_success);
        }
        out << ',' << (m.aggregate_skipped ? 1 : 0) << ',' << m.filtered_ids.size() << '\n';
    }
    if (!out) throw io_error("short write to " + path.string());
}

void write_scores_jsonl(const std::vector<RoundMetrics>& metrics, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    for (const RoundMetrics& m : metrics) {
        nlohmann::json row;
        row["round"] = m.round;
        row["skipped"] = m.aggregate_skipped;
        nlohmann::json scores = nlohmann::json::object();
        for (const auto& [id, s] : m.per_client_scores) {
            scores[std::to_string(id)] = s;
        }
        row["scores"] = scores;
        row["filtered"] = m.filtered_ids;
        out << row.dump() << '\n';
    }
    if (!out) throw io_error("short write to " + path.string());
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_run_outputs(const ExperimentConfig& cfg, const std::vector<RoundMetrics>& metrics,
                       const std::string& out_dir, const std::string& started,
                       const std::string& finished) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + out_dir + ": " + ec.message());

    write_metrics_csv(metrics, dir / "metrics.csv");
    write_scores_jsonl(metrics, dir / "scores.jsonl");

    nlohmann::json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["config"] = config_to_json(cfg);
    manifest["started"] = started;
    manifest["finished"] = finished;
    manifest["outputs"] = {{"metrics", "metrics.csv"}, {"scores", "scores.jsonl"}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw io_error("cannot open manifest.json for writing");
    out << manifest.dump(2) << '\n';
    if (!out) throw io_error("short write to manifest.json");
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    ExperimentConfig cfg;
    try {
        cfg = parse_config(config_path);
    } catch (const error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    try {
        const std::string started = timestamp_utc();
        const auto metrics = run_experiment(cfg);
        write_run_outputs(cfg, metrics, out_dir, started, timestamp_utc());
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, const std::string& out_dir) {
    ExperimentConfig base;
    SweepAxis parsed_axis;
    try {
        base = parse_config(config_path);
        parsed_axis = parse_sweep_axis(axis);
        if (values.empty()) {
            throw config_error("sweep: empty value list");
        }
        for (double v : values) {
            validate_config(apply_sweep_value(base, parsed_axis, v));
        }
    } catch (const error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw io_error("cannot create " + out_dir + ": " + ec.message());

        std::ofstream summary(dir / "summary.csv", std::ios::binary);
        if (!summary) throw io_error("cannot open summary.csv for writing");
        summary << "value,final_accuracy,final_backdoor_success\n";

        for (double v : values) {
            const ExperimentConfig cfg = apply_sweep_value(base, parsed_axis, v);
            char tag[64];
            std::snprintf(tag, sizeof(tag), "%s=%g", axis.c_str(), v);
            const std::string started = timestamp_utc();
            const auto metrics = run_experiment(cfg);
            write_run_outputs(cfg, metrics, (dir / tag).string(), started, timestamp_utc());

            const RoundMetrics& last = metrics.back();
            summary << format_double(v) << ',' << format_double(last.test_accuracy) << ',';
            if (last.backdoor_success) {
                summary << format_double(*last.backdoor_success);
            }
            summary << '\n';
        }
        if (!summary) throw io_error("short write to summary.csv");
    } catch (const std::exception& e) {
        std::cerr << "sweep failed: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace flsim
