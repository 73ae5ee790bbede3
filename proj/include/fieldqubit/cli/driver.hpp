#pragma once

#include "fieldqubit/cli/config.hpp"
#include "fieldqubit/cli/generate.hpp"
#include "fieldqubit/cli/tasks.hpp"
#include "fieldqubit/error.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace fieldqubit::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 2;
inline constexpr int exit_numerical = 3;

/// Environment variable that relocates relative output directories.
inline constexpr const char* output_root_variable = "FIELDQUBIT_OUTPUT_ROOT";

enum class Mode { run, generate };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::numerical_failure:
    case ErrorKind::non_identifiable:
    case ErrorKind::non_physical:
        return exit_numerical;
    default:
        return exit_input;
    }
}

inline std::optional<std::string> output_root_from_env() {
    if (const char* v = std::getenv(output_root_variable); v && *v) return std::string(v);
    return std::nullopt;
}

namespace detail {

inline void report_error(std::ostream& err, const std::string& category, const std::string& path,
                         const std::string& message) {
    json j;
    j["status"] = "error";
    j["category"] = category;
    if (!path.empty()) j["path"] = path;
    j["message"] = message;
    err << j.dump() << '\n';
}

inline Context load(const std::filesystem::path& config_path, const std::optional<std::string>& output_root) {
    const std::string text = io::read_file(config_path);
    Context ctx;
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        ctx.config = json::object();
    } else {
        try {
            ctx.config = json::parse(text);
        } catch (const json::parse_error& e) {
            throw SchemaError("", std::string("config is not valid JSON: ") + e.what());
        }
    }
    if (!ctx.config.is_object()) throw SchemaError("", "config must be a JSON object");
    ctx.config_dir = std::filesystem::absolute(config_path).parent_path();
    const Node root = ctx.root();
    root.at("task").choice({"spectrum", "field-sweep", "esr", "echo-fit", "spin-freeze-fit", "telegraph",
                            "hyperpol-sim", "hyperpol-fit"});
    if (root.has("seed")) ctx.seed = root.at("seed").unsigned_integer();
    std::filesystem::path dir = "out";
    if (auto out = root.find("output")) dir = out->string_or("dir", "out");
    if (dir.is_absolute())
        ctx.output_dir = dir;
    else if (output_root)
        ctx.output_dir = std::filesystem::path(*output_root) / dir;
    else
        ctx.output_dir = ctx.config_dir / dir;
    ctx.digest.update(ctx.config.dump());
    return ctx;
}

} // namespace detail

/// Runs or generates from one config file. Status lines go to `out`,
/// machine-readable errors to `err`. Returns the process exit code.
inline int execute(Mode mode, const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
                   const std::optional<std::string>& output_root = output_root_from_env()) {
    try {
        Context ctx = detail::load(config_path, output_root);
        const std::string task = ctx.root().at("task").string();
        json summary;
        if (mode == Mode::run) {
            json body = dispatch_run(task, ctx);
            json report;
            report["task"] = task;
            report["input_digest"] = ctx.digest.hex();
            report["seed"] = ctx.seed;
            for (auto& [k, v] : body.items()) report[k] = v;
            report["artifacts"] = ctx.artifacts;
            io::write_file(ctx.output_dir / "report.json", report.dump(2) + "\n");
            summary["report"] = "report.json";
        } else {
            Generated g = dispatch_generate(task, ctx);
            json truth;
            truth["task"] = task;
            for (auto& [k, v] : g.ground_truth.items()) truth[k] = v;
            ctx.write("ground_truth.json", truth.dump(2) + "\n");
            json fit;
            fit["task"] = task;
            fit["output"] = {{"dir", "fit"}};
            fit["parameters"] = g.fit_parameters;
            ctx.write(task + ".json", fit.dump(2) + "\n");
        }
        summary["status"] = "ok";
        summary["task"] = task;
        summary["output_dir"] = ctx.output_dir.string();
        summary["artifacts"] = ctx.artifacts;
        out << summary.dump() << '\n';
        return exit_ok;
    } catch (const SchemaError& e) {
        detail::report_error(err, "schema", e.path(), e.what());
        return exit_input;
    } catch (const Error& e) {
        detail::report_error(err, to_string(e.kind()), "", e.what());
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        detail::report_error(err, "schema", "", e.what());
        return exit_input;
    } catch (const std::filesystem::filesystem_error& e) {
        detail::report_error(err, "io", "", e.what());
        return exit_input;
    } catch (const std::exception& e) {
        detail::report_error(err, "numerical-failure", "", e.what());
        return exit_numerical;
    }
}

} // namespace fieldqubit::cli
