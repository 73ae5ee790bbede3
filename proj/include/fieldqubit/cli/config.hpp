#pragma once

#include "fieldqubit/error.hpp"
#include "fieldqubit/io/csv.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fieldqubit::cli {

using json = nlohmann::ordered_json;

/// Seed used when a config does not set one.
inline constexpr std::uint64_t default_seed = 20240917;

/// Config violates the task schema; `path` names the offending field.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Read-only view of a config subtree that remembers its dotted path.
class Node {
public:
    Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

    const json& raw() const { return *value_; }
    const std::string& path() const { return path_; }

    std::string child_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(std::string_view key) const {
        return value_->is_object() && value_->contains(std::string(key)) && !(*value_)[std::string(key)].is_null();
    }

    Node at(std::string_view key) const {
        if (!value_->is_object()) throw SchemaError(path_.empty() ? std::string(key) : path_, "expected an object");
        const auto it = value_->find(std::string(key));
        if (it == value_->end() || it->is_null()) throw SchemaError(child_path(key), "missing required key");
        return {*it, child_path(key)};
    }

    std::optional<Node> find(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return at(key);
    }

    Node index(std::size_t i) const {
        return {(*value_)[i], path_ + "[" + std::to_string(i) + "]"};
    }

    std::size_t size() const {
        if (!value_->is_array()) throw SchemaError(path_, "expected an array");
        return value_->size();
    }

    double number() const {
        if (!value_->is_number()) throw SchemaError(path_, "expected a number");
        const double v = value_->get<double>();
        if (!std::isfinite(v)) throw SchemaError(path_, "expected a finite number");
        return v;
    }

    double positive() const {
        const double v = number();
        if (!(v > 0.0)) throw SchemaError(path_, "must be > 0");
        return v;
    }

    double non_negative() const {
        const double v = number();
        if (v < 0.0) throw SchemaError(path_, "must be >= 0");
        return v;
    }

    long integer() const {
        if (!value_->is_number_integer()) throw SchemaError(path_, "expected an integer");
        return value_->get<long>();
    }

    std::uint64_t unsigned_integer() const {
        if (!value_->is_number_integer() || (value_->is_number_integer() && !value_->is_number_unsigned() &&
                                             value_->get<long long>() < 0))
            throw SchemaError(path_, "expected a non-negative integer");
        return value_->get<std::uint64_t>();
    }

    bool boolean() const {
        if (!value_->is_boolean()) throw SchemaError(path_, "expected true or false");
        return value_->get<bool>();
    }

    std::string string() const {
        if (!value_->is_string()) throw SchemaError(path_, "expected a string");
        return value_->get<std::string>();
    }

    std::string choice(std::initializer_list<std::string_view> options) const {
        const std::string s = string();
        for (auto o : options)
            if (s == o) return s;
        std::string list;
        for (auto o : options) list += (list.empty() ? "" : ", ") + std::string(o);
        throw SchemaError(path_, "unknown value '" + s + "' (expected one of: " + list + ")");
    }

    std::vector<double> numbers() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) out.push_back(index(i).number());
        return out;
    }

    double number_or(std::string_view key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    double positive_or(std::string_view key, double fallback) const {
        return has(key) ? at(key).positive() : fallback;
    }
    long integer_or(std::string_view key, long fallback) const { return has(key) ? at(key).integer() : fallback; }
    bool boolean_or(std::string_view key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }
    std::string string_or(std::string_view key, std::string fallback) const {
        return has(key) ? at(key).string() : fallback;
    }

private:
    const json* value_;
    std::string path_;
};

/// Either an explicit `values` array or a `{start, stop, points}` grid.
inline std::vector<double> grid(const Node& n) {
    if (n.raw().is_array()) return n.numbers();
    if (n.has("values")) return n.at("values").numbers();
    const double start = n.at("start").number();
    const double stop = n.at("stop").number();
    const long points = n.at("points").integer();
    if (points < 1) throw SchemaError(n.child_path("points"), "must be >= 1");
    if (points == 1) return {start};
    std::vector<double> out(static_cast<std::size_t>(points));
    for (long i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
    return out;
}

/// 64-bit FNV-1a.
class Digest {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            hash_ ^= c;
            hash_ *= 0x100000001b3ULL;
        }
    }
    std::string hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s(16, '0');
        std::uint64_t h = hash_;
        for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
        return "fnv1a64:" + s;
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

/// Run context shared by all tasks: parsed config, directories, seed.
struct Context {
    json config;
    std::filesystem::path config_dir;
    std::filesystem::path output_dir;
    std::uint64_t seed = default_seed;
    Digest digest;
    std::vector<std::string> artifacts;

    Node root() const { return {config, ""}; }
    Node parameters() const { return root().at("parameters"); }

    /// Data paths in a config are relative to the config's directory.
    std::filesystem::path input_path(const Node& n) const {
        std::filesystem::path p = n.string();
        return p.is_absolute() ? p : config_dir / p;
    }

    io::CsvTable read_table(const Node& n) {
        const auto path = input_path(n);
        const std::string text = io::read_file(path);
        digest.update(text);
        return io::parse_csv(text, path.filename().string());
    }

    void write(const std::string& name, std::string_view text) {
        io::write_file(output_dir / name, text);
        artifacts.push_back(name);
    }
};

inline json quantity(double value, std::string_view unit) {
    json j;
    j["value"] = value;
    j["unit"] = unit;
    return j;
}

inline json quantity(double value, double std_error, std::string_view unit) {
    json j = quantity(value, unit);
    j["std_error"] = std_error;
    return j;
}

} // namespace fieldqubit::cli
