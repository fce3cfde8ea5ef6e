#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "splitlab/types.hpp"

namespace splitlab::harness {

/// Output directory not creatable or file not writable.
class IoError : public Error {
public:
    using Error::Error;
};

/// 17 significant digits, '.' decimal, no grouping; nan / inf / -inf spelled out.
std::string format_real(double v);

/// CSV body with "# key: value" comment lines on top. The first comment is
/// always the config hash.
class CsvTable {
public:
    CsvTable(std::string config_hash, std::vector<std::string> columns);

    void meta(const std::string& key, const std::string& value);
    void add_row(std::vector<std::string> cells);
    std::string render() const;

    static std::string cell(double v) { return format_real(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(std::string v) { return v; }

private:
    std::string hash_;
    std::vector<std::string> columns_;
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<std::vector<std::string>> rows_;
};

/// Real as JSON: null when not finite.
nlohmann::json json_real(double v);

/// Writes files under one directory and remembers them for the manifest.
class OutputDir {
public:
    OutputDir(std::string path, std::string config_hash);

    /// Writes `name` (relative) and returns its full path.
    std::string write(const std::string& name, const std::string& content);
    std::string write_json(const std::string& name, const nlohmann::json& body);

    /// manifest.json: config hash, versions, command and every file written
    /// so far with its size and FNV-1a digest. Call once, last.
    std::string write_manifest(const std::string& command, const nlohmann::json& spec);

    const std::string& path() const noexcept { return path_; }
    const std::vector<std::string>& files() const noexcept { return names_; }

private:
    std::string path_;
    std::string hash_;
    std::vector<std::string> names_;
    std::vector<std::pair<std::size_t, std::string>> digests_;
};

nlohmann::json version_info();

}  // namespace splitlab::harness
