#include "splitlab/harness/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>

#include "splitlab/harness/config.hpp"

namespace splitlab::harness {

namespace fs = std::filesystem;

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(17);
    s << v;
    return s.str();
}

CsvTable::CsvTable(std::string config_hash, std::vector<std::string> columns)
    : hash_(std::move(config_hash)), columns_(std::move(columns)) {}

void CsvTable::meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw UsageError("CSV row has the wrong number of cells");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::render() const {
    std::string out = "# config_hash: " + hash_ + "\n";
    for (const auto& [k, v] : meta_) out += "# " + k + ": " + v + "\n";
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
}

nlohmann::json json_real(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

OutputDir::OutputDir(std::string path, std::string config_hash) : path_(std::move(path)), hash_(std::move(config_hash)) {
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec || !fs::is_directory(path_)) throw IoError("cannot create output directory '" + path_ + "'");
}

std::string OutputDir::write(const std::string& name, const std::string& content) {
    const fs::path full = fs::path(path_) / name;
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + full.string() + "'");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + full.string() + "'");
    names_.push_back(name);
    digests_.emplace_back(content.size(), fnv1a_hex(content));
    return full.string();
}

std::string OutputDir::write_json(const std::string& name, const nlohmann::json& body) {
    return write(name, body.dump(2) + "\n");
}

nlohmann::json version_info() {
    return {
        {"splitlab", SPLITLAB_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__},
    };
}

std::string OutputDir::write_manifest(const std::string& command, const nlohmann::json& spec) {
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < names_.size(); ++i) {
        files.push_back({{"path", names_[i]}, {"bytes", digests_[i].first}, {"fnv1a", digests_[i].second}});
    }
    const nlohmann::json manifest = {
        {"config_hash", hash_}, {"command", command}, {"versions", version_info()}, {"spec", spec}, {"files", files},
    };
    const fs::path full = fs::path(path_) / "manifest.json";
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + full.string() + "'");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + full.string() + "'");
    return full.string();
}

}  // namespace splitlab::harness
