#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "nemsq/app/config.hpp"
#include "nemsq/error.hpp"

namespace nemsq::app {

inline constexpr const char* kArtifactName = "nemsq";
inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr const char* kOutputRootEnv = "NEMSQ_OUTPUT_ROOT";

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// Shortest round-trip form is not required; 17 significant digits always.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(double v) { return add(fmt(v)); }
    Row& operator<<(int v) { return add(std::to_string(v)); }
    Row& operator<<(std::size_t v) { return add(std::to_string(v)); }
    Row& operator<<(bool v) { return add(v ? "1" : "0"); }
    Row& operator<<(const std::string& s) { return add(csv_escape(s)); }
    Row& operator<<(const char* s) { return add(csv_escape(s)); }

   private:
    friend class CsvTable;
    Row& add(std::string cell) {
      cells_.push_back(std::move(cell));
      return *this;
    }
    std::vector<std::string> cells_;
  };

  Row& row() {
    rows_.emplace_back();
    return rows_.back();
  }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
      if (r.cells_.size() != header_.size()) throw Error("CSV row width does not match the header");
      line(r.cells_);
    }
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

struct ManifestEntry {
  std::string file;
  std::uintmax_t bytes;
  std::string sha256;
};

// Collects the files of one run and writes record.json last.
class RunOutput {
 public:
  explicit RunOutput(std::filesystem::path dir) : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {}

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory '" + dir_.string() + "': " + ec.message());
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) throw Error("failed writing '" + path.string() + "'");
    manifest_.push_back({name, content.size(), sha256_hex(content)});
  }

  void write_csv(const std::string& name, const CsvTable& t) { write(name, t.str()); }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  const std::vector<ManifestEntry>& manifest() const { return manifest_; }

  Json finish(const std::string& verb, const Json& config, const std::string& status,
              const std::vector<std::string>& warnings) {
    Json rec;
    rec["artifact"] = kArtifactName;
    rec["version"] = kArtifactVersion;
    rec["verb"] = verb;
    rec["status"] = status;
    rec["config"] = config;
    rec["config_sha256"] = sha256_hex(config.dump());
    rec["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    rec["warnings"] = warnings;
    Json files = Json::array();
    for (const auto& m : manifest_) files.push_back({{"file", m.file}, {"bytes", m.bytes}, {"sha256", m.sha256}});
    rec["outputs"] = files;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream out(dir_ / "record.json");
    out << rec.dump(2) << "\n";
    if (!out) throw Error("cannot write record.json in '" + dir_.string() + "'");
    return rec;
  }

 private:
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  std::vector<ManifestEntry> manifest_;
};

// --out wins; a relative directory is placed under $NEMSQ_OUTPUT_ROOT when set.
inline std::filesystem::path output_directory(const std::string& out, const std::string& verb) {
  std::filesystem::path dir = out.empty() ? std::filesystem::path("runs") / verb : std::filesystem::path(out);
  if (dir.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

}  // namespace nemsq::app
