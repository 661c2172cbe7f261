#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "macrobs/linalg.hpp"

namespace macrobs::cli {

/// File could not be written or read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "a,b,c" lists and "lo..hi[:k]" log grids (k points, default one per
/// decade plus the end points). Items can mix both forms.
std::vector<double> parse_reals(const std::string& text);
std::vector<int> parse_ints(const std::string& text);

/// Comma-separated amplitudes; each item is "re" or "re:im". Normalized.
std::vector<cplx> parse_beta(const std::string& text);

/// Shortest round-trip decimal form.
std::string num(double x);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells);
  void write(const std::filesystem::path& file) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_json(const std::filesystem::path& file, const nlohmann::json& j);

/// --out if given, else $MACROBS_OUTPUT_DIR, else the working directory.
/// Created if missing.
std::filesystem::path output_dir(const std::string& flag);

/// JSON config files: top-level keys are options of the main app, nested
/// objects are subcommands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace macrobs::cli
