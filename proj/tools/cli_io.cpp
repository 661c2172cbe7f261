#include "cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "macrobs/errors.hpp"

namespace macrobs::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_real(const std::string& s) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) throw ValidationError("not a number: '" + s + "'");
  return x;
}

}  // namespace

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_real(item));
      continue;
    }
    std::string rest = item.substr(dots + 2);
    int k = 0;
    if (auto c = rest.find(':'); c != std::string::npos) {
      k = static_cast<int>(to_real(rest.substr(c + 1)));
      rest = rest.substr(0, c);
      if (k < 2) throw ValidationError("range '" + item + "': need at least 2 points");
    }
    const double lo = to_real(item.substr(0, dots)), hi = to_real(rest);
    if (!(lo > 0.0) || !(hi >= lo)) throw ValidationError("range '" + item + "': need 0 < lo <= hi");
    if (k) {
      for (int i = 0; i < k; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (k - 1)));
      out.back() = hi;
    } else {
      for (double x = lo; x < hi * (1 - 1e-12); x *= 10.0) out.push_back(x);
      out.push_back(hi);
    }
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double x : parse_reals(text)) {
    const double r = std::round(x);
    if (std::abs(r) > 2e9) throw ValidationError("integer out of range");
    out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<cplx> parse_beta(const std::string& text) {
  std::vector<cplx> b;
  double n = 0.0;
  for (const auto& item : split(text, ',')) {
    const auto c = item.find(':');
    cplx z = c == std::string::npos ? cplx(to_real(item), 0.0)
                                    : cplx(to_real(item.substr(0, c)), to_real(item.substr(c + 1)));
    n += std::norm(z);
    b.push_back(z);
  }
  if (b.size() < 2) throw ValidationError("beta needs at least two amplitudes");
  if (!(n > 0.0)) throw ValidationError("beta is zero");
  for (auto& z : b) z /= std::sqrt(n);
  return b;
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void Csv::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("csv: row width differs from header");
  rows_.push_back(std::move(cells));
}

void Csv::write(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  if (!out) throw IoError("write failed: " + file.string());
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + file.string());
}

std::filesystem::path output_dir(const std::string& flag) {
  std::filesystem::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("MACROBS_OUTPUT_DIR");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  nlohmann::json j;
  for (const CLI::Option* opt : app->get_options({})) {
    if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
    const std::string name = opt->get_lnames()[0];
    if (opt->count() > 0)
      j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results()[0]) : nlohmann::json(opt->results());
    else if (default_also && !opt->get_default_str().empty())
      j[name] = opt->get_default_str();
  }
  for (const CLI::App* sub : app->get_subcommands({})) {
    if (sub->count() == 0) continue;
    j[sub->get_name()] = nlohmann::json::parse(to_config(sub, default_also, false, ""));
  }
  return j.dump(2);
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  nlohmann::json j;
  try {
    input >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConversionError(std::string("config: ") + e.what());
  }
  std::vector<CLI::ConfigItem> items;
  auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  std::function<void(const nlohmann::json&, std::vector<std::string>)> walk = [&](const nlohmann::json& obj,
                                                                                   std::vector<std::string> parents) {
    for (const auto& [key, v] : obj.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        // Section markers make the subcommand count as given.
        CLI::ConfigItem open;
        open.parents = p;
        open.name = "++";
        items.push_back(open);
        walk(v, p);
        open.name = "--";
        items.push_back(open);
        continue;
      }
      CLI::ConfigItem it;
      it.parents = parents;
      it.name = key;
      if (v.is_array()) {
        // Lists are passed as one comma-joined value, the CLI's list form.
        std::string joined;
        for (const auto& e : v) joined += (joined.empty() ? "" : ",") + scalar(e);
        it.inputs = {joined};
      } else {
        it.inputs = {scalar(v)};
      }
      items.push_back(it);
    }
  };
  walk(j, {});
  return items;
}

}  // namespace macrobs::cli
