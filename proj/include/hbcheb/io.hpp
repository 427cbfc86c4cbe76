#pragma once

// Result emission: Fourier series and certification records as JSON, sweep
// tables as CSV. Every file carries a provenance header (tool version +
// config hash) and is written atomically via a temp file in the target
// directory.

#include <hbcheb/fourier.hpp>
#include <hbcheb/urabe.hpp>
#include <hbcheb/version.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hbcheb {

[[nodiscard]] inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  double back = 0.0;
  for (int prec = 1; prec <= 16; ++prec) {
    char probe[32];
    std::snprintf(probe, sizeof probe, "%.*g", prec, v);
    std::sscanf(probe, "%lf", &back);
    if (back == v) return probe;
  }
  return buf;
}

inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Column-typed table; numeric cells are formatted on insertion, absent
/// values stay empty.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void begin_row() { rows_.emplace_back(); }
  void push(double v) { rows_.back().push_back(format_number(v)); }
  void push(int v) { rows_.back().push_back(std::to_string(v)); }
  void push(const std::string& v) { rows_.back().push_back(v); }
  void push_empty() { rows_.back().emplace_back(); }
  void push(const std::optional<double>& v) {
    if (v)
      push(*v);
    else
      push_empty();
  }

  [[nodiscard]] std::string render(const std::string& config_hash) const {
    std::string out = "# tool: hbcheb ";
    out += kVersion;
    out += "\n# config: " + config_hash + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i];
    }
    out += '\n';
    for (const std::vector<std::string>& row : rows_) {
      if (row.size() != columns_.size()) {
        throw std::logic_error("csv row width mismatch");
      }
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += row[i];
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

[[nodiscard]] inline nlohmann::json fourier_to_json(const FourierSeries& q) {
  nlohmann::json j;
  j["H"] = q.harmonics();
  j["d"] = q.dof();
  j["Omega"] = q.Omega;
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int k = 0; k <= q.harmonics(); ++k) {
    nlohmann::json re_k = nlohmann::json::array();
    nlohmann::json im_k = nlohmann::json::array();
    for (int a = 0; a < q.dof(); ++a) {
      re_k.push_back(q.coef(a, k).real());
      im_k.push_back(q.coef(a, k).imag());
    }
    re.push_back(std::move(re_k));
    im.push_back(std::move(im_k));
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

[[nodiscard]] inline FourierSeries fourier_from_json(const nlohmann::json& j) {
  const int H = j.at("H").get<int>();
  const int d = j.at("d").get<int>();
  const double Omega = j.at("Omega").get<double>();
  if (H < 0 || d < 1) throw std::invalid_argument("bad series shape");
  const nlohmann::json& re = j.at("re");
  const nlohmann::json& im = j.at("im");
  if (static_cast<int>(re.size()) != H + 1 ||
      static_cast<int>(im.size()) != H + 1) {
    throw std::invalid_argument("harmonic count does not match H");
  }
  FourierSeries q(d, H, Omega);
  for (int k = 0; k <= H; ++k) {
    if (static_cast<int>(re[k].size()) != d ||
        static_cast<int>(im[k].size()) != d) {
      throw std::invalid_argument("dof count does not match d");
    }
    for (int a = 0; a < d; ++a) {
      q.coef(a, k) = std::complex<double>(re[k][a].get<double>(),
                                          im[k][a].get<double>());
    }
  }
  return q;
}

[[nodiscard]] inline nlohmann::json certification_to_json(
    double Omega, const UrabeMeasures& um, bool conclusive,
    const std::string& criterion) {
  nlohmann::json j;
  j["Omega"] = Omega;
  j["H"] = um.H;
  j["r"] = um.r;
  j["M"] = um.M;
  if (um.feasible) {
    j["delta"] = *um.delta;
    j["kappa"] = *um.kappa;
  } else {
    j["delta"] = nullptr;
    j["kappa"] = nullptr;
  }
  j["conclusive"] = conclusive;
  j["criterion"] = criterion;
  return j;
}

}  // namespace hbcheb
