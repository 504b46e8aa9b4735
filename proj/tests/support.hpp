#pragma once

#include "gravimetric/datamodel.hpp"
#include "gravimetric/design.hpp"
#include "gravimetric/error.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace support {

// Fresh per-process scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gm_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path put(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline gravimetric::CountryYearAttributes attrs(std::string iso, int year, double gdp = 1e10, double distance = 1000) {
  gravimetric::CountryYearAttributes a;
  a.iso = std::move(iso);
  a.year = year;
  a.gdp = gdp;
  a.population = 1e6;
  a.area_km2 = 1e4;
  a.distance_km = distance;
  a.religion_share = 0.5;
  return a;
}

inline gravimetric::TradeFlowRecord flow(int year, std::string dest, std::string cn8, gravimetric::Cents value,
                                         std::optional<double> volume = std::nullopt) {
  return {year, std::move(dest), std::move(cn8), value, volume};
}

// Design with an intercept and the given extra columns, one cluster per row unless given.
inline gravimetric::DesignMatrix design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        std::vector<std::string> clusters = {}) {
  gravimetric::DesignMatrix d;
  d.X = X;
  d.y = y;
  d.names.push_back("intercept");
  for (Eigen::Index k = 1; k < X.cols(); ++k) d.names.push_back("x" + std::to_string(k));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    d.clusters.push_back(clusters.empty() ? "c" + std::to_string(i) : clusters[static_cast<std::size_t>(i)]);
    d.years.push_back(2000);
    d.destinations.push_back(d.clusters.back());
  }
  return d;
}

// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<gravimetric::ErrorCode> thrown_code(F&& f) {
  try {
    f();
  } catch (const gravimetric::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace support
