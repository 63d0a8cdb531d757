#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "auditod/core_data.hpp"

namespace auditod::testing {

inline FeatureFrame frame_from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t p = rows.front().size();
  FeatureFrame::Matrix m(n, p);
  std::vector<RecordId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) m(i, j) = rows[i][j];
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%04zu", i);
    ids.push_back(buf);
  }
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < p; ++j) cols.push_back("f" + std::to_string(j));
  return FeatureFrame(std::move(ids), std::move(cols), std::move(m));
}

inline FeatureFrame frame_from_column(const std::vector<double>& xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return frame_from_rows(rows);
}

inline FeatureFrame random_frame(std::size_t n, std::size_t p, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows)
    for (auto& x : r) x = u(gen);
  return frame_from_rows(rows);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("auditod_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace auditod::testing
