/*
 * Copyright 2026 The cfs3d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cfs3d/point_cloud.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cfs3d/error.hpp"

namespace cfs3d {

void PointCloud::validate() const {
  const std::size_t n = xyz.size();
  if (rgb && rgb->size() != n) throw DataError("rgb length differs from point count");
  if (!sem.empty() && sem.size() != n) throw DataError("sem length differs from point count");
  if (!inst.empty() && inst.size() != n) throw DataError("inst length differs from point count");
  for (std::size_t i = 0; i < sem.size(); ++i)
    if (sem[i] < 0) throw DataError("negative semantic label at point " + std::to_string(i));
  for (std::size_t i = 0; i < inst.size(); ++i)
    if (inst[i] < 0) throw DataError("negative instance label at point " + std::to_string(i));
}

std::vector<int> densify_ids(const std::vector<int>& ids) {
  std::map<int, int> remap;
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = remap.emplace(ids[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.9g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError(line, "malformed number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError(line, "malformed number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw ParseError(line, "number out of range '" + s + "'");
  }
}

long long parse_int(const std::string& s, std::size_t line) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "malformed integer '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_points(const PointCloud& cloud) {
  cloud.validate();
  std::string cols = "x,y,z";
  if (cloud.has_rgb()) cols += ",r,g,b";
  if (cloud.has_sem()) cols += ",sem";
  if (cloud.has_inst()) cols += ",inst";
  std::string out = "cfs3d-points v1 n=" + std::to_string(cloud.size()) + " cols=" + cols + "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      if (j) out += ' ';
      append_double(out, cloud.xyz[i][j]);
    }
    if (cloud.has_rgb()) {
      for (int j = 0; j < 3; ++j) {
        out += ' ';
        append_double(out, (*cloud.rgb)[i][j]);
      }
    }
    if (cloud.has_sem()) out += ' ' + std::to_string(cloud.sem[i]);
    if (cloud.has_inst()) out += ' ' + std::to_string(cloud.inst[i]);
    out += '\n';
  }
  return out;
}

PointCloud parse_points(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto head = tokens(line);
  if (head.size() != 4 || head[0] != "cfs3d-points" || head[1] != "v1" ||
      head[2].rfind("n=", 0) != 0 || head[3].rfind("cols=", 0) != 0) {
    throw ParseError(1, "malformed header '" + line + "'");
  }
  const long long n_signed = parse_int(head[2].substr(2), 1);
  if (n_signed < 0) throw ParseError(1, "negative point count");
  const auto n = static_cast<std::size_t>(n_signed);
  const auto cols = split(head[3].substr(5), ',');

  enum Col { X, Y, Z, R, G, B, SEM, INST };
  const std::map<std::string, Col> known{{"x", X}, {"y", Y}, {"z", Z},     {"r", R},
                                         {"g", G}, {"b", B}, {"sem", SEM}, {"inst", INST}};
  std::vector<Col> layout;
  std::map<Col, int> seen;
  for (const auto& c : cols) {
    const auto it = known.find(c);
    if (it == known.end()) throw ParseError(1, "unknown column '" + c + "'");
    if (seen[it->second]++) throw ParseError(1, "duplicate column '" + c + "'");
    layout.push_back(it->second);
  }
  if (!seen.count(X) || !seen.count(Y) || !seen.count(Z)) {
    throw ParseError(1, "columns x, y and z are required");
  }
  const int color_cols = static_cast<int>(seen.count(R) + seen.count(G) + seen.count(B));
  if (color_cols != 0 && color_cols != 3)
    throw ParseError(1, "columns r, g and b must appear together");

  PointCloud cloud;
  cloud.xyz.resize(n);
  if (color_cols) cloud.rgb.emplace(n);
  if (seen.count(SEM)) cloud.sem.resize(n);
  if (seen.count(INST)) cloud.inst.resize(n);

  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto vals = tokens(line);
    if (vals.empty()) continue;
    if (row >= n)
      throw ParseError(line_no, "more rows than the header count n=" + std::to_string(n));
    if (vals.size() != layout.size()) {
      throw ParseError(line_no, "expected " + std::to_string(layout.size()) + " values, got " +
                                    std::to_string(vals.size()));
    }
    for (std::size_t k = 0; k < layout.size(); ++k) {
      switch (layout[k]) {
        case X: cloud.xyz[row][0] = parse_double(vals[k], line_no); break;
        case Y: cloud.xyz[row][1] = parse_double(vals[k], line_no); break;
        case Z: cloud.xyz[row][2] = parse_double(vals[k], line_no); break;
        case R: (*cloud.rgb)[row][0] = parse_double(vals[k], line_no); break;
        case G: (*cloud.rgb)[row][1] = parse_double(vals[k], line_no); break;
        case B: (*cloud.rgb)[row][2] = parse_double(vals[k], line_no); break;
        case SEM:
        case INST: {
          const long long v = parse_int(vals[k], line_no);
          if (v < 0 || v > 1000000000) {
            throw DataError("line " + std::to_string(line_no) + ": label " + vals[k] +
                            " out of range");
          }
          (layout[k] == SEM ? cloud.sem : cloud.inst)[row] = static_cast<int>(v);
          break;
        }
      }
    }
    ++row;
  }
  if (row != n) {
    throw ParseError(line_no, "header declares n=" + std::to_string(n) + " but " +
                                  std::to_string(row) + " rows were found");
  }
  return cloud;
}

void save_points(const PointCloud& cloud, const std::filesystem::path& path) {
  const std::string text = format_points(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

PointCloud load_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_points(ss.str());
}

}  // namespace cfs3d
