#include "posefit/depthio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "posefit/error.hpp"

namespace posefit {

void DepthImage::validate() const {
  if (width <= 0 || height <= 0) throw InvalidInput("depth image has non-positive dimensions");
  if (depth.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw InvalidInput("depth array size does not match width x height");
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw InvalidInput("focal lengths must be positive");
}

std::size_t ForegroundMask::count() const {
  std::size_t n = 0;
  for (bool b : foreground) n += b ? 1 : 0;
  return n;
}

std::string intrinsics_path(const std::string& depth_path) {
  return std::filesystem::path(depth_path).replace_extension(".intr").string();
}

Intrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open intrinsics file '" + path + "'");
  Intrinsics intr;
  if (!(in >> intr.fx >> intr.fy >> intr.cx >> intr.cy))
    throw FormatError("'" + path + "': expected four numbers 'fx fy cx cy'");
  std::string extra;
  if (in >> extra) throw FormatError("'" + path + "': unexpected trailing token '" + extra + "'");
  if (!(intr.fx > 0.0) || !(intr.fy > 0.0) || !std::isfinite(intr.cx) || !std::isfinite(intr.cy))
    throw FormatError("'" + path + "': focal lengths must be positive");
  return intr;
}

void save_intrinsics(const Intrinsics& intr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write intrinsics file '" + path + "'");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", intr.fx, intr.fy, intr.cx, intr.cy);
  out << buf;
  if (!out) throw FormatError("failed writing '" + path + "'");
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string header_token(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t begin = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return data.substr(begin, pos - begin);
}

long header_number(const std::string& data, std::size_t& pos, const std::string& path,
                   const char* what) {
  const std::string tok = header_token(data, pos);
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty())
    throw FormatError("'" + path + "': invalid PGM " + what + " '" + tok + "'");
  return v;
}

}  // namespace

DepthImage load_depth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open depth image '" + path + "'");
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  if (header_token(data, pos) != "P5") throw FormatError("'" + path + "': bad magic, expected P5");
  const long w = header_number(data, pos, path, "width");
  const long h = header_number(data, pos, path, "height");
  const long maxval = header_number(data, pos, path, "maxval");
  if (w <= 0 || h <= 0) throw FormatError("'" + path + "': non-positive dimensions");
  if (maxval != 65535)
    throw FormatError("'" + path + "': maxval " + std::to_string(maxval) +
                      " unsupported, expected 65535 (16-bit)");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw FormatError("'" + path + "': truncated header");
  ++pos;  // single whitespace before the raster

  DepthImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() - pos < 2 * n)
    throw FormatError("'" + path + "': truncated payload (" + std::to_string(data.size() - pos) +
                      " of " + std::to_string(2 * n) + " bytes)");
  img.depth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = static_cast<unsigned char>(data[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(data[pos + 2 * i + 1]);
    img.depth[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  img.intrinsics = load_intrinsics(intrinsics_path(path));
  return img;
}

void save_depth(const DepthImage& img, const std::string& path) {
  img.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write depth image '" + path + "'");
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  std::string raster(img.depth.size() * 2, '\0');
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    raster[2 * i] = static_cast<char>(img.depth[i] >> 8);
    raster[2 * i + 1] = static_cast<char>(img.depth[i] & 0xff);
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
  save_intrinsics(img.intrinsics, intrinsics_path(path));
}

ForegroundMask background_subtract(const DepthImage& img, double far_mm) {
  ForegroundMask mask{img.width, img.height, std::vector<bool>(img.depth.size(), false)};
  for (std::size_t i = 0; i < img.depth.size(); ++i)
    mask.foreground[i] = img.depth[i] > 0 && static_cast<double>(img.depth[i]) < far_mm;
  return mask;
}

PointCloud to_point_cloud(const DepthImage& img, const ForegroundMask& mask) {
  img.validate();
  if (mask.width != img.width || mask.height != img.height ||
      mask.foreground.size() != img.depth.size())
    throw InvalidInput("mask dimensions do not match the depth image");
  std::vector<Point3> points;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * static_cast<std::size_t>(img.width) +
                            static_cast<std::size_t>(u);
      if (!mask.foreground[i] || img.depth[i] == 0) continue;
      points.push_back(img.intrinsics.back_project(u, v, img.depth[i] / 1000.0));
    }
  }
  if (points.empty()) throw InvalidInput("no foreground pixels: point cloud would be empty");
  return PointCloud(std::move(points));
}

PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open cloud file '" + path + "'");
  std::vector<Point3> points;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string tok;
    double v[3];
    int k = 0;
    while (ss >> tok) {
      if (k == 3)
        throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": more than 3 values");
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
      if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw FormatError("'" + path + "' line " + std::to_string(lineno) +
                          ": non-numeric token '" + tok + "'");
      ++k;
    }
    if (k == 0) continue;
    if (k != 3)
      throw FormatError("'" + path + "' line " + std::to_string(lineno) + ": expected 'x y z'");
    points.emplace_back(v[0], v[1], v[2]);
  }
  if (points.empty()) throw FormatError("'" + path + "': no points");
  try {
    return PointCloud(std::move(points));
  } catch (const InvalidInput& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
}

void save_xyz(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write cloud file '" + path + "'");
  char buf[96];
  for (const auto& p : cloud.points()) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace posefit
