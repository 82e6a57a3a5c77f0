// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#include "gpn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace gpn {

namespace {

using json = nlohmann::json;

struct PlyProperty {
  std::string name;
  std::string type;
  size_t size = 0;
  size_t offset = 0;
};

size_t ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

Real read_scalar(const char* p, const std::string& type) {
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (type == "uchar" || type == "uint8") return static_cast<unsigned char>(*p);
  if (type == "char" || type == "int8") return static_cast<signed char>(*p);
  if (type == "ushort" || type == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (type == "short" || type == "int16") {
    std::int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (type == "uint" || type == "uint32") {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  std::int32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

std::uint8_t color_byte(Real v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_point_cloud_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  std::vector<char> record(15);
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const float v = static_cast<float>(cloud.positions(k, i));
      std::memcpy(record.data() + 4 * k, &v, 4);
    }
    for (int k = 0; k < 3; ++k) record[12 + k] = static_cast<char>(color_byte(cloud.colors(k, i)));
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

ColoredPointCloud parse_point_cloud_ply(const std::string& bytes) {
  const size_t header_end = bytes.find("end_header\n");
  require(header_end != std::string::npos, ErrorCode::kParse,
          "PLY header not terminated (scanned " + std::to_string(bytes.size()) + " bytes)");
  const size_t data_begin = header_end + std::string("end_header\n").size();

  std::istringstream header(bytes.substr(0, header_end));
  std::string line;
  std::getline(header, line);
  require(line == "ply", ErrorCode::kParse, "missing PLY magic at byte offset 0");

  bool binary_le = false;
  Index vertex_count = -1;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::vector<PlyProperty> props;
  size_t stride = 0;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      Index count = 0;
      ls >> name >> count;
      // Elements after the vertex block (faces, ...) are ignored; only the
      // vertex block has to precede them.
      in_vertex = name == "vertex";
      if (in_vertex) {
        require(!vertex_seen, ErrorCode::kParse, "duplicate vertex element in PLY header");
        vertex_seen = true;
        vertex_count = count;
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      require(type != "list", ErrorCode::kParse, "list properties on vertices are not supported");
      ls >> name;
      const size_t sz = ply_type_size(type);
      require(sz > 0, ErrorCode::kParse, "unknown PLY property type '" + type + "'");
      props.push_back({name, type, sz, stride});
      stride += sz;
    }
  }
  require(binary_le, ErrorCode::kParse, "only binary_little_endian PLY is supported");
  require(vertex_count >= 0, ErrorCode::kParse, "PLY header has no vertex element");

  auto find = [&](const std::string& name) -> const PlyProperty* {
    for (const auto& p : props) {
      if (p.name == name) return &p;
    }
    return nullptr;
  };
  const PlyProperty* px = find("x");
  const PlyProperty* py = find("y");
  const PlyProperty* pz = find("z");
  require(px && py && pz, ErrorCode::kParse, "PLY vertices lack x/y/z properties");
  const PlyProperty* pr = find("red");
  const PlyProperty* pg = find("green");
  const PlyProperty* pb = find("blue");

  const size_t needed = static_cast<size_t>(vertex_count) * stride;
  if (bytes.size() - data_begin < needed) {
    const size_t complete = (bytes.size() - data_begin) / std::max<size_t>(stride, 1);
    fail(ErrorCode::kParse, "truncated PLY: vertex " + std::to_string(complete) + " incomplete at byte offset " +
                                std::to_string(data_begin + complete * stride) + " (file has " +
                                std::to_string(bytes.size()) + " bytes, needs " +
                                std::to_string(data_begin + needed) + ")");
  }

  Mat3X pos(3, vertex_count);
  Mat3X col = Mat3X::Constant(3, vertex_count, 1.0);
  const char* base = bytes.data() + data_begin;
  for (Index i = 0; i < vertex_count; ++i) {
    const char* rec = base + static_cast<size_t>(i) * stride;
    pos(0, i) = read_scalar(rec + px->offset, px->type);
    pos(1, i) = read_scalar(rec + py->offset, py->type);
    pos(2, i) = read_scalar(rec + pz->offset, pz->type);
    if (pr && pg && pb) {
      const Real scale = pr->size == 1 ? 1.0 / 255.0 : 1.0;
      col(0, i) = read_scalar(rec + pr->offset, pr->type) * scale;
      col(1, i) = read_scalar(rec + pg->offset, pg->type) * scale;
      col(2, i) = read_scalar(rec + pb->offset, pb->type) * scale;
    }
  }
  return {std::move(pos), std::move(col)};
}

ColoredPointCloud read_point_cloud_ply(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::kIo, "missing file " + path.string());
  try {
    return parse_point_cloud_ply(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

namespace {

json camera_record(const Camera& cam) {
  json c2w = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) c2w.push_back(cam.c2w(r, c));
  }
  return {{"width", cam.width}, {"height", cam.height}, {"focal", cam.focal},
          {"cx", cam.cx},       {"cy", cam.cy},         {"c2w", c2w}};
}

Camera camera_from_record(const json& j) {
  require(j.is_object(), ErrorCode::kParse, "camera record must be a JSON object");
  for (const char* key : {"width", "height", "focal", "cx", "cy", "c2w"}) {
    require(j.contains(key), ErrorCode::kParse, std::string("camera record lacks '") + key + "'");
  }
  Camera cam;
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.focal = j.at("focal").get<Real>();
  cam.cx = j.at("cx").get<Real>();
  cam.cy = j.at("cy").get<Real>();
  const auto& m = j.at("c2w");
  require(m.is_array() && m.size() == 16, ErrorCode::kParse, "camera c2w must hold 16 numbers");
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) cam.c2w(r, c) = m.at(static_cast<size_t>(r * 4 + c)).get<Real>();
  }
  cam.validate();
  return cam;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "malformed JSON in " + what + ": " + e.what());
  }
}

}  // namespace

std::string camera_to_json(const Camera& cam) { return camera_record(cam).dump(); }

Camera camera_from_json(const std::string& text) {
  try {
    return camera_from_record(parse_json(text, "camera record"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("bad camera record: ") + e.what());
  }
}

void write_cameras_json(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  json arr = json::array();
  for (const auto& cam : cameras) arr.push_back(camera_record(cam));
  write_text_file(path, arr.dump(2));
}

std::vector<Camera> read_cameras_json(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::kIo, "missing file " + path.string());
  const json arr = parse_json(read_text_file(path), path.string());
  require(arr.is_array(), ErrorCode::kParse, path.string() + " must hold a JSON array of cameras");
  std::vector<Camera> cameras;
  try {
    for (const auto& rec : arr) cameras.push_back(camera_from_record(rec));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return cameras;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << text;
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << value;
  return ss.str();
}

void write_vector_file(const std::filesystem::path& path, const VecX& values) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write("GPNVEC01", 8);
  const std::uint64_t n = static_cast<std::uint64_t>(values.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(n * sizeof(Real)));
  require(out.good(), ErrorCode::kIo, "write failed for " + path.string());
}

VecX read_vector_file(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  require(bytes.size() >= 16 && bytes.compare(0, 8, "GPNVEC01") == 0, ErrorCode::kParse,
          path.string() + " is not a latent vector file");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 8, sizeof n);
  require(bytes.size() == 16 + n * sizeof(Real), ErrorCode::kParse,
          path.string() + ": vector payload truncated at byte offset " + std::to_string(bytes.size()));
  VecX v(static_cast<Index>(n));
  std::memcpy(v.data(), bytes.data() + 16, n * sizeof(Real));
  return v;
}

}  // namespace gpn
