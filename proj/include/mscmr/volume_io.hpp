// Volume I/O: a NIfTI-1 single-file subset plus a raw+JSON sidecar format.
//
// NIfTI-1 support is deliberately minimal: single-file .nii / .nii.gz,
// dim[0] = 3 (or 4 for probability stacks), datatypes uint8 / int16 /
// uint16 / float32, shape from dim[1..3] and in-plane scale from
// pixdim[1..3]. Orientation fields (qform/sform, affines) are IGNORED
// ENTIRELY; this pipeline only needs voxel counts and spacing. Do not use
// this reader where anatomical orientation matters.

#ifndef MSCMR_VOLUME_IO_HPP
#define MSCMR_VOLUME_IO_HPP

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <zlib.h>

#include "json.hpp"
#include "mscmr/core.hpp"

namespace mscmr {
namespace io {

enum class DataType : int16_t {
  UInt8 = 2,
  Int16 = 4,
  Float32 = 16,
  UInt16 = 512,
};

inline int bitpix_of(DataType dt) {
  switch (dt) {
    case DataType::UInt8: return 8;
    case DataType::Int16: return 16;
    case DataType::UInt16: return 16;
    case DataType::Float32: return 32;
  }
  throw InputError("unsupported datatype");
}

// Identity remap over {0..C-1} unless a dataset convention says otherwise.
// The MS-CMR challenge files use {0, 200, 500, 600}; that table is shipped
// as an example config, it is a dataset convention and nothing more.
using LabelRemap = std::map<int64_t, int>;

inline LabelRemap identity_remap(int class_count) {
  LabelRemap r;
  for (int c = 0; c < class_count; ++c) r[c] = c;
  return r;
}

// ---------------------------------------------------------------------------
// gzip

inline bool looks_gzipped(const std::vector<uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

inline std::vector<uint8_t> gunzip(const std::vector<uint8_t>& in) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK)
    throw InputError("gzip: inflateInit failed");
  std::vector<uint8_t> out;
  out.reserve(in.size() * 4);
  std::vector<uint8_t> buf(1 << 16);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw InputError("gzip: corrupt or truncated stream");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

inline std::vector<uint8_t> gzip_bytes(const std::vector<uint8_t>& in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw InputError("gzip: deflateInit failed");
  std::vector<uint8_t> out;
  std::vector<uint8_t> buf(1 << 16);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = deflate(&zs, Z_FINISH);
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

// ---------------------------------------------------------------------------
// NIfTI-1 header

struct NiftiHeader {
  int16_t dim[8] = {0};
  DataType datatype = DataType::Float32;
  float pixdim[8] = {0};
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
};

namespace detail {

template <typename T>
T read_le(const uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void write_le(std::vector<uint8_t>& out, size_t off, T v) {
  std::memcpy(out.data() + off, &v, sizeof(T));
}

}  // namespace detail

inline NiftiHeader parse_nifti_header(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 348) throw InputError("nifti: truncated header");
  const uint8_t* b = bytes.data();
  if (detail::read_le<int32_t>(b + 0) != 348)
    throw InputError("nifti: sizeof_hdr != 348 (bad magic or byte order)");
  if (std::memcmp(b + 344, "n+1\0", 4) != 0)
    throw InputError("nifti: bad magic (only single-file n+1 supported)");
  NiftiHeader h;
  for (int i = 0; i < 8; ++i) h.dim[i] = detail::read_le<int16_t>(b + 40 + 2 * i);
  const int16_t dt = detail::read_le<int16_t>(b + 70);
  switch (dt) {
    case 2: case 4: case 16: case 512: h.datatype = static_cast<DataType>(dt); break;
    default:
      throw InputError("nifti: unsupported datatype code " + std::to_string(dt));
  }
  for (int i = 0; i < 8; ++i) h.pixdim[i] = detail::read_le<float>(b + 76 + 4 * i);
  h.vox_offset = detail::read_le<float>(b + 108);
  h.scl_slope = detail::read_le<float>(b + 112);
  h.scl_inter = detail::read_le<float>(b + 116);
  return h;
}

inline std::vector<uint8_t> build_nifti_header(const GridMeta& meta, DataType dt,
                                               int class_count_4d = 0) {
  std::vector<uint8_t> h(352, 0);  // 348-byte header + 4-byte extension flag
  detail::write_le<int32_t>(h, 0, 348);
  const int ndim = class_count_4d > 0 ? 4 : 3;
  detail::write_le<int16_t>(h, 40, static_cast<int16_t>(ndim));
  detail::write_le<int16_t>(h, 42, static_cast<int16_t>(meta.dims[0]));
  detail::write_le<int16_t>(h, 44, static_cast<int16_t>(meta.dims[1]));
  detail::write_le<int16_t>(h, 46, static_cast<int16_t>(meta.dims[2]));
  detail::write_le<int16_t>(h, 48, static_cast<int16_t>(ndim == 4 ? class_count_4d : 1));
  for (int i = 5; i < 8; ++i) detail::write_le<int16_t>(h, 40 + 2 * i, 1);
  detail::write_le<int16_t>(h, 70, static_cast<int16_t>(dt));
  detail::write_le<int16_t>(h, 72, static_cast<int16_t>(bitpix_of(dt)));
  detail::write_le<float>(h, 76, 1.0f);
  detail::write_le<float>(h, 80, static_cast<float>(meta.spacing[0]));
  detail::write_le<float>(h, 84, static_cast<float>(meta.spacing[1]));
  detail::write_le<float>(h, 88, static_cast<float>(meta.spacing[2]));
  detail::write_le<float>(h, 108, 352.0f);
  detail::write_le<float>(h, 112, 0.0f);  // scl_slope 0 = no scaling
  detail::write_le<float>(h, 116, 0.0f);
  std::memcpy(h.data() + 344, "n+1\0", 4);
  return h;
}

namespace detail {

inline double decode_sample(const uint8_t* p, DataType dt) {
  switch (dt) {
    case DataType::UInt8: return *p;
    case DataType::Int16: return read_le<int16_t>(p);
    case DataType::UInt16: return read_le<uint16_t>(p);
    case DataType::Float32: return read_le<float>(p);
  }
  throw InputError("unsupported datatype");
}

// Decoded samples with NIfTI scl scaling applied (slope==0 means none).
inline std::vector<double> decode_payload(const std::vector<uint8_t>& bytes,
                                          const NiftiHeader& h, int64_t count) {
  const size_t off = static_cast<size_t>(h.vox_offset);
  const size_t stride = bitpix_of(h.datatype) / 8;
  if (off < 348 || bytes.size() < off + count * stride)
    throw InputError("nifti: truncated payload");
  std::vector<double> vals(static_cast<size_t>(count));
  const bool scale = h.scl_slope != 0.0f;
  for (int64_t i = 0; i < count; ++i) {
    double v = decode_sample(bytes.data() + off + i * stride, h.datatype);
    if (scale) v = static_cast<double>(h.scl_slope) * v + static_cast<double>(h.scl_inter);
    if (!std::isfinite(v)) throw InputError("nifti: non-finite voxel value");
    vals[static_cast<size_t>(i)] = v;
  }
  return vals;
}

inline GridMeta meta_from_header(const NiftiHeader& h) {
  GridMeta meta;
  for (int a = 0; a < 3; ++a) {
    meta.dims[a] = h.dim[a + 1];
    meta.spacing[a] = h.pixdim[a + 1];
  }
  meta.validate();
  return meta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// read / write

enum class VolumeKind { Intensity, Label };

inline VoxelGrid3D read_intensity_volume(std::vector<uint8_t> bytes) {
  if (looks_gzipped(bytes)) bytes = gunzip(bytes);
  const NiftiHeader h = parse_nifti_header(bytes);
  if (h.dim[0] != 3) throw InputError("nifti: expected dim[0] = 3");
  VoxelGrid3D g;
  g.meta = detail::meta_from_header(h);
  const auto vals = detail::decode_payload(bytes, h, g.meta.voxel_count());
  g.voxels.resize(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) g.voxels[i] = static_cast<float>(vals[i]);
  return g;
}

inline LabelGrid3D read_label_volume(std::vector<uint8_t> bytes,
                                     const LabelRemap& remap, int class_count = 4) {
  if (looks_gzipped(bytes)) bytes = gunzip(bytes);
  const NiftiHeader h = parse_nifti_header(bytes);
  if (h.dim[0] != 3) throw InputError("nifti: expected dim[0] = 3");
  LabelGrid3D g;
  g.meta = detail::meta_from_header(h);
  g.class_count = class_count;
  const auto vals = detail::decode_payload(bytes, h, g.meta.voxel_count());
  g.voxels.resize(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    const double v = vals[i];
    if (v != std::floor(v))
      throw InputError("label volume contains non-integral value " + std::to_string(v));
    const auto it = remap.find(static_cast<int64_t>(v));
    if (it == remap.end())
      throw InputError("label code " + std::to_string(static_cast<int64_t>(v)) +
                       " not in remap table");
    if (it->second < 0 || it->second >= class_count)
      throw InputError("remap target out of class range");
    g.voxels[i] = static_cast<uint8_t>(it->second);
  }
  return g;
}

inline std::vector<uint8_t> write_intensity_volume(const VoxelGrid3D& g) {
  g.validate();
  auto out = build_nifti_header(g.meta, DataType::Float32);
  const size_t off = out.size();
  out.resize(off + g.voxels.size() * 4);
  std::memcpy(out.data() + off, g.voxels.data(), g.voxels.size() * 4);
  return out;
}

// Encode with an explicit dtype; integer dtypes require integral in-range
// values, which holds for anything loaded from that dtype without scaling.
inline std::vector<uint8_t> write_intensity_volume_as(const VoxelGrid3D& g, DataType dt) {
  if (dt == DataType::Float32) return write_intensity_volume(g);
  g.validate();
  auto out = build_nifti_header(g.meta, dt);
  const size_t off = out.size();
  const size_t stride = bitpix_of(dt) / 8;
  out.resize(off + g.voxels.size() * stride);
  for (size_t i = 0; i < g.voxels.size(); ++i) {
    const float v = g.voxels[i];
    if (v != std::floor(v))
      throw InputError("integer dtype write requires integral values");
    const int64_t iv = static_cast<int64_t>(v);
    switch (dt) {
      case DataType::UInt8:
        if (iv < 0 || iv > 255) throw InputError("value out of uint8 range");
        out[off + i] = static_cast<uint8_t>(iv);
        break;
      case DataType::Int16:
        if (iv < -32768 || iv > 32767) throw InputError("value out of int16 range");
        detail::write_le<int16_t>(out, off + 2 * i, static_cast<int16_t>(iv));
        break;
      case DataType::UInt16:
        if (iv < 0 || iv > 65535) throw InputError("value out of uint16 range");
        detail::write_le<uint16_t>(out, off + 2 * i, static_cast<uint16_t>(iv));
        break;
      default:
        throw InputError("unsupported datatype");
    }
  }
  return out;
}

inline std::vector<uint8_t> write_label_volume(const LabelGrid3D& g,
                                               DataType dt = DataType::UInt8) {
  g.validate();
  if (dt != DataType::UInt8 && dt != DataType::UInt16)
    throw InputError("labels are written as uint8 or uint16");
  auto out = build_nifti_header(g.meta, dt);
  const size_t off = out.size();
  if (dt == DataType::UInt8) {
    out.insert(out.end(), g.voxels.begin(), g.voxels.end());
  } else {
    out.resize(off + g.voxels.size() * 2);
    for (size_t i = 0; i < g.voxels.size(); ++i)
      detail::write_le<uint16_t>(out, off + 2 * i, g.voxels[i]);
  }
  return out;
}

// 4D probability stack: dim[0]=4, dim[4]=C, channel is the slowest axis on
// disk (one full volume per class), float32.
inline std::vector<uint8_t> write_probability_volume(const ProbGrid4D& p) {
  p.validate();
  auto out = build_nifti_header(p.meta, DataType::Float32, p.class_count);
  const int64_t n = p.meta.voxel_count();
  const size_t off = out.size();
  out.resize(off + static_cast<size_t>(n) * p.class_count * 4);
  for (int c = 0; c < p.class_count; ++c)
    for (int64_t i = 0; i < n; ++i) {
      const float v = p.voxels[i * p.class_count + c];
      detail::write_le<float>(out, off + (static_cast<size_t>(c) * n + i) * 4, v);
    }
  return out;
}

namespace detail {

// Clamp tiny negatives, renormalize sums within 1e-3 of 1, reject the rest.
inline void finalize_simplex(ProbGrid4D& p) {
  const int64_t n = p.meta.voxel_count();
  for (int64_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < p.class_count; ++c) {
      float& v = p.voxels[i * p.class_count + c];
      if (v < -1e-6f)
        throw InputError("probability stack: negative probability " + std::to_string(v));
      if (v < 0.0f) v = 0.0f;
      sum += v;
    }
    if (sum < 1.0 - 1e-3 || sum > 1.0 + 1e-3)
      throw InputError("probability stack: per-voxel sum " + std::to_string(sum) +
                       " outside [1-1e-3, 1+1e-3]");
    for (int c = 0; c < p.class_count; ++c)
      p.voxels[i * p.class_count + c] =
          static_cast<float>(p.voxels[i * p.class_count + c] / sum);
  }
}

}  // namespace detail

inline ProbGrid4D read_probability_stack_4d(std::vector<uint8_t> bytes) {
  if (looks_gzipped(bytes)) bytes = gunzip(bytes);
  const NiftiHeader h = parse_nifti_header(bytes);
  if (h.dim[0] != 4) throw InputError("nifti: expected dim[0] = 4 for probability stack");
  ProbGrid4D p;
  p.meta = detail::meta_from_header(h);
  p.class_count = h.dim[4];
  if (p.class_count < 2) throw InputError("probability stack: class_count must be >= 2");
  const int64_t n = p.meta.voxel_count();
  const auto vals = detail::decode_payload(bytes, h, n * p.class_count);
  p.voxels.resize(vals.size());
  for (int c = 0; c < p.class_count; ++c)
    for (int64_t i = 0; i < n; ++i)
      p.voxels[i * p.class_count + c] =
          static_cast<float>(vals[static_cast<size_t>(c) * n + i]);
  detail::finalize_simplex(p);
  return p;
}

inline ProbGrid4D assemble_probability_stack(const std::vector<VoxelGrid3D>& per_class) {
  if (per_class.size() < 2)
    throw InputError("probability stack: need >= 2 class volumes");
  const GridMeta& meta = per_class[0].meta;
  for (const auto& v : per_class)
    if (!v.meta.same_grid(meta))
      throw InputError("probability stack: class volumes disagree on dims/spacing");
  ProbGrid4D p;
  p.meta = meta;
  p.class_count = static_cast<int>(per_class.size());
  const int64_t n = meta.voxel_count();
  p.voxels.resize(static_cast<size_t>(n) * p.class_count);
  for (int c = 0; c < p.class_count; ++c)
    for (int64_t i = 0; i < n; ++i)
      p.voxels[i * p.class_count + c] = per_class[c].voxels[static_cast<size_t>(i)];
  detail::finalize_simplex(p);
  return p;
}

// ---------------------------------------------------------------------------
// raw + JSON sidecar (test format): <name>.raw little-endian payload,
// <name>.json with {dims:[3], spacing:[3], dtype, class_count?}

inline std::string dtype_name(DataType dt) {
  switch (dt) {
    case DataType::UInt8: return "uint8";
    case DataType::Int16: return "int16";
    case DataType::UInt16: return "uint16";
    case DataType::Float32: return "float32";
  }
  throw InputError("unsupported datatype");
}

inline DataType dtype_from_name(const std::string& s) {
  if (s == "uint8") return DataType::UInt8;
  if (s == "int16") return DataType::Int16;
  if (s == "uint16") return DataType::UInt16;
  if (s == "float32") return DataType::Float32;
  throw InputError("sidecar: unknown dtype '" + s + "'");
}

struct SidecarMeta {
  GridMeta meta;
  DataType dtype = DataType::Float32;
  std::optional<int> class_count;
};

inline SidecarMeta parse_sidecar_json(const std::vector<uint8_t>& json_bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_bytes.begin(), json_bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("sidecar: bad JSON: ") + e.what());
  }
  SidecarMeta s;
  const auto dims = j.at("dims");
  const auto spacing = j.at("spacing");
  if (dims.size() != 3 || spacing.size() != 3)
    throw InputError("sidecar: dims and spacing must have 3 entries");
  for (int a = 0; a < 3; ++a) {
    s.meta.dims[a] = dims[a].get<int64_t>();
    s.meta.spacing[a] = spacing[a].get<double>();
  }
  s.meta.validate();
  s.dtype = dtype_from_name(j.at("dtype").get<std::string>());
  if (j.contains("class_count")) s.class_count = j["class_count"].get<int>();
  return s;
}

inline VoxelGrid3D read_sidecar_intensity(const std::vector<uint8_t>& json_bytes,
                                          const std::vector<uint8_t>& raw_bytes) {
  const SidecarMeta s = parse_sidecar_json(json_bytes);
  const size_t stride = bitpix_of(s.dtype) / 8;
  const int64_t n = s.meta.voxel_count();
  if (raw_bytes.size() < static_cast<size_t>(n) * stride)
    throw InputError("sidecar: truncated raw payload");
  VoxelGrid3D g;
  g.meta = s.meta;
  g.voxels.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double v = detail::decode_sample(raw_bytes.data() + i * stride, s.dtype);
    if (!std::isfinite(v)) throw InputError("sidecar: non-finite voxel value");
    g.voxels[static_cast<size_t>(i)] = static_cast<float>(v);
  }
  return g;
}

inline LabelGrid3D read_sidecar_labels(const std::vector<uint8_t>& json_bytes,
                                       const std::vector<uint8_t>& raw_bytes,
                                       const LabelRemap& remap, int class_count = 4) {
  const VoxelGrid3D raw = read_sidecar_intensity(json_bytes, raw_bytes);
  LabelGrid3D g;
  g.meta = raw.meta;
  g.class_count = class_count;
  g.voxels.resize(raw.voxels.size());
  for (size_t i = 0; i < raw.voxels.size(); ++i) {
    const float v = raw.voxels[i];
    if (v != std::floor(v))
      throw InputError("sidecar label contains non-integral value");
    const auto it = remap.find(static_cast<int64_t>(v));
    if (it == remap.end())
      throw InputError("label code " + std::to_string(static_cast<int64_t>(v)) +
                       " not in remap table");
    g.voxels[i] = static_cast<uint8_t>(it->second);
  }
  return g;
}

// ---------------------------------------------------------------------------
// file helpers

inline std::vector<uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

// Write via temp file + rename so failures never leave partial outputs.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::vector<uint8_t>& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<uint8_t>(text.begin(), text.end()));
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline VoxelGrid3D load_intensity(const std::filesystem::path& path) {
  const std::string p = path.string();
  if (has_suffix(p, ".json")) {
    std::filesystem::path raw = path;
    raw.replace_extension(".raw");
    return read_sidecar_intensity(read_file(path), read_file(raw));
  }
  return read_intensity_volume(read_file(path));
}

inline LabelGrid3D load_labels(const std::filesystem::path& path, const LabelRemap& remap,
                               int class_count = 4) {
  const std::string p = path.string();
  if (has_suffix(p, ".json")) {
    std::filesystem::path raw = path;
    raw.replace_extension(".raw");
    return read_sidecar_labels(read_file(path), read_file(raw), remap, class_count);
  }
  return read_label_volume(read_file(path), remap, class_count);
}

inline void save_intensity(const std::filesystem::path& path, const VoxelGrid3D& g) {
  auto bytes = write_intensity_volume(g);
  if (has_suffix(path.string(), ".gz")) bytes = gzip_bytes(bytes);
  write_file_atomic(path, bytes);
}

inline void save_labels(const std::filesystem::path& path, const LabelGrid3D& g,
                        DataType dt = DataType::UInt8) {
  auto bytes = write_label_volume(g, dt);
  if (has_suffix(path.string(), ".gz")) bytes = gzip_bytes(bytes);
  write_file_atomic(path, bytes);
}

inline void save_probability(const std::filesystem::path& path, const ProbGrid4D& p) {
  auto bytes = write_probability_volume(p);
  if (has_suffix(path.string(), ".gz")) bytes = gzip_bytes(bytes);
  write_file_atomic(path, bytes);
}

// One 4D file, or several 3D per-class files.
inline ProbGrid4D load_probability_stack(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw InputError("probability stack: no input files");
  if (paths.size() == 1) {
    auto bytes = read_file(paths[0]);
    if (looks_gzipped(bytes)) bytes = gunzip(bytes);
    const NiftiHeader h = parse_nifti_header(bytes);
    if (h.dim[0] == 4) return read_probability_stack_4d(std::move(bytes));
    throw InputError("single-file probability stack must be 4D (dim[0]=4)");
  }
  std::vector<VoxelGrid3D> per_class;
  per_class.reserve(paths.size());
  for (const auto& p : paths) per_class.push_back(load_intensity(p));
  return assemble_probability_stack(per_class);
}

}  // namespace io
}  // namespace mscmr

#endif  // MSCMR_VOLUME_IO_HPP
