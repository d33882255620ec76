#include "vsg/nifti.h"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "vsg/error.h"

namespace vsg {
namespace {

// Header field offsets.
constexpr size_t kOffSizeofHdr = 0;
constexpr size_t kOffDim = 40;
constexpr size_t kOffDatatype = 70;
constexpr size_t kOffBitpix = 72;
constexpr size_t kOffPixdim = 76;
constexpr size_t kOffVoxOffset = 108;
constexpr size_t kOffSclSlope = 112;
constexpr size_t kOffXyztUnits = 123;
constexpr size_t kOffDescrip = 148;
constexpr size_t kOffQformCode = 252;
constexpr size_t kOffSformCode = 254;
constexpr size_t kOffQuatern = 256;
constexpr size_t kOffSrow = 280;
constexpr size_t kOffMagic = 344;

constexpr int16_t kDtUint8 = 2;
constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtFloat32 = 16;
constexpr int16_t kDtUint16 = 512;

template <typename T>
T ByteSwap(T value) {
  std::array<uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  std::reverse(raw.begin(), raw.end());
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

// Reads fixed-width fields from a byte buffer in a given file byte order.
class FieldReader {
 public:
  FieldReader(std::span<const uint8_t> bytes, bool big_endian)
      : bytes_(bytes), swap_(big_endian != (std::endian::native == std::endian::big)) {}

  template <typename T>
  T Get(size_t offset) const {
    T value;
    std::memcpy(&value, bytes_.data() + offset, sizeof(T));
    return swap_ ? ByteSwap(value) : value;
  }
  bool swap() const { return swap_; }

 private:
  std::span<const uint8_t> bytes_;
  bool swap_;
};

// Writes little-endian fields.
class FieldWriter {
 public:
  explicit FieldWriter(std::vector<uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  void Put(size_t offset, T value) {
    if constexpr (std::endian::native == std::endian::big) value = ByteSwap(value);
    std::memcpy(bytes_.data() + offset, &value, sizeof(T));
  }

 private:
  std::vector<uint8_t>& bytes_;
};

int16_t DatatypeCode(ValueKind kind) {
  switch (kind) {
    case ValueKind::kUint8: return kDtUint8;
    case ValueKind::kInt16: return kDtInt16;
    case ValueKind::kUint16: return kDtUint16;
    case ValueKind::kFloat32: return kDtFloat32;
  }
  return 0;
}

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 QuaternionToRotation(double b, double c, double d, double qfac) {
  double a = 1.0 - (b * b + c * c + d * d);
  a = a < 1e-7 ? 0.0 : std::sqrt(a);
  Matrix3 r = {{{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
                {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
                {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b}}};
  if (qfac < 0) {
    for (auto& row : r) row[2] = -row[2];
  }
  return r;
}

// Each voxel axis must be dominated by the world axis of the same index.
void CheckCanonical(const Matrix3& m, const char* which) {
  for (int col = 0; col < 3; ++col) {
    double norm = 0.0;
    for (int row = 0; row < 3; ++row) norm += m[row][col] * m[row][col];
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::kNonCanonicalOrientation, std::string(which) + " has a degenerate axis");
    }
    const double cosine = std::abs(m[col][col]) / norm;
    if (cosine < 0.9) {
      throw Error(ErrorKind::kNonCanonicalOrientation,
                  std::string(which) + " voxel axis " + std::to_string(col) +
                      " is permuted or oblique; re-orient the image to axial-canonical first");
    }
  }
}

template <typename T>
std::vector<T> DecodeValues(std::span<const uint8_t> raw, size_t count, bool swap) {
  std::vector<T> out(count);
  if (count > 0) std::memcpy(out.data(), raw.data(), count * sizeof(T));
  if (swap && sizeof(T) > 1) {
    for (auto& v : out) v = ByteSwap(v);
  }
  return out;
}

}  // namespace

bool IsGzip(std::span<const uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<uint8_t> GunzipBytes(std::span<const uint8_t> bytes) {
  z_stream stream{};
  if (inflateInit2(&stream, 15 + 32) != Z_OK) {
    throw Error(ErrorKind::kIoFailure, "zlib inflateInit2 failed");
  }
  std::vector<uint8_t> out;
  std::array<uint8_t, 1 << 16> chunk;
  stream.next_in = const_cast<Bytef*>(bytes.data());
  stream.avail_in = static_cast<uInt>(bytes.size());
  int status = Z_OK;
  while (status != Z_STREAM_END) {
    stream.next_out = chunk.data();
    stream.avail_out = static_cast<uInt>(chunk.size());
    status = inflate(&stream, Z_NO_FLUSH);
    if (status != Z_OK && status != Z_STREAM_END) {
      inflateEnd(&stream);
      throw Error(ErrorKind::kTruncatedData, "corrupt or truncated gzip stream");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - stream.avail_out));
    if (status == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
      inflateEnd(&stream);
      throw Error(ErrorKind::kTruncatedData, "gzip stream ended before its trailer");
    }
  }
  inflateEnd(&stream);
  return out;
}

std::vector<uint8_t> GzipBytes(std::span<const uint8_t> bytes) {
  z_stream stream{};
  if (deflateInit2(&stream, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorKind::kIoFailure, "zlib deflateInit2 failed");
  }
  std::vector<uint8_t> out(deflateBound(&stream, static_cast<uLong>(bytes.size())) + 32);
  stream.next_in = const_cast<Bytef*>(bytes.data());
  stream.avail_in = static_cast<uInt>(bytes.size());
  stream.next_out = out.data();
  stream.avail_out = static_cast<uInt>(out.size());
  const int status = deflate(&stream, Z_FINISH);
  deflateEnd(&stream);
  if (status != Z_STREAM_END) throw Error(ErrorKind::kIoFailure, "gzip compression failed");
  out.resize(stream.total_out);
  return out;
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIoFailure, "read failed: " + path);
  return bytes;
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + path);
}

Volume DecodeVolume(std::span<const uint8_t> bytes) {
  std::vector<uint8_t> inflated;
  if (IsGzip(bytes)) {
    inflated = GunzipBytes(bytes);
    bytes = inflated;
  }
  if (bytes.size() < kNiftiHeaderSize) {
    throw Error(ErrorKind::kTruncatedData,
                "file holds " + std::to_string(bytes.size()) + " bytes, fewer than a NIfTI-1 header");
  }

  bool big_endian = std::endian::native == std::endian::big;
  {
    FieldReader native(bytes, big_endian);
    const int32_t sizeof_hdr = native.Get<int32_t>(kOffSizeofHdr);
    if (sizeof_hdr != kNiftiHeaderSize) {
      if (ByteSwap(sizeof_hdr) != kNiftiHeaderSize) {
        throw Error(ErrorKind::kMalformedHeader,
                    "sizeof_hdr is " + std::to_string(sizeof_hdr) + " in either byte order, expected 348");
      }
      big_endian = !big_endian;
    }
  }
  const FieldReader hdr(bytes, big_endian);

  const char* magic = reinterpret_cast<const char*>(bytes.data() + kOffMagic);
  const bool single_file = std::memcmp(magic, "n+1\0", 4) == 0;
  if (!single_file && std::memcmp(magic, "ni1\0", 4) != 0) {
    throw Error(ErrorKind::kMalformedHeader, "bad magic; expected \"n+1\" or \"ni1\"");
  }

  std::array<int16_t, 8> dim;
  for (int i = 0; i < 8; ++i) dim[i] = hdr.Get<int16_t>(kOffDim + 2 * i);
  if (dim[0] != 3) {
    // Trailing singleton dimensions (dim[0] > 3 with dim[4..] == 1) are still
    // not 3D by declaration; the subset requires dim[0] == 3.
    throw Error(ErrorKind::kUnsupportedDimensionality,
                "dim[0] = " + std::to_string(dim[0]) + "; only 3D volumes are supported");
  }
  for (int i = 1; i <= 3; ++i) {
    if (dim[i] < 1) {
      throw Error(ErrorKind::kMalformedHeader, "dim[" + std::to_string(i) + "] = " + std::to_string(dim[i]));
    }
  }

  const int16_t datatype = hdr.Get<int16_t>(kOffDatatype);
  const int16_t bitpix = hdr.Get<int16_t>(kOffBitpix);
  ValueKind kind;
  switch (datatype) {
    case kDtUint8: kind = ValueKind::kUint8; break;
    case kDtInt16: kind = ValueKind::kInt16; break;
    case kDtUint16: kind = ValueKind::kUint16; break;
    case kDtFloat32: kind = ValueKind::kFloat32; break;
    default:
      throw Error(ErrorKind::kUnsupportedDatatype, "datatype code " + std::to_string(datatype));
  }
  if (bitpix != static_cast<int16_t>(8 * ValueKindSize(kind))) {
    throw Error(ErrorKind::kMalformedHeader,
                "bitpix " + std::to_string(bitpix) + " disagrees with datatype " + std::to_string(datatype));
  }

  std::array<float, 4> pixdim;
  for (int i = 0; i < 4; ++i) pixdim[i] = hdr.Get<float>(kOffPixdim + 4 * i);
  for (int i = 1; i <= 3; ++i) {
    if (!(pixdim[i] > 0.0f) || !std::isfinite(pixdim[i])) {
      throw Error(ErrorKind::kMalformedHeader, "pixdim[" + std::to_string(i) + "] must be positive");
    }
  }

  const int16_t qform_code = hdr.Get<int16_t>(kOffQformCode);
  const int16_t sform_code = hdr.Get<int16_t>(kOffSformCode);
  if (sform_code > 0) {
    Matrix3 m;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) m[row][col] = hdr.Get<float>(kOffSrow + 16 * row + 4 * col);
    }
    CheckCanonical(m, "sform");
  } else if (qform_code > 0) {
    const double b = hdr.Get<float>(kOffQuatern);
    const double c = hdr.Get<float>(kOffQuatern + 4);
    const double d = hdr.Get<float>(kOffQuatern + 8);
    CheckCanonical(QuaternionToRotation(b, c, d, pixdim[0] < 0 ? -1.0 : 1.0), "qform");
  }

  const float vox_offset_f = hdr.Get<float>(kOffVoxOffset);
  if (!std::isfinite(vox_offset_f) || vox_offset_f < 0.0f) {
    throw Error(ErrorKind::kMalformedHeader, "vox_offset is negative or not finite");
  }
  if (!single_file) {
    throw Error(ErrorKind::kMalformedHeader,
                "\"ni1\" headers reference a separate .img file; use a single-file .nii");
  }
  const uint64_t vox_offset = static_cast<uint64_t>(vox_offset_f);
  if (vox_offset < kNiftiSingleFileOffset) {
    throw Error(ErrorKind::kMalformedHeader, "vox_offset " + std::to_string(vox_offset) + " < 352");
  }

  const Shape3 shape{dim[3], dim[2], dim[1]};
  const uint64_t count = static_cast<uint64_t>(shape.size());
  const uint64_t data_bytes = count * ValueKindSize(kind);
  if (vox_offset > bytes.size() || bytes.size() - vox_offset < data_bytes) {
    throw Error(ErrorKind::kTruncatedData, "need " + std::to_string(data_bytes) + " data bytes at offset " +
                                               std::to_string(vox_offset) + ", file holds " +
                                               std::to_string(bytes.size()));
  }
  const auto raw = bytes.subspan(vox_offset, data_bytes);
  const Spacing3 spacing{pixdim[3], pixdim[2], pixdim[1]};
  const bool swap = hdr.swap();
  switch (kind) {
    case ValueKind::kUint8: return Volume(shape, spacing, DecodeValues<uint8_t>(raw, count, swap));
    case ValueKind::kInt16: return Volume(shape, spacing, DecodeValues<int16_t>(raw, count, swap));
    case ValueKind::kUint16: return Volume(shape, spacing, DecodeValues<uint16_t>(raw, count, swap));
    case ValueKind::kFloat32: return Volume(shape, spacing, DecodeValues<float>(raw, count, swap));
  }
  throw Error(ErrorKind::kUnsupportedDatatype, "unreachable");
}

Volume ReadVolume(const std::string& path) { return DecodeVolume(ReadFileBytes(path)); }

std::vector<uint8_t> EncodeVolume(const Volume& volume) {
  const Shape3& shape = volume.shape();
  for (int64_t n : {shape.nz, shape.ny, shape.nx}) {
    if (n > INT16_MAX) throw Error(ErrorKind::kInvalidArgument, "dimension exceeds NIfTI-1 limit of 32767");
  }
  const size_t value_size = ValueKindSize(volume.kind());
  const size_t data_bytes = static_cast<size_t>(shape.size()) * value_size;
  std::vector<uint8_t> out(kNiftiSingleFileOffset + data_bytes, 0);
  FieldWriter w(out);

  w.Put<int32_t>(kOffSizeofHdr, kNiftiHeaderSize);
  const std::array<int16_t, 8> dim = {3, static_cast<int16_t>(shape.nx), static_cast<int16_t>(shape.ny),
                                      static_cast<int16_t>(shape.nz), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) w.Put<int16_t>(kOffDim + 2 * i, dim[i]);
  w.Put<int16_t>(kOffDatatype, DatatypeCode(volume.kind()));
  w.Put<int16_t>(kOffBitpix, static_cast<int16_t>(8 * value_size));
  const Spacing3& sp = volume.spacing();
  const std::array<float, 8> pixdim = {1.0f, static_cast<float>(sp.sx), static_cast<float>(sp.sy),
                                       static_cast<float>(sp.sz), 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) w.Put<float>(kOffPixdim + 4 * i, pixdim[i]);
  w.Put<float>(kOffVoxOffset, static_cast<float>(kNiftiSingleFileOffset));
  w.Put<float>(kOffSclSlope, 1.0f);
  out[kOffXyztUnits] = 2;  // millimeters
  static constexpr char kDescrip[] = "voxel scene graph toolkit";
  std::memcpy(out.data() + kOffDescrip, kDescrip, sizeof(kDescrip) - 1);
  // Superior-first z: world z decreases with k.
  w.Put<int16_t>(kOffSformCode, 1);
  const std::array<float, 12> srow = {pixdim[1], 0, 0, 0, 0, pixdim[2], 0, 0, 0, 0, -pixdim[3], 0};
  for (int i = 0; i < 12; ++i) w.Put<float>(kOffSrow + 4 * i, srow[i]);
  std::memcpy(out.data() + kOffMagic, "n+1\0", 4);

  uint8_t* dst = out.data() + kNiftiSingleFileOffset;
  std::visit(
      [dst](const auto& values) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        for (size_t i = 0; i < values.size(); ++i) {
          T v = values[i];
          if constexpr (sizeof(T) > 1 && std::endian::native == std::endian::big) v = ByteSwap(v);
          std::memcpy(dst + i * sizeof(T), &v, sizeof(T));
        }
      },
      volume.storage());
  return out;
}

void WriteVolume(const Volume& volume, const std::string& path) {
  const std::vector<uint8_t> raw = EncodeVolume(volume);
  const bool gz = path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    WriteFileBytes(path, GzipBytes(raw));
  } else {
    WriteFileBytes(path, raw);
  }
}

}  // namespace vsg
