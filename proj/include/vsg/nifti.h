#ifndef VSG_NIFTI_H_
#define VSG_NIFTI_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsg/volume.h"

namespace vsg {

// NIfTI-1 subset: 3D volumes with datatype codes 2 (uint8), 4 (int16),
// 512 (uint16) and 16 (float32). Little- and big-endian headers are accepted;
// gzip-compressed streams are detected by their magic bytes. Voxel axes must
// map onto the world axes without permutation or obliquity (sign flips are
// tolerated); anything else is rejected with kNonCanonicalOrientation.
//
// Axis mapping: NIfTI (i, j, k) == (x, y, z), so dim[1..3] = (nx, ny, nz).
constexpr int kNiftiHeaderSize = 348;
constexpr int kNiftiSingleFileOffset = 352;

Volume ReadVolume(const std::string& path);
Volume DecodeVolume(std::span<const uint8_t> bytes);

// Writes a single-file NIfTI-1; gzip-compressed when the path ends in ".gz".
void WriteVolume(const Volume& volume, const std::string& path);
std::vector<uint8_t> EncodeVolume(const Volume& volume);

// gzip helpers shared with the dataset writer.
bool IsGzip(std::span<const uint8_t> bytes);
std::vector<uint8_t> GunzipBytes(std::span<const uint8_t> bytes);
std::vector<uint8_t> GzipBytes(std::span<const uint8_t> bytes);

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace vsg

#endif  // VSG_NIFTI_H_
