#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// Binary signal container: 32-byte header followed by channel-major
// little-endian float32 samples. The format is bit-exact: write_container
// followed by read_container reproduces the input floats identically.
//
//   offset  size  field
//        0     4  magic "EBSC"
//        4     4  version (u32 LE, currently 1)
//        8     4  channels (u32 LE)
//       12     8  samples (u64 LE)
//       20     8  sample_rate_hz (f64 LE)
//       28     4  dtype tag (u32 LE, 0 = float32)
//       32     -  payload: channels * samples * 4 bytes
struct ContainerHeader {
  std::uint32_t version = 1;
  std::uint32_t channels = 0;
  std::uint64_t samples = 0;
  double sample_rate_hz = 0.0;
  std::uint32_t dtype = 0;
};

inline constexpr std::uint32_t kContainerVersion = 1;

// Throws BadMagic, TruncatedPayload, NonFiniteSample, IoFailure.
MatrixF read_container(const std::filesystem::path& path,
                       ContainerHeader* header_out = nullptr);

// Header-only read for cheap validation (channel counts, shapes).
ContainerHeader read_container_header(const std::filesystem::path& path);

// Rejects non-finite samples; creates parent directories. Throws IoFailure,
// NonFiniteSample.
void write_container(const std::filesystem::path& path, const MatrixF& data,
                     double sample_rate_hz);

// CSV fallback: header row holds channel names, one column per channel, one
// row per sample. Returns channels x samples. The CSV carries no rate; the
// manifest supplies it.
MatrixF read_signal_csv(const std::filesystem::path& path,
                        std::vector<std::string>* channel_names = nullptr);

// Dispatch on extension: ".csv" -> CSV fallback, anything else -> container.
MatrixF read_signal_file(const std::filesystem::path& path,
                         ContainerHeader* header_out = nullptr);

}  // namespace emobench
