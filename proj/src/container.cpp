#include "emobench/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace emobench {

namespace {

constexpr char kMagic[4] = {'E', 'B', 'S', 'C'};
constexpr std::size_t kHeaderBytes = 32;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  if (!f.good() && !f.eof()) {
    throw Error(ErrorCode::IoFailure, "read failed for '" + path.string() + "'");
  }
  return std::move(buf).str();
}

ContainerHeader parse_header(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' is shorter than a header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' is not a signal container");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  ContainerHeader h;
  h.version = get_u32(p + 4);
  h.channels = get_u32(p + 8);
  h.samples = get_u64(p + 12);
  h.sample_rate_hz = std::bit_cast<double>(get_u64(p + 20));
  h.dtype = get_u32(p + 28);
  if (h.version != kContainerVersion) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' has unsupported version " +
                                         std::to_string(h.version));
  }
  if (h.dtype != 0) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' has unsupported dtype tag " +
                                         std::to_string(h.dtype));
  }
  return h;
}

}  // namespace

ContainerHeader read_container_header(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  std::string bytes(kHeaderBytes, '\0');
  f.read(bytes.data(), static_cast<std::streamsize>(kHeaderBytes));
  if (f.gcount() != static_cast<std::streamsize>(kHeaderBytes)) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' is shorter than a header");
  }
  return parse_header(bytes, path);
}

MatrixF read_container(const std::filesystem::path& path, ContainerHeader* header_out) {
  const std::string bytes = read_all(path);
  const ContainerHeader h = parse_header(bytes, path);
  const std::uint64_t expected = static_cast<std::uint64_t>(h.channels) * h.samples * 4;
  if (bytes.size() != kHeaderBytes + expected) {
    throw Error(ErrorCode::TruncatedPayload,
                "'" + path.string() + "' payload is " +
                    std::to_string(bytes.size() - kHeaderBytes) + " bytes, expected " +
                    std::to_string(expected));
  }
  MatrixF data(h.channels, h.samples);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kHeaderBytes;
  for (std::uint32_t ch = 0; ch < h.channels; ++ch) {
    for (std::uint64_t s = 0; s < h.samples; ++s) {
      const float v = std::bit_cast<float>(get_u32(p));
      p += 4;
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteSample,
                    "'" + path.string() + "' channel " + std::to_string(ch) + " sample " +
                        std::to_string(s) + " is not finite");
      }
      data(ch, static_cast<Eigen::Index>(s)) = v;
    }
  }
  if (header_out != nullptr) *header_out = h;
  return data;
}

void write_container(const std::filesystem::path& path, const MatrixF& data,
                     double sample_rate_hz) {
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (!std::isfinite(data(r, c))) {
        throw Error(ErrorCode::NonFiniteSample,
                    "refusing to write non-finite sample at (" + std::to_string(r) + ", " +
                        std::to_string(c) + ")");
      }
    }
  }
  std::string bytes;
  bytes.reserve(kHeaderBytes + static_cast<std::size_t>(data.size()) * 4);
  bytes.append(kMagic, 4);
  put_u32(bytes, kContainerVersion);
  put_u32(bytes, static_cast<std::uint32_t>(data.rows()));
  put_u64(bytes, static_cast<std::uint64_t>(data.cols()));
  put_f64(bytes, sample_rate_hz);
  put_u32(bytes, 0);  // dtype float32
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      put_f32(bytes, data(r, c));
    }
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot create '" + path.string() + "'");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

MatrixF read_signal_csv(const std::filesystem::path& path,
                        std::vector<std::string>* channel_names) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    cells.push_back(cur);
    return cells;
  };

  std::string line;
  if (!std::getline(f, line)) {
    throw Error(ErrorCode::TruncatedPayload, "'" + path.string() + "' is empty");
  }
  const std::vector<std::string> names = split(line);
  if (names.empty() || names[0].empty()) {
    throw Error(ErrorCode::BadMagic, "'" + path.string() + "' has no CSV header row");
  }
  const std::size_t n_channels = names.size();

  std::vector<std::vector<float>> columns(n_channels);
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != n_channels) {
      throw Error(ErrorCode::ChannelCountMismatch,
                  "'" + path.string() + "' line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(n_channels));
    }
    for (std::size_t i = 0; i < n_channels; ++i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || !std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteSample,
                    "'" + path.string() + "' line " + std::to_string(lineno) +
                        " column " + std::to_string(i) + ": bad value '" + cells[i] + "'");
      }
      columns[i].push_back(static_cast<float>(v));
    }
  }
  if (columns[0].empty()) {
    throw Error(ErrorCode::TruncatedPayload, "'" + path.string() + "' has no sample rows");
  }

  MatrixF data(n_channels, columns[0].size());
  for (std::size_t ch = 0; ch < n_channels; ++ch) {
    for (std::size_t s = 0; s < columns[ch].size(); ++s) {
      data(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(s)) = columns[ch][s];
    }
  }
  if (channel_names != nullptr) *channel_names = names;
  return data;
}

MatrixF read_signal_file(const std::filesystem::path& path, ContainerHeader* header_out) {
  if (path.extension() == ".csv") {
    MatrixF data = read_signal_csv(path);
    if (header_out != nullptr) {
      *header_out = ContainerHeader{kContainerVersion,
                                    static_cast<std::uint32_t>(data.rows()),
                                    static_cast<std::uint64_t>(data.cols()), 0.0, 0};
    }
    return data;
  }
  return read_container(path, header_out);
}

}  // namespace emobench
