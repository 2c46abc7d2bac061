// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cgbg/errors.hpp"

namespace cgbg::io {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const auto table = make_crc_table();
  return table;
}

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::uint32_t crc32(std::span<const std::byte> data, std::uint32_t seed) {
  const auto& table = crc_table();
  std::uint32_t c = seed ^ 0xffffffffu;
  for (std::byte b : data) {
    c = table[(c ^ static_cast<std::uint8_t>(b)) & 0xffu] ^ (c >> 8);
  }
  return c ^ 0xffffffffu;
}

std::uint32_t crc32_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open file: " + path.string());
  std::uint32_t crc = 0;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n <= 0) break;
    crc = crc32(std::as_bytes(std::span(buf.data(), static_cast<std::size_t>(n))), crc);
  }
  return crc;
}

std::string to_hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(8, '0');
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xfu];
    v >>= 4;
  }
  return out;
}

std::string base64_encode(std::span<const std::byte> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8) |
                            static_cast<std::uint32_t>(data[i + 2]);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back(kB64Alphabet[v & 63]);
    i += 3;
  }
  const std::size_t rem = data.size() - i;
  if (rem == 1) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back('=');
    out.push_back('=');
  } else if (rem == 2) {
    const std::uint32_t v = (static_cast<std::uint32_t>(data[i]) << 16) |
                            (static_cast<std::uint32_t>(data[i + 1]) << 8);
    out.push_back(kB64Alphabet[(v >> 18) & 63]);
    out.push_back(kB64Alphabet[(v >> 12) & 63]);
    out.push_back(kB64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::byte> base64_decode(const std::string& text) {
  std::array<int, 256> rev;
  rev.fill(-1);
  for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Alphabet[i])] = i;
  std::vector<std::byte> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r') continue;
    const int v = rev[static_cast<unsigned char>(ch)];
    if (v < 0) throw FormatError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::byte>((acc >> bits) & 0xffu));
    }
  }
  return out;
}

void write_container(const std::filesystem::path& path, const std::string& magic,
                     const json& header, std::span<const std::byte> payload,
                     bool with_crc) {
  if (magic.size() != 8) throw IOError("container magic must be 8 bytes");
  const std::string header_text = header.dump();
  std::vector<std::byte> blob;
  blob.reserve(8 + 8 + header_text.size() + payload.size() + 4);
  auto append = [&blob](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    blob.insert(blob.end(), b, b + n);
  };
  append(magic.data(), 8);
  const std::uint64_t hlen = header_text.size();
  append(&hlen, sizeof(hlen));
  append(header_text.data(), header_text.size());
  append(payload.data(), payload.size());
  if (with_crc) {
    const std::uint32_t crc = crc32(blob);
    append(&crc, sizeof(crc));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
  if (!out) throw IOError("short write: " + path.string());
}

Container read_container(const std::filesystem::path& path, const std::string& magic,
                         bool with_crc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open file: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  std::vector<std::byte> blob(raw.size());
  if (!raw.empty()) std::memcpy(blob.data(), raw.data(), raw.size());
  std::size_t size = blob.size();
  if (with_crc) {
    if (size < 4) throw FormatError("file too short for checksum: " + path.string());
    std::uint32_t stored = 0;
    std::memcpy(&stored, blob.data() + size - 4, 4);
    const std::uint32_t actual = crc32(std::span(blob.data(), size - 4));
    if (stored != actual) throw FormatError("checksum mismatch: " + path.string());
    size -= 4;
  }
  if (size < 16) throw FormatError("file truncated: " + path.string());
  if (std::memcmp(blob.data(), magic.data(), 8) != 0) {
    throw FormatError("bad magic (expected " + magic + "): " + path.string());
  }
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, blob.data() + 8, 8);
  if (16 + hlen > size) throw FormatError("file truncated in header: " + path.string());
  json header;
  try {
    header = json::parse(reinterpret_cast<const char*>(blob.data()) + 16,
                         reinterpret_cast<const char*>(blob.data()) + 16 + hlen);
  } catch (const json::exception& e) {
    throw FormatError("bad container header: " + std::string(e.what()));
  }
  Container c;
  c.header = std::move(header);
  c.payload.assign(blob.begin() + 16 + static_cast<std::ptrdiff_t>(hlen),
                   blob.begin() + static_cast<std::ptrdiff_t>(size));
  return c;
}

std::vector<std::byte> doubles_to_bytes(std::span<const double> values) {
  std::vector<std::byte> out(values.size() * sizeof(double));
  if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

std::vector<double> bytes_to_doubles(std::span<const std::byte> bytes) {
  if (bytes.size() % sizeof(double) != 0) {
    throw FormatError("payload size is not a multiple of 8");
  }
  std::vector<double> out(bytes.size() / sizeof(double));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write file: " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open file: " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace cgbg::io
