// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cgbg::io {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "record formats are little-endian; big-endian hosts unsupported");

std::uint32_t crc32(std::span<const std::byte> data, std::uint32_t seed = 0);
std::uint32_t crc32_file(const std::filesystem::path& path);
std::string to_hex(std::uint32_t v);

std::string base64_encode(std::span<const std::byte> data);
std::vector<std::byte> base64_decode(const std::string& text);

// Container layout: 8-byte magic, u64 LE header length, JSON header bytes,
// raw payload, optional trailing CRC32 (LE) over magic+header+payload.
struct Container {
  json header;
  std::vector<std::byte> payload;
};

void write_container(const std::filesystem::path& path, const std::string& magic,
                     const json& header, std::span<const std::byte> payload,
                     bool with_crc);

// Throws FormatError on magic mismatch, truncation, or checksum failure.
Container read_container(const std::filesystem::path& path, const std::string& magic,
                         bool with_crc);

std::vector<std::byte> doubles_to_bytes(std::span<const double> values);
std::vector<double> bytes_to_doubles(std::span<const std::byte> bytes);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Fixed-order pairwise summation; used for reproducible reductions.
double pairwise_sum(std::span<const double> values);

}  // namespace cgbg::io
