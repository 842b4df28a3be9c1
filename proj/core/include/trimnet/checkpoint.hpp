#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "trimnet/network.hpp"

namespace trimnet {

// Binary network container: magic "TRNC", format version, the architecture
// descriptor string, then every parameter tensor flattened as little-endian
// IEEE-754 doubles (layer order, weight before bias), ending in a CRC-32 of
// all preceding bytes. load(save(net)) reproduces net bit-exactly.
void save_checkpoint(const Network& net, const std::string& path);

// Throws FormatError on bad magic, unsupported version, truncation, or
// checksum mismatch.
Network load_checkpoint(const std::string& path);

// CRC-32 (IEEE 802.3 polynomial, reflected).
std::uint32_t crc32(std::span<const unsigned char> bytes);

}  // namespace trimnet
