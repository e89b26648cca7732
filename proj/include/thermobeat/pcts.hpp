#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "thermobeat/detect.hpp"

// PCTS photon timestamp files.
//
//   header  "PCTS" | version u16 | ticks per second u64 | channel count u8
//   record  channel u8 | tick u64                      (9 bytes)
//
// All integers little endian. Records are written merged in time order; the
// reader only requires each channel to be sorted.
namespace thermobeat::pcts {

inline constexpr std::uint16_t format_version = 1;

void write(std::ostream& os, const detect::TimestampStream& a, const detect::TimestampStream& b);
void write_file(const std::string& path, const detect::TimestampStream& a, const detect::TimestampStream& b);

/// Reads both channels, rescaling ticks to picoseconds when the file uses
/// another resolution. Without `duration` the stream duration is taken from
/// the last tick in the file.
std::pair<detect::TimestampStream, detect::TimestampStream> read(std::istream& is,
                                                                  std::optional<double> duration = {});
std::pair<detect::TimestampStream, detect::TimestampStream> read_file(const std::string& path,
                                                                       std::optional<double> duration = {});

}  // namespace thermobeat::pcts
