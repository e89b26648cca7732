#include "thermobeat/pcts.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "thermobeat/errors.hpp"
#include "thermobeat/units.hpp"

namespace thermobeat::pcts {

namespace {

constexpr char magic[4] = {'P', 'C', 'T', 'S'};

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

template <class T>
bool get_le(std::istream& is, T& v) {
  std::array<unsigned char, sizeof(T)> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) return false;
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  v = static_cast<T>(x);
  return true;
}

}  // namespace

void write(std::ostream& os, const detect::TimestampStream& a, const detect::TimestampStream& b) {
  os.write(magic, 4);
  put_le<std::uint16_t>(os, format_version);
  put_le<std::uint64_t>(os, static_cast<std::uint64_t>(constants::ticks_per_second));
  put_le<std::uint8_t>(os, 2);
  std::size_t i = 0, j = 0;
  auto record = [&os](std::uint8_t ch, std::int64_t t) {
    if (t < 0) throw DataError("negative timestamp cannot be written");
    put_le<std::uint8_t>(os, ch);
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t));
  };
  while (i < a.times.size() || j < b.times.size()) {
    if (j == b.times.size() || (i < a.times.size() && a.times[i] <= b.times[j])) {
      record(0, a.times[i++]);
    } else {
      record(1, b.times[j++]);
    }
  }
  if (!os) throw DataError("PCTS write failed");
}

void write_file(const std::string& path, const detect::TimestampStream& a, const detect::TimestampStream& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  write(os, a, b);
}

std::pair<detect::TimestampStream, detect::TimestampStream> read(std::istream& is, std::optional<double> duration) {
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw DataError("not a PCTS file (bad magic)");
  std::uint16_t version = 0;
  std::uint64_t tps = 0;
  std::uint8_t channels = 0;
  if (!get_le(is, version) || !get_le(is, tps) || !get_le(is, channels)) throw DataError("truncated PCTS header");
  if (version != format_version) throw DataError("unsupported PCTS version " + std::to_string(version));
  if (tps == 0) throw DataError("PCTS ticks per second is zero");
  if (channels < 1 || channels > 2) throw DataError("PCTS files must have 1 or 2 channels");

  const auto target = static_cast<std::uint64_t>(constants::ticks_per_second);
  std::pair<detect::TimestampStream, detect::TimestampStream> out;
  detect::TimestampStream* s[2] = {&out.first, &out.second};
  out.first.channel = 0;
  out.second.channel = 1;
  std::int64_t last = 0;
  while (true) {
    std::uint8_t ch = 0;
    if (!get_le(is, ch)) break;
    std::uint64_t tick = 0;
    if (!get_le(is, tick)) throw DataError("truncated PCTS record");
    if (ch >= channels) throw DataError("PCTS record names channel " + std::to_string(ch));
    unsigned __int128 ps = tps == target ? tick : (static_cast<unsigned __int128>(tick) * target + tps / 2) / tps;
    if (ps > static_cast<unsigned __int128>(INT64_MAX)) throw DataError("PCTS timestamp overflows");
    auto t = static_cast<std::int64_t>(ps);
    auto& times = s[ch]->times;
    if (!times.empty() && t < times.back()) throw DataError("PCTS channel " + std::to_string(ch) + " is not sorted");
    times.push_back(t);
    last = std::max(last, t);
  }
  double d = duration ? *duration : static_cast<double>(last) / static_cast<double>(target);
  if (!(d > 0.0)) throw DataError("PCTS stream has no positive duration");
  out.first.duration = d;
  out.second.duration = d;
  return out;
}

std::pair<detect::TimestampStream, detect::TimestampStream> read_file(const std::string& path,
                                                                       std::optional<double> duration) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read(is, duration);
}

}  // namespace thermobeat::pcts
