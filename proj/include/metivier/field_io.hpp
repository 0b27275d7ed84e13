#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "metivier/error.hpp"
#include "metivier/polar_grid.hpp"

// Field file layout
//   line 1: JSON header terminated by '\n'
//     {"version":1, "kind":"sampled"|"periodic", "n":int, "m":int,
//      "grid":{"r_max":real, "radial":[int...], "angular":[int...]},
//      "t_count":[int...], "count":int, "encoding":"binary"|"base64", "metadata":string}
//   payload: count complex values, each two little-endian IEEE float64 (re, im),
//     row-major over (r_1, a_1, ..., r_n, a_n[, t_1, ..., t_m]).
//     binary: raw 16*count bytes. base64: one line of standard base64 text.

namespace metivier {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

inline constexpr int kFieldFileVersion = 1;

enum class Encoding { kBinary, kBase64 };

namespace detail {

inline const char* base64_alphabet() {
  return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(const unsigned char* data, std::size_t len) {
  const char* abc = base64_alphabet();
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    std::uint32_t v = std::uint32_t(data[i]) << 16;
    if (i + 1 < len) v |= std::uint32_t(data[i + 1]) << 8;
    if (i + 2 < len) v |= data[i + 2];
    out += abc[(v >> 18) & 63];
    out += abc[(v >> 12) & 63];
    out += i + 1 < len ? abc[(v >> 6) & 63] : '=';
    out += i + 2 < len ? abc[v & 63] : '=';
  }
  return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& text, std::size_t offset) {
  int table[256];
  std::fill(std::begin(table), std::end(table), -1);
  const char* abc = base64_alphabet();
  for (int i = 0; i < 64; ++i) table[static_cast<unsigned char>(abc[i])] = i;
  if (text.size() % 4 != 0)
    fail(ErrorCode::kMalformedFile, "base64 payload length not a multiple of 4 at offset " + std::to_string(offset));
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        v[k] = table[static_cast<unsigned char>(c)];
        if (v[k] < 0 || pad)
          fail(ErrorCode::kMalformedFile, "invalid base64 character at offset " + std::to_string(offset + i + k));
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back((w >> 16) & 255);
    if (pad < 2) out.push_back((w >> 8) & 255);
    if (pad < 1) out.push_back(w & 255);
  }
  return out;
}

template <int N>
nlohmann::json grid_json(const PolarGrid<N>& g) {
  nlohmann::json j;
  j["r_max"] = g.r_max();
  for (int k = 0; k < N; ++k) {
    j["radial"].push_back(g.radial_count(k));
    j["angular"].push_back(g.angular_count(k));
  }
  return j;
}

template <int N>
PolarGrid<N> grid_from_json(const nlohmann::json& j) {
  std::array<int, N> r{}, a{};
  const auto& rad = j.at("radial");
  const auto& ang = j.at("angular");
  if (rad.size() != N || ang.size() != N) fail(ErrorCode::kMalformedFile, "grid lists do not have n entries");
  for (int k = 0; k < N; ++k) {
    r[k] = rad[k].get<int>();
    a[k] = ang[k].get<int>();
  }
  try {
    return PolarGrid<N>(r, a, j.at("r_max").get<double>());
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedFile, std::string("invalid grid: ") + e.what());
  }
}

inline void write_payload(std::ostream& os, const std::vector<cplx>& values, Encoding enc) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const std::size_t len = values.size() * sizeof(cplx);
  if (enc == Encoding::kBinary) {
    os.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(len));
  } else {
    os << base64_encode(bytes, len) << '\n';
  }
}

struct RawField {
  nlohmann::json header;
  std::vector<cplx> values;
};

inline RawField read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kInvalidArgument, "cannot open field file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kMalformedFile, "missing header line at offset 0");
  RawField raw;
  try {
    raw.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kMalformedFile, "header line 1, byte " + std::to_string(e.byte) + ": not valid JSON");
  }
  const std::size_t offset = line.size() + 1;
  try {
    const int version = raw.header.at("version").get<int>();
    if (version != kFieldFileVersion)
      fail(ErrorCode::kVersionMismatch, "field file version " + std::to_string(version) + ", expected 1");
    const auto count = raw.header.at("count").get<std::size_t>();
    const std::string enc = raw.header.at("encoding").get<std::string>();
    std::vector<unsigned char> bytes;
    if (enc == "binary") {
      bytes.resize(count * sizeof(cplx));
      in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      const auto got = static_cast<std::size_t>(in.gcount());
      if (got != bytes.size())
        fail(ErrorCode::kMalformedFile, "payload truncated at byte offset " + std::to_string(offset + got) +
                                            ", expected " + std::to_string(bytes.size()) + " bytes");
      if (in.peek() != std::char_traits<char>::eof())
        fail(ErrorCode::kMalformedFile, "trailing bytes after payload at offset " +
                                            std::to_string(offset + bytes.size()));
    } else if (enc == "base64") {
      std::string text;
      std::getline(in, text);
      bytes = base64_decode(text, offset);
      if (bytes.size() != count * sizeof(cplx))
        fail(ErrorCode::kMalformedFile, "base64 payload holds " + std::to_string(bytes.size()) +
                                            " bytes, header declares " + std::to_string(count) + " values");
    } else {
      fail(ErrorCode::kMalformedFile, "unknown encoding '" + enc + "'");
    }
    raw.values.resize(count);
    std::memcpy(raw.values.data(), bytes.data(), bytes.size());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedFile, std::string("header line 1: ") + e.what());
  }
  return raw;
}

}  // namespace detail

template <int N>
void write_field(const SampledField<N>& f, const std::string& path, Encoding enc = Encoding::kBinary) {
  nlohmann::json h;
  h["version"] = kFieldFileVersion;
  h["kind"] = "sampled";
  h["n"] = N;
  h["m"] = 0;
  h["grid"] = detail::grid_json(f.grid);
  h["t_count"] = nlohmann::json::array();
  h["count"] = f.values.size();
  h["encoding"] = enc == Encoding::kBinary ? "binary" : "base64";
  h["metadata"] = f.metadata;
  h["truncation_bound"] = f.grid.truncation_bound();
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::kInvalidArgument, "cannot write field file '" + path + "'");
  os << h.dump() << '\n';
  detail::write_payload(os, f.values, enc);
}

template <int N>
void write_field(const PeriodicField<N>& f, const std::string& path, Encoding enc = Encoding::kBinary) {
  validate_periodic(f);
  nlohmann::json h;
  h["version"] = kFieldFileVersion;
  h["kind"] = "periodic";
  h["n"] = N;
  h["m"] = f.m;
  h["grid"] = detail::grid_json(f.grid);
  h["t_count"] = f.t_count;
  h["count"] = f.values.size();
  h["encoding"] = enc == Encoding::kBinary ? "binary" : "base64";
  h["metadata"] = f.metadata;
  h["truncation_bound"] = f.grid.truncation_bound();
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::kInvalidArgument, "cannot write field file '" + path + "'");
  os << h.dump() << '\n';
  detail::write_payload(os, f.values, enc);
}

using AnyField = std::variant<SampledField<1>, SampledField<2>, PeriodicField<1>, PeriodicField<2>>;

namespace detail {

template <int N>
AnyField assemble(RawField&& raw) {
  const auto& h = raw.header;
  PolarGrid<N> grid = grid_from_json<N>(h.at("grid"));
  const std::string kind = h.at("kind").get<std::string>();
  const std::string meta = h.value("metadata", std::string());
  if (kind == "sampled") {
    if (raw.values.size() != grid.size())
      fail(ErrorCode::kMalformedFile, "declared count " + std::to_string(raw.values.size()) +
                                          " does not match grid size " + std::to_string(grid.size()));
    return SampledField<N>(std::move(grid), std::move(raw.values), meta);
  }
  if (kind == "periodic") {
    PeriodicField<N> f;
    f.grid = std::move(grid);
    f.m = h.at("m").get<int>();
    f.t_count = h.at("t_count").get<std::vector<int>>();
    f.metadata = meta;
    f.values = std::move(raw.values);
    try {
      validate_periodic(f);
    } catch (const Error& e) {
      fail(ErrorCode::kMalformedFile, e.what());
    }
    return f;
  }
  fail(ErrorCode::kMalformedFile, "unknown field kind '" + kind + "'");
}

}  // namespace detail

inline AnyField read_field(const std::string& path) {
  detail::RawField raw = detail::read_raw(path);
  try {
    const int n = raw.header.at("n").get<int>();
    check_dimension(n);
    return n == 1 ? detail::assemble<1>(std::move(raw)) : detail::assemble<2>(std::move(raw));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedFile, std::string("header line 1: ") + e.what());
  }
}

template <int N>
SampledField<N> read_sampled(const std::string& path) {
  AnyField any = read_field(path);
  if (auto* f = std::get_if<SampledField<N>>(&any)) return std::move(*f);
  fail(ErrorCode::kDimensionMismatch, "field file '" + path + "' is not a sampled field with n = " + std::to_string(N));
}

template <int N>
PeriodicField<N> read_periodic(const std::string& path) {
  AnyField any = read_field(path);
  if (auto* f = std::get_if<PeriodicField<N>>(&any)) return std::move(*f);
  fail(ErrorCode::kDimensionMismatch, "field file '" + path + "' is not a periodic field with n = " + std::to_string(N));
}

/// CSV of the radial line at angular index a (other coordinates at index 0).
template <int N>
void write_radial_slice_csv(const SampledField<N>& f, int a, std::ostream& os) {
  require(a >= 0 && a < f.grid.angular_count(0), ErrorCode::kInvalidArgument, "angular index out of range");
  os << "r,re,im\n";
  os.precision(17);
  for (int i = 0; i < f.grid.radial_count(0); ++i) {
    std::array<std::pair<int, int>, N> ia{};
    ia[0] = {i, a};
    const auto v = f.values[f.grid.flatten(ia)];
    os << f.grid.radii(0)[i] << ',' << v.real() << ',' << v.imag() << '\n';
  }
}

}  // namespace metivier
