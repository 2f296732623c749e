#pragma once

#include "pdmp/simulate.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>

namespace pdmp {

// JSON-lines {n, tau, y, i} with one-based i. A non-null header is written as
// the first line.
void write_path_jsonl(const EmbeddedPath& path, std::ostream& out, const nlohmann::json& header = nullptr);

// Columnar binary layout, native little-endian:
//   "PDMPPATH" | u32 version | u32 header bytes | header JSON
//   | u64 records | u32 dim | f64 tau[] | f64 dtau[] | i32 i[] (one-based)
//   | f64 y[] (coordinate-major: all of y_1, then y_2, ...)
void write_path_binary(const EmbeddedPath& path, std::ostream& out, const nlohmann::json& header = nlohmann::json::object());

struct LoadedPath {
  EmbeddedPath path;
  nlohmann::json header;
};
LoadedPath read_path_binary(std::istream& in);

}  // namespace pdmp
