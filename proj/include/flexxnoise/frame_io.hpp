#pragma once

#include <optional>
#include <string>

#include "flexxnoise/frame.hpp"
#include "flexxnoise/scene.hpp"

namespace flexxnoise {

/// DPF1 container: magic "DPF1" | u32 width | u32 height | u32 frame_count |
/// frame_count * width * height IEEE-754 binary32 depths in meters,
/// row-major, frames consecutive, little-endian throughout. NaN marks an
/// invalid pixel. A UTF-8 JSON sidecar at path + ".meta.json" carries the
/// capture condition (and optionally the synthetic scene that produced the
/// stack).
///
/// Both files are written to a temp name and renamed, so a failed write
/// leaves no partial output. Reads never repair: any header or sidecar
/// inconsistency throws DataError.

inline constexpr const char* kSidecarSuffix = ".meta.json";

void write_stack(const FrameStack& stack, const std::string& path,
                 const std::optional<PlanarScene>& scene = std::nullopt);

FrameStack read_stack(const std::string& path);

/// Scene block of the sidecar, if the stack records one.
std::optional<PlanarScene> read_stack_scene(const std::string& path);

/// Write-to-temp-then-rename, for report/coefficient outputs that share the
/// no-partial-files guarantee of the stack writer.
void write_text_atomic(const std::string& path, const std::string& text);

}  // namespace flexxnoise
