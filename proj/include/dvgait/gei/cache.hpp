#pragma once

#include <filesystem>
#include <vector>

#include "dvgait/gaitgen/corpus.hpp"
#include "dvgait/gei/gei.hpp"

namespace dvgait::gei {

/// `<root>/<subject>/<sequence>/<view>.png`
std::filesystem::path cache_path(const std::filesystem::path& root, const std::string& subject,
                                 const std::string& sequence, double view_deg);

/// Stores round(p * 255) as 8-bit gray.
void write_gei_png(const std::filesystem::path& path, const Gei& gei);
/// Pixel values come back as k / 255; labels are supplied by the caller.
std::vector<float> read_gei_pixels(const std::filesystem::path& path);

/// Values as they survive a cache round trip.
std::vector<float> quantize(std::span<const float> pixels);

/// GEIs for every manifest cell of a silhouette corpus. Missing cache entries
/// are computed from the frames and written; returned pixels are always the
/// quantized cache values, so fresh and cached loads agree exactly.
std::vector<Gei> load_corpus_geis(const std::filesystem::path& corpus_root, const std::filesystem::path& cache_root);

}  // namespace dvgait::gei
