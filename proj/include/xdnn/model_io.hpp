#ifndef XDNN_MODEL_IO_HPP
#define XDNN_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "xdnn/dataset.hpp"
#include "xdnn/learner.hpp"

namespace xdnn {

/// Binary feature file layout (all integers and floats little-endian):
///
///   "XDNF"                      4 bytes
///   version                     u16 (kFeatureFormatVersion)
///   n_samples                   u64
///   n_dims                      u32
///   label_count                 u32
///   label_count x { u32 byte length, UTF-8 bytes }
///   n_samples x {
///     class index               u32 (< label_count)
///     source_ref                u32 byte length, UTF-8 bytes
///     n_dims x f32              IEEE-754 binary32
///   }
inline constexpr std::uint16_t kFeatureFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

/// Reads a feature file. Paths ending in ".csv" use the text fallback:
/// header `label,source_ref,f0,...,f{n-1}`, one sample per line, labels as names
/// (indexed in order of first appearance).
Dataset read_features(const std::filesystem::path& path);
void write_features(const Dataset& dataset, const std::filesystem::path& path);

Dataset read_features_binary(std::istream& is);
void write_features_binary(const Dataset& dataset, std::ostream& os);
Dataset read_features_csv(std::istream& is);
void write_features_csv(const Dataset& dataset, std::ostream& os);

/// JSON model document. Doubles are written in shortest round-trip decimal form, so
/// load_model(save_model(m)) == m bit for bit.
std::string model_to_string(const Model& model);
Model model_from_string(const std::string& text);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace xdnn

#endif  // XDNN_MODEL_IO_HPP
