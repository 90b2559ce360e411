#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "leafseg/cnn.hpp"

namespace leafseg {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// `LSNN` block: version u16, arity u8, layer count u8, input shape
/// (3 x u16), then per layer a type tag and, for Conv/Dense, its shape and
/// little-endian float32 weights followed by biases.
std::vector<std::uint8_t> serialize_network(const Model& net);
Model deserialize_network(std::span<const std::uint8_t> bytes);

/// `LSTR` + version u16 + split, internal and external `LSNN` blocks.
std::vector<std::uint8_t> serialize_tree(const ClassifierTree& tree);
ClassifierTree deserialize_tree(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Model& net);
void save_model(const std::filesystem::path& path, const ClassifierTree& tree);

using AnyModel = std::variant<Model, ClassifierTree>;

/// Dispatches on the file magic.
AnyModel load_model(const std::filesystem::path& path);
Model load_network(const std::filesystem::path& path);
ClassifierTree load_tree(const std::filesystem::path& path);

}  // namespace leafseg
