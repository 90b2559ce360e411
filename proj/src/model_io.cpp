#include "leafseg/model_io.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "leafseg/error.hpp"

namespace leafseg {

namespace {

std::uint16_t narrow16(long long v) {
  if (v < 0 || v > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "dimension does not fit the model format");
  }
  return static_cast<std::uint16_t>(v);
}

void write_network(detail::ByteWriter& w, const Model& net) {
  w.magic("LSNN");
  w.u16(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(net.arity()));
  w.u8(static_cast<std::uint8_t>(net.layers().size()));
  w.u16(narrow16(net.input_shape().channels));
  w.u16(narrow16(net.input_shape().height));
  w.u16(narrow16(net.input_shape().width));
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const LayerSpec& l = net.layers()[i];
    w.u8(static_cast<std::uint8_t>(l.kind));
    if (l.kind == LayerKind::Conv) {
      w.u16(narrow16(l.units));
      w.u16(narrow16(l.kernel));
    } else if (l.kind == LayerKind::Dense) {
      w.u16(narrow16(l.units));
    }
    if (!l.parametric()) continue;
    const auto& p = net.parameters()[i];
    w.u32(static_cast<std::uint32_t>(p.weights.size()));
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) w.f32(p.weights(r, c));
    }
    for (Eigen::Index r = 0; r < p.bias.size(); ++r) w.f32(p.bias(r));
  }
}

Model read_network(detail::ByteReader& r) {
  if (!r.magic("LSNN")) throw Error(ErrorCode::MalformedModel, "missing LSNN magic");
  const std::uint16_t version = r.u16();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version));
  }
  const int arity = r.u8();
  const int count = r.u8();
  Shape3 input;
  input.channels = r.u16();
  input.height = r.u16();
  input.width = r.u16();
  std::vector<LayerSpec> layers;
  std::vector<std::pair<std::vector<float>, std::vector<float>>> weights;
  for (int i = 0; i < count; ++i) {
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(LayerKind::Softmax)) throw Error(ErrorCode::MalformedModel, "unknown layer tag");
    LayerSpec l{static_cast<LayerKind>(tag), 0, 0};
    if (l.kind == LayerKind::Conv) {
      l.units = r.u16();
      l.kernel = r.u16();
    } else if (l.kind == LayerKind::Dense) {
      l.units = r.u16();
    }
    std::vector<float> w;
    std::vector<float> b;
    if (l.parametric()) {
      const std::uint32_t n = r.u32();
      if (n > r.remaining() / 4) throw Error(ErrorCode::MalformedModel, "weight block truncated");
      w.resize(n);
      for (auto& v : w) v = r.f32();
      b.resize(static_cast<std::size_t>(l.units));
      for (auto& v : b) v = r.f32();
    }
    layers.push_back(l);
    weights.emplace_back(std::move(w), std::move(b));
  }
  Model net;
  try {
    net = Model(input, layers);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedModel, std::string("inconsistent layers: ") + e.what());
  }
  if (net.arity() != arity) throw Error(ErrorCode::MalformedModel, "arity does not match final layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].parametric()) continue;
    auto& p = net.parameters()[i];
    const auto& [w, b] = weights[i];
    if (static_cast<Eigen::Index>(w.size()) != p.weights.size()) {
      throw Error(ErrorCode::MalformedModel, "weight count does not match layer shape");
    }
    std::size_t k = 0;
    for (Eigen::Index row = 0; row < p.weights.rows(); ++row) {
      for (Eigen::Index c = 0; c < p.weights.cols(); ++c) p.weights(row, c) = w[k++];
    }
    for (Eigen::Index row = 0; row < p.bias.size(); ++row) p.bias(row) = b[static_cast<std::size_t>(row)];
  }
  return net;
}

}  // namespace

std::vector<std::uint8_t> serialize_network(const Model& net) {
  detail::ByteWriter w;
  write_network(w, net);
  return std::move(w.bytes());
}

Model deserialize_network(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::MalformedModel);
  Model net = read_network(r);
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedModel, "trailing bytes after model");
  return net;
}

std::vector<std::uint8_t> serialize_tree(const ClassifierTree& tree) {
  if (tree.split.input_shape() != tree.internal.input_shape() ||
      tree.split.input_shape() != tree.external.input_shape()) {
    throw Error(ErrorCode::ShapeMismatch, "tree networks disagree on input shape");
  }
  detail::ByteWriter w;
  w.magic("LSTR");
  w.u16(kModelFormatVersion);
  write_network(w, tree.split);
  write_network(w, tree.internal);
  write_network(w, tree.external);
  return std::move(w.bytes());
}

ClassifierTree deserialize_tree(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::MalformedModel);
  if (!r.magic("LSTR")) throw Error(ErrorCode::MalformedModel, "missing LSTR magic");
  if (const std::uint16_t version = r.u16(); version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "tree format version " + std::to_string(version));
  }
  ClassifierTree tree{read_network(r), read_network(r), read_network(r)};
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedModel, "trailing bytes after tree");
  if (tree.split.input_shape() != tree.internal.input_shape() ||
      tree.split.input_shape() != tree.external.input_shape()) {
    throw Error(ErrorCode::MalformedModel, "tree networks disagree on input shape");
  }
  for (const Model* m : {&tree.split, &tree.internal, &tree.external}) {
    if (m->arity() != 2) throw Error(ErrorCode::MalformedModel, "tree networks must be binary");
  }
  return tree;
}

void save_model(const std::filesystem::path& path, const Model& net) {
  detail::write_file(path, serialize_network(net));
}

void save_model(const std::filesystem::path& path, const ClassifierTree& tree) {
  detail::write_file(path, serialize_tree(tree));
}

AnyModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "LSTR")) return deserialize_tree(bytes);
  return deserialize_network(bytes);
}

Model load_network(const std::filesystem::path& path) { return deserialize_network(detail::read_file(path)); }

ClassifierTree load_tree(const std::filesystem::path& path) { return deserialize_tree(detail::read_file(path)); }

}  // namespace leafseg
