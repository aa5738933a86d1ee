#include "pipecam/nn/network.hpp"

#include <cstring>
#include <fstream>

namespace pipecam::nn {

namespace {

[[noreturn]] void shape_fault(std::size_t layer, const std::string& what) {
  throw std::invalid_argument("layer " + std::to_string(layer) + ": " + what);
}

}  // namespace

std::vector<Shape> NetworkSpec::shapes() const {
  if (in_channels < 1 || in_h < 1 || in_w < 1)
    throw std::invalid_argument("network: bad input dims");
  std::vector<Shape> out;
  out.reserve(layers.size());
  Shape cur{in_channels, in_h, in_w};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    switch (l.kind) {
      case LayerKind::kConv2d:
        if (l.kernel != 1 && l.kernel != 3)
          shape_fault(i, "conv kernel must be 1 or 3");
        if (l.in_channels != cur.c)
          shape_fault(i, "conv expects " + std::to_string(l.in_channels) +
                             " channels, got " + std::to_string(cur.c));
        cur.c = l.out_channels;
        break;
      case LayerKind::kBatchNorm:
        if (l.bn_channels != cur.c)
          shape_fault(i, "batchnorm channel mismatch");
        break;
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
        break;
      case LayerKind::kMaxPool2:
        if (cur.h % 2 != 0 || cur.w % 2 != 0)
          shape_fault(i, "maxpool2 needs even spatial dims");
        cur.h /= 2;
        cur.w /= 2;
        break;
      case LayerKind::kUpsample2:
        cur.h *= 2;
        cur.w *= 2;
        break;
      case LayerKind::kConcat: {
        if (l.concat_source < 0 || l.concat_source >= static_cast<int>(i))
          shape_fault(i, "concat source must precede the concat layer");
        const Shape& src = out[l.concat_source];
        if (src.h != cur.h || src.w != cur.w)
          shape_fault(i, "concat spatial dims mismatch");
        cur.c += src.c;
        break;
      }
      case LayerKind::kDense:
        if (l.dense_in != cur.c * cur.h * cur.w)
          shape_fault(i, "dense expects " + std::to_string(l.dense_in) +
                             " inputs, got " +
                             std::to_string(cur.c * cur.h * cur.w));
        cur = Shape{l.dense_out, 1, 1};
        break;
      case LayerKind::kGlobalAvgPool:
        cur = Shape{cur.c, 1, 1};
        break;
    }
    out.push_back(cur);
  }
  return out;
}

std::vector<std::pair<int, int>> NetworkSpec::skip_table() const {
  std::vector<std::pair<int, int>> table;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::kConcat)
      table.emplace_back(layers[i].concat_source, static_cast<int>(i));
  return table;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kConv2d:
        count += static_cast<std::size_t>(l.out_channels) * l.in_channels *
                     l.kernel * l.kernel +
                 l.out_channels;
        break;
      case LayerKind::kDense:
        count += static_cast<std::size_t>(l.dense_out) * l.dense_in +
                 l.dense_out;
        break;
      case LayerKind::kBatchNorm:
        count += 2 * static_cast<std::size_t>(l.bn_channels);
        break;
      default:
        break;
    }
  }
  return count;
}

std::string param_name(int layer_index, const char* field) {
  return "L" + std::to_string(layer_index) + "." + field;
}

std::map<std::string, std::vector<int>> expected_parameters(
    const NetworkSpec& spec) {
  std::map<std::string, std::vector<int>> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const int li = static_cast<int>(i);
    switch (l.kind) {
      case LayerKind::kConv2d:
        out[param_name(li, "kernel")] = {l.out_channels, l.in_channels,
                                         l.kernel, l.kernel};
        out[param_name(li, "bias")] = {l.out_channels};
        break;
      case LayerKind::kDense:
        out[param_name(li, "weight")] = {l.dense_out, l.dense_in};
        out[param_name(li, "bias")] = {l.dense_out};
        break;
      case LayerKind::kBatchNorm:
        out[param_name(li, "gamma")] = {l.bn_channels};
        out[param_name(li, "beta")] = {l.bn_channels};
        out[param_name(li, "running_mean")] = {l.bn_channels};
        out[param_name(li, "running_var")] = {l.bn_channels};
        break;
      default:
        break;
    }
  }
  return out;
}

namespace {

std::vector<int> tensor_dims(const Tensor& t) {
  switch (t.rank) {
    case 1: return {t.n};
    case 2: return {t.n, t.c};
    default: return {t.n, t.c, t.h, t.w};
  }
}

template <typename T>
void write_le(std::ofstream& f, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  f.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f, const std::filesystem::path& path) {
  unsigned char b[sizeof(T)];
  f.read(reinterpret_cast<char*>(b), sizeof(T));
  if (f.gcount() != sizeof(T))
    throw FormatError("truncated weight file: " + path.string());
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void save_weights(const WeightStore& weights,
                  const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write("NNW1", 4);
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(weights.size()));
  for (const auto& [name, tensor] : weights) {
    write_le<std::uint16_t>(f, static_cast<std::uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto dims = tensor_dims(tensor);
    write_le<std::uint8_t>(f, static_cast<std::uint8_t>(dims.size()));
    for (int d : dims) write_le<std::uint32_t>(f, static_cast<std::uint32_t>(d));
    f.write(reinterpret_cast<const char*>(tensor.v.data()),
            static_cast<std::streamsize>(tensor.v.size() * sizeof(float)));
  }
  if (!f) throw IoError("short write: " + path.string());
}

WeightStore load_weights(const std::filesystem::path& path,
                         const NetworkSpec& spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char magic[4] = {};
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, "NNW1", 4) != 0)
    throw FormatError("bad weight magic at byte offset 0: " + path.string());

  auto expected = expected_parameters(spec);
  const auto count = read_le<std::uint32_t>(f, path);
  if (count != expected.size())
    throw FormatError("weight file has " + std::to_string(count) +
                      " tensors, spec expects " +
                      std::to_string(expected.size()) + ": " + path.string());

  WeightStore ws;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = read_le<std::uint16_t>(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (f.gcount() != name_len)
      throw FormatError("truncated tensor name: " + path.string());
    const auto it = expected.find(name);
    if (it == expected.end())
      throw FormatError("unexpected tensor '" + name + "' in " + path.string());
    const auto rank = read_le<std::uint8_t>(f, path);
    std::vector<int> dims(rank);
    for (auto& d : dims)
      d = static_cast<int>(read_le<std::uint32_t>(f, path));
    if (dims != it->second)
      throw FormatError("tensor '" + name + "' has wrong shape in " +
                        path.string());
    Tensor tensor;
    switch (rank) {
      case 1: tensor = Tensor::vec(dims[0]); break;
      case 2: tensor = Tensor::mat(dims[0], dims[1]); break;
      case 4: tensor = Tensor(dims[0], dims[1], dims[2], dims[3], 4); break;
      default:
        throw FormatError("tensor '" + name + "' has unsupported rank " +
                          std::to_string(rank) + ": " + path.string());
    }
    f.read(reinterpret_cast<char*>(tensor.v.data()),
           static_cast<std::streamsize>(tensor.v.size() * sizeof(float)));
    if (f.gcount() !=
        static_cast<std::streamsize>(tensor.v.size() * sizeof(float)))
      throw FormatError("truncated tensor data for '" + name + "': " +
                        path.string());
    ws.emplace(name, std::move(tensor));
    expected.erase(it);
  }
  if (!expected.empty())
    throw FormatError("weight file is missing tensor '" +
                      expected.begin()->first + "': " + path.string());
  return ws;
}

}  // namespace pipecam::nn
