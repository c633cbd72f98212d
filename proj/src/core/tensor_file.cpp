/*
 * This file is part of kgp, a library for Kronecker-structured Gaussian
 * process regression on rectilinear and gappy grids.
 *
 * Licensed under the Apache License, Version 2.0. You may obtain a copy of
 * the License at http://www.apache.org/licenses/LICENSE-2.0
 */
#include "kgp/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kgp/error.hpp"
#include "kgp/json_io.hpp"

namespace kgp {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

std::string encode_tensor(const TensorFileData& data) {
  const auto& t = data.tensor;
  if (t.size() != shape_product(t.shape)) throw_dimension("tensor values do not match its shape");
  if (!data.axis_roles.empty() && data.axis_roles.size() != t.shape.size())
    throw_dimension("axis role count does not match tensor rank");
  if (data.mask && data.mask->size() != t.size()) throw_dimension("mask length does not match tensor size");
  Json header;
  header["magic"] = "KGP1";
  header["dtype"] = "f64le";
  header["shape"] = t.shape;
  header["axis_roles"] = data.axis_roles;
  header["mask_present"] = data.mask.has_value();
  std::string out = header.dump();
  out.push_back('\n');
  const std::size_t head = out.size();
  out.resize(head + 8 * t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(t.values[static_cast<Eigen::Index>(i)]));
    std::memcpy(out.data() + head + 8 * i, &bits, 8);
  }
  if (data.mask)
    for (auto m : *data.mask) out.push_back(static_cast<char>(m ? 1 : 0));
  return out;
}

TensorFileData decode_tensor(const std::string& bytes, const std::string& origin) {
  auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw IoError(origin + ": missing tensor header line");
  Json header;
  try {
    header = Json::parse(bytes.substr(0, nl));
  } catch (const Json::exception& e) {
    throw IoError(origin + ": malformed tensor header (" + e.what() + ")");
  }
  if (!header.is_object() || header.value("magic", "") != "KGP1") throw IoError(origin + ": wrong magic");
  if (header.value("dtype", "") != "f64le") throw IoError(origin + ": unsupported dtype");
  TensorFileData d;
  std::vector<std::size_t> shape;
  try {
    shape = header.at("shape").get<std::vector<std::size_t>>();
    d.axis_roles = header.value("axis_roles", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw IoError(origin + ": bad header field (" + e.what() + ")");
  }
  const bool has_mask = header.value("mask_present", false);
  const std::size_t n = shape_product(shape);
  const std::size_t expected = nl + 1 + 8 * n + (has_mask ? n : 0);
  if (bytes.size() != expected)
    throw IoError(origin + ": payload is " + std::to_string(bytes.size() - nl - 1) + " bytes, expected " +
                  std::to_string(expected - nl - 1));
  Vector values(static_cast<Eigen::Index>(n));
  const char* p = bytes.data() + nl + 1;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, p + 8 * i, 8);
    values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(to_little(bits));
  }
  if (has_mask) {
    std::vector<std::uint8_t> mask(n);
    const char* q = p + 8 * n;
    for (std::size_t i = 0; i < n; ++i) {
      auto m = static_cast<std::uint8_t>(q[i]);
      if (m > 1) throw IoError(origin + ": mask byte must be 0 or 1");
      if (m == 1 && std::isnan(values[static_cast<Eigen::Index>(i)]))
        throw IoError(origin + ": regular entry " + std::to_string(i) + " holds NaN");
      mask[i] = m;
    }
    d.mask = std::move(mask);
  }
  d.tensor = FieldTensor(std::move(shape), std::move(values));
  return d;
}

void write_tensor_file(const std::string& path, const TensorFileData& data) {
  std::string bytes = encode_tensor(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

TensorFileData read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_tensor(ss.str(), path);
}

}  // namespace kgp
