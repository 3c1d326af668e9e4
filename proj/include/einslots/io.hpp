// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor file format: {"shape": [..], "data": [flat row-major values]}.

#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "einslots/errors.hpp"
#include "einslots/tensor.hpp"

namespace einslots {

inline Tensor tensor_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data"))
    throw LengthMismatch("tensor json must be an object with \"shape\" and \"data\"");
  std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (data.size() != numel(shape))
    throw LengthMismatch("tensor json: data length " + std::to_string(data.size()) +
                         " does not match shape product " + std::to_string(numel(shape)));
  return Tensor(std::move(shape), std::move(data));
}

inline nlohmann::json tensor_to_json(const Tensor& t) {
  return nlohmann::json{{"shape", t.shape}, {"data", t.data}};
}

inline Tensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LengthMismatch("cannot open tensor file: " + path);
  nlohmann::json j;
  in >> j;
  return tensor_from_json(j);
}

inline void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path);
  if (!out) throw LengthMismatch("cannot open tensor file for writing: " + path);
  out << tensor_to_json(t).dump(2) << '\n';
}

}  // namespace einslots
