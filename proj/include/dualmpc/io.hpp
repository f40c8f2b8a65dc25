/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// JSON and CSV helpers shared by checkpoints, configs and run output.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace dualmpc::io {

using nlohmann::json;

/// Exact round-trippable text for a double (C99 hex-float, e.g. "0x1.8p+1").
std::string hex_double(double v);
/// Accepts hex-float strings and plain JSON numbers.
double parse_double(const json& j);

json vector_to_json(const Eigen::VectorXd& v);
json matrix_to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::VectorXd vector_from_json(const json& j);
Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_if_empty = 0);

/// Plain numbers (for configs): scalar or list.
Eigen::VectorXd number_list(const json& j);

/// Rejects any key of `obj` not in `allowed`. `where` names the object in
/// the error message.
void require_known_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& where);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Minimal CSV table: header plus rows of numbers printed with 17
/// significant digits.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string to_string() const;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvData read_csv(const std::filesystem::path& path);

}  // namespace dualmpc::io
