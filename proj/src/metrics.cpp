// src/metrics.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "bisep/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "bisep/errors.hpp"

namespace bisep::metrics {

namespace {

constexpr double kDenFloor = 1e-12;
constexpr double kSiriCapDb = 120.0;

void check_same_shape(const ace::Electrodogram& a, const ace::Electrodogram& b,
                      const char* what) {
  if (a.num_electrodes != b.num_electrodes || a.num_frames != b.num_frames) {
    throw ShapeError(std::string(what) + ": electrodogram shapes differ (" +
                     std::to_string(a.num_electrodes) + "x" +
                     std::to_string(a.num_frames) + " vs " +
                     std::to_string(b.num_electrodes) + "x" +
                     std::to_string(b.num_frames) + ")");
  }
}

double sum_squared_error(const ace::Electrodogram& a,
                         const ace::Electrodogram& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - b.values[i];
    acc += d * d;
  }
  return acc;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double_field(const std::string& field, const char* what) {
  if (field.empty()) {
    throw FormatError(std::string("results csv: empty ") + what + " field");
  }
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw FormatError(std::string("results csv: bad ") + what + " value '" +
                      field + "'");
  }
  return v;
}

}  // namespace

SiriResult siri(const ace::Electrodogram& p_mix,
                const ace::Electrodogram& p_tar,
                const ace::Electrodogram& p_hat) {
  check_same_shape(p_mix, p_tar, "siri");
  check_same_shape(p_hat, p_tar, "siri");
  if (p_tar.values.empty()) {
    throw ShapeError("siri: empty electrodograms");
  }

  const double num = sum_squared_error(p_mix, p_tar);
  const double den = sum_squared_error(p_hat, p_tar);

  SiriResult result;
  if (num == 0.0) {
    result.undefined = true;
    return result;
  }
  double floored = den;
  if (floored < kDenFloor) {
    floored = kDenFloor;
    result.capped = true;
  }
  double value = 10.0 * std::log10(num / floored);
  if (value > kSiriCapDb) {
    value = kSiriCapDb;
    result.capped = true;
  }
  result.value_db = value;
  return result;
}

std::vector<LccValue> lcc_per_electrode(const ace::Electrodogram& p_hat,
                                        const ace::Electrodogram& p_tar) {
  check_same_shape(p_hat, p_tar, "lcc");
  if (p_tar.num_frames < 2) {
    throw ShapeError("lcc: need at least 2 frames per electrode, got " +
                     std::to_string(p_tar.num_frames));
  }
  const int m_total = p_tar.num_electrodes;
  const int k_total = p_tar.num_frames;
  std::vector<LccValue> out(static_cast<std::size_t>(m_total));
  for (int m = 0; m < m_total; ++m) {
    double mean_a = 0.0;
    double mean_b = 0.0;
    for (int k = 0; k < k_total; ++k) {
      mean_a += p_hat.at(m, k);
      mean_b += p_tar.at(m, k);
    }
    mean_a /= k_total;
    mean_b /= k_total;
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (int k = 0; k < k_total; ++k) {
      const double da = p_hat.at(m, k) - mean_a;
      const double db = p_tar.at(m, k) - mean_b;
      cov += da * db;
      var_a += da * da;
      var_b += db * db;
    }
    if (var_a <= 0.0 || var_b <= 0.0) {
      out[static_cast<std::size_t>(m)] = {0.0, false};
      continue;
    }
    double r = cov / std::sqrt(var_a * var_b);
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    out[static_cast<std::size_t>(m)] = {r, true};
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records,
                                    GroupBy group_by) {
  std::map<double, std::vector<double>> groups;
  for (const auto& rec : records) {
    switch (group_by) {
      case GroupBy::input_sir:
        if (!rec.siri.undefined) {
          groups[rec.input_sir_db].push_back(rec.siri.value_db);
        }
        break;
      case GroupBy::rho:
        if (!rec.siri.undefined) {
          groups[rec.rho].push_back(rec.siri.value_db);
        }
        break;
      case GroupBy::electrode:
        for (std::size_t m = 0; m < rec.lcc.size(); ++m) {
          if (rec.lcc[m].defined) {
            groups[static_cast<double>(m + 1)].push_back(rec.lcc[m].value);
          }
        }
        break;
    }
  }

  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    AggregateRow row;
    row.group = key;
    row.count = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    row.mean = mean;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) {
        const double d = v - mean;
        ss += d * d;
      }
      const double sample_var = ss / static_cast<double>(values.size() - 1);
      row.standard_error =
          std::sqrt(sample_var / static_cast<double>(values.size()));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& records,
                       int num_electrodes) {
  if (num_electrodes < 1) {
    throw ConfigError("results csv: num_electrodes must be >= 1");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("results csv: cannot open for writing: " + path);
  }
  out << "utt_id,variant,curriculum,input_sir_db,rho,siri_db,capped";
  for (int m = 1; m <= num_electrodes; ++m) {
    out << ",lcc_e" << m;
  }
  out << ",rho_measured\n";

  for (const auto& rec : records) {
    if (static_cast<int>(rec.lcc.size()) != num_electrodes) {
      throw ShapeError("results csv: record '" + rec.utt_id + "' has " +
                       std::to_string(rec.lcc.size()) + " LCC values, want " +
                       std::to_string(num_electrodes));
    }
    out << rec.utt_id << ',' << model::variant_name(rec.variant) << ','
        << curriculum::kind_name(rec.curriculum) << ','
        << format_double(rec.input_sir_db) << ',' << format_double(rec.rho)
        << ',';
    if (!rec.siri.undefined) {
      out << format_double(rec.siri.value_db);
    }
    out << ',' << (rec.siri.capped ? '1' : '0');
    for (const auto& lcc : rec.lcc) {
      out << ',';
      if (lcc.defined) {
        out << format_double(lcc.value);
      }
    }
    out << ',' << format_double(rec.rho_measured) << '\n';
  }
  if (!out) {
    throw IoError("results csv: write failed: " + path);
  }
}

std::vector<EvalRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("results csv: cannot open: " + path);
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError("results csv: missing header: " + path);
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto cols = split_fields(header);
  const std::vector<std::string> prefix = {
      "utt_id", "variant", "curriculum", "input_sir_db",
      "rho",    "siri_db", "capped"};
  if (cols.size() < prefix.size() + 2) {
    throw FormatError("results csv: header too short: " + header);
  }
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (cols[i] != prefix[i]) {
      throw FormatError("results csv: header column " + std::to_string(i + 1) +
                        " is '" + cols[i] + "', want '" + prefix[i] + "'");
    }
  }
  if (cols.back() != "rho_measured") {
    throw FormatError("results csv: last header column is '" + cols.back() +
                      "', want 'rho_measured'");
  }
  const int num_electrodes =
      static_cast<int>(cols.size() - prefix.size() - 1);
  for (int m = 0; m < num_electrodes; ++m) {
    const std::string want = "lcc_e" + std::to_string(m + 1);
    if (cols[prefix.size() + static_cast<std::size_t>(m)] != want) {
      throw FormatError("results csv: expected header column '" + want +
                        "', got '" +
                        cols[prefix.size() + static_cast<std::size_t>(m)] +
                        "'");
    }
  }

  std::vector<EvalRecord> records;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols.size()) {
      throw FormatError("results csv: line " + std::to_string(line_no) +
                        " has " + std::to_string(fields.size()) +
                        " fields, want " + std::to_string(cols.size()));
    }
    EvalRecord rec;
    rec.utt_id = fields[0];
    try {
      rec.variant = model::variant_from_name(fields[1]);
      rec.curriculum = curriculum::kind_from_name(fields[2]);
    } catch (const ConfigError& e) {
      throw FormatError("results csv: line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    rec.input_sir_db = parse_double_field(fields[3], "input_sir_db");
    rec.rho = parse_double_field(fields[4], "rho");
    if (fields[5].empty()) {
      rec.siri.undefined = true;
    } else {
      rec.siri.value_db = parse_double_field(fields[5], "siri_db");
    }
    if (fields[6] != "0" && fields[6] != "1") {
      throw FormatError("results csv: line " + std::to_string(line_no) +
                        ": capped flag must be 0 or 1, got '" + fields[6] +
                        "'");
    }
    rec.siri.capped = fields[6] == "1";
    rec.lcc.resize(static_cast<std::size_t>(num_electrodes));
    for (int m = 0; m < num_electrodes; ++m) {
      const auto& f = fields[7 + static_cast<std::size_t>(m)];
      if (f.empty()) {
        rec.lcc[static_cast<std::size_t>(m)] = {0.0, false};
      } else {
        rec.lcc[static_cast<std::size_t>(m)] = {
            parse_double_field(f, "lcc"), true};
      }
    }
    rec.rho_measured = parse_double_field(fields.back(), "rho_measured");
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace bisep::metrics
