// File formats: JSON-lines datasets, JSON weight arrays, CSV loss reports and
// training traces.
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pmap/losses.hpp"
#include "pmap/spaces.hpp"
#include "pmap/trainer.hpp"

namespace pmap {

/// Shortest round-trip representation ("%.17g"); "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Datasets: one {"x": "0110...", "y": [components...]} object per line.

inline void write_dataset(std::ostream& os, const Dataset& S) {
  for (const auto& s : S.samples) {
    nlohmann::json j;
    j["x"] = s.x.to_string();
    auto c = s.y.components();
    j["y"] = std::vector<Component>(c.begin(), c.end());
    os << j.dump() << '\n';
  }
}

inline Dataset read_dataset(std::istream& is, const StructureFamily& family) {
  Dataset S{family, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Sample s;
      s.x = StructuredInput::from_string(j.at("x").get<std::string>());
      auto comps = j.at("y").get<std::vector<Component>>();
      s.y = Structure::canonical(comps);
      if (s.y.size() != comps.size()) throw std::invalid_argument("duplicate components in y");
      S.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  S.validate();
  return S;
}

// ---------------------------------------------------------------------------
// Weights: a JSON array of numbers.

inline void write_weights(std::ostream& os, const WeightVector& w) {
  os << '[';
  for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << format_double(w[i]);
  os << "]\n";
}

inline WeightVector read_weights(std::istream& is) {
  auto j = nlohmann::json::parse(is);
  if (!j.is_array()) throw std::runtime_error("weights file must hold a JSON array");
  return WeightVector(j.get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kLossCsvHeader = "run_id,method,kind,value,stderr";

inline void write_loss_row(std::ostream& os, std::string_view run_id, std::string_view method,
                           const LossReport& r) {
  os << run_id << ',' << method << ',' << to_string(r.kind) << ',' << format_double(r.value) << ','
     << format_double(r.std_error) << '\n';
}

inline constexpr std::string_view kTraceCsvHeader = "run_id,method,iter,objective,grad_norm,seconds";

inline void write_trace(std::ostream& os, std::string_view run_id, Method method,
                        const TrainTrace& trace, bool header = true) {
  if (header) os << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows)
    os << run_id << ',' << to_string(method) << ',' << r.iteration << ','
       << format_double(r.objective) << ',' << format_double(r.grad_norm) << ','
       << format_double(r.seconds) << '\n';
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

}  // namespace pmap
