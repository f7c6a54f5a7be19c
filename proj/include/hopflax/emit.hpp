#pragma once

#include <string>
#include <vector>

#include "hopflax/backward.hpp"
#include "hopflax/characteristics.hpp"
#include "hopflax/hopflax.hpp"
#include "hopflax/regularity.hpp"
#include "hopflax/viscosity.hpp"

namespace hopflax {

enum class Format { Csv, Json };
Format parse_format(const std::string& name);  // "csv" | "json"

// Sampled conjugate H*(z) with its maximizers.
struct ConjugateTable {
  std::vector<double> z, value, arg;
};

// All emitters are deterministic: CSV rows carry 17 significant digits in
// row-major order under a header row; JSON objects keep a fixed key order.
std::string to_csv(const SolutionGrid& grid);
std::string to_json(const SolutionGrid& grid);
std::string to_csv(const MinimizerSet& set);
std::string to_json(const MinimizerSet& set);
std::string to_csv(const ConjugateTable& table);
std::string to_json(const ConjugateTable& table);
std::string to_csv(const PreimageSet& set);
std::string to_json(const PreimageSet& set);
std::string to_csv(const std::vector<GradientPair>& pairs);
std::string to_json(const std::vector<GradientPair>& pairs);
std::string to_csv(const Characteristic& curve, const ClassifyAlongReport& report);
std::string to_json(const Characteristic& curve, const ClassifyAlongReport& report);
std::string to_csv(const StripReport& report);
std::string to_json(const StripReport& report);
std::string to_csv(const RegionVerdict& verdict);
std::string to_json(const RegionVerdict& verdict);
std::string to_csv(const SemigroupReport& report);
std::string to_json(const SemigroupReport& report);
std::string to_csv(const BfReport& report);
std::string to_json(const BfReport& report);
std::string to_csv(const RoundtripReport& report);
std::string to_json(const RoundtripReport& report);

// One polyline block per curve, blocks separated by a blank line.
std::string curve_family_csv(const std::vector<Characteristic>& curves,
                             const std::vector<double>& times);

void write_file(const std::string& path, const std::string& content);

}  // namespace hopflax
