#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "coxbayes/covariates.hpp"

namespace coxbayes {

using Json = nlohmann::json;

Json to_json(const CovarianceKernel& kernel);
CovarianceKernel kernel_from_json(const Json& j);
Json to_json(const MarkLaw& marks);
MarkLaw mark_law_from_json(const Json& j);
Json to_json(const GeneratorDescriptor& generator);
GeneratorDescriptor generator_from_json(const Json& j);
Json to_json(const StationaryMeasure& nu);
StationaryMeasure stationary_measure_from_json(const Json& j);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace coxbayes
