#pragma once

// JSON conversion for models, designs and reports. Objects serialize with
// sorted keys; matrices are arrays of rows and vectors are flat arrays.

#include <json.hpp>

#include <string>

#include "petc/design.hpp"
#include "petc/lmi.hpp"
#include "petc/petcsim.hpp"
#include "petc/systems.hpp"
#include "petc/timing.hpp"

namespace petc::io {

using Json = nlohmann::json;

/// 2-space indented text with a trailing newline.
[[nodiscard]] std::string dump(const Json& j);

/// Throws ConfigurationError when the file cannot be read or parsed.
[[nodiscard]] Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

[[nodiscard]] Json matrix_to_json(const Matrix& m);
[[nodiscard]] Json vector_to_json(const Vector& v);
/// Accepts a number (1×1), a flat array (column) or an array of rows.
[[nodiscard]] Matrix matrix_from_json(const Json& j, const std::string& what);
[[nodiscard]] Vector vector_from_json(const Json& j, const std::string& what);
[[nodiscard]] double number_from_json(const Json& j, const std::string& key);

[[nodiscard]] Json to_json(const lmi::Assignment& a);
[[nodiscard]] lmi::Assignment assignment_from_json(const Json& j);
[[nodiscard]] Json to_json(const lmi::MarginReport& r);
[[nodiscard]] Json to_json(const lmi::FeasibilityResult& r);
[[nodiscard]] Json describe(const lmi::LmiInstance& inst);

[[nodiscard]] Json to_json(const timing::TimingDesign& d);
[[nodiscard]] Json to_json(const timing::OutputTimingDesign& d);
[[nodiscard]] timing::TimingDesign timing_design_from_json(const Json& j);
[[nodiscard]] timing::OutputTimingDesign output_timing_from_json(const Json& j);

[[nodiscard]] Json to_json(const systems::StateFeedbackGains& g);
[[nodiscard]] Json to_json(const systems::ObserverDesign& o);
[[nodiscard]] systems::StateFeedbackGains gains_from_json(const Json& j);
[[nodiscard]] systems::ObserverDesign observer_from_json(const Json& j);

/// {"A","B","E","Ew","Cq","C"?, "nonlinearity": "sin"|"tanh"|"zero"|{"linear":g},
///  "multiplier": {"lipschitz": L} | {"sector": {"K1","K2","S"}} | {"matrix": M}}.
/// Omitting E, Cq, nonlinearity and multiplier gives a linear plant.
[[nodiscard]] systems::IqcPlant plant_from_json(const Json& j);

[[nodiscard]] Json to_json(const design::StateDesign& d);
[[nodiscard]] Json to_json(const design::OutputDesign& d);

[[nodiscard]] Json to_json(const sim::StatsRow& r);
[[nodiscard]] Json to_json(const sim::LyapunovReport& r);

} // namespace petc::io
