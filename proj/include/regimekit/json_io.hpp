#pragma once

#include "regimekit/msvar.hpp"
#include "regimekit/stationarity.hpp"
#include "regimekit/timeseries.hpp"
#include "regimekit/var.hpp"

#include "json.hpp"

#include <string>

namespace regimekit {

/// Insertion-ordered JSON so that emitted documents are byte-stable.
using Json = nlohmann::ordered_json;

namespace io {

/// Matrices as arrays of rows; non-finite entries become null and read back as NaN.
Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json number(double v);
double number_from(const Json& j);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

inline constexpr int kModelFormatVersion = 1;

/// Versioned model document: spec, parameters, transitions, likelihood and,
/// when given, fit diagnostics and the parameter table.
Json model_document(const msvar::MsVarModel& model, const msvar::FitDiagnostics* diagnostics = nullptr,
                    const std::vector<msvar::ParameterEstimate>* parameters = nullptr);
/// Reads the model back; throws Error on an unknown format or version.
msvar::MsVarModel model_from_document(const Json& doc);

}  // namespace io

void to_json(Json& j, const StatsSummary& s);
void from_json(const Json& j, StatsSummary& s);

namespace stationarity {
void to_json(Json& j, const TestResult& r);
void from_json(const Json& j, TestResult& r);
}  // namespace stationarity

namespace var {
void to_json(Json& j, const VarModel& m);
void from_json(const Json& j, VarModel& m);
void to_json(Json& j, const LagSelectionRow& r);
void from_json(const Json& j, LagSelectionRow& r);
void to_json(Json& j, const LagSelectionTable& t);
void from_json(const Json& j, LagSelectionTable& t);
void to_json(Json& j, const JohansenCriticalValues& c);
void from_json(const Json& j, JohansenCriticalValues& c);
void to_json(Json& j, const JohansenRankRow& r);
void from_json(const Json& j, JohansenRankRow& r);
void to_json(Json& j, const JohansenResult& r);
void from_json(const Json& j, JohansenResult& r);
void to_json(Json& j, const IrfResult& r);
void from_json(const Json& j, IrfResult& r);
}  // namespace var

namespace msvar {
void to_json(Json& j, const MsVarSpec& s);
void from_json(const Json& j, MsVarSpec& s);
void to_json(Json& j, const MsVarModel& m);
void from_json(const Json& j, MsVarModel& m);
void to_json(Json& j, const RestartRecord& r);
void from_json(const Json& j, RestartRecord& r);
void to_json(Json& j, const ParameterEstimate& p);
void from_json(const Json& j, ParameterEstimate& p);
void to_json(Json& j, const FitDiagnostics& d);
void from_json(const Json& j, FitDiagnostics& d);
}  // namespace msvar

}  // namespace regimekit
