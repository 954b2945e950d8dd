#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "page/estimator.hpp"

namespace page {

/// Header of every trace CSV.
inline constexpr const char* kTraceHeader = "t,branch,grad_norm,f_gap,grad_evals,estimator_err_sq";

/// Rows kept in full before decimation starts.
inline constexpr std::uint64_t kTraceFullRows = 10000;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Writes the trace as CSV. Absent diagnostics are empty fields. grad_evals is
/// the wall-cost counter. Traces longer than kTraceFullRows rows keep every row
/// with t < kTraceFullRows, then every ceil(T / kTraceFullRows)-th row plus all
/// full-branch rows, the target row and the final row.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string trace_csv(const Trace& trace);

}  // namespace page
