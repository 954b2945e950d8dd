#include "page/trace_io.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

namespace page {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  const std::uint64_t T = trace.iterations();
  const std::uint64_t stride =
      trace.records.size() > kTraceFullRows ? (T + kTraceFullRows - 1) / kTraceFullRows : 1;
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << format_double(*v);
  };
  for (const StepRecord& r : trace.records) {
    const bool keep = r.t < kTraceFullRows || r.t % stride == 0 || r.branch == Branch::full ||
                      r.t == T || (trace.target_index && r.t == *trace.target_index);
    if (!keep) continue;
    out << r.t << ',' << to_string(r.branch) << ',';
    opt(r.grad_norm);
    out << ',';
    opt(r.f_gap);
    out << ',' << r.grad_evals_after << ',';
    opt(r.estimator_err_sq);
    out << '\n';
  }
}

std::string trace_csv(const Trace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

}  // namespace page
