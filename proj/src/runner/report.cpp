#include "runner/report.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/hashing.hpp"

namespace cycleprompt::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string ratio(int num, int den) {
  if (den == 0) return "n/a";
  return fmt::format("{:.3f} ({}/{})", static_cast<double>(num) / den, num, den);
}

std::string fixed1(double v) { return fmt::format("{:.1f}", v); }

}  // namespace

std::string render_report(const RunManifest& m, const std::optional<EvalSummary>& eval) {
  const int done = m.count(TaskStatus::kDone);
  int consistent = 0;
  long cycles_sum = 0;
  long records_sum = 0;
  for (const auto& t : m.tasks) {
    if (t.status != TaskStatus::kDone) continue;
    records_sum += t.records;
    if (t.consistent_at) {
      ++consistent;
      cycles_sum += *t.consistent_at;
    }
  }

  std::string out;
  out += "# Run report\n\n";
  out += fmt::format("domain: {}\n", m.domain);
  out += fmt::format("fingerprint: {}\n", m.fingerprint);
  out += fmt::format("tasks: {} (done {}, failed {}, pending {})\n", m.tasks.size(), done,
                     m.count(TaskStatus::kFailed), m.count(TaskStatus::kPending));
  out += fmt::format("early-stop rate: {}\n", ratio(consistent, done));
  out += fmt::format("mean cycles to consistency: {}\n",
                     consistent == 0 ? "n/a" : fixed1(static_cast<double>(cycles_sum) / consistent));
  out += fmt::format("mean records per task: {}\n",
                     done == 0 ? "n/a" : fixed1(static_cast<double>(records_sum) / done));

  out += "\n| task | status | records | stop reason |\n|---|---|---|---|\n";
  for (const auto& t : m.tasks) {
    out += fmt::format("| {} | {} | {} | {} |\n", t.id, to_string(t.status), t.records, t.stop_reason.value_or("-"));
  }

  if (eval) {
    const auto& r = eval->report;
    out += "\n## Evaluation\n\n";
    out += "Scores depend on the providers bound for this run and are not comparable to numbers obtained with "
           "other models.\n\n";
    out += fmt::format("arm: {}\nsource: {}\ngrading: {}\n", eval->arm, eval->source, eval->grade_mode);
    out += fmt::format("accuracy: {}\n", ratio(r.n_correct, r.n_items));
    if (r.da_positive) {
      out += fmt::format("DA-Score (p, n): ({:.3f}, {})\n", *r.da_positive,
                         r.da_with_negatives ? fmt::format("{:.3f}", *r.da_with_negatives) : "n/a");
    }
  }
  return out;
}

fs::path write_report(const fs::path& run_dir) {
  const auto manifest = read_manifest(run_dir);
  std::optional<EvalSummary> eval;
  const auto eval_file = run_dir / kEvalFile;
  if (fs::exists(eval_file)) {
    const auto j = json::parse(read_file(eval_file), nullptr, false);
    if (j.is_discarded() || !j.contains("report")) throw ParseError(eval_file.string() + ": malformed");
    eval = EvalSummary{j.value("arm", ""), j.value("source", ""), j.value("grade_mode", ""),
                       eval::eval_report_from_json(j["report"])};
  }
  const auto out = run_dir / kReportFile;
  write_file_atomic(out, render_report(manifest, eval));
  return out;
}

}  // namespace cycleprompt::runner
