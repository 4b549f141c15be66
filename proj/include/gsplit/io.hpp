#pragma once

// File formats. Every CSV starts with a `# schema: <name>/<version>` line
// followed by a header row; JSON documents carry a "schema" field.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gsplit/diagnostics.hpp"
#include "gsplit/errors.hpp"
#include "gsplit/estimators.hpp"
#include "gsplit/model.hpp"
#include "gsplit/pilot.hpp"
#include "gsplit/smc.hpp"
#include "gsplit/splitting.hpp"

namespace gsplit {

using json = nlohmann::json;

inline constexpr std::string_view kLedgerSchema = "gsplit.ledger/1";
inline constexpr std::string_view kStatesSchema = "gsplit.states/1";
inline constexpr std::string_view kBoundsSchema = "gsplit.bounds/1";
inline constexpr std::string_view kMarginalsSchema = "gsplit.marginals/1";
inline constexpr std::string_view kComparisonSchema = "gsplit.comparison/1";
inline constexpr std::string_view kPilotSchema = "gsplit.pilot/1";
inline constexpr std::string_view kEstimateSchema = "gsplit.estimate/1";

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view schema, const std::vector<std::string>& header)
      : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error("cannot open '" + path.string() + "' for writing");
    out_ << "# schema: " << schema << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw Error("write to '" + path_.string() + "' failed");
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

inline void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------- ledger

inline json schedule_to_json(const LevelSchedule& s) {
  return {{"levels", s.levels()}, {"split_factor", s.split_factor()}, {"direction", to_string(s.direction())}};
}

inline LevelSchedule schedule_from_json(const json& j) {
  return LevelSchedule(j.at("levels").get<std::vector<double>>(), j.at("split_factor").get<int>(),
                       parse_direction(j.at("direction").get<std::string>()));
}

/// Trial-level record of a run without the retained states: what the
/// diagnostics need.
struct LedgerRecord {
  LevelSchedule schedule;
  StoppingRule rule;
  std::size_t dimension = 0;
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint64_t> discarded_empty_trials;
  std::vector<std::uint64_t> kernel_steps;
  std::vector<std::uint64_t> discarded_kernel_steps;

  std::vector<double> size_values() const { return {sizes.begin(), sizes.end()}; }
};

inline json ledger_to_json(const RunLedger& ledger) {
  std::vector<std::uint64_t> sizes, empties, steps, wasted;
  for (const auto& t : ledger.trials()) {
    sizes.push_back(t.size());
    empties.push_back(t.discarded_empty_trials);
    steps.push_back(t.kernel_steps);
    wasted.push_back(t.discarded_kernel_steps);
  }
  return {{"schema", kLedgerSchema},
          {"schedule", schedule_to_json(ledger.schedule())},
          {"stopping_rule", {{"kind", to_string(ledger.stopping_rule().kind)}, {"value", ledger.stopping_rule().value}}},
          {"dimension", ledger.dimension()},
          {"trial_count", ledger.trial_count()},
          {"total_states", ledger.total_states()},
          {"total_effort", ledger.total_effort()},
          {"sizes", sizes},
          {"discarded_empty_trials", empties},
          {"kernel_steps", steps},
          {"discarded_kernel_steps", wasted}};
}

inline LedgerRecord ledger_from_json(const json& j) {
  if (j.value("schema", std::string()) != kLedgerSchema) {
    throw ParseError("ledger: expected schema '" + std::string(kLedgerSchema) + "'");
  }
  try {
    const auto& rule = j.at("stopping_rule");
    const std::string kind = rule.at("kind").get<std::string>();
    if (kind != "fixed_n" && kind != "exceed_t") throw ParseError("ledger: unknown stopping rule '" + kind + "'");
    LedgerRecord rec{schedule_from_json(j.at("schedule")),
                     {kind == "fixed_n" ? StoppingKind::FixedN : StoppingKind::ExceedT, rule.at("value").get<std::uint64_t>()},
                     j.at("dimension").get<std::size_t>(),
                     j.at("sizes").get<std::vector<std::uint64_t>>(),
                     j.at("discarded_empty_trials").get<std::vector<std::uint64_t>>(),
                     j.at("kernel_steps").get<std::vector<std::uint64_t>>(),
                     j.at("discarded_kernel_steps").get<std::vector<std::uint64_t>>()};
    const std::size_t n = rec.sizes.size();
    if (n == 0 || rec.discarded_empty_trials.size() != n || rec.kernel_steps.size() != n ||
        rec.discarded_kernel_steps.size() != n) {
      throw ParseError("ledger: per-trial arrays are empty or of unequal length");
    }
    for (auto m : rec.sizes) {
      if (m == 0) throw ParseError("ledger: trial sizes must be positive");
    }
    return rec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("ledger: ") + e.what());
  }
}

inline LedgerRecord read_ledger(const std::filesystem::path& path) { return ledger_from_json(read_json(path)); }

/// Retained states, one row per state, tagged with the trial index.
inline void write_states_csv(const std::filesystem::path& path, const RunLedger& ledger,
                             const std::vector<std::string>& coordinate_names) {
  std::vector<std::string> header{"trial"};
  header.insert(header.end(), coordinate_names.begin(), coordinate_names.end());
  CsvWriter csv(path, kStatesSchema, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < ledger.trial_count(); ++i) {
    const auto& states = ledger.trials()[i].retained;
    for (std::size_t k = 0; k < states.size(); ++k) {
      cells.assign(1, std::to_string(i));
      for (double v : states[k]) cells.push_back(format_number(v));
      csv.row(cells);
    }
  }
}

// ---------------------------------------------------------------- tables

inline void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundRow>& rows) {
  CsvWriter csv(path, kBoundsSchema, {"n_or_t", "criterion", "constant", "bound", "vacuous_flag"});
  for (const auto& r : rows) {
    csv.row({format_number(r.n_or_t), r.criterion, format_number(r.constant), format_number(r.bound),
             r.vacuous ? "1" : "0"});
  }
}

inline void write_marginals_csv(const std::filesystem::path& path, const std::vector<MarginalSummary>& rows,
                                const std::vector<std::string>& names) {
  CsvWriter csv(path, kMarginalsSchema, {"coordinate", "q05", "q25", "q50", "q75", "q95", "ols_reference_optional"});
  for (const auto& r : rows) {
    csv.row({r.coordinate < names.size() ? names[r.coordinate] : std::to_string(r.coordinate), format_number(r.q05),
             format_number(r.q25), format_number(r.q50), format_number(r.q75), format_number(r.q95),
             r.reference ? format_number(*r.reference) : ""});
  }
}

inline void write_comparison_csv(const std::filesystem::path& path, const Comparison& c) {
  CsvWriter csv(path, kComparisonSchema, {"method", "effort", "estimate", "relative_error"});
  for (const ReplicatedEstimate* r : {&c.gs, &c.smc}) {
    csv.row({r->method, format_number(r->mean_effort), format_number(r->pooled.value),
             format_number(r->single_run_relative_error)});
  }
}

// ---------------------------------------------------------------- reports

/// Non-finite numbers become strings so the document stays valid JSON.
inline json number_json(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

inline json estimate_to_json(const ProbabilityEstimate& e) {
  return {{"value", number_json(e.value)},
          {"standard_error", number_json(e.standard_error)},
          {"relative_error", number_json(e.relative_error)},
          {"trial_count", e.trial_count},
          {"raw_mean_size", number_json(e.raw_mean_size)}};
}

inline json moments_to_json(const MomentSummary& s) {
  auto est = [](const Estimate& e) { return json{{"value", number_json(e.value)}, {"standard_error", number_json(e.standard_error)}}; };
  return {{"m", est(s.m)},       {"m2", est(s.m2)},   {"m3", est(s.m3)},
          {"m4", est(s.m4)},     {"m2logm", est(s.m2logm)}, {"var", est(s.var)},
          {"m2_abs_dev", est(s.m2_abs_dev)}, {"r", number_json(s.r)}, {"sample_count", s.sample_count}};
}

inline json pilot_to_json(const PilotReport& p) {
  return {{"schema", kPilotSchema}, {"schedule", schedule_to_json(p.schedule)}, {"rho_hat", p.rho_hat}};
}

inline json replicated_to_json(const ReplicatedEstimate& r) {
  std::vector<json> estimates;
  for (double v : r.estimates) estimates.push_back(number_json(v));
  return {{"method", r.method},
          {"mean_effort", number_json(r.mean_effort)},
          {"extinctions", r.extinctions},
          {"pooled", estimate_to_json(r.pooled)},
          {"single_run_relative_error", number_json(r.single_run_relative_error)},
          {"estimates", estimates}};
}

}  // namespace gsplit
