#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edrlmea/dataio.hpp"

namespace edrlmea::eval {

using dataio::BinaryLabel;
using dataio::Dimension;

enum class Averaging { Macro, PerClass, Weighted };
enum class System { Baseline, EdrlMea };
enum class Environment { Clean, Noisy };

const char* averaging_name(Averaging a);
Averaging parse_averaging(const std::string& s);
const char* system_name(System s);
const char* environment_name(Environment e);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
  bool zero_division = false;  // precision/recall/F1 forced to 0
};

struct F1Result {
  ClassMetrics pos;
  ClassMetrics neg;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
};

F1Result f1_binary(const std::vector<BinaryLabel>& preds,
                   const std::vector<BinaryLabel>& truth);
double f1_score(const std::vector<BinaryLabel>& preds, const std::vector<BinaryLabel>& truth,
                Averaging averaging);

// Arithmetic mean across SNR levels; every required level must be present.
double aggregate_noise(const std::map<double, double>& f1_by_snr,
                       const std::vector<double>& required_levels);

// One scored condition of one system.
struct ConditionScore {
  Dimension dimension = Dimension::Arousal;
  Environment environment = Environment::Clean;
  std::string noise_id;            // empty for clean
  std::optional<double> snr_db;    // absent for clean and for mean rows
  double f1 = 0.0;
};

struct ReportEntry {
  System system = System::Baseline;
  Dimension dimension = Dimension::Arousal;
  Environment environment = Environment::Clean;
  std::string noise_id;
  std::optional<double> snr_db;
  double f1 = 0.0;
};

struct EvalReport {
  Averaging averaging = Averaging::Macro;
  std::vector<double> snr_levels;
  std::vector<ReportEntry> entries;  // insertion order defines CSV order
};

// Pairs baseline and system scores condition-by-condition, appends per-noise
// mean rows (over the configured SNR levels), and keeps both systems' rows.
// Condition keys must match exactly.
EvalReport build_report(const std::vector<ConditionScore>& baseline,
                        const std::vector<ConditionScore>& edrl_mea,
                        const std::vector<double>& snr_levels, Averaging averaging);

// Human-readable table with the delta column "(+x.x)" per condition.
std::string render_table(const EvalReport& report);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report_csv(const std::filesystem::path& path);

}  // namespace edrlmea::eval
