#include "edrlmea/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "edrlmea/csv.hpp"

namespace edrlmea::eval {

const char* averaging_name(Averaging a) {
  switch (a) {
    case Averaging::Macro: return "macro";
    case Averaging::PerClass: return "per_class";
    case Averaging::Weighted: return "weighted";
  }
  return "?";
}

Averaging parse_averaging(const std::string& s) {
  if (s == "macro") return Averaging::Macro;
  if (s == "per_class") return Averaging::PerClass;
  if (s == "weighted") return Averaging::Weighted;
  fail(Errc::InvalidConfig, "unknown averaging mode '" + s + "'");
}

const char* system_name(System s) {
  return s == System::Baseline ? "baseline" : "edrl_mea";
}

const char* environment_name(Environment e) {
  return e == Environment::Clean ? "clean" : "noisy";
}

F1Result f1_binary(const std::vector<BinaryLabel>& preds,
                   const std::vector<BinaryLabel>& truth) {
  require(preds.size() == truth.size(), Errc::LengthMismatch,
          "prediction and truth lengths differ");
  require(!preds.empty(), Errc::EmptyDataset, "cannot score an empty prediction set");

  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == BinaryLabel::Pos;
    const bool t = truth[i] == BinaryLabel::Pos;
    if (p && t) ++tp;
    else if (p && !t) ++fp;
    else if (!p && t) ++fn;
    else ++tn;
  }

  auto metrics = [](long tp_, long fp_, long fn_, long support) {
    ClassMetrics m;
    m.support = support;
    if (tp_ + fp_ == 0) { m.zero_division = true; }
    else m.precision = static_cast<double>(tp_) / static_cast<double>(tp_ + fp_);
    if (tp_ + fn_ == 0) { m.zero_division = true; }
    else m.recall = static_cast<double>(tp_) / static_cast<double>(tp_ + fn_);
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.zero_division = true;  // F1 defined as 0 for this class
    return m;
  };

  F1Result result;
  result.pos = metrics(tp, fp, fn, tp + fn);
  result.neg = metrics(tn, fn, fp, tn + fp);
  result.macro_f1 = 0.5 * (result.pos.f1 + result.neg.f1);
  const double total = static_cast<double>(result.pos.support + result.neg.support);
  result.weighted_f1 = (static_cast<double>(result.pos.support) * result.pos.f1 +
                        static_cast<double>(result.neg.support) * result.neg.f1) /
                       total;
  return result;
}

double f1_score(const std::vector<BinaryLabel>& preds, const std::vector<BinaryLabel>& truth,
                Averaging averaging) {
  F1Result r = f1_binary(preds, truth);
  switch (averaging) {
    case Averaging::Macro: return r.macro_f1;
    case Averaging::Weighted: return r.weighted_f1;
    case Averaging::PerClass: return r.pos.f1;  // positive class by convention
  }
  return r.macro_f1;
}

double aggregate_noise(const std::map<double, double>& f1_by_snr,
                       const std::vector<double>& required_levels) {
  require(!required_levels.empty(), Errc::InvalidConfig, "required SNR level set is empty");
  double total = 0.0;
  for (double level : required_levels) {
    auto it = f1_by_snr.find(level);
    if (it == f1_by_snr.end())
      fail(Errc::MissingSnrLevel,
           "missing F1 entry for SNR level " + csv::format_double(level) + " dB");
    total += it->second;
  }
  require(f1_by_snr.size() == required_levels.size(), Errc::MissingSnrLevel,
          "extra SNR levels beyond the configured set");
  return total / static_cast<double>(required_levels.size());
}

namespace {

struct ConditionKey {
  Dimension dimension;
  Environment environment;
  std::string noise_id;
  std::optional<double> snr_db;

  bool operator<(const ConditionKey& o) const {
    auto snr_key = [](const std::optional<double>& s) { return s.value_or(-1e9); };
    return std::tie(dimension, environment, noise_id) < std::tie(o.dimension, o.environment, o.noise_id) ||
           (std::tie(dimension, environment, noise_id) == std::tie(o.dimension, o.environment, o.noise_id) &&
            snr_key(snr_db) < snr_key(o.snr_db));
  }
  bool operator==(const ConditionKey& o) const {
    return dimension == o.dimension && environment == o.environment &&
           noise_id == o.noise_id && snr_db == o.snr_db;
  }
};

std::string format_pct(double f1) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", f1 * 100.0);
  return buf;
}

std::string format_delta(double system, double baseline) {
  const double delta = (system - baseline) * 100.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "(%+.1f)", delta);
  return buf;
}

}  // namespace

EvalReport build_report(const std::vector<ConditionScore>& baseline,
                        const std::vector<ConditionScore>& edrl_mea,
                        const std::vector<double>& snr_levels, Averaging averaging) {
  require(baseline.size() == edrl_mea.size(), Errc::KeyMismatch,
          "baseline and system condition counts differ");
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    ConditionKey a{baseline[i].dimension, baseline[i].environment, baseline[i].noise_id,
                   baseline[i].snr_db};
    ConditionKey b{edrl_mea[i].dimension, edrl_mea[i].environment, edrl_mea[i].noise_id,
                   edrl_mea[i].snr_db};
    require(a == b, Errc::KeyMismatch, "baseline/system condition keys are misaligned");
  }

  EvalReport report;
  report.averaging = averaging;
  report.snr_levels = snr_levels;

  auto append_rows = [&](System system, const std::vector<ConditionScore>& scores) {
    for (const auto& s : scores)
      report.entries.push_back(
          {system, s.dimension, s.environment, s.noise_id, s.snr_db, s.f1});
    // per-noise means over the configured SNR levels
    std::map<std::pair<int, std::string>, std::map<double, double>> by_noise;
    for (const auto& s : scores)
      if (s.environment == Environment::Noisy && s.snr_db.has_value())
        by_noise[{static_cast<int>(s.dimension), s.noise_id}][*s.snr_db] = s.f1;
    for (const auto& [key, per_level] : by_noise) {
      const double mean = aggregate_noise(per_level, snr_levels);
      report.entries.push_back({system, static_cast<Dimension>(key.first),
                                Environment::Noisy, key.second, std::nullopt, mean});
    }
  };
  append_rows(System::Baseline, baseline);
  append_rows(System::EdrlMea, edrl_mea);
  return report;
}

std::string render_table(const EvalReport& report) {
  // rows: clean + one mean row per noise type; columns: dimension x system
  std::set<int> dims;
  std::set<std::string> noises;
  std::map<std::tuple<int, int, int, std::string>, double> cell;  // (sys, dim, env, noise)
  for (const auto& e : report.entries) {
    if (e.snr_db.has_value()) continue;  // table shows clean rows and per-noise means
    dims.insert(static_cast<int>(e.dimension));
    if (e.environment == Environment::Noisy) noises.insert(e.noise_id);
    cell[{static_cast<int>(e.system), static_cast<int>(e.dimension),
          static_cast<int>(e.environment), e.noise_id}] = e.f1;
  }

  std::ostringstream out;
  out << "F1 (" << averaging_name(report.averaging) << "), percentages\n";
  out << "environment  noise ";
  for (int d : dims) {
    const char* dn = static_cast<Dimension>(d) == Dimension::Arousal ? "A" : "V";
    out << " | " << dn << ":baseline  " << dn << ":edrl-mea";
  }
  out << "\n";

  auto emit_row = [&](Environment env, const std::string& noise, const std::string& label) {
    out << label;
    for (int d : dims) {
      auto base = cell.find({0, d, static_cast<int>(env), noise});
      auto sys = cell.find({1, d, static_cast<int>(env), noise});
      if (base == cell.end() || sys == cell.end()) {
        out << " |        -          -";
        continue;
      }
      out << " |     " << format_pct(base->second) << "  " << format_pct(sys->second) << " "
          << format_delta(sys->second, base->second);
    }
    out << "\n";
  };

  emit_row(Environment::Clean, "", "clean        -    ");
  for (const auto& noise : noises) {
    std::string label = "noisy        " + noise;
    label.resize(18, ' ');
    emit_row(Environment::Noisy, noise, label);
  }
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"system", "dimension", "environment", "noise_id", "snr_db", "f1"});
  for (const auto& e : report.entries) {
    rows.push_back({system_name(e.system),
                    e.dimension == Dimension::Arousal ? "A" : "V",
                    environment_name(e.environment), e.noise_id,
                    e.snr_db.has_value() ? csv::format_double(*e.snr_db) : "",
                    csv::format_double(e.f1)});
  }
  csv::write_file(path, rows);
}

EvalReport read_report_csv(const std::filesystem::path& path) {
  auto rows = csv::read_file(path);
  require(!rows.empty(), Errc::EmptyDataset, "empty report CSV " + path.string());
  require(rows.front() == std::vector<std::string>(
                              {"system", "dimension", "environment", "noise_id", "snr_db", "f1"}),
          Errc::InvalidCell, "unexpected report CSV header in " + path.string());
  EvalReport report;
  std::set<double> levels;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    require(r.size() == 6, Errc::InvalidCell,
            "report row " + std::to_string(i + 1) + " has wrong cell count");
    ReportEntry e;
    e.system = r[0] == "baseline" ? System::Baseline : System::EdrlMea;
    e.dimension = r[1] == "A" ? Dimension::Arousal : Dimension::Valence;
    e.environment = r[2] == "clean" ? Environment::Clean : Environment::Noisy;
    e.noise_id = r[3];
    if (!r[4].empty()) {
      e.snr_db = csv::parse_double(r[4], "report row " + std::to_string(i + 1));
      levels.insert(*e.snr_db);
    }
    e.f1 = csv::parse_double(r[5], "report row " + std::to_string(i + 1));
    report.entries.push_back(std::move(e));
  }
  report.snr_levels.assign(levels.begin(), levels.end());
  return report;
}

}  // namespace edrlmea::eval
