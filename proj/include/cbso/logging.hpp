#pragma once

#include <string>
#include <vector>

#include "cbso/core.hpp"
#include "cbso/driver.hpp"
#include "cbso/objectives.hpp"

namespace cbso {

// One self-contained JSON record per line, keys sorted. The wall-clock
// field is carried but ignored by determinism comparisons.
std::string run_record_to_json(const RunRecord& rec);
RunRecord run_record_from_json(const std::string& line);

// Opt-in per-inner-step records (these files get large).
std::string inner_record_to_json(const InnerStepRecord& rec);

// Preference batches as record-per-line files, for reproducing a reward
// update outside a run.
std::string preference_pair_to_json(const PreferencePair& pair);
PreferencePair preference_pair_from_json(const std::string& line,
                                         int policy_dim);
void write_preference_batch(const std::string& path,
                            const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> read_preference_batch(const std::string& path,
                                                  int policy_dim);

void write_run_log(const std::string& path, const std::vector<RunRecord>& log);
// Raises IoError naming the offending line on malformed input.
std::vector<RunRecord> read_run_log(const std::string& path);

// Fixed-column metrics table: t, phi_grad_norm, h_of_y, h1, h2,
// envelope_grad_norm (empty when not probed). Floats carry 17 significant
// digits so round-trips are lossless; wall clock is excluded so byte
// comparisons are meaningful.
std::string metrics_table(const std::vector<RunRecord>& log);
void write_metrics(const std::string& path, const std::vector<RunRecord>& log);

// Long-format table (iteration, metric, value) for plotting.
std::string long_table(const std::vector<RunRecord>& log);

std::string format_double(double v);

}  // namespace cbso
