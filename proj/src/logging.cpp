#include "cbso/logging.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cbso {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string run_record_to_json(const RunRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["phi_hat_grad_norm"] = rec.phi_hat_grad_norm;
  j["h_of_y"] = rec.h_of_y;
  j["h1_value"] = rec.h1_value;
  j["h2_value"] = rec.h2_value;
  if (rec.envelope_grad_norm.has_value())
    j["envelope_grad_norm"] = *rec.envelope_grad_norm;
  j["wall_clock_ms"] = rec.wall_clock_ms;
  return j.dump();
}

RunRecord run_record_from_json(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  RunRecord rec;
  rec.t = j.at("t").get<std::int64_t>();
  rec.phi_hat_grad_norm = j.at("phi_hat_grad_norm").get<double>();
  rec.h_of_y = j.at("h_of_y").get<double>();
  rec.h1_value = j.at("h1_value").get<double>();
  rec.h2_value = j.at("h2_value").get<double>();
  if (j.contains("envelope_grad_norm"))
    rec.envelope_grad_norm = j.at("envelope_grad_norm").get<double>();
  rec.wall_clock_ms = j.value("wall_clock_ms", std::int64_t{0});
  return rec;
}

std::string inner_record_to_json(const InnerStepRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["k"] = rec.k;
  j["step"] = rec.step;
  j["tau_y"] = rec.tau_y;
  j["tau_z"] = rec.tau_z;
  j["h1_grad_norm"] = rec.h1_grad_norm;
  j["h2_grad_norm"] = rec.h2_grad_norm;
  j["h1_value"] = rec.h1_value;
  j["h2_value"] = rec.h2_value;
  return j.dump();
}

void write_run_log(const std::string& path,
                   const std::vector<RunRecord>& log) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write run log: " + path);
  for (const auto& rec : log) out << run_record_to_json(rec) << "\n";
}

std::vector<RunRecord> read_run_log(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open run log: " + path);
  std::vector<RunRecord> log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      log.push_back(run_record_from_json(line));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, "malformed run log line " +
                                          std::to_string(line_no) + " in " +
                                          path + ": " + e.what());
    }
  }
  return log;
}

std::string metrics_table(const std::vector<RunRecord>& log) {
  std::ostringstream out;
  out << "t,phi_grad_norm,h_of_y,h1,h2,envelope_grad_norm\n";
  for (const auto& rec : log) {
    out << rec.t << "," << format_double(rec.phi_hat_grad_norm) << ","
        << format_double(rec.h_of_y) << "," << format_double(rec.h1_value)
        << "," << format_double(rec.h2_value) << ",";
    if (rec.envelope_grad_norm.has_value())
      out << format_double(*rec.envelope_grad_norm);
    out << "\n";
  }
  return out.str();
}

void write_metrics(const std::string& path,
                   const std::vector<RunRecord>& log) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write metrics: " + path);
  out << metrics_table(log);
}

std::string long_table(const std::vector<RunRecord>& log) {
  std::ostringstream out;
  out << "iteration,metric,value\n";
  for (const auto& rec : log) {
    out << rec.t << ",phi_grad_norm," << format_double(rec.phi_hat_grad_norm)
        << "\n";
    out << rec.t << ",h_of_y," << format_double(rec.h_of_y) << "\n";
    out << rec.t << ",h1," << format_double(rec.h1_value) << "\n";
    out << rec.t << ",h2," << format_double(rec.h2_value) << "\n";
    if (rec.envelope_grad_norm.has_value())
      out << rec.t << ",envelope_grad_norm,"
          << format_double(*rec.envelope_grad_norm) << "\n";
  }
  return out.str();
}

namespace {

nlohmann::json trajectory_to_json(const Trajectory& d) {
  nlohmann::json j;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& [s, a] : d.steps) steps.push_back({s, a});
  j["steps"] = steps;
  j["score"] = std::vector<double>(
      d.log_prob_grad_accum.data(),
      d.log_prob_grad_accum.data() + d.log_prob_grad_accum.size());
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j, int policy_dim) {
  Trajectory d;
  for (const auto& step : j.at("steps"))
    d.steps.emplace_back(step.at(0).get<int>(), step.at(1).get<int>());
  const auto score = j.at("score").get<std::vector<double>>();
  require(static_cast<int>(score.size()) == policy_dim, ErrorCode::IoError,
          "trajectory score dimension mismatch");
  d.log_prob_grad_accum =
      Eigen::Map<const Eigen::VectorXd>(score.data(), score.size());
  return d;
}

}  // namespace

std::string preference_pair_to_json(const PreferencePair& pair) {
  nlohmann::json j;
  j["d0"] = trajectory_to_json(pair.d0);
  j["d1"] = trajectory_to_json(pair.d1);
  j["l0"] = pair.l0;
  j["l1"] = pair.l1;
  return j.dump();
}

PreferencePair preference_pair_from_json(const std::string& line,
                                         int policy_dim) {
  const nlohmann::json j = nlohmann::json::parse(line);
  PreferencePair pair;
  pair.d0 = trajectory_from_json(j.at("d0"), policy_dim);
  pair.d1 = trajectory_from_json(j.at("d1"), policy_dim);
  pair.l0 = j.at("l0").get<int>();
  pair.l1 = j.at("l1").get<int>();
  require(pair.l0 + pair.l1 == 1, ErrorCode::IoError,
          "preference labels must be one-hot");
  return pair;
}

void write_preference_batch(const std::string& path,
                            const std::vector<PreferencePair>& pairs) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot write batch: " + path);
  for (const auto& pair : pairs) out << preference_pair_to_json(pair) << "\n";
}

std::vector<PreferencePair> read_preference_batch(const std::string& path,
                                                  int policy_dim) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open batch: " + path);
  std::vector<PreferencePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      pairs.push_back(preference_pair_from_json(line, policy_dim));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError,
                  "malformed preference line " + std::to_string(line_no) +
                      " in " + path + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace cbso
