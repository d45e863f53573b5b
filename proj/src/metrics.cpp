#include "hdpo/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hdpo::metrics {

using nlohmann::json;

namespace {

json to_json(const MetricsRecord& rec) {
  json j;
  j["schema"] = rec.schema;
  j["step"] = rec.step;
  j["mean_reward"] = rec.mean_reward;
  j["cliff_fraction"] = rec.cliff_fraction;
  j["cliff_count"] = rec.cliff_count;
  j["t_size"] = rec.t_size;
  j["n_tok"] = rec.n_tok;
  j["priv_pass_rate"] = rec.priv_pass_rate;
  j["loss_grpo"] = rec.loss_grpo;
  j["loss_jsd"] = rec.loss_jsd;
  j["grad_norm"] = rec.grad_norm;
  j["lr"] = rec.lr;
  j["eval_pass_at_k"] = rec.eval_pass_at_k;
  j["best_pass_at_k"] = rec.best_pass_at_k;
  j["wall_ms"] = rec.wall_ms;
  return j;
}

MetricsRecord from_json(const json& j) {
  MetricsRecord rec;
  rec.schema = j.at("schema").get<int>();
  if (rec.schema != kMetricsSchema)
    throw std::runtime_error("metrics: unsupported schema " +
                             std::to_string(rec.schema));
  rec.step = j.at("step").get<std::int64_t>();
  rec.mean_reward = j.at("mean_reward").get<double>();
  rec.cliff_fraction = j.at("cliff_fraction").get<double>();
  rec.cliff_count = j.at("cliff_count").get<int>();
  rec.t_size = j.at("t_size").get<std::int64_t>();
  rec.n_tok = j.at("n_tok").get<std::int64_t>();
  rec.priv_pass_rate = j.at("priv_pass_rate").get<double>();
  rec.loss_grpo = j.at("loss_grpo").get<double>();
  rec.loss_jsd = j.at("loss_jsd").get<double>();
  rec.grad_norm = j.at("grad_norm").get<double>();
  rec.lr = j.at("lr").get<double>();
  rec.eval_pass_at_k = j.at("eval_pass_at_k").get<std::map<std::string, double>>();
  rec.best_pass_at_k = j.at("best_pass_at_k").get<std::map<std::string, double>>();
  rec.wall_ms = j.at("wall_ms").get<double>();
  return rec;
}

}  // namespace

std::string to_json_line(const MetricsRecord& rec) { return to_json(rec).dump(); }

MetricsRecord from_json_line(const std::string& line) {
  return from_json(json::parse(line));
}

std::string deterministic_key(const MetricsRecord& rec) {
  json j = to_json(rec);
  j.erase("wall_ms");
  return j.dump();
}

void append_metrics(const std::string& path, const MetricsRecord& rec) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("metrics: cannot open " + path);
  out << to_json_line(rec) << '\n';
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::vector<MetricsRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(from_json_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

}  // namespace hdpo::metrics
