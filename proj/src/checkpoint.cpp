#include "hdpo/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hdpo::checkpoint {

using nlohmann::json;

namespace {

json net_to_json(const policy::TinyNetParams& net) {
  return json{{"embed", net.embed},
              {"w1", net.w1},
              {"b1", net.b1},
              {"w2", net.w2},
              {"b2", net.b2}};
}

policy::TinyNetParams net_from_json(const json& j) {
  policy::TinyNetParams net;
  net.embed = j.at("embed").get<std::vector<double>>();
  net.w1 = j.at("w1").get<std::vector<double>>();
  net.b1 = j.at("b1").get<std::vector<double>>();
  net.w2 = j.at("w2").get<std::vector<double>>();
  net.b2 = j.at("b2").get<std::vector<double>>();
  return net;
}

json table_to_json(const std::map<std::vector<std::int32_t>, std::vector<double>>& table) {
  json rows = json::array();
  for (const auto& [key, row] : table)
    rows.push_back(json{{"key", key}, {"row", row}});
  return rows;
}

std::map<std::vector<std::int32_t>, std::vector<double>> table_from_json(const json& j) {
  std::map<std::vector<std::int32_t>, std::vector<double>> table;
  for (const json& entry : j)
    table[entry.at("key").get<std::vector<std::int32_t>>()] =
        entry.at("row").get<std::vector<double>>();
  return table;
}

json policy_to_json(const policy::PolicySnapshot& pol) {
  json j;
  j["cfg"] = {{"vocab_size", pol.cfg.vocab_size},
              {"window", pol.cfg.window},
              {"backend",
               pol.cfg.backend == policy::Backend::tabular ? "tabular" : "tiny_net"},
              {"embed_dim", pol.cfg.embed_dim},
              {"hidden_dim", pol.cfg.hidden_dim},
              {"eos_id", pol.cfg.eos_id}};
  j["table"] = table_to_json(pol.table);
  j["net"] = net_to_json(pol.net);
  return j;
}

policy::PolicySnapshot policy_from_json(const json& j) {
  policy::PolicySnapshot pol;
  const json& c = j.at("cfg");
  pol.cfg.vocab_size = c.at("vocab_size").get<int>();
  pol.cfg.window = c.at("window").get<int>();
  pol.cfg.backend = c.at("backend").get<std::string>() == "tabular"
                        ? policy::Backend::tabular
                        : policy::Backend::tiny_net;
  pol.cfg.embed_dim = c.at("embed_dim").get<int>();
  pol.cfg.hidden_dim = c.at("hidden_dim").get<int>();
  pol.cfg.eos_id = c.at("eos_id").get<int>();
  pol.table = table_from_json(j.at("table"));
  pol.net = net_from_json(j.at("net"));
  return pol;
}

json accumulator_to_json(const policy::GradientAccumulator& acc) {
  json j;
  j["backend"] =
      acc.backend == policy::Backend::tabular ? "tabular" : "tiny_net";
  j["table"] = table_to_json(acc.table);
  j["net"] = net_to_json(acc.net);
  return j;
}

policy::GradientAccumulator accumulator_from_json(const json& j) {
  policy::GradientAccumulator acc;
  acc.backend = j.at("backend").get<std::string>() == "tabular"
                    ? policy::Backend::tabular
                    : policy::Backend::tiny_net;
  acc.table = table_from_json(j.at("table"));
  acc.net = net_from_json(j.at("net"));
  return acc;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json j;
  j["version"] = ck.version;
  j["step"] = ck.step;
  j["config_hash"] = ck.config_hash;
  j["resume_hash"] = ck.resume_hash;
  j["policy"] = policy_to_json(ck.policy);
  j["adam"] = {{"step", ck.adam.step},
               {"m", accumulator_to_json(ck.adam.m)},
               {"v", accumulator_to_json(ck.adam.v)}};
  j["has_frozen_teacher"] = ck.has_frozen_teacher;
  if (ck.has_frozen_teacher) j["frozen_teacher"] = policy_to_json(ck.frozen_teacher);
  j["rng_cursor"] = ck.rng_cursor;
  j["best_pass_at_k"] = ck.best_pass_at_k;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: parse error in " + path + ": " + e.what());
  }
  Checkpoint ck;
  ck.version = j.at("version").get<int>();
  if (ck.version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(ck.version));
  ck.step = j.at("step").get<std::int64_t>();
  ck.config_hash = j.at("config_hash").get<std::uint64_t>();
  ck.resume_hash = j.at("resume_hash").get<std::uint64_t>();
  ck.policy = policy_from_json(j.at("policy"));
  ck.adam.step = j.at("adam").at("step").get<std::int64_t>();
  ck.adam.m = accumulator_from_json(j.at("adam").at("m"));
  ck.adam.v = accumulator_from_json(j.at("adam").at("v"));
  ck.has_frozen_teacher = j.at("has_frozen_teacher").get<bool>();
  if (ck.has_frozen_teacher)
    ck.frozen_teacher = policy_from_json(j.at("frozen_teacher"));
  ck.rng_cursor = j.at("rng_cursor").get<std::uint64_t>();
  ck.best_pass_at_k = j.at("best_pass_at_k").get<std::map<std::string, double>>();
  return ck;
}

}  // namespace hdpo::checkpoint
