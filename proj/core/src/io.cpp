#include "mars/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mars {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path.string());
  }
  return in;
}

json parse_json(const std::string& text, const std::filesystem::path& path) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw std::invalid_argument("malformed JSON in " + path.string());
  }
  return j;
}

json parse_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str(), path);
}

std::vector<double> as_doubles(const json& j, const char* what) {
  if (!j.is_array()) {
    throw std::invalid_argument(std::string(what) + " must be an array");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

Matrix matrix_from(const json& j, int rows, int cols, const char* what) {
  const std::vector<double> flat = as_doubles(j, what);
  if (flat.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument(std::string(what) + " has the wrong size");
  }
  Matrix m(rows, cols);
  m.data() = flat;
  return m;
}

Tensor3 cube_from(const json& j, int n, const char* what) {
  const std::vector<double> flat = as_doubles(j, what);
  if (flat.size() != static_cast<std::size_t>(n) * n * n) {
    throw std::invalid_argument(std::string(what) + " has the wrong size");
  }
  Tensor3 t(n, n, n);
  t.data() = flat;
  return t;
}

json msp_to_json(const Msp& p) {
  json j;
  j["group"] = p.group();
  json edges = json::array();
  for (const auto& [u, v] : p.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  json assignments = json::object();
  for (const auto& [v, channels] : p.assignments()) {
    assignments[std::to_string(v)] = channels;
  }
  j["assignments"] = std::move(assignments);
  return j;
}

Msp msp_from_json(const json& j) {
  std::vector<int> group = j.at("group").get<std::vector<int>>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw std::invalid_argument("party edge must be a [u, v] pair");
    }
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  std::map<int, std::vector<int>> assignments;
  for (const auto& [key, channels] : j.at("assignments").items()) {
    assignments[std::stoi(key)] = channels.get<std::vector<int>>();
  }
  return Msp(std::move(group), std::move(edges), std::move(assignments));
}

}  // namespace

void write_tensor_jsonl(const EventTensor& t,
                        const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  json header;
  header["n_viewers"] = t.n_viewers();
  header["n_channels"] = t.n_channels();
  header["n_slots"] = t.n_slots();
  out << header.dump() << '\n';
  for (const auto& [idx, x] : t.entries()) {
    json record;
    record["v"] = idx[0];
    record["c"] = idx[1];
    record["t"] = idx[2];
    record["x"] = x;
    out << record.dump() << '\n';
  }
}

EventTensor read_tensor_jsonl(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("tensor file " + path.string() + " is empty");
  }
  const json header = parse_json(line, path);
  EventTensor t(header.at("n_viewers").get<int>(),
                header.at("n_channels").get<int>(),
                header.at("n_slots").get<int>());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = parse_json(line, path);
    t.set(record.at("v").get<int>(), record.at("c").get<int>(),
          record.at("t").get<int>(), record.at("x").get<double>());
  }
  return t;
}

void write_graph(const ViewerGraph& g, const std::filesystem::path& path) {
  json j;
  j["n_viewers"] = g.n_viewers();
  json edges = json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  open_out(path) << j.dump(2) << '\n';
}

ViewerGraph read_graph(const std::filesystem::path& path) {
  const json j = parse_file(path);
  ViewerGraph g(j.at("n_viewers").get<int>());
  for (const auto& e : j.at("edges")) {
    g.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
  }
  return g;
}

void write_relations(const SignedStreamerMatrix& w,
                     const std::filesystem::path& path) {
  json j;
  j["n_channels"] = w.n_channels();
  json rows = json::array();
  for (int i = 0; i < w.n_channels(); ++i) {
    json row = json::array();
    for (int k = 0; k < w.n_channels(); ++k) row.push_back(w.at(i, k));
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  open_out(path) << j.dump() << '\n';
}

SignedStreamerMatrix read_relations(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const int n = j.at("n_channels").get<int>();
  SignedStreamerMatrix w(n);
  const json& rows = j.at("rows");
  if (static_cast<int>(rows.size()) != n) {
    throw std::invalid_argument("relation matrix has the wrong row count");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) {
      throw std::invalid_argument("relation matrix row has the wrong width");
    }
    for (int k = 0; k < n; ++k) {
      const int sign = rows[i][k].get<int>();
      if (i == k) {
        if (sign != 0) {
          throw std::invalid_argument("relation matrix diagonal must be 0");
        }
        continue;
      }
      w.set(i, k, sign);
    }
  }
  return w;
}

void write_events_jsonl(const std::vector<DonationEvent>& events,
                        const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  for (const DonationEvent& e : events) {
    json record;
    record["v"] = e.viewer;
    record["c"] = e.channel;
    record["t"] = e.slot;
    record["amount"] = e.amount;
    record["emb"] = e.message.sentence_embedding;
    record["sent"] = e.message.sentiment;
    record["emo"] = e.message.streamer_emotion;
    record["fanmin"] = e.fanlist_min;
    out << record.dump() << '\n';
  }
}

std::vector<DonationEvent> read_events_jsonl(const std::filesystem::path& path,
                                             int emb_width) {
  std::ifstream in = open_in(path);
  std::vector<DonationEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = parse_json(line, path);
    DonationEvent e;
    e.viewer = record.at("v").get<int>();
    e.channel = record.at("c").get<int>();
    e.slot = record.at("t").get<int>();
    e.amount = record.at("amount").get<double>();
    if (record.contains("emb")) {
      e.message.sentence_embedding = as_doubles(record["emb"], "emb");
      if (static_cast<int>(e.message.sentence_embedding.size()) != emb_width) {
        throw std::invalid_argument(
            "event embedding width does not match the configured width");
      }
    } else {
      e.message.sentence_embedding.assign(emb_width, 0.0);
    }
    e.message.sentiment =
        record.contains("sent") ? record["sent"].get<double>() : 0.0;
    if (record.contains("emo")) {
      const std::vector<double> emo = as_doubles(record["emo"], "emo");
      if (emo.size() != e.message.streamer_emotion.size()) {
        throw std::invalid_argument("event emotion vector must have width 4");
      }
      std::copy(emo.begin(), emo.end(), e.message.streamer_emotion.begin());
    }
    e.fanlist_min =
        record.contains("fanmin") ? record["fanmin"].get<double>() : 0.0;
    events.push_back(std::move(e));
  }
  return events;
}

void save_checkpoint(const SensorModel& model,
                     const std::filesystem::path& path) {
  model.validate();
  json j;
  j["format_version"] = 1;
  j["alpha"] = model.alpha();
  j["n_viewers"] = model.n_viewers();
  j["n_channels"] = model.n_channels();
  j["n_slots"] = model.n_slots();
  j["emb_width"] = model.emb_width;
  j["viewer_factors"] = model.factors.viewer_factors.data();
  j["channel_factors"] = model.factors.channel_factors.data();
  j["time_factors"] = model.factors.time_factors.data();
  j["donation_core"] = model.factors.donation_core.data();
  j["response_core"] = model.factors.response_core.data();
  j["social_influence"] = model.social_influence.data();
  j["decay"] = model.decay;
  j["epsilon"] = model.epsilon_init;
  j["theta"] = model.theta;
  open_out(path) << j.dump() << '\n';
}

SensorModel load_checkpoint(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported checkpoint format in " +
                                path.string());
  }
  const int alpha = j.at("alpha").get<int>();
  const int nv = j.at("n_viewers").get<int>();
  const int nc = j.at("n_channels").get<int>();
  const int nt = j.at("n_slots").get<int>();
  SensorModel model;
  model.factors.alpha = alpha;
  model.factors.viewer_factors =
      matrix_from(j.at("viewer_factors"), nv, alpha, "viewer_factors");
  model.factors.channel_factors =
      matrix_from(j.at("channel_factors"), nc, alpha, "channel_factors");
  model.factors.time_factors =
      matrix_from(j.at("time_factors"), nt, alpha, "time_factors");
  model.factors.donation_core =
      cube_from(j.at("donation_core"), alpha, "donation_core");
  model.factors.response_core =
      cube_from(j.at("response_core"), alpha, "response_core");
  model.social_influence =
      matrix_from(j.at("social_influence"), nv, nv, "social_influence");
  model.decay = j.at("decay").get<double>();
  model.epsilon_init = j.at("epsilon").get<double>();
  model.emb_width = j.at("emb_width").get<int>();
  model.theta = as_doubles(j.at("theta"), "theta");
  model.validate();
  return model;
}

void save_cars_params(const CarsParams& params,
                      const std::filesystem::path& path) {
  json j;
  j["format_version"] = 1;
  j["h"] = params.h;
  j["bias"] = params.bias;
  j["tau_social"] = params.tau_social;
  j["tau_relation"] = params.tau_relation;
  j["lambda4"] = params.lambda4;
  open_out(path) << j.dump() << '\n';
}

CarsParams load_cars_params(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported parameter format in " +
                                path.string());
  }
  CarsParams params;
  params.h = as_doubles(j.at("h"), "h");
  params.bias = j.at("bias").get<double>();
  params.tau_social = as_doubles(j.at("tau_social"), "tau_social");
  params.tau_relation = as_doubles(j.at("tau_relation"), "tau_relation");
  params.lambda4 = j.at("lambda4").get<double>();
  if (params.tau_social.size() != params.tau_relation.size()) {
    throw std::invalid_argument("tau vectors must have equal length");
  }
  return params;
}

void write_msps(const std::vector<Msp>& msps,
                const std::filesystem::path& path) {
  json j = json::array();
  for (const Msp& p : msps) j.push_back(msp_to_json(p));
  open_out(path) << j.dump() << '\n';
}

std::vector<Msp> read_msps(const std::filesystem::path& path) {
  const json j = parse_file(path);
  if (!j.is_array()) {
    throw std::invalid_argument("party file must be a JSON array");
  }
  std::vector<Msp> msps;
  msps.reserve(j.size());
  for (const auto& item : j) msps.push_back(msp_from_json(item));
  return msps;
}

void write_eval_cases(const std::vector<EvalCase>& cases,
                      const std::filesystem::path& path) {
  json j = json::array();
  for (const EvalCase& c : cases) {
    json item;
    item["viewer"] = c.viewer;
    json candidates = json::array();
    for (const Msp& p : c.candidates) candidates.push_back(msp_to_json(p));
    item["candidates"] = std::move(candidates);
    item["relevant"] = c.relevant;
    j.push_back(std::move(item));
  }
  open_out(path) << j.dump() << '\n';
}

std::vector<EvalCase> read_eval_cases(const std::filesystem::path& path) {
  const json j = parse_file(path);
  std::vector<EvalCase> cases;
  for (const auto& item : j) {
    EvalCase c;
    c.viewer = item.at("viewer").get<int>();
    for (const auto& cand : item.at("candidates")) {
      c.candidates.push_back(msp_from_json(cand));
    }
    c.relevant = item.at("relevant").get<int>();
    if (c.relevant < 0 ||
        c.relevant >= static_cast<int>(c.candidates.size())) {
      throw std::invalid_argument("evaluation case has a bad relevant index");
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

void write_planted(const PlantedTruth& planted,
                   const std::filesystem::path& path) {
  json j;
  j["n_viewers"] = planted.social_influence.rows();
  j["n_channels"] = planted.affinity.cols();
  j["social_influence"] = planted.social_influence.data();
  j["decay"] = planted.decay;
  j["affinity"] = planted.affinity.data();
  j["bursts"] = planted.bursts;
  open_out(path) << j.dump() << '\n';
}

PlantedTruth read_planted(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const int nv = j.at("n_viewers").get<int>();
  const int nc = j.at("n_channels").get<int>();
  PlantedTruth planted;
  planted.social_influence =
      matrix_from(j.at("social_influence"), nv, nv, "social_influence");
  planted.decay = j.at("decay").get<double>();
  planted.affinity = matrix_from(j.at("affinity"), nv, nc, "affinity");
  planted.bursts = j.at("bursts").get<std::vector<std::uint8_t>>();
  return planted;
}

void write_trace(const std::vector<double>& trace,
                 const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  char buffer[64];
  for (double x : trace) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", x);
    out << buffer << '\n';
  }
}

std::string metrics_to_json(const std::map<std::string, double>& metrics) {
  const json j(metrics);
  return j.dump(2);
}

void write_metrics(const std::map<std::string, double>& metrics,
                   const std::filesystem::path& path) {
  open_out(path) << metrics_to_json(metrics) << '\n';
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig config;
  config.text_ = text;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t\r");
    const auto end = s.find_last_not_of(" \t\r");
    if (begin == std::string::npos) return std::string();
    return s.substr(begin, end - begin + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " has an empty key");
    }
    config.values_[key] = value;
  }
  return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

bool KeyValueConfig::has(const std::string& key) const {
  return values_.contains(key);
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double value = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key `" + key +
                                "` is not a number: " + it->second);
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int value = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key `" + key +
                                "` is not an integer: " + it->second);
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long value = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return value;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key `" + key +
                                "` is not an unsigned integer: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config key `" + key +
                              "` is not a boolean: " + it->second);
}

void KeyValueConfig::echo(const std::filesystem::path& path) const {
  open_out(path) << text_;
}

}  // namespace mars
