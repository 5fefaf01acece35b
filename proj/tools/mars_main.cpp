#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mars/cars.hpp"
#include "mars/d2r.hpp"
#include "mars/eval.hpp"
#include "mars/io.hpp"
#include "mars/model.hpp"
#include "mars/sensor.hpp"
#include "mars/synth.hpp"
#include "mars/tensor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

mars::SynthConfig synth_config_from(const mars::KeyValueConfig& kv) {
  mars::SynthConfig cfg;
  cfg.n_viewers = kv.get_int("n_viewers", cfg.n_viewers);
  cfg.n_channels = kv.get_int("n_channels", cfg.n_channels);
  cfg.n_slots = kv.get_int("n_slots", cfg.n_slots);
  cfg.k = kv.get_int("k", cfg.k);
  cfg.edge_prob = kv.get_double("edge_prob", cfg.edge_prob);
  cfg.neg_relation_prob =
      kv.get_double("neg_relation_prob", cfg.neg_relation_prob);
  cfg.planted_decay = kv.get_double("planted_decay", cfg.planted_decay);
  cfg.planted_influence =
      kv.get_double("planted_influence", cfg.planted_influence);
  cfg.base_donation_rate =
      kv.get_double("base_donation_rate", cfg.base_donation_rate);
  cfg.burst_rate = kv.get_double("burst_rate", cfg.burst_rate);
  cfg.burst_magnitude = kv.get_double("burst_magnitude", cfg.burst_magnitude);
  cfg.response_base = kv.get_double("response_base", cfg.response_base);
  cfg.suppression_strength =
      kv.get_double("suppression_strength", cfg.suppression_strength);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  return cfg;
}

mars::SensorConfig sensor_config_from(const mars::KeyValueConfig& kv) {
  mars::SensorConfig cfg;
  cfg.alpha = kv.get_int("alpha", cfg.alpha);
  cfg.window = kv.get_int("window", cfg.window);
  cfg.lambda_ser = kv.get_double("lambda_ser", cfg.lambda_ser);
  cfg.lambda_star = kv.get_double("lambda_star", cfg.lambda_star);
  cfg.lambda_riot = kv.get_double("lambda_riot", cfg.lambda_riot);
  cfg.learning_rate = kv.get_double("learning_rate", cfg.learning_rate);
  cfg.epochs = kv.get_int("epochs", cfg.epochs);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.init_scale = kv.get_double("init_scale", cfg.init_scale);
  cfg.decay_init = kv.get_double("decay_init", cfg.decay_init);
  cfg.epsilon_init = kv.get_double("epsilon", cfg.epsilon_init);
  cfg.emb_width = kv.get_int("emb_width", cfg.emb_width);
  cfg.momentum = kv.get_double("momentum", cfg.momentum);
  cfg.influence_lr_scale =
      kv.get_double("influence_lr_scale", cfg.influence_lr_scale);
  cfg.sampled_zeros = kv.get_bool("sampled_zeros", cfg.sampled_zeros);
  cfg.zero_sample_per_nnz =
      kv.get_int("zero_sample_per_nnz", cfg.zero_sample_per_nnz);
  return cfg;
}

mars::CarsConfig cars_config_from(const mars::KeyValueConfig& kv) {
  mars::CarsConfig cfg;
  cfg.learning_rate = kv.get_double("cars_learning_rate", cfg.learning_rate);
  cfg.epochs = kv.get_int("cars_epochs", cfg.epochs);
  cfg.seed = kv.get_u64("cars_seed", kv.get_u64("seed", cfg.seed));
  cfg.init_scale = kv.get_double("cars_init_scale", cfg.init_scale);
  cfg.tau_init = kv.get_double("cars_tau_init", cfg.tau_init);
  cfg.lambda4 = kv.get_double("cars_lambda4", cfg.lambda4);
  cfg.pair_sample = kv.get_int("cars_pair_sample", cfg.pair_sample);
  return cfg;
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw std::invalid_argument(path.string() +
                                " already exists; pass --force to overwrite");
  }
}

// Loads the training bundle from a dataset directory. Donation cells without
// an event record get one with all-zero message features.
mars::TrainingData load_training_data(const fs::path& dir, int emb_width) {
  mars::TrainingData data;
  data.donations = mars::read_tensor_jsonl(dir / "donations.jsonl");
  data.responses = mars::read_tensor_jsonl(dir / "responses.jsonl");
  data.graph = mars::read_graph(dir / "graph.json");
  data.relations = mars::read_relations(dir / "streamer_relations.json");
  data.events = mars::read_events_jsonl(dir / "events.jsonl", emb_width);

  std::set<std::array<int, 3>> covered;
  for (const mars::DonationEvent& e : data.events) {
    covered.insert({e.viewer, e.channel, e.slot});
  }
  for (const auto& [idx, amount] : data.donations.entries()) {
    if (covered.contains(idx)) continue;
    mars::DonationEvent e;
    e.viewer = idx[0];
    e.channel = idx[1];
    e.slot = idx[2];
    e.amount = amount;
    e.message.sentence_embedding.assign(emb_width, 0.0);
    data.events.push_back(std::move(e));
  }
  data.validate();
  return data;
}

struct GenerateArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double test_fraction = 0.2;
};

int cmd_generate(const GenerateArgs& args) {
  mars::KeyValueConfig kv = mars::KeyValueConfig::parse_file(args.config_path);
  mars::SynthConfig cfg = synth_config_from(kv);
  if (args.seed_set) cfg.seed = args.seed;
  const double test_fraction =
      kv.get_double("test_fraction", args.test_fraction);

  const mars::SynthData data = mars::generate(cfg);
  const mars::ResponseHoldout split =
      mars::holdout_responses(data, test_fraction, cfg.seed + 1);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  kv.echo(out / "config.echo");
  mars::write_graph(data.graph, out / "graph.json");
  mars::write_relations(data.relations, out / "streamer_relations.json");
  mars::write_tensor_jsonl(data.donations, out / "donations.jsonl");
  mars::write_tensor_jsonl(split.train_responses, out / "responses.jsonl");
  mars::write_tensor_jsonl(split.test_responses, out / "responses_test.jsonl");
  mars::write_events_jsonl(split.train_events, out / "events.jsonl");
  mars::write_events_jsonl(split.test_events, out / "events_test.jsonl");
  mars::write_msps(data.msps, out / "msps.json");
  mars::write_eval_cases(data.eval_cases, out / "eval_cases.json");
  mars::write_planted(data.planted, out / "planted.json");

  std::cout << "generated dataset in " << out.string() << "\n"
            << "  viewers:   " << cfg.n_viewers << "\n"
            << "  channels:  " << cfg.n_channels << "\n"
            << "  slots:     " << cfg.n_slots << "\n"
            << "  donations: " << data.donations.nnz() << " (train events "
            << split.train_events.size() << ", test events "
            << split.test_events.size() << ")\n"
            << "  graph edges: " << data.graph.edges().size() << "\n"
            << "  parties:   " << data.msps.size() << "\n"
            << "  eval cases: " << data.eval_cases.size() << "\n"
            << "  follow-within-" << 5 << " fraction: "
            << mars::follow_within_window_fraction(data.donations, 5) << "\n";
  return 0;
}

struct TrainSensorArgs {
  std::string data_dir;
  std::string config_path;
  std::string out_path;
  bool force = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_train_sensor(const TrainSensorArgs& args) {
  mars::KeyValueConfig kv = mars::KeyValueConfig::parse_file(args.config_path);
  mars::SensorConfig cfg = sensor_config_from(kv);
  if (args.seed_set) cfg.seed = args.seed;

  const fs::path out(args.out_path);
  refuse_overwrite(out, args.force);

  const mars::TrainingData data =
      load_training_data(args.data_dir, cfg.emb_width);
  const mars::SensorTrainResult result = mars::train_sensor(data, cfg);

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  mars::save_checkpoint(result.model, out);
  fs::path trace_path = out;
  trace_path.replace_extension(".trace");
  mars::write_trace(result.loss_trace, trace_path);
  fs::path echo_path = out;
  echo_path.replace_extension(".config");
  kv.echo(echo_path);

  std::cout << "trained sensor model -> " << out.string() << "\n"
            << "  epochs:       " << result.loss_trace.size() << "\n"
            << "  initial loss: " << result.loss_trace.front() << "\n"
            << "  final loss:   " << result.final_loss << "\n";
  return 0;
}

struct TrainCarsArgs {
  std::string checkpoint_path;
  std::string msps_path;
  std::string donations_path;
  std::string config_path;
  std::string out_path;
  bool force = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_train_cars(const TrainCarsArgs& args) {
  mars::KeyValueConfig kv = mars::KeyValueConfig::parse_file(args.config_path);
  mars::CarsConfig cfg = cars_config_from(kv);
  if (args.seed_set) cfg.seed = args.seed;

  const fs::path out(args.out_path);
  refuse_overwrite(out, args.force);

  const mars::SensorModel model = mars::load_checkpoint(args.checkpoint_path);
  if (kv.has("alpha") && kv.get_int("alpha", 0) != model.alpha()) {
    throw std::invalid_argument(
        "config alpha = " + std::to_string(kv.get_int("alpha", 0)) +
        " does not match checkpoint alpha = " + std::to_string(model.alpha()));
  }
  const std::vector<mars::Msp> msps = mars::read_msps(args.msps_path);
  const mars::EventTensor donations =
      mars::read_tensor_jsonl(args.donations_path);
  const std::vector<mars::BprPair> pairs =
      mars::build_bpr_pairs(donations, msps);
  if (pairs.empty()) {
    throw std::invalid_argument(
        "no preference pairs: every viewer's donation totals tie across "
        "parties, so there is nothing to rank");
  }

  const mars::CarsTrainResult result =
      mars::train_cars(model, msps, pairs, cfg);

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  mars::save_cars_params(result.params, out);
  fs::path trace_path = out;
  trace_path.replace_extension(".trace");
  mars::write_trace(result.loss_trace, trace_path);
  fs::path echo_path = out;
  echo_path.replace_extension(".config");
  kv.echo(echo_path);

  std::cout << "trained ranking parameters -> " << out.string() << "\n"
            << "  pairs:        " << pairs.size() << "\n"
            << "  initial loss: " << result.loss_trace.front() << "\n"
            << "  final loss:   " << result.final_loss << "\n";
  return 0;
}

struct RecommendArgs {
  std::string checkpoint_path;
  std::string cars_params_path;
  std::string request_path;
  std::string out_path;
};

void check_cars_match(const mars::CarsParams& params,
                      const mars::SensorModel& model) {
  if (params.h.size() != 2 * static_cast<std::size_t>(model.alpha()) + 1 ||
      params.tau_social.size() !=
          static_cast<std::size_t>(model.n_viewers())) {
    throw std::invalid_argument(
        "ranking parameters do not match the checkpoint dimensions");
  }
}

int cmd_recommend(const RecommendArgs& args) {
  const mars::SensorModel model = mars::load_checkpoint(args.checkpoint_path);

  std::ifstream in(args.request_path);
  if (!in) {
    throw std::invalid_argument("cannot open " + args.request_path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json request = json::parse(buffer.str(), nullptr, false);
  if (request.is_discarded() || !request.is_object() ||
      !request.contains("mode")) {
    throw std::invalid_argument("malformed request: expected a JSON object "
                                "with a \"mode\" field");
  }
  const std::string mode = request["mode"].get<std::string>();

  json output;
  if (mode == "donation") {
    const int viewer = request.at("viewer").get<int>();
    const int slot = request.at("slot").get<int>();
    const double amount = request.at("amount").get<double>();
    const std::vector<int> candidates =
        request.at("candidates").get<std::vector<int>>();
    const int window = request.contains("window")
                           ? request["window"].get<int>()
                           : 5;
    mars::EventTensor history(model.n_viewers(), model.n_channels(),
                              model.n_slots());
    if (request.contains("donations")) {
      history =
          mars::read_tensor_jsonl(request["donations"].get<std::string>());
    }
    std::vector<mars::MessageFeatures> messages;
    if (request.contains("messages")) {
      for (const auto& m : request["messages"]) {
        mars::MessageFeatures msg;
        msg.sentence_embedding = m.contains("emb")
                                     ? m["emb"].get<std::vector<double>>()
                                     : std::vector<double>(model.emb_width, 0.0);
        msg.sentiment = m.contains("sent") ? m["sent"].get<double>() : 0.0;
        if (m.contains("emo")) {
          const auto emo = m["emo"].get<std::vector<double>>();
          if (emo.size() != msg.streamer_emotion.size()) {
            throw std::invalid_argument("emotion vector must have width 4");
          }
          std::copy(emo.begin(), emo.end(), msg.streamer_emotion.begin());
        }
        messages.push_back(std::move(msg));
      }
    }
    std::vector<double> fanmins;
    if (request.contains("fanmins")) {
      fanmins = request["fanmins"].get<std::vector<double>>();
    }
    const auto ranking = mars::recommend_donation(
        model, history, viewer, candidates, amount, messages, slot, fanmins,
        window);
    output["mode"] = "donation";
    output["viewer"] = viewer;
    json ranked = json::array();
    for (const auto& [channel, estimate] : ranking) {
      ranked.push_back({{"channel", channel},
                        {"estimated_response", estimate}});
    }
    output["ranking"] = std::move(ranked);
  } else if (mode == "msp") {
    if (args.cars_params_path.empty()) {
      throw std::invalid_argument(
          "msp mode needs --cars-params with trained ranking parameters");
    }
    const mars::CarsParams params =
        mars::load_cars_params(args.cars_params_path);
    check_cars_match(params, model);
    if (!request.contains("candidates")) {
      throw std::invalid_argument("msp request needs a candidates array");
    }
    std::vector<mars::Msp> candidates;
    {
      // Reuse the party file schema for inline candidates.
      const fs::path tmp;
      for (const auto& item : request["candidates"]) {
        std::vector<int> group = item.at("group").get<std::vector<int>>();
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : item.at("edges")) {
          edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
        std::map<int, std::vector<int>> assignments;
        for (const auto& [key, channels] : item.at("assignments").items()) {
          assignments[std::stoi(key)] = channels.get<std::vector<int>>();
        }
        candidates.emplace_back(std::move(group), std::move(edges),
                                std::move(assignments));
      }
    }
    if (candidates.empty()) {
      throw std::invalid_argument("msp request has no candidates");
    }
    output["mode"] = "msp";
    json per_viewer = json::array();
    for (int v : candidates.front().group()) {
      const auto ranking = mars::rank_msps(params, model, v, candidates);
      json entry;
      entry["viewer"] = v;
      json ranked = json::array();
      for (const auto& [index, score] : ranking) {
        ranked.push_back({{"candidate", index}, {"satisfaction", score}});
      }
      entry["ranking"] = std::move(ranked);
      per_viewer.push_back(std::move(entry));
    }
    output["per_viewer"] = std::move(per_viewer);
    output["group_choice"] =
        mars::recommend_group_msp(params, model, candidates);
  } else {
    throw std::invalid_argument("unknown request mode: " + mode);
  }

  const std::string text = output.dump(2);
  if (args.out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(args.out_path);
    if (!out) throw std::runtime_error("cannot write " + args.out_path);
    out << text << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string data_dir;
  std::string checkpoint_path;
  std::string cars_params_path;
  std::string out_path;
  int window = 5;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const fs::path dir(args.data_dir);
  const mars::SensorModel model = mars::load_checkpoint(args.checkpoint_path);

  const mars::EventTensor donations =
      mars::read_tensor_jsonl(dir / "donations.jsonl");
  const mars::EventTensor responses =
      mars::read_tensor_jsonl(dir / "responses.jsonl");
  if (donations.n_viewers() != model.n_viewers() ||
      donations.n_channels() != model.n_channels() ||
      donations.n_slots() != model.n_slots()) {
    throw std::invalid_argument(
        "dataset dimensions do not match the checkpoint");
  }

  std::map<std::string, double> metrics;

  const auto report = mars::reconstruction_report(model, donations, responses);
  metrics["donation_reconstruction_per_cell"] = report.donation_loss;
  metrics["response_reconstruction_per_cell"] = report.response_loss;

  const fs::path test_events_path = dir / "events_test.jsonl";
  if (fs::exists(test_events_path)) {
    const auto test_events =
        mars::read_events_jsonl(test_events_path, model.emb_width);
    const mars::EventTensor test_responses =
        mars::read_tensor_jsonl(dir / "responses_test.jsonl");
    std::vector<double> predicted, actual;
    for (const mars::DonationEvent& e : test_events) {
      const mars::FeatureVector x =
          mars::build_features(model, donations, e.viewer, e.channel, e.slot,
                               e.amount, e.message, e.fanlist_min, args.window);
      predicted.push_back(mars::estimate_response(model.theta, x));
      actual.push_back(test_responses.at(e.viewer, e.channel, e.slot));
    }
    if (!predicted.empty()) {
      metrics["rmse"] = mars::rmse(predicted, actual);
    }
  }

  const fs::path cases_path = dir / "eval_cases.json";
  if (fs::exists(cases_path) && !args.cars_params_path.empty()) {
    const mars::CarsParams params =
        mars::load_cars_params(args.cars_params_path);
    check_cars_match(params, model);
    const auto cases = mars::read_eval_cases(cases_path);
    std::vector<mars::RankingCase> ranking_cases;
    for (const mars::EvalCase& c : cases) {
      const auto ranking = mars::rank_msps(params, model, c.viewer,
                                           c.candidates);
      mars::RankingCase rc;
      for (const auto& [index, score] : ranking) {
        rc.ranked.push_back(static_cast<int>(index));
      }
      rc.relevant.push_back(c.relevant);
      ranking_cases.push_back(std::move(rc));
    }
    for (int k : {2, 4}) {
      metrics["hr_at_" + std::to_string(k)] =
          mars::hit_ratio_at_k(ranking_cases, k);
      metrics["map_at_" + std::to_string(k)] =
          mars::map_at_k(ranking_cases, k);
    }
  }

  const std::string text = mars::metrics_to_json(metrics);
  std::cout << text << "\n";
  if (!args.out_path.empty()) {
    mars::write_metrics(metrics, args.out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled donation-response factorization and multi-stream "
               "party ranking"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate a synthetic dataset with planted ground truth");
  generate->add_option("--config", gen.config_path, "Run configuration file")
      ->required();
  generate->add_option("--out", gen.out_dir, "Output directory")->required();
  generate->add_option("--seed", gen.seed, "Override the config seed")
      ->each([&](const std::string&) { gen.seed_set = true; });

  TrainSensorArgs ts;
  CLI::App* train_sensor = app.add_subcommand(
      "train-sensor", "Train the coupled factorization model");
  train_sensor->add_option("--data", ts.data_dir, "Dataset directory")
      ->required();
  train_sensor->add_option("--config", ts.config_path, "Run configuration file")
      ->required();
  train_sensor->add_option("--out", ts.out_path, "Checkpoint output path")
      ->required();
  train_sensor->add_flag("--force", ts.force, "Overwrite an existing output");
  train_sensor->add_option("--seed", ts.seed, "Override the config seed")
      ->each([&](const std::string&) { ts.seed_set = true; });

  TrainCarsArgs tc;
  CLI::App* train_cars = app.add_subcommand(
      "train-cars", "Train the party ranking parameters");
  train_cars
      ->add_option("--checkpoint", tc.checkpoint_path, "Trained checkpoint")
      ->required();
  train_cars->add_option("--msps", tc.msps_path, "Party file")->required();
  train_cars
      ->add_option("--donations", tc.donations_path, "Donation tensor JSONL")
      ->required();
  train_cars->add_option("--config", tc.config_path, "Run configuration file")
      ->required();
  train_cars->add_option("--out", tc.out_path, "Parameter output path")
      ->required();
  train_cars->add_flag("--force", tc.force, "Overwrite an existing output");
  train_cars->add_option("--seed", tc.seed, "Override the config seed")
      ->each([&](const std::string&) { tc.seed_set = true; });

  RecommendArgs rec;
  CLI::App* recommend = app.add_subcommand(
      "recommend", "Rank donation targets or candidate parties");
  recommend
      ->add_option("--checkpoint", rec.checkpoint_path, "Trained checkpoint")
      ->required();
  recommend->add_option("--cars-params", rec.cars_params_path,
                        "Trained ranking parameters (msp mode)");
  recommend->add_option("--request", rec.request_path, "Request JSON file")
      ->required();
  recommend->add_option("--out", rec.out_path,
                        "Write the response here instead of stdout");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Compute metrics against a dataset's held-out split");
  evaluate->add_option("--data", ev.data_dir, "Dataset directory")->required();
  evaluate->add_option("--checkpoint", ev.checkpoint_path, "Trained checkpoint")
      ->required();
  evaluate->add_option("--cars-params", ev.cars_params_path,
                       "Trained ranking parameters");
  evaluate->add_option("--out", ev.out_path, "Metrics output path");
  evaluate->add_option("--window", ev.window,
                       "Window size used for regression features");

  try {
    app.parse(argc, argv);
    if (generate->parsed()) return cmd_generate(gen);
    if (train_sensor->parsed()) return cmd_train_sensor(ts);
    if (train_cars->parsed()) return cmd_train_cars(tc);
    if (recommend->parsed()) return cmd_recommend(rec);
    if (evaluate->parsed()) return cmd_evaluate(ev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const mars::TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
