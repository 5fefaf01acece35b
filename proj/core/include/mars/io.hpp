#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mars/cars.hpp"
#include "mars/d2r.hpp"
#include "mars/model.hpp"
#include "mars/synth.hpp"
#include "mars/tensor.hpp"

namespace mars {

// Sparse tensor as JSONL: a header record with the dimensions followed by one
// {"v","c","t","x"} record per nonzero cell.
void write_tensor_jsonl(const EventTensor& t, const std::filesystem::path& path);
EventTensor read_tensor_jsonl(const std::filesystem::path& path);

void write_graph(const ViewerGraph& g, const std::filesystem::path& path);
ViewerGraph read_graph(const std::filesystem::path& path);

void write_relations(const SignedStreamerMatrix& w,
                     const std::filesystem::path& path);
SignedStreamerMatrix read_relations(const std::filesystem::path& path);

// Donation events as JSONL records
// {"v","c","t","amount","emb":[...],"sent":..,"emo":[...],"fanmin":..}.
// Missing feature fields default to zeros of the given embedding width.
void write_events_jsonl(const std::vector<DonationEvent>& events,
                        const std::filesystem::path& path);
std::vector<DonationEvent> read_events_jsonl(const std::filesystem::path& path,
                                             int emb_width);

// Versioned model checkpoint. Matrices and cores are flattened row-major;
// the load is bit-exact against the saved model.
void save_checkpoint(const SensorModel& model,
                     const std::filesystem::path& path);
SensorModel load_checkpoint(const std::filesystem::path& path);

void save_cars_params(const CarsParams& params,
                      const std::filesystem::path& path);
CarsParams load_cars_params(const std::filesystem::path& path);

// Party list as a JSON array of
// {"group":[v...],"edges":[[u,v]...],"assignments":{"v":[c...]}}.
void write_msps(const std::vector<Msp>& msps,
                const std::filesystem::path& path);
std::vector<Msp> read_msps(const std::filesystem::path& path);

void write_eval_cases(const std::vector<EvalCase>& cases,
                      const std::filesystem::path& path);
std::vector<EvalCase> read_eval_cases(const std::filesystem::path& path);

void write_planted(const PlantedTruth& planted,
                   const std::filesystem::path& path);
PlantedTruth read_planted(const std::filesystem::path& path);

void write_trace(const std::vector<double>& trace,
                 const std::filesystem::path& path);

void write_metrics(const std::map<std::string, double>& metrics,
                   const std::filesystem::path& path);
std::string metrics_to_json(const std::map<std::string, double>& metrics);

// Plain `key = value` run configuration. `#` starts a comment; unknown keys
// are preserved so the file can be echoed verbatim into output directories.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::filesystem::path& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::string& text() const { return text_; }
  // Writes the original text to `path` for provenance.
  void echo(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::string text_;
};

}  // namespace mars
