#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsad/core/io.hpp"
#include "tsad/core/time_series.hpp"
#include "tsad/simulator/base_series.hpp"
#include "tsad/simulator/injection.hpp"
#include "tsad/util/parallel.hpp"
#include "tsad/util/random.hpp"

namespace tsad {

struct CorpusEntry {
  LabeledSeries labeled;
  std::size_t input_index = 0;
  std::size_t copy_index = 0;
  std::uint64_t seed = 0;  ///< seed for both mimic and injection of this entry
};

struct CorpusConfig {
  std::size_t copies = 1;
  std::vector<AnomalyKind> kinds{AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::trend_shift};
  InjectionConfig injection;
  std::uint64_t master_seed = 0;
  int jobs = 0;
};

/// For every input i and copy j: mimic the input, then inject the kind
/// kinds[j % kinds.size()]. Seeds derive from (master_seed, i, j) so the
/// output is independent of the job count.
inline std::vector<CorpusEntry> build_corpus(const std::vector<TimeSeries>& inputs, const CorpusConfig& config) {
  if (config.kinds.empty()) fail(Errc::invalid_config, "corpus needs at least one anomaly kind");
  config.injection.validate();
  const std::size_t total = inputs.size() * config.copies;
  std::vector<std::optional<CorpusEntry>> slots(total);
  parallel_for(total, config.jobs, [&](std::size_t k) {
    const std::size_t i = k / config.copies;
    const std::size_t j = k % config.copies;
    const std::uint64_t seed = derive_seed(config.master_seed, {i, j});
    const int period = resolve_period(inputs[i]);
    const TimeSeries base = mimic(inputs[i], period, derive_seed(seed, {0}));
    InjectionConfig inj = config.injection;
    inj.seed = derive_seed(seed, {1});
    slots[k] = CorpusEntry{inject(base, config.kinds[j % config.kinds.size()], inj), i, j, seed};
  });
  std::vector<CorpusEntry> out;
  out.reserve(total);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::string corpus_file_name(std::size_t i, std::size_t j) {
  return "series_" + std::to_string(i) + "_" + std::to_string(j) + ".csv";
}

/// Writes series_<i>_<j>.csv with sidecar labels plus manifest.json holding
/// the configs and per-entry seeds. Nothing time-dependent goes in the
/// manifest, so reruns with the same seed are byte-identical.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusEntry>& entries,
                         const CorpusConfig& config, const nlohmann::json& extra = nlohmann::json::object()) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::io_error, "cannot create directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format"] = 1;
  manifest["master_seed"] = config.master_seed;
  manifest["copies"] = config.copies;
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : config.kinds) kinds.push_back(std::string(to_string(k)));
  manifest["kinds"] = kinds;
  manifest["injection"] = injection_json(config.injection);
  for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    const std::string name = corpus_file_name(e.input_index, e.copy_index);
    io::write_labeled(dir / name, e.labeled);
    list.push_back({{"file", name},
                    {"input", e.input_index},
                    {"copy", e.copy_index},
                    {"kind", std::string(to_string(e.labeled.kind))},
                    {"seed", e.seed},
                    {"n_changepoints", e.labeled.labels.size()}});
  }
  manifest["entries"] = list;
  io::write_json(dir / "manifest.json", manifest);
}

inline std::vector<CorpusEntry> read_corpus(const std::filesystem::path& dir) {
  const nlohmann::json manifest = io::read_json(dir / "manifest.json");
  std::vector<CorpusEntry> out;
  try {
    for (const auto& e : manifest.at("entries")) {
      CorpusEntry c{io::read_labeled(dir / e.at("file").get<std::string>()), e.at("input").get<std::size_t>(),
                    e.at("copy").get<std::size_t>(), e.at("seed").get<std::uint64_t>()};
      out.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(Errc::parse_error, "corpus manifest: " + std::string(ex.what()));
  }
  return out;
}

}  // namespace tsad
