/**
 * @file commands.cpp
 * @brief build / sample / stats / bench subcommands.
 */

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "scoregraph/error.h"
#include "scoregraph/graph.h"
#include "scoregraph/io.h"
#include "scoregraph/loader.h"
#include "scoregraph/midi.h"
#include "scoregraph/sampler.h"
#include "scoregraph/score.h"
#include "scoregraph/synthetic.h"

namespace fs = std::filesystem;

namespace scoregraph::cli {

namespace {

constexpr const char* kGraphExtension = ".sgraph";

std::vector<fs::path> list_files(const fs::path& dir, std::initializer_list<const char*> exts) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* e : exts) {
      if (ext == e) {
        files.push_back(entry.path());
        break;
      }
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<ScoreGraph> load_corpus(const fs::path& dir, std::vector<fs::path>* names = nullptr) {
  const auto files = list_files(dir, {kGraphExtension});
  std::vector<ScoreGraph> corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) corpus.push_back(read_graph_file(f));
  if (names) *names = files;
  return corpus;
}

// Config values are passed through CLI11's own conversions; arrays are
// joined with commas so list-valued flags accept either form.
std::string config_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) joined += ",";
      joined += config_scalar(v[i]);
    }
    return joined;
  }
  return v.dump();
}

// Fills every option of `sub` not given on the command line from the JSON
// object in `path`. Command-line values win.
void apply_json_config(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw ConfigError("config " + path + ": unknown key '" + key + "' for " + sub.get_name());
    }
    if (opt->count() > 0) continue;
    if (value.is_boolean() && !value.get<bool>()) continue;
    opt->add_result(config_scalar(value));
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ConfigError("config " + path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

void require(const CLI::App& sub, const std::string& name, bool given) {
  if (!given) throw ConfigError(name + " is required for " + sub.get_name());
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<std::int64_t> parse_fanouts(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(std::remove_if(part.begin(), part.end(), ::isspace), part.end());
    if (part == "all" || part == "unbounded" || part == "-1") {
      out.push_back(kUnbounded);
      continue;
    }
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty() || value < 1) {
      throw ConfigError("invalid fan-out entry '" + part + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError("empty fan-out list");
  return out;
}

int cmd_build(const BuildArgs& args, std::ostream& out, std::ostream& err) {
  if (args.format != "notes-json" && args.format != "midi") {
    err << "error: unknown format '" << args.format << "' (expected notes-json or midi)\n";
    return kExitUser;
  }
  if (!fs::is_directory(args.input)) {
    err << "error: input directory " << args.input << " does not exist\n";
    return kExitUser;
  }
  const bool midi = args.format == "midi";
  const auto files = midi ? list_files(args.input, {".mid", ".midi"})
                          : list_files(args.input, {".json"});
  fs::create_directories(args.out);

  struct Outcome {
    std::string line;
    std::string failure;
    std::vector<std::string> warnings;
  };
  std::vector<Outcome> outcomes(files.size());
  std::atomic<std::size_t> next{0};
  BuildOptions options;
  options.metrical = args.metrical;
  options.inverse_edges = args.inverse;

  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const fs::path& file = files[i];
      Outcome& o = outcomes[i];
      try {
        const auto bytes = read_file_bytes(file);
        Score score;
        if (midi) {
          MidiImport imported = parse_midi(bytes, file.filename().string());
          score = std::move(imported.score);
          o.warnings = std::move(imported.warnings);
        } else {
          score = parse_note_json(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                                   bytes.size()),
                                  file.filename().string());
        }
        const ScoreGraph graph = build_score_graph(score, options);
        write_graph_file(graph, args.out / (file.stem().string() + kGraphExtension));
        std::ostringstream line;
        line << file.filename().string() << ": notes=" << graph.note_count
             << " edges=" << graph.edge_count();
        if (graph.options.metrical) {
          line << " beats=" << graph.beat_count << " measures=" << graph.measure_count;
        }
        o.line = line.str();
      } catch (const std::exception& e) {
        o.failure = file.filename().string() + ": " + e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, args.jobs ? args.jobs : std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<std::size_t>(jobs, std::max<std::size_t>(files.size(), 1)); ++j) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();

  std::size_t failed = 0;
  for (const Outcome& o : outcomes) {
    for (const auto& w : o.warnings) err << "warning: " << w << "\n";
    if (!o.failure.empty()) {
      ++failed;
      err << "error: " << o.failure << "\n";
    } else {
      out << o.line << "\n";
    }
  }
  out << "built " << files.size() - failed << "/" << files.size() << " graphs into " << args.out.string()
      << "\n";
  if (files.empty()) {
    err << "error: no " << (midi ? "MIDI" : "note-list JSON") << " files in " << args.input << "\n";
    return kExitUser;
  }
  return failed ? kExitUser : kExitOk;
}

int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(args.graphs)) {
    err << "error: graph directory " << args.graphs << " does not exist\n";
    return kExitUser;
  }
  SamplerConfig cfg;
  cfg.batch_size = args.batch_size;
  cfg.target_size = args.target_size;
  cfg.fanouts = args.fanouts;
  cfg.seed = args.seed;
  cfg.include_metrical = args.metrical;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  }

  std::vector<ScoreGraph> corpus;
  try {
    corpus = load_corpus(args.graphs);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  }
  if (corpus.empty()) {
    err << "error: no " << kGraphExtension << " files in " << args.graphs << "\n";
    return kExitUser;
  }
  if (cfg.include_metrical) {
    for (const auto& g : corpus) {
      if (!g.options.metrical) {
        err << "error: --metrical requires graphs built with --metrical (" << g.source_name
            << " has no beat/measure nodes)\n";
        return kExitUser;
      }
    }
  }

  std::ofstream file(args.out, std::ios::binary | std::ios::trunc);
  if (!file) {
    err << "error: cannot open " << args.out << " for writing\n";
    return kExitUser;
  }
  BatchStream stream(corpus, cfg, args.num_batches, args.workers);
  std::int64_t targets = 0;
  while (auto batch = stream.next()) {
    append_batch(file, *batch, BatchEcho{cfg, stream.delivered() - 1});
    targets += batch->total_targets();
  }
  file.close();
  out << "wrote " << args.num_batches << " batches (" << targets << " targets, B=" << cfg.batch_size
      << ", S=" << cfg.target_size << ", seed=" << cfg.seed << ") to " << args.out.string() << "\n";
  return kExitOk;
}

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(args.graphs)) {
    err << "error: graph directory " << args.graphs << " does not exist\n";
    return kExitUser;
  }
  std::vector<fs::path> names;
  std::vector<ScoreGraph> corpus;
  try {
    corpus = load_corpus(args.graphs, &names);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  }
  if (corpus.empty()) {
    err << "error: no " << kGraphExtension << " files in " << args.graphs << "\n";
    return kExitUser;
  }

  const std::vector<std::string> degree_buckets = {"0", "1", "2", "3", "4-7", "8-15", "16+"};
  auto bucket = [](std::int64_t d) -> std::size_t {
    if (d <= 3) return static_cast<std::size_t>(d);
    if (d < 8) return 4;
    if (d < 16) return 5;
    return 6;
  };
  std::map<EdgeType, std::vector<std::int64_t>> degree_hist;
  std::map<std::int64_t, std::int64_t> group_sizes;

  auto column = [](EdgeType t) { return static_cast<int>(std::max<std::size_t>(10, to_string(t).size() + 2)); };
  auto row = [&](const std::string& name, std::int64_t notes, std::int64_t beats,
                 std::int64_t measures, const std::map<EdgeType, std::size_t>& counts) {
    out << std::left << std::setw(24) << name << std::right << std::setw(8) << notes
        << std::setw(7) << beats << std::setw(9) << measures;
    for (EdgeType t : kAllEdgeTypes) {
      auto it = counts.find(t);
      out << std::setw(column(t)) << (it == counts.end() ? 0 : it->second);
    }
    out << "\n";
  };

  out << std::left << std::setw(24) << "file" << std::right << std::setw(8) << "notes"
      << std::setw(7) << "beats" << std::setw(9) << "measures";
  for (EdgeType t : kAllEdgeTypes) {
    out << std::setw(column(t)) << to_string(t);
  }
  out << "\n";

  std::int64_t notes = 0, beats = 0, measures = 0;
  std::map<EdgeType, std::size_t> totals;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ScoreGraph& g = corpus[i];
    std::map<EdgeType, std::size_t> counts;
    for (const auto& [type, list] : g.edges) {
      counts[type] = list.size();
      totals[type] += list.size();
      if (!is_note_relation(type)) continue;
      auto& hist = degree_hist[type];
      hist.resize(degree_buckets.size(), 0);
      const InAdjacency& adj = g.in_adjacency(type);
      for (NodeId v = 0; v < g.note_count; ++v) {
        ++hist[bucket(static_cast<std::int64_t>(adj.in_neighbors(v).size()))];
      }
    }
    for (std::size_t b = 0; b < g.note_onsets.size();) {
      std::size_t e = b;
      while (e < g.note_onsets.size() && g.note_onsets[e] == g.note_onsets[b]) ++e;
      ++group_sizes[static_cast<std::int64_t>(e - b)];
      b = e;
    }
    notes += g.note_count;
    beats += g.beat_count;
    measures += g.measure_count;
    row(names[i].filename().string(), g.note_count, g.beat_count, g.measure_count, counts);
  }
  row("TOTAL", notes, beats, measures, totals);
  out << "\n" << corpus.size() << " graph files\n";

  out << "\nin-degree histogram (notes per bucket)\n" << std::left << std::setw(14) << "relation"
      << std::right;
  for (const auto& b : degree_buckets) out << std::setw(8) << b;
  out << "\n";
  for (const auto& [type, hist] : degree_hist) {
    out << std::left << std::setw(14) << to_string(type) << std::right;
    for (auto c : hist) out << std::setw(8) << c;
    out << "\n";
  }

  out << "\nonset-group sizes\n";
  for (const auto& [size, count] : group_sizes) {
    out << "  size " << std::setw(4) << size << ": " << count << "\n";
  }
  return kExitOk;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  if (args.notes <= 0) {
    err << "error: --notes must be positive\n";
    return kExitUser;
  }
  if (args.repeat <= 0) {
    err << "error: --repeat must be positive\n";
    return kExitUser;
  }
  out << std::left << std::setw(8) << "run" << std::right << std::setw(8) << "notes"
      << std::setw(10) << "edges" << std::setw(16) << "reference_ms" << std::setw(16)
      << "optimized_ms" << std::setw(14) << "sampler_ms" << "\n";
  std::vector<double> ref_ms, opt_ms, sample_ms;
  std::size_t edges = 0;
  for (std::int64_t r = 0; r < args.repeat; ++r) {
    Rng rng = Rng(args.seed).split(static_cast<std::uint64_t>(r));
    const Score score = make_synthetic_score(static_cast<std::size_t>(args.notes), rng);

    auto t0 = std::chrono::steady_clock::now();
    const EdgeMap reference = build_note_edges_reference(score);
    ref_ms.push_back(ms_since(t0));

    t0 = std::chrono::steady_clock::now();
    const EdgeMap optimized = build_note_edges(score);
    opt_ms.push_back(ms_since(t0));
    if (reference != optimized) {
      err << "error: optimized edges differ from the reference on run " << r << "\n";
      return kExitInternal;
    }
    edges = 0;
    for (const auto& [type, list] : optimized) edges += list.size();

    const std::vector<ScoreGraph> corpus{build_score_graph(score)};
    SamplerConfig cfg;
    cfg.seed = args.seed;
    t0 = std::chrono::steady_clock::now();
    for (std::uint64_t d = 0; d < 10; ++d) (void)sample_batch(corpus, cfg, d);
    sample_ms.push_back(ms_since(t0) / 10.0);

    out << std::left << std::setw(8) << r << std::right << std::setw(8) << args.notes
        << std::setw(10) << edges << std::fixed << std::setprecision(3) << std::setw(16)
        << ref_ms.back() << std::setw(16) << opt_ms.back() << std::setw(14) << sample_ms.back()
        << "\n";
  }
  out << std::left << std::setw(8) << "median" << std::right << std::setw(8) << args.notes
      << std::setw(10) << edges << std::fixed << std::setprecision(3) << std::setw(16)
      << median(ref_ms) << std::setw(16) << median(opt_ms) << std::setw(14) << median(sample_ms)
      << "\n";
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score graph construction and musically informed batch sampling", "scoregraph"};
  app.require_subcommand(1);

  BuildArgs build;
  std::string build_config;
  auto* b = app.add_subcommand("build", "Convert scores into graph files");
  b->add_option("--config", build_config, "JSON file with flag values");
  b->add_option("--input", build.input, "Directory of input scores (required)");
  b->add_option("--format", build.format, "notes-json or midi")
      ->check(CLI::IsMember({"notes-json", "midi"}));
  b->add_option("--out", build.out, "Output directory for graph files (required)");
  b->add_flag("--metrical", build.metrical, "Add beat and measure nodes");
  b->add_flag("--inverse", build.inverse, "Add inverse during/follow/silence edges");
  b->add_option("--jobs", build.jobs, "Parallel workers (0 = all cores)");

  SampleArgs sample;
  std::string sample_config;
  std::string fanouts = "3,3,3";
  auto* s = app.add_subcommand("sample", "Sample training batches from graph files");
  s->add_option("--config", sample_config, "JSON file with flag values");
  s->add_option("--graphs", sample.graphs, "Directory of graph files (required)");
  s->add_option("--batch-size", sample.batch_size, "Scores per batch (B)");
  s->add_option("--target-size", sample.target_size, "Target notes per score (S)");
  s->add_option("--fanout", fanouts, "Per-layer fan-out, e.g. 3,3,3 ('all' = unbounded)");
  s->add_option("--seed", sample.seed, "Master seed");
  s->add_option("--num-batches", sample.num_batches, "Number of batches to write");
  s->add_option("--out", sample.out, "Batch container file (required)");
  s->add_flag("--metrical", sample.metrical, "Include beat/measure nodes of the targets");
  s->add_option("--workers", sample.workers, "Sampling threads");

  StatsArgs stats;
  std::string stats_config;
  auto* st = app.add_subcommand("stats", "Summarize a directory of graph files");
  st->add_option("--config", stats_config, "JSON file with flag values");
  st->add_option("--graphs", stats.graphs, "Directory of graph files (required)");

  BenchArgs bench;
  std::string bench_config;
  auto* be = app.add_subcommand("bench", "Time graph builders and the sampler on synthetic scores");
  be->add_option("--config", bench_config, "JSON file with flag values");
  be->add_option("--notes", bench.notes, "Notes per synthetic score");
  be->add_option("--repeat", bench.repeat, "Number of timed runs");
  be->add_option("--seed", bench.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  }

  try {
    if (*b) {
      if (!build_config.empty()) apply_json_config(*b, build_config);
      require(*b, "--input", b->count("--input") > 0);
      require(*b, "--out", b->count("--out") > 0);
      return cmd_build(build, out, err);
    }
    if (*s) {
      if (!sample_config.empty()) apply_json_config(*s, sample_config);
      require(*s, "--graphs", s->count("--graphs") > 0);
      require(*s, "--out", s->count("--out") > 0);
      sample.fanouts = parse_fanouts(fanouts);
      return cmd_sample(sample, out, err);
    }
    if (*st) {
      if (!stats_config.empty()) apply_json_config(*st, stats_config);
      require(*st, "--graphs", st->count("--graphs") > 0);
      return cmd_stats(stats, out, err);
    }
    if (*be) {
      if (!bench_config.empty()) apply_json_config(*be, bench_config);
      return cmd_bench(bench, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUser;
}

}  // namespace scoregraph::cli
