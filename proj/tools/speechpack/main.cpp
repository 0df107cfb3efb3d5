// speechpack: shard packing, validation and batching simulation for
// variable-length speech+text training data.

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "speechpack/cli/commands.hpp"
#include "speechpack/error.hpp"

namespace sp = speechpack;
namespace cli = speechpack::cli;

namespace {

struct RenderFlags {
  std::string tokenizer = "byte";
  std::string vocab;
  std::size_t vocab_size = 32'000;
  double frame_shift_ms = 10.0;
  std::uint32_t encoder_subsample = 4;
  std::uint32_t projector_stride = 2;
  bool tokenize_transcripts = false;
  bool supervise_audio = false;

  void attach(CLI::App* app) {
    app->add_option("--tokenizer", tokenizer, "Text tokenizer")
        ->check(CLI::IsMember({"byte", "whitespace", "vocab"}))
        ->capture_default_str();
    app->add_option("--vocab", vocab, "token<TAB>id vocabulary file (tokenizer=vocab)");
    app->add_option("--vocab-size", vocab_size, "Bucket count for tokenizer=whitespace")
        ->capture_default_str();
    app->add_option("--frame-shift-ms", frame_shift_ms, "Feature frame shift")->capture_default_str();
    app->add_option("--encoder-subsample", encoder_subsample, "Speech encoder downsampling")
        ->capture_default_str();
    app->add_option("--projector-stride", projector_stride, "Projector convolution stride")
        ->capture_default_str();
    app->add_flag("--tokenize-audio-transcripts", tokenize_transcripts,
                  "Also tokenize transcripts attached to audio parts");
    app->add_flag("--supervise-assistant-audio", supervise_audio,
                  "Put loss on assistant audio placeholders");
  }

  cli::RenderSetup build() const {
    cli::RenderSetup setup;
    if (tokenizer == "whitespace") setup.tokenizer = sp::length::Tokenizer::whitespace(vocab_size);
    if (tokenizer == "vocab") {
      if (vocab.empty()) throw sp::Error(sp::ErrorCode::kInvalidConfig, "--tokenizer vocab needs --vocab");
      setup.tokenizer = sp::length::Tokenizer::from_vocab_file(vocab);
    }
    setup.audio.frame_shift = std::chrono::microseconds(static_cast<long long>(frame_shift_ms * 1000.0 + 0.5));
    setup.audio.encoder_subsample = encoder_subsample;
    setup.audio.projector_stride = projector_stride;
    if (setup.audio.frame_shift.count() <= 0 || encoder_subsample == 0 || projector_stride == 0) {
      throw sp::Error(sp::ErrorCode::kInvalidConfig, "audio rate settings must be > 0");
    }
    setup.options.tokenize_audio_transcripts = tokenize_transcripts;
    setup.options.supervise_assistant_audio = supervise_audio;
    return setup;
  }
};

struct SourceFlags {
  std::string source = "synthetic";
  std::string input;
  std::size_t count = 10'000;
  std::string dist = "lognormal";
  double mu = std::log(400.0);
  double sigma = 0.6;
  std::size_t min_len = 1;
  std::size_t max_len = 1024;
  std::size_t cap = 2048;
  std::size_t workers = 1;

  void attach(CLI::App* app) {
    app->add_option("--source", source, "Where sequences come from")
        ->check(CLI::IsMember({"synthetic", "pretrain", "sft", "shards"}))
        ->capture_default_str();
    app->add_option("--input", input, "jsonl file or shard list for non-synthetic sources");
    app->add_option("--count", count, "Synthetic utterance count")->capture_default_str();
    app->add_option("--dist", dist, "Synthetic length distribution")
        ->check(CLI::IsMember({"lognormal", "uniform"}))
        ->capture_default_str();
    app->add_option("--mu", mu, "lognormal mu (log tokens)")->capture_default_str();
    app->add_option("--sigma", sigma, "lognormal sigma")->capture_default_str();
    app->add_option("--min-len", min_len, "uniform lower bound")->capture_default_str();
    app->add_option("--max-len", max_len, "uniform upper bound")->capture_default_str();
    app->add_option("--cap", cap, "Synthetic length cap")->capture_default_str();
    app->add_option("--workers", workers, "Parallel shard readers")->capture_default_str();
  }

  cli::SourceSpec build(std::uint64_t seed) const {
    cli::SourceSpec spec;
    spec.path = input;
    spec.workers = workers;
    if (source == "pretrain") spec.kind = cli::SourceKind::kPretrainJsonl;
    if (source == "sft") spec.kind = cli::SourceKind::kSftJsonl;
    if (source == "shards") spec.kind = cli::SourceKind::kShardList;
    if (source == "synthetic") {
      spec.kind = cli::SourceKind::kSynthetic;
      if (count == 0) throw sp::Error(sp::ErrorCode::kInvalidConfig, "--count must be >= 1");
    } else if (input.empty()) {
      throw sp::Error(sp::ErrorCode::kInvalidConfig, "--source " + source + " needs --input");
    }
    spec.synthetic.count = count;
    spec.synthetic.distribution =
        dist == "uniform" ? cli::LengthDistribution::kUniform : cli::LengthDistribution::kLognormal;
    spec.synthetic.mu = mu;
    spec.synthetic.sigma = sigma;
    spec.synthetic.uniform_min = min_len;
    spec.synthetic.uniform_max = max_len;
    spec.synthetic.cap = cap;
    spec.synthetic.seed = seed;
    return spec;
  }
};

struct StrategyFlags {
  std::size_t batch_size = 32;
  std::size_t sort_buffer = 0;  // 0: same as batch size
  std::size_t max_tokens = 4096;
  std::size_t pack_size = 8192;
  std::size_t pack_buffer = 64;
  std::string oversize = "drop";
  std::uint32_t pad_id = 0;

  void attach(CLI::App* app) {
    app->add_option("--batch-size", batch_size, "static: sequences per batch")->capture_default_str();
    app->add_option("--sort-buffer", sort_buffer, "static: sort window (default: batch size, i.e. unsorted)");
    app->add_option("--max-tokens", max_tokens, "dynamic: padded token budget per batch")
        ->capture_default_str();
    app->add_option("--pack-size", pack_size, "pack: tokens per pack")->capture_default_str();
    app->add_option("--pack-buffer", pack_buffer, "pack: look-ahead buffer")->capture_default_str();
    app->add_option("--oversize", oversize, "pack: what to do with sequences longer than a pack")
        ->check(CLI::IsMember({"error", "drop", "emit_alone_truncated"}))
        ->capture_default_str();
    app->add_option("--pad-id", pad_id, "pack: pad token id")->capture_default_str();
  }

  sp::StrategyConfig build(const std::string& which) const {
    if (which == "static") return sp::StaticConfig{batch_size, sort_buffer == 0 ? batch_size : sort_buffer};
    if (which == "dynamic") return sp::DynamicConfig{max_tokens};
    if (which == "pack") {
      return sp::PackConfig{pack_size, pack_buffer, sp::parse_oversize_policy(oversize), pad_id};
    }
    throw sp::Error(sp::ErrorCode::kInvalidConfig, "unknown strategy '" + which + "'");
  }
};

cli::ValidateKind parse_kind(const std::string& kind) {
  if (kind == "sft") return cli::ValidateKind::kSft;
  if (kind == "shards") return cli::ValidateKind::kShards;
  return cli::ValidateKind::kPretrain;
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sp::Error(sp::ErrorCode::kNotFound, "cannot open config '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw sp::Error(sp::ErrorCode::kInvalidConfig, "expected key=value", n);
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

// Config entries become `--key=value` arguments placed before anything on the
// real command line, so explicit flags win (options keep the last value).
std::vector<std::string> merge_config(CLI::App& app, int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const std::string path = find_config_path(argc, argv);
  if (path.empty()) return args;

  auto sub_pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  CLI::App* sub = sub_pos == args.end() ? nullptr : app.get_subcommand(*sub_pos);
  std::vector<std::string> global, local;
  for (const auto& [key, value] : read_config(path)) {
    const std::string flag = "--" + key;
    if (key == "config") continue;
    if (sub != nullptr && sub->get_option_no_throw(flag) != nullptr) {
      local.push_back(flag + "=" + value);
    } else if (app.get_option_no_throw(flag) != nullptr) {
      global.push_back(flag + "=" + value);
    }
    // keys belonging to other subcommands are ignored
  }
  const auto offset = sub_pos - args.begin();
  if (sub != nullptr) args.insert(args.begin() + offset + 1, local.begin(), local.end());
  args.insert(args.begin(), global.begin(), global.end());
  return args;
}

bool write_stdout(std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::write(STDOUT_FILENO, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE) return false;
      throw sp::Error(sp::ErrorCode::kSinkWrite, std::string("stdout: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Speech+text shard packing, validation and batching simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::uint64_t seed = 17;
  std::string config_path;
  bool quiet = false;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--config", config_path, "key=value file mirroring the command-line flags");
  app.add_flag("--quiet", quiet, "Only print results and errors");

  // pack
  cli::PackOptions pack_opts;
  auto* pack = app.add_subcommand("pack", "Write a pre-training jsonl into tar shards");
  pack->add_option("input", pack_opts.input, "Pre-training jsonl")->required();
  pack->add_option("--out", pack_opts.out_dir, "Output directory")->required();
  pack->add_option("--shard-size", pack_opts.shard_size, "Samples per shard")->capture_default_str();
  pack->add_option("--manifest-name", pack_opts.manifest_name, "Shard list file name")
      ->capture_default_str();

  // unpack
  cli::UnpackOptions unpack_opts;
  auto* unpack = app.add_subcommand("unpack", "Extract shards back into wav files and a jsonl");
  unpack->add_option("input", unpack_opts.input, "Shard list or .tar")->required();
  unpack->add_option("--out", unpack_opts.out_dir, "Output directory")->required();
  unpack->add_option("--jsonl-name", unpack_opts.jsonl_name, "jsonl file name")->capture_default_str();
  unpack->add_option("--workers", unpack_opts.workers, "Parallel shard readers")->capture_default_str();

  // validate
  std::string validate_path, validate_kind = "pretrain";
  auto* validate = app.add_subcommand("validate", "Check every record of a data file");
  validate->add_option("path", validate_path, "File to check")->required();
  validate->add_option("--kind", validate_kind, "Record format")
      ->check(CLI::IsMember({"pretrain", "sft", "shards"}))
      ->capture_default_str();

  // inspect
  std::string inspect_path, inspect_kind;
  std::size_t inspect_limit = 20;
  RenderFlags inspect_render;
  auto* inspect = app.add_subcommand("inspect", "Print per-record lengths of a data file");
  inspect->add_option("path", inspect_path, "jsonl, shard list or .tar")->required();
  inspect->add_option("--kind", inspect_kind, "Record format (guessed when omitted)")
      ->check(CLI::IsMember({"pretrain", "sft", "shards"}));
  inspect->add_option("--limit", inspect_limit, "Records to print")->capture_default_str();
  inspect_render.attach(inspect);

  // simulate
  SourceFlags sim_source;
  StrategyFlags sim_strategy;
  RenderFlags sim_render;
  std::vector<std::string> sim_strategies = {"static", "dynamic", "pack"};
  std::string csv_path;
  auto* simulate = app.add_subcommand("simulate", "Replay one sequence stream through each batching strategy");
  sim_source.attach(simulate);
  sim_strategy.attach(simulate);
  sim_render.attach(simulate);
  simulate->add_option("--strategies", sim_strategies, "Strategies to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"static", "dynamic", "pack"}))
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->capture_default_str();
  simulate->add_option("--csv", csv_path, "Write the CSV here instead of stdout");

  // bench
  cli::BenchOptions bench_opts;
  double bench_duration_s = 0.0;
  int http_retries = 3;
  double http_timeout_s = 30.0;
  auto* bench = app.add_subcommand("bench", "Measure shard streaming throughput");
  bench->add_option("manifest", bench_opts.manifest, "Shard list")->required();
  bench->add_option("--workers", bench_opts.workers, "Parallel shard readers")->capture_default_str();
  bench->add_option("--max-samples", bench_opts.max_samples, "Stop after this many samples (0: all)")
      ->capture_default_str();
  bench->add_option("--duration", bench_duration_s, "Stop after this many seconds (0: no limit)")
      ->capture_default_str();
  bench->add_option("--http-retries", http_retries, "Retries for http shards")->capture_default_str();
  bench->add_option("--http-timeout", http_timeout_s, "Seconds before an http read times out")
      ->capture_default_str();

  // emit
  SourceFlags emit_source;
  StrategyFlags emit_strategy;
  RenderFlags emit_render;
  std::string emit_which = "pack";
  auto* emit = app.add_subcommand("emit", "Write framed batches to stdout");
  emit_source.attach(emit);
  emit_strategy.attach(emit);
  emit_render.attach(emit);
  emit->add_option("--strategy", emit_which, "Batching strategy")
      ->check(CLI::IsMember({"static", "dynamic", "pack"}))
      ->capture_default_str();

  try {
    std::vector<std::string> args = merge_config(app, argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const cli::Console console{std::cout, std::cerr, quiet};
  try {
    if (*pack) return cli::cmd_pack(pack_opts, console);
    if (*unpack) return cli::cmd_unpack(unpack_opts, console);
    if (*validate) return cli::cmd_validate({validate_path, parse_kind(validate_kind)}, console);
    if (*inspect) {
      cli::InspectOptions opts{inspect_path, std::nullopt, inspect_limit, inspect_render.build()};
      if (!inspect_kind.empty()) opts.kind = parse_kind(inspect_kind);
      return cli::cmd_inspect(opts, console);
    }
    if (*simulate) {
      cli::SimulateOptions opts;
      opts.source = sim_source.build(seed);
      for (const auto& s : sim_strategies) opts.strategies.push_back(sim_strategy.build(s));
      opts.render = sim_render.build();
      opts.csv_path = csv_path;
      return cli::cmd_simulate(opts, console);
    }
    if (*bench) {
      bench_opts.duration = std::chrono::milliseconds(static_cast<long long>(bench_duration_s * 1000));
      bench_opts.http.retries = http_retries;
      bench_opts.http.timeout = std::chrono::milliseconds(static_cast<long long>(http_timeout_s * 1000));
      return cli::cmd_bench(bench_opts, console);
    }
    if (*emit) {
      cli::EmitOptions opts;
      opts.source = emit_source.build(seed);
      opts.strategy = emit_strategy.build(emit_which);
      opts.render = emit_render.build();
      return cli::cmd_emit(opts, write_stdout, console);
    }
  } catch (const sp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
