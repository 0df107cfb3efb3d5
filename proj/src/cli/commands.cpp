#include "speechpack/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "speechpack/batch/batcher.hpp"
#include "speechpack/cli/frame.hpp"
#include "speechpack/error.hpp"
#include "speechpack/formats/jsonl.hpp"
#include "speechpack/formats/tar.hpp"

namespace fs = std::filesystem;

namespace speechpack::cli {

namespace {

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

std::ostream& null_stream() {
  static NullBuffer buf;
  static std::ostream os(&buf);
  return os;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> shard_uris(const std::string& path) {
  if (ends_with(path, ".tar")) return {path};
  return formats::read_shard_list(path).shards;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::ostream& Console::info() const { return quiet ? null_stream() : out; }

// ---------------------------------------------------------------- pack

int cmd_pack(const PackOptions& opts, const Console& console) {
  if (opts.shard_size == 0) {
    console.err << "error: shard size must be > 0\n";
    return 1;
  }
  std::ifstream in(opts.input, std::ios::binary);
  if (!in) {
    console.err << "error: cannot open '" << opts.input << "'\n";
    return 1;
  }
  const auto parsed = formats::parse_pretrain_jsonl(in);
  if (!parsed.errors.empty()) {
    for (const Error& e : parsed.errors) console.err << opts.input << ": " << e.what() << "\n";
    console.err << parsed.errors.size() << " malformed line(s); nothing written\n";
    return 1;
  }
  if (parsed.records.empty()) {
    console.err << "error: empty-input: no samples in '" << opts.input << "'\n";
    return 1;
  }

  std::vector<fs::path> created;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : created) fs::remove(p, ec);
  };
  try {
    fs::create_directories(opts.out_dir);
    std::vector<std::string> manifest;
    std::size_t bytes = 0;
    for (std::size_t begin = 0; begin < parsed.records.size(); begin += opts.shard_size) {
      char name[32];
      std::snprintf(name, sizeof(name), "shard-%05zu.tar", manifest.size());
      const fs::path path = fs::absolute(fs::path(opts.out_dir) / name);
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kSinkWrite, "cannot create '" + path.string() + "'");
      created.push_back(path);
      formats::ShardWriter writer(out);
      const std::size_t end = std::min(parsed.records.size(), begin + opts.shard_size);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          writer.add(parsed.records[i].value);
        } catch (const Error& e) {
          throw Error(e.code(), e.what(), parsed.records[i].line);
        }
      }
      bytes += writer.finish().bytes;
      manifest.push_back(path.string());
    }
    const fs::path list_path = fs::path(opts.out_dir) / opts.manifest_name;
    std::ofstream list(list_path, std::ios::trunc);
    created.push_back(list_path);
    for (const auto& m : manifest) list << m << "\n";
    if (!list.flush()) throw Error(ErrorCode::kSinkWrite, "cannot write '" + list_path.string() + "'");
    console.info() << "packed " << parsed.records.size() << " samples into " << manifest.size()
                   << " shards (" << bytes << " bytes); manifest " << list_path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    cleanup();
    console.err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------- unpack

int cmd_unpack(const UnpackOptions& opts, const Console& console) {
  try {
    const auto uris = shard_uris(opts.input);
    fs::create_directories(fs::path(opts.out_dir) / "wav");
    std::ofstream jsonl(fs::path(opts.out_dir) / opts.jsonl_name, std::ios::trunc);
    formats::ShardPool pool(uris, {opts.workers, /*ordered=*/true, {}});
    std::set<std::string> seen;
    std::size_t count = 0;
    int status = 0;
    while (auto item = pool.next()) {
      if (!item->sample) {
        console.err << "error: " << item->error << "\n";
        status = 1;
        continue;
      }
      PretrainSample& s = *item->sample;
      if (!seen.insert(s.key).second) {
        console.err << "error: duplicate key '" << s.key << "' across shards; skipped\n";
        status = 1;
        continue;
      }
      const fs::path wav_path = fs::absolute(fs::path(opts.out_dir) / "wav" / (s.key + ".wav"));
      fs::create_directories(wav_path.parent_path());
      const auto& bytes = std::get<Bytes>(s.wav);
      std::ofstream wav(wav_path, std::ios::binary | std::ios::trunc);
      wav.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!wav) throw Error(ErrorCode::kSinkWrite, "cannot write '" + wav_path.string() + "'");
      s.wav = wav_path.string();
      jsonl << formats::format_pretrain_line(s) << "\n";
      ++count;
    }
    if (!jsonl.flush()) throw Error(ErrorCode::kSinkWrite, "cannot write jsonl");
    console.info() << "unpacked " << count << " samples from " << uris.size() << " shards\n";
    return status;
  } catch (const std::exception& e) {
    console.err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------- validate

int cmd_validate(const ValidateOptions& opts, const Console& console) {
  std::size_t records = 0;
  std::vector<std::string> findings;
  if (opts.kind == ValidateKind::kShards) {
    std::vector<std::string> uris;
    try {
      uris = shard_uris(opts.path);
    } catch (const Error& e) {
      console.err << "error: " << e.what() << "\n";
      return 2;
    }
    if (uris.empty()) findings.push_back(opts.path + ": empty manifest");
    for (const auto& uri : uris) {
      try {
        auto reader = formats::stream_shard(formats::ByteSource::from_uri(uri));
        while (reader.next()) ++records;
      } catch (const Error& e) {
        findings.push_back(uri + ": " + e.what());
      }
    }
  } else {
    std::ifstream in(opts.path, std::ios::binary);
    if (!in) {
      console.err << "error: cannot read '" << opts.path << "'\n";
      return 2;
    }
    std::vector<Error> errors;
    if (opts.kind == ValidateKind::kPretrain) {
      auto parsed = formats::parse_pretrain_jsonl(in);
      records = parsed.records.size();
      errors = std::move(parsed.errors);
    } else {
      auto parsed = formats::parse_conversation_jsonl(in);
      records = parsed.records.size();
      errors = std::move(parsed.errors);
    }
    for (const Error& e : errors) findings.push_back(opts.path + ": " + e.what());
  }
  for (const auto& f : findings) console.out << f << "\n";
  console.out << records << " records, " << findings.size() << " errors\n";
  return findings.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- inspect

namespace {

ValidateKind guess_kind(const std::string& path) {
  if (ends_with(path, ".tar") || ends_with(path, ".list")) return ValidateKind::kShards;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return line.find("\"messages\"") != std::string::npos ? ValidateKind::kSft : ValidateKind::kPretrain;
  }
  return ValidateKind::kPretrain;
}

std::string clip(const std::string& s, std::size_t n = 40) {
  return s.size() <= n ? s : s.substr(0, n) + "...";
}

}  // namespace

int cmd_inspect(const InspectOptions& opts, const Console& console) {
  const ValidateKind kind = opts.kind.value_or(guess_kind(opts.path));
  const auto& tok = opts.render.tokenizer;
  const auto& audio = opts.render.audio;
  std::size_t shown = 0, total = 0, tokens = 0, problems = 0;
  auto row = [&](const std::string& text) {
    if (shown < opts.limit) {
      console.out << text << "\n";
      ++shown;
    }
  };
  try {
    if (kind == ValidateKind::kShards) {
      for (const auto& uri : shard_uris(opts.path)) {
        auto reader = formats::stream_shard(formats::ByteSource::from_uri(uri));
        while (auto s = reader.next()) {
          ++total;
          const auto& wav = std::get<Bytes>(s->wav);
          std::ostringstream line;
          line << s->key << "\twav_bytes=" << wav.size();
          try {
            const AudioMeta meta = length::parse_wav_header(wav);
            const auto seq = length::render_pretrain(*s, meta, tok, audio);
            tokens += seq.size();
            line << "\tduration=" << fixed(meta.duration_seconds(), 3)
                 << "s\taudio_tokens=" << length::audio_token_count(meta, audio)
                 << "\tseq_len=" << seq.size();
          } catch (const Error& e) {
            ++problems;
            line << "\t(" << e.what() << ")";
          }
          line << "\ttxt=" << clip(s->txt);
          row(line.str());
        }
      }
    } else {
      std::ifstream in(opts.path, std::ios::binary);
      if (!in) throw Error(ErrorCode::kNotFound, "cannot open '" + opts.path + "'");
      std::string text;
      std::size_t n = 0;
      while (std::getline(in, text)) {
        ++n;
        ++total;
        std::ostringstream line;
        line << "line " << n;
        try {
          if (kind == ValidateKind::kPretrain) {
            const auto s = formats::parse_pretrain_line(text, n);
            line << "\tkey=" << s.key << "\twav=" << std::get<std::string>(s.wav);
            const AudioMeta meta = length::read_wav_meta(std::get<std::string>(s.wav));
            const auto seq = length::render_pretrain(s, meta, tok, audio);
            tokens += seq.size();
            line << "\tduration=" << fixed(meta.duration_seconds(), 3) << "s\tseq_len=" << seq.size();
          } else {
            const auto conv = formats::parse_conversation(text, n);
            line << "\tmessages=" << conv.messages.size() << "\troles=";
            for (std::size_t i = 0; i < conv.messages.size(); ++i) {
              line << (i ? "," : "") << to_string(conv.messages[i].role);
            }
            const length::AudioMetaResolver resolve = [](const std::string& p) -> std::optional<AudioMeta> {
              try {
                return length::read_wav_meta(p);
              } catch (const Error&) {
                return std::nullopt;
              }
            };
            const auto seq = length::render_conversation(conv, resolve, tok, audio, opts.render.options);
            tokens += seq.size();
            const auto supervised = std::count(seq.loss_mask.begin(), seq.loss_mask.end(), 1);
            line << "\tseq_len=" << seq.size() << "\tloss_tokens=" << supervised;
          }
        } catch (const Error& e) {
          ++problems;
          line << "\t(" << e.what() << ")";
        }
        row(line.str());
      }
    }
  } catch (const Error& e) {
    console.err << "error: " << e.what() << "\n";
    return 2;
  }
  console.out << total << " records, " << tokens << " rendered tokens, " << problems << " problems\n";
  return problems == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- simulate

namespace {

StrategyReport run_strategy(const StrategyConfig& config, std::vector<TokenSequence> seqs) {
  batch::ReportBuilder builder(config);
  if (const auto* s = std::get_if<StaticConfig>(&config)) {
    batch::StaticBatcher b(*s);
    const batch::PaddedSink sink = [&](batch::PaddedBatch&& x) { builder.add(x); };
    for (auto& q : seqs) b.push(std::move(q), sink);
    b.finish(sink);
    builder.set_input(b.tally());
  } else if (const auto* d = std::get_if<DynamicConfig>(&config)) {
    batch::DynamicBatcher b(*d);
    const batch::PaddedSink sink = [&](batch::PaddedBatch&& x) { builder.add(x); };
    for (auto& q : seqs) b.push(std::move(q), sink);
    b.finish(sink);
    builder.set_input(b.tally());
  } else {
    batch::SequencePacker p(std::get<PackConfig>(config));
    const batch::PackedSink sink = [&](PackedBatch&& x) { builder.add(x); };
    for (auto& q : seqs) p.push(std::move(q), sink);
    p.finish(sink);
    builder.set_input(p.tally());
    builder.set_dropped(p.dropped(), p.truncated_tokens());
  }
  return builder.finish();
}

}  // namespace

SimulationResult simulate(const SimulateOptions& opts, SourceStats* stats_out) {
  if (opts.strategies.empty()) throw Error(ErrorCode::kInvalidConfig, "no strategies to simulate");
  std::vector<TokenSequence> seqs;
  const SourceStats stats =
      for_each_sequence(opts.source, opts.render, [&](TokenSequence&& s) { seqs.push_back(std::move(s)); });
  if (stats_out != nullptr) *stats_out = stats;

  SimulationResult result;
  for (const StrategyConfig& config : opts.strategies) {
    try {
      validate(config);
      result.reports.push_back(run_strategy(config, seqs));
    } catch (const Error& e) {
      result.failures.push_back(std::string(to_string(strategy_of(config))) + " (" + describe(config) +
                                "): " + e.what());
    }
  }

  double base = 0.0;
  for (const auto& r : result.reports) {
    if (r.strategy == Strategy::kPack) {
      base = static_cast<double>(r.padded_tokens);
      break;
    }
  }
  if (base == 0.0 && !result.reports.empty()) {
    base = static_cast<double>(std::min_element(result.reports.begin(), result.reports.end(),
                                                [](const auto& a, const auto& b) {
                                                  return a.padded_tokens < b.padded_tokens;
                                                })->padded_tokens);
  }

  std::ostringstream csv;
  csv << kCsvHeader << "\n";
  for (const auto& r : result.reports) {
    const double rel = base > 0.0 ? static_cast<double>(r.padded_tokens) / base : 0.0;
    result.relative_cost.push_back(rel);
    csv << to_string(r.strategy) << "," << describe(r.config) << "," << r.num_batches << ","
        << r.real_tokens << "," << r.padded_tokens << "," << fixed(r.waste_ratio) << "," << fixed(rel)
        << "\n";
  }
  result.csv = csv.str();

  auto find = [&](Strategy s) -> const StrategyReport* {
    for (const auto& r : result.reports) {
      if (r.strategy == s) return &r;
    }
    return nullptr;
  };
  const auto *st = find(Strategy::kStatic), *dy = find(Strategy::kDynamic), *pk = find(Strategy::kPack);
  result.ordering_evaluated = st && dy && pk;
  result.ordering_holds = result.ordering_evaluated && pk->padded_tokens < dy->padded_tokens &&
                          dy->padded_tokens < st->padded_tokens;
  return result;
}

int cmd_simulate(const SimulateOptions& opts, const Console& console) {
  SimulationResult result;
  SourceStats stats;
  try {
    result = simulate(opts, &stats);
  } catch (const Error& e) {
    console.err << "error: " << e.what() << "\n";
    return 1;
  }
  std::ostream& log = opts.csv_path.empty() ? console.err : console.info();
  if (opts.csv_path.empty()) {
    console.out << result.csv;
  } else {
    std::ofstream file(opts.csv_path, std::ios::binary | std::ios::trunc);
    file << result.csv;
    if (!file.flush()) {
      console.err << "error: cannot write '" << opts.csv_path << "'\n";
      return 1;
    }
  }
  if (!console.quiet || opts.csv_path.empty()) {
    log << stats.sequences << " sequences (" << stats.skipped << " skipped)\n";
    for (const auto& w : stats.warnings) log << "  skipped " << w << "\n";
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
      const auto& r = result.reports[i];
      log << to_string(r.strategy) << " [" << describe(r.config) << "]: batches=" << r.num_batches
          << " real=" << r.real_tokens << " padded=" << r.padded_tokens
          << " waste=" << fixed(r.waste_ratio, 4) << " relative_cost=" << fixed(result.relative_cost[i], 3)
          << " dropped=" << r.oversize_dropped << " final_fill=" << r.final_fill << "\n";
    }
    std::set<std::uint64_t> sums;
    for (const auto& r : result.reports) sums.insert(r.input_checksum);
    if (!result.reports.empty()) {
      log << "input checksum " << std::hex << *sums.begin() << std::dec
          << (sums.size() == 1 ? " (identical for every strategy)" : " (MISMATCH between strategies)")
          << "\n";
    }
    if (result.ordering_evaluated) {
      log << "ordering padded(pack) < padded(dynamic) < padded(static): "
          << (result.ordering_holds ? "holds" : "does not hold") << "\n";
    }
  }
  for (const auto& f : result.failures) console.err << "strategy failed: " << f << "\n";
  return result.failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- bench

BenchReport bench(const BenchOptions& opts) {
  std::vector<std::string> uris = opts.shards;
  if (!opts.manifest.empty()) uris = formats::read_shard_list(opts.manifest).shards;
  if (uris.empty()) throw Error(ErrorCode::kEmptyInput, "empty-manifest: no shards to read");

  BenchReport report;
  const auto start = std::chrono::steady_clock::now();
  formats::ShardPool pool(uris, {opts.workers, /*ordered=*/false, opts.http});
  while (auto item = pool.next()) {
    if (!item->sample) {
      report.errors.push_back(item->error);
      continue;
    }
    ++report.samples;
    report.bytes += std::get<Bytes>(item->sample->wav).size() + item->sample->txt.size();
    if (opts.max_samples > 0 && report.samples >= opts.max_samples) break;
    if (opts.duration.count() > 0 && std::chrono::steady_clock::now() - start >= opts.duration) break;
  }
  const auto stop = std::chrono::steady_clock::now();
  pool.stop();
  report.seconds = std::chrono::duration<double>(stop - start).count();
  if (report.seconds > 0) {
    report.samples_per_second = report.samples / report.seconds;
    report.megabytes_per_second = report.bytes / report.seconds / 1e6;
  }
  report.workers = pool.stats();
  return report;
}

int cmd_bench(const BenchOptions& opts, const Console& console) {
  BenchReport r;
  try {
    r = bench(opts);
  } catch (const Error& e) {
    console.err << "error: " << e.what() << "\n";
    return 1;
  }
  console.out << "workers=" << opts.workers << " samples=" << r.samples << " bytes=" << r.bytes
              << " seconds=" << fixed(r.seconds, 3) << " samples/s=" << fixed(r.samples_per_second, 1)
              << " MB/s=" << fixed(r.megabytes_per_second, 2) << "\n";
  for (std::size_t w = 0; w < r.workers.size(); ++w) {
    const auto& s = r.workers[w];
    console.info() << "  worker " << w << ": shards=" << s.shards << " samples=" << s.samples
                   << " bytes=" << s.bytes << " errors=" << s.errors.size() << "\n";
  }
  for (const auto& e : r.errors) console.err << "shard error: " << e << "\n";
  return r.errors.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- emit

namespace {

struct ConsumerGone {};

}  // namespace

int cmd_emit(const EmitOptions& opts, const FrameWriterFn& write, const Console& console) {
  std::size_t frames = 0;
  auto send = [&](const std::vector<std::uint8_t>& frame) {
    if (!write(frame)) throw ConsumerGone{};
    ++frames;
  };
  try {
    validate(opts.strategy);
    const TokenId pad = opts.render.tokenizer.specials().pad;
    std::function<void(TokenSequence&&)> push;
    std::function<void()> finish;
    const batch::PaddedSink padded_sink = [&](batch::PaddedBatch&& b) { send(encode_frame(b, pad)); };
    const batch::PackedSink packed_sink = [&](PackedBatch&& b) { send(encode_frame(b)); };

    std::optional<batch::StaticBatcher> st;
    std::optional<batch::DynamicBatcher> dy;
    std::optional<batch::SequencePacker> pk;
    if (const auto* s = std::get_if<StaticConfig>(&opts.strategy)) {
      st.emplace(*s);
      push = [&](TokenSequence&& q) { st->push(std::move(q), padded_sink); };
      finish = [&] { st->finish(padded_sink); };
    } else if (const auto* d = std::get_if<DynamicConfig>(&opts.strategy)) {
      dy.emplace(*d);
      push = [&](TokenSequence&& q) { dy->push(std::move(q), padded_sink); };
      finish = [&] { dy->finish(padded_sink); };
    } else {
      pk.emplace(std::get<PackConfig>(opts.strategy));
      push = [&](TokenSequence&& q) { pk->push(std::move(q), packed_sink); };
      finish = [&] { pk->finish(packed_sink); };
    }
    const SourceStats stats = for_each_sequence(opts.source, opts.render, push);
    finish();
    if (!write(terminator_frame())) return 0;
    console.err << (console.quiet ? "" : "emitted " + std::to_string(frames) + " frames from " +
                                             std::to_string(stats.sequences) + " sequences\n");
    for (const auto& w : stats.warnings) console.err << "skipped " << w << "\n";
    return 0;
  } catch (const ConsumerGone&) {
    return 0;
  } catch (const Error& e) {
    console.err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace speechpack::cli
