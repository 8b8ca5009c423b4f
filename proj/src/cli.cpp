#include "rmt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_set>
#include <variant>

#include <CLI11.hpp>

#include "rmt/config.hpp"
#include "rmt/corpus.hpp"
#include "rmt/cot_templates.hpp"
#include "rmt/gateway.hpp"
#include "rmt/metric.hpp"
#include "rmt/reports.hpp"
#include "rmt/reward.hpp"
#include "rmt/scripted_llm.hpp"
#include "rmt/synthesis.hpp"
#include "rmt/tokenize.hpp"
#include "rmt/trainer.hpp"

namespace rmt {

namespace {

struct CliCtx {
  std::string config_path;

  Config layered() const {
    Config cfg;
    if (!config_path.empty()) cfg = Config::from_file(config_path);
    cfg.overlay_env();
    return cfg;
  }
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      auto item = trim_copy(s.substr(start, i - start));
      if (!item.empty()) out.push_back(std::move(item));
      start = i + 1;
    }
  }
  return out;
}

CorpusFormat parse_format(const std::string& s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "tsv") return CorpusFormat::tsv;
  throw CLI::ValidationError("--format", "expected jsonl or tsv");
}

struct GatewayFlags {
  std::string mode;
  std::string fixture;
  bool record = false;
  std::string audit;
  std::string endpoint;
  std::string model_id;

  void attach(CLI::App* cmd) {
    cmd->add_option("--gateway-mode", mode, "live, replay, or scripted");
    cmd->add_option("--fixture", fixture, "fixture path (replay source / record target)");
    cmd->add_flag("--record", record, "record responses into the fixture");
    cmd->add_option("--gateway-audit", audit, "append one JSONL row per gateway call");
    cmd->add_option("--endpoint", endpoint, "chat-completion endpoint (live mode)");
    cmd->add_option("--model-id", model_id, "model identifier passed through the wire");
  }

  LlmGateway build(const Config& cfg) const {
    GatewayConfig gc;
    const std::string mode_str = !mode.empty() ? mode : cfg.get_or("gateway.mode", "replay");
    auto parsed_mode = gateway_mode_from_string(mode_str);
    if (!parsed_mode) throw std::runtime_error("unknown gateway mode: " + mode_str);
    gc.mode = *parsed_mode;
    gc.endpoint = !endpoint.empty() ? endpoint : cfg.get_or("gateway.endpoint", "");
    gc.api_key = cfg.get_or("gateway.api_key", "");
    gc.fixture_path = !fixture.empty() ? fixture : cfg.get_or("gateway.fixture", "");
    gc.record = record || cfg.get_bool_or("gateway.record", false);
    gc.audit_path = !audit.empty() ? audit : cfg.get_or("gateway.audit", "");
    gc.attempts = cfg.get_int_or("gateway.attempts", 3);
    gc.base_delay_ms = cfg.get_int_or("gateway.base_delay_ms", 200);
    std::shared_ptr<ChatTransport> transport;
    if (gc.mode == GatewayMode::scripted) transport = make_scripted_transport();
    return LlmGateway(gc, transport);
  }

  std::string resolved_model(const Config& cfg) const {
    return !model_id.empty() ? model_id : cfg.get_or("gateway.model_id", "default");
  }
};

struct MetricFlags {
  std::string backend;
  std::string endpoint;
  std::string lang;

  void attach(CLI::App* cmd) {
    cmd->add_option("--metric", backend, "lexical or remote");
    cmd->add_option("--metric-endpoint", endpoint, "scoring service endpoint (remote)");
    cmd->add_option("--metric-lang", lang, "tokenizer language for the lexical metric");
  }

  std::unique_ptr<QualityMetric> build(const Config& cfg) const {
    const std::string kind = !backend.empty() ? backend : cfg.get_or("metric.backend", "lexical");
    if (kind == "lexical") {
      return std::make_unique<LexicalMetric>(!lang.empty() ? lang
                                                           : cfg.get_or("metric.lang", "en"));
    }
    if (kind == "remote") {
      const std::string ep = !endpoint.empty() ? endpoint : cfg.get_or("metric.endpoint", "");
      if (ep.empty()) throw std::runtime_error("remote metric needs --metric-endpoint");
      RetryPolicy retry;
      retry.attempts = cfg.get_int_or("metric.attempts", 3);
      retry.base_delay_ms = cfg.get_int_or("metric.base_delay_ms", 100);
      auto client = std::make_shared<RemoteMetricClient>(
          make_httplib_poster(ep, cfg.get_int_or("metric.timeout_s", 30)), retry);
      return std::make_unique<RemoteMetric>(client);
    }
    throw std::runtime_error("unknown metric backend: " + kind);
  }
};

std::vector<RefinementChain> load_chains(const std::string& path) {
  std::vector<RefinementChain> chains;
  for_each_jsonl(path, [&](std::size_t lineno, const json& j) {
    chains.push_back(chain_from_json(j, path, lineno));
  });
  return chains;
}

void add_corpus_commands(CLI::App& app, CliCtx& ctx) {
  auto* corpus = app.add_subcommand("corpus", "parallel corpus tooling");
  corpus->require_subcommand(1);

  {
    auto* cmd = corpus->add_subcommand("load", "validate and normalize a corpus file");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("jsonl");
    cmd->add_option("--in", *in, "input path")->required();
    cmd->add_option("--out", *out, "normalized JSONL output")->required();
    cmd->add_option("--format", *format, "jsonl or tsv");
    cmd->callback([in, out, format] {
      const CorpusSet c = load_corpus(*in, parse_format(*format));
      save_corpus_jsonl(c, *out);
      std::cout << "loaded " << c.size() << " pairs\n";
    });
  }
  {
    auto* cmd = corpus->add_subcommand("filter", "keep pairs inside a source-token band");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto min_tokens = std::make_shared<std::size_t>(10);
    auto max_tokens = std::make_shared<std::size_t>(1200);
    cmd->add_option("--in", *in)->required();
    cmd->add_option("--out", *out)->required();
    cmd->add_option("--min", *min_tokens, "inclusive lower bound");
    cmd->add_option("--max", *max_tokens, "inclusive upper bound");
    cmd->callback([in, out, min_tokens, max_tokens] {
      const CorpusSet c = load_corpus(*in, CorpusFormat::jsonl);
      const CorpusSet kept = filter_by_length(c, *min_tokens, *max_tokens);
      save_corpus_jsonl(kept, *out);
      std::cout << "kept " << kept.size() << " of " << c.size() << " pairs\n";
    });
  }
  {
    auto* cmd = corpus->add_subcommand("sample", "balanced per-direction sampling");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto per_direction = std::make_shared<std::size_t>(100);
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--in", *in)->required();
    cmd->add_option("--out", *out)->required();
    cmd->add_option("--per-direction", *per_direction);
    cmd->add_option("--seed", *seed)->required();
    cmd->callback([in, out, per_direction, seed] {
      const CorpusSet c = load_corpus(*in, CorpusFormat::jsonl);
      const CorpusSet sampled = sample_balanced(c, *per_direction, *seed);
      save_corpus_jsonl(sampled, *out);
      std::cout << "sampled " << sampled.size() << " pairs\n";
    });
  }
  {
    auto* cmd = corpus->add_subcommand("split", "stratified train/validation split");
    auto in = std::make_shared<std::string>();
    auto train_out = std::make_shared<std::string>();
    auto val_out = std::make_shared<std::string>();
    auto ratio = std::make_shared<std::string>("0.9");
    auto seed = std::make_shared<std::uint64_t>(0);
    cmd->add_option("--in", *in)->required();
    cmd->add_option("--train-out", *train_out)->required();
    cmd->add_option("--val-out", *val_out)->required();
    cmd->add_option("--ratio", *ratio, "train fraction, e.g. 0.9 or 9/10");
    cmd->add_option("--seed", *seed)->required();
    cmd->callback([in, train_out, val_out, ratio, seed] {
      const CorpusSet c = load_corpus(*in, CorpusFormat::jsonl);
      auto [train_set, val_set] = split_train_val(c, Ratio::parse(*ratio), *seed);
      save_corpus_jsonl(train_set, *train_out);
      save_corpus_jsonl(val_set, *val_out);
      std::cout << "split " << train_set.size() << "/" << val_set.size() << "\n";
    });
  }
  {
    auto* cmd = corpus->add_subcommand("stats", "source-token length histogram");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto edges = std::make_shared<std::string>();
    cmd->add_option("--in", *in)->required();
    cmd->add_option("--out", *out, "write the histogram JSON here instead of stdout");
    cmd->add_option("--edges", *edges, "comma-separated bucket edges, first must be 0");
    cmd->callback([in, out, edges] {
      const CorpusSet c = load_corpus(*in, CorpusFormat::jsonl);
      std::vector<std::size_t> edge_values = default_bucket_edges();
      if (!edges->empty()) {
        edge_values.clear();
        for (const auto& e : split_csv(*edges)) edge_values.push_back(std::stoull(e));
      }
      const json j = histogram_to_json(token_stats(c, edge_values));
      if (out->empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        auto f = open_for_write(*out);
        f << j.dump(2) << "\n";
      }
    });
  }
  {
    auto* cmd = corpus->add_subcommand("similarity", "train/test token-type overlap per language");
    auto test = std::make_shared<std::string>();
    auto train = std::make_shared<std::string>();
    auto langs = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--test", *test)->required();
    cmd->add_option("--train", *train)->required();
    cmd->add_option("--langs", *langs, "comma-separated language codes")->required();
    cmd->add_option("--out", *out);
    cmd->callback([test, train, langs, out] {
      const CorpusSet test_set = load_corpus(*test, CorpusFormat::jsonl);
      const CorpusSet train_set = load_corpus(*train, CorpusFormat::jsonl);
      const SimilarityReport report =
          similarity_report(test_set, train_set, split_csv(*langs));
      const json j = similarity_report_to_json(report);
      if (out->empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        auto f = open_for_write(*out);
        f << j.dump(2) << "\n";
      }
    });
  }
  (void)ctx;
}

void add_templates_commands(CLI::App& app) {
  auto* templates = app.add_subcommand("templates", "reasoning template fixtures");
  templates->require_subcommand(1);
  auto* cmd = templates->add_subcommand("list", "list the six strategy templates");
  auto as_json = std::make_shared<bool>(false);
  cmd->add_flag("--json", *as_json);
  cmd->callback([as_json] {
    if (*as_json) {
      json out = json::array();
      for (const auto& t : list_templates()) {
        out.push_back({{"strategy", to_string(t.strategy)},
                       {"display_name", strategy_display_name(t.strategy)},
                       {"steps", t.steps},
                       {"template_text", t.template_text}});
      }
      std::cout << json{{"version", kTemplateFixtureVersion}, {"templates", out}}.dump(2) << "\n";
      return;
    }
    for (const auto& t : list_templates()) {
      std::cout << to_string(t.strategy) << " (" << strategy_display_name(t.strategy) << ", "
                << t.steps.size() << " steps)\n";
      std::cout << "<think>\n" << t.template_text << "\n</think>\n\n";
    }
  });
}

void add_synth_commands(CLI::App& app, CliCtx& ctx) {
  auto* synth = app.add_subcommand("synth", "reasoning-trace synthesis");
  synth->require_subcommand(1);

  {
    auto* cmd = synth->add_subcommand("generate", "instantiate the opening step per pair");
    auto pairs = std::make_shared<std::string>();
    auto chains = std::make_shared<std::string>();
    auto gw = std::make_shared<GatewayFlags>();
    auto mf = std::make_shared<MetricFlags>();
    cmd->add_option("--pairs", *pairs)->required();
    cmd->add_option("--chains", *chains, "chain JSONL output (appended; resume-safe)")->required();
    gw->attach(cmd);
    mf->attach(cmd);
    cmd->callback([pairs, chains, gw, mf, &ctx] {
      const Config cfg = ctx.layered();
      const CorpusSet corpus = load_corpus(*pairs, CorpusFormat::jsonl);
      LlmGateway gateway = gw->build(cfg);
      auto metric = mf->build(cfg);
      RefineConfig rc;
      rc.model_id = gw->resolved_model(cfg);

      std::unordered_set<std::string> done;
      if (std::filesystem::exists(*chains)) {
        for (const auto& chain : load_chains(*chains)) done.insert(chain.pair.id);
      }
      std::ofstream out(*chains, std::ios::app | std::ios::binary);
      if (!out) throw std::runtime_error("cannot open for writing: " + *chains);
      std::size_t written = 0;
      for (const auto& pair : corpus.pairs) {
        if (done.count(pair.id)) continue;
        const Strategy strategy = select_strategy(extract_key_concepts_offline(pair));
        RefinementChain chain;
        chain.pair = pair;
        chain.metric_id = metric->metric_id();
        chain.steps.push_back(
            generate_step(pair, template_for(strategy), gateway, *metric, rc));
        out << chain_to_json(chain).dump() << '\n';
        ++written;
      }
      if (gw->record && !gw->fixture.empty()) gateway.save_fixture();
      std::cout << "generated " << written << " chains\n";
    });
  }
  {
    auto* cmd = synth->add_subcommand("refine", "run the confidence-scored refinement loop");
    auto chains_in = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto audit = std::make_shared<std::string>();
    auto gw = std::make_shared<GatewayFlags>();
    auto mf = std::make_shared<MetricFlags>();
    auto rc = std::make_shared<RefineConfig>();
    auto next_template = std::make_shared<bool>(false);
    cmd->add_option("--chains", *chains_in)->required();
    cmd->add_option("--out", *out_path)->required();
    cmd->add_option("--audit", *audit, "per-step audit JSONL");
    cmd->add_option("--max-steps", rc->max_steps);
    cmd->add_option("--threshold", rc->threshold);
    cmd->add_option("--min-gain", rc->min_gain);
    cmd->add_option("--patience", rc->patience);
    cmd->add_flag("--next-template", *next_template,
                  "instantiate the next template per retry instead of revising in place");
    gw->attach(cmd);
    mf->attach(cmd);
    cmd->callback([chains_in, out_path, audit, gw, mf, rc, next_template, &ctx] {
      const Config cfg = ctx.layered();
      LlmGateway gateway = gw->build(cfg);
      auto metric = mf->build(cfg);
      rc->revise_in_place = !*next_template;
      rc->model_id = gw->resolved_model(cfg);

      auto out = open_for_write(*out_path);
      std::ofstream audit_out;
      if (!audit->empty()) audit_out.open(*audit, std::ios::app | std::ios::binary);
      std::size_t refined = 0;
      for (auto& chain : load_chains(*chains_in)) {
        chain = refine(std::move(chain), *rc, gateway, *metric);
        out << chain_to_json(chain).dump() << '\n';
        if (audit_out.is_open()) {
          for (std::size_t i = 0; i < chain.steps.size(); ++i) {
            const auto& s = chain.steps[i];
            audit_out << json{{"pair_id", chain.pair.id},
                              {"step", s.step_index},
                              {"template", to_string(s.strategy)},
                              {"f", s.confidence ? json(*s.confidence) : json(nullptr)},
                              {"status", i + 1 == chain.steps.size()
                                             ? to_string(chain.status)
                                             : std::string("running")}}
                             .dump()
                      << '\n';
          }
        }
        ++refined;
      }
      if (gw->record && !gw->fixture.empty()) gateway.save_fixture();
      std::cout << "refined " << refined << " chains\n";
    });
  }
  {
    auto* cmd = synth->add_subcommand("accept", "pick the best step of each finished chain");
    auto chains_in = std::make_shared<std::string>();
    auto records_out = std::make_shared<std::string>();
    auto rejections_out = std::make_shared<std::string>();
    auto floor = std::make_shared<double>(0.3);
    cmd->add_option("--chains", *chains_in)->required();
    cmd->add_option("--records", *records_out)->required();
    cmd->add_option("--rejections", *rejections_out);
    cmd->add_option("--floor", *floor, "minimum accepted confidence");
    cmd->callback([chains_in, records_out, rejections_out, floor] {
      auto out = open_for_write(*records_out);
      std::ofstream rej_out;
      if (!rejections_out->empty()) rej_out = open_for_write(*rejections_out);
      std::size_t accepted = 0;
      std::size_t rejected = 0;
      std::size_t still_running = 0;
      for (const auto& chain : load_chains(*chains_in)) {
        if (chain.status == ChainStatus::running) {
          ++still_running;
          continue;
        }
        auto result = accept(chain, *floor);
        if (std::holds_alternative<CotRecord>(result)) {
          out << record_to_json(std::get<CotRecord>(result)).dump() << '\n';
          ++accepted;
        } else {
          const auto& rej = std::get<Rejection>(result);
          if (rej_out.is_open()) {
            rej_out << json{{"pair_id", rej.pair_id}, {"reason", rej.reason}}.dump() << '\n';
          }
          ++rejected;
        }
      }
      std::cout << "accepted " << accepted << ", rejected " << rejected << "\n";
      if (still_running > 0) {
        std::cout << "skipped " << still_running << " unrefined chain(s); run synth refine first\n";
      }
    });
  }
}

void add_sft_commands(CLI::App& app) {
  auto* sft = app.add_subcommand("sft", "fine-tuning dataset export");
  sft->require_subcommand(1);
  auto* cmd = sft->add_subcommand("export", "write SFT (and optionally RL prompt) JSONL");
  auto records_in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto rl_out = std::make_shared<std::string>();
  cmd->add_option("--records", *records_in)->required();
  cmd->add_option("--out", *out)->required();
  cmd->add_option("--rl-out", *rl_out, "also write {prompt, reference} rows");
  cmd->callback([records_in, out, rl_out] {
    std::vector<CotRecord> records;
    for_each_jsonl(*records_in, [&](std::size_t lineno, const json& j) {
      records.push_back(record_from_json(j, *records_in, lineno));
    });
    const std::size_t n = export_sft(records, *out);
    std::cout << "wrote " << n << " SFT rows\n";
    if (!rl_out->empty()) {
      const std::size_t m = export_rl_prompts(records, *rl_out);
      std::cout << "wrote " << m << " RL prompt rows\n";
    }
  });
}

void add_train_commands(CLI::App& app, CliCtx& ctx) {
  auto* train_cmd = app.add_subcommand("train", "policy training");
  train_cmd->require_subcommand(1);
  auto* cmd = train_cmd->add_subcommand("rl", "policy-gradient training on the lexicon task");

  auto tc = std::make_shared<TrainConfig>();
  auto vocab = std::make_shared<int>(16);
  auto len_min = std::make_shared<int>(3);
  auto len_max = std::make_shared<int>(6);
  auto env_seed = std::make_shared<std::uint64_t>(1);
  auto closed_block = std::make_shared<int>(0);
  auto baseline = std::make_shared<std::string>("group_mean");
  auto no_normalize = std::make_shared<bool>(false);
  auto report_csv = std::make_shared<std::string>();
  auto report_jsonl = std::make_shared<std::string>();
  auto checkpoint = std::make_shared<std::string>();
  auto lr_opt = std::make_shared<double>(-1.0);
  auto seed_opt = std::make_shared<std::int64_t>(-1);

  cmd->add_option("--epochs", tc->epochs);
  cmd->add_option("--batches-per-epoch", tc->batches_per_epoch);
  cmd->add_option("--batch-prompts", tc->batch_prompts);
  cmd->add_option("--n-rollouts", tc->n_rollouts);
  cmd->add_option("--lr", *lr_opt, "learning rate (default from config or 0.05)");
  cmd->add_option("--seed", *seed_opt, "training seed (default from config or 0)");
  cmd->add_option("--theta-f-init", tc->theta_f_init);
  cmd->add_option("--kl-beta", tc->kl_beta);
  cmd->add_option("--format-weight", tc->format_weight);
  cmd->add_option("--divergence-bound", tc->divergence_bound);
  cmd->add_option("--baseline", *baseline, "group_mean or batch_mean");
  cmd->add_flag("--no-normalize", *no_normalize, "skip advantage std-normalization");
  cmd->add_option("--vocab-size", *vocab);
  cmd->add_option("--len-min", *len_min);
  cmd->add_option("--len-max", *len_max);
  cmd->add_option("--env-seed", *env_seed, "lexicon permutation seed");
  cmd->add_option("--closed-block", *closed_block,
                  "keep the lexicon closed on the first N tokens");
  cmd->add_option("--report-csv", *report_csv);
  cmd->add_option("--report-jsonl", *report_jsonl);
  cmd->add_option("--checkpoint", *checkpoint, "final policy JSON");

  cmd->callback([tc, vocab, len_min, len_max, env_seed, closed_block, baseline, no_normalize,
                 report_csv, report_jsonl, checkpoint, lr_opt, seed_opt, &ctx] {
    const Config cfg = ctx.layered();
    tc->lr = *lr_opt >= 0.0 ? *lr_opt : cfg.get_double_or("train.lr", 0.05);
    tc->seed = *seed_opt >= 0 ? static_cast<std::uint64_t>(*seed_opt)
                              : static_cast<std::uint64_t>(cfg.get_int_or("train.seed", 0));
    auto mode = baseline_mode_from_string(*baseline);
    if (!mode) throw std::runtime_error("unknown baseline mode: " + *baseline);
    tc->baseline = *mode;
    tc->normalize_advantages = !*no_normalize;

    const SyntheticEnv env =
        SyntheticEnv::make_lexicon_env(*vocab, *len_min, *len_max, *env_seed, *closed_block);
    const LexicalMetric metric("en");
    const TrainResult result = train(*tc, env, metric);

    for (const auto& e : result.report.epochs) {
      std::cout << "epoch " << e.epoch << ": mean_total=" << format_score(e.mean_total_reward)
                << " s_format=" << format_score(e.mean_s_format)
                << " quality=" << format_score(e.mean_quality) << "\n";
    }
    if (result.report.diverged) std::cout << "aborted: divergence guard tripped\n";
    if (result.report.epochs.empty()) std::cout << "no epochs run\n";

    if (!report_csv->empty()) report_to_csv(result.report, *report_csv);
    if (!report_jsonl->empty()) report_to_jsonl(result.report, *report_jsonl);
    if (!checkpoint->empty()) result.policy.save(*checkpoint, train_config_hash(*tc));
  });
}

void add_reward_commands(CLI::App& app, CliCtx& ctx) {
  auto* reward_cmd = app.add_subcommand("reward", "format/answer reward scoring");
  reward_cmd->require_subcommand(1);
  auto* cmd = reward_cmd->add_subcommand("score", "score one tagged output against a reference");

  auto text_path = std::make_shared<std::string>();
  auto ref = std::make_shared<std::string>();
  auto ref_file = std::make_shared<std::string>();
  auto source = std::make_shared<std::string>();
  auto lang = std::make_shared<std::string>("en");
  auto weight = std::make_shared<double>(-1.0);
  auto audit = std::make_shared<std::string>();
  auto sample_id = std::make_shared<std::string>("cli");

  cmd->add_option("--text", *text_path, "file holding the tagged output")->required();
  cmd->add_option("--ref", *ref, "reference translation");
  cmd->add_option("--ref-file", *ref_file, "file holding the reference");
  cmd->add_option("--source", *source, "source text (passed to the metric)");
  cmd->add_option("--lang", *lang, "tokenizer language");
  cmd->add_option("--format-weight", *weight);
  cmd->add_option("--audit", *audit, "append an audit row here");
  cmd->add_option("--sample-id", *sample_id);

  cmd->callback([text_path, ref, ref_file, source, lang, weight, audit, sample_id, &ctx] {
    const Config cfg = ctx.layered();
    const double w = *weight >= 0.0 ? *weight : cfg.get_double_or("reward.format_weight", 1.0);
    const std::string text = read_file(*text_path);
    std::string reference = *ref;
    if (reference.empty() && !ref_file->empty()) reference = trim_copy(read_file(*ref_file));
    if (reference.empty()) throw std::runtime_error("need --ref or --ref-file");
    const LexicalMetric metric(*lang);
    const RewardBreakdown b = total_reward(text, reference, *source, metric, w);
    std::cout << reward_audit_row(*sample_id, b).dump(2) << "\n";
    if (!audit->empty()) {
      std::ofstream out(*audit, std::ios::app | std::ios::binary);
      if (!out) throw std::runtime_error("cannot open for writing: " + *audit);
      out << reward_audit_row(*sample_id, b).dump() << '\n';
    }
  });
}

void add_eval_commands(CLI::App& app) {
  auto* eval_cmd = app.add_subcommand("eval", "evaluation aggregation");
  eval_cmd->require_subcommand(1);
  auto* cmd = eval_cmd->add_subcommand("aggregate", "pivot scores into the report table");
  auto scores = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto grouping = std::make_shared<std::string>("en_zh_centric");
  cmd->add_option("--scores", *scores, "scores JSONL")->required();
  cmd->add_option("--out", *out, "table JSON output")->required();
  cmd->add_option("--grouping", *grouping, "en_zh_centric or flat");
  cmd->callback([scores, out, grouping] {
    auto g = grouping_from_string(*grouping);
    if (!g) throw std::runtime_error("unknown grouping: " + *grouping);
    const ReportTable table = aggregate(*scores, *g);
    auto f = open_for_write(*out);
    f << table_to_json(table).dump(2) << "\n";
    std::cout << "aggregated " << table.rows.size() << " model row(s), "
              << table.columns.size() << " column(s)\n";
  });
}

void add_report_commands(CLI::App& app) {
  auto* report_cmd = app.add_subcommand("report", "report rendering");
  report_cmd->require_subcommand(1);
  auto* cmd = report_cmd->add_subcommand("emit", "render an aggregated table");
  auto table_path = std::make_shared<std::string>();
  auto format = std::make_shared<std::string>("markdown");
  auto out = std::make_shared<std::string>();
  cmd->add_option("--table", *table_path, "table JSON from eval aggregate")->required();
  cmd->add_option("--format", *format, "markdown or csv");
  cmd->add_option("--out", *out)->required();
  cmd->callback([table_path, format, out] {
    auto f = report_format_from_string(*format);
    if (!f) throw std::runtime_error("unknown report format: " + *format);
    const ReportTable table = table_from_json(json::parse(read_file(*table_path)));
    emit_report(table, *f, *out);
    std::cout << "wrote " << *out << "\n";
  });
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"reasoning-translation training pipeline"};
  app.require_subcommand(1);
  CliCtx ctx;
  app.add_option("--config", ctx.config_path, "layered config file (file < env < flags)");

  add_corpus_commands(app, ctx);
  add_templates_commands(app);
  add_synth_commands(app, ctx);
  add_sft_commands(app);
  add_train_commands(app, ctx);
  add_reward_commands(app, ctx);
  add_eval_commands(app);
  add_report_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace rmt
