#include "rmt/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "rmt/reward.hpp"
#include "rmt/tokenize.hpp"

namespace rmt {

std::string to_string(ChainStatus s) {
  switch (s) {
    case ChainStatus::running: return "running";
    case ChainStatus::converged: return "converged";
    case ChainStatus::exhausted: return "exhausted";
    case ChainStatus::failed: return "failed";
  }
  return "running";
}

std::optional<ChainStatus> chain_status_from_string(std::string_view s) {
  if (s == "running") return ChainStatus::running;
  if (s == "converged") return ChainStatus::converged;
  if (s == "exhausted") return ChainStatus::exhausted;
  if (s == "failed") return ChainStatus::failed;
  return std::nullopt;
}

std::optional<double> RefinementChain::best_confidence() const {
  std::optional<double> best;
  for (const auto& s : steps) {
    if (s.ok && s.confidence && (!best || *s.confidence > *best)) best = *s.confidence;
  }
  return best;
}

PromptBundle render_incorporate_prompt(const ParallelPair& pair, const CotTemplate& tmpl) {
  PromptBundle b;
  b.stage = PromptStage::incorporate;
  b.system_text =
      "Assume you are an experienced linguist mastering multiple languages. Instantiate the "
      "provided translation reasoning template for the given translation pair: work through the "
      "template steps concretely for this text in the position between <think> </think>, then "
      "give the final translation in the position between <answer> </answer>.";
  b.user_text = "<translation task>\n\nTranslate the following " +
                lang_display_name(pair.source_lang) + " text into " +
                lang_display_name(pair.target_lang) +
                ".\n\n<source>\n" + pair.source_text +
                "\n</source>\n\n<reference>\n" + pair.target_text +
                "\n</reference>\n\n</translation task>\n\n<template>\n" + tmpl.template_text +
                "\n</template>";
  return b;
}

PromptBundle render_refine_prompt(const ParallelPair& pair, const RefinementStep& prior) {
  PromptBundle b;
  b.stage = PromptStage::refine;
  b.system_text =
      "You are a strict translation reviewer. Study the student's reasoning and result, compare "
      "them with the reference, and produce an improved version.";
  char score_buf[32];
  std::snprintf(score_buf, sizeof(score_buf), "%.4f", prior.confidence.value_or(0.0));
  b.user_text =
      "A student is engaged in the task of translating " + lang_display_name(pair.source_lang) +
      " into " + lang_display_name(pair.target_lang) +
      ".\nThis student constantly thinks about and optimizes his translation. The whole process "
      "is shown as follows:\n<Translation Process>\n" +
      prior.cot +
      "\n</Translation Process>\nThe translation result is shown as follows:\n<result>\n" +
      prior.answer + "\n</result>\nWhile the reference is:\n<reference>\n" + pair.target_text +
      "\n</reference>\nThe quality score of the result against the reference is " + score_buf +
      ".\n<source>\n" + pair.source_text +
      "\n</source>\nReview the process, point out weaknesses, and give an improved version: put "
      "the improved reasoning in the position between <think> </think> and the improved "
      "translation in the position between <answer> </answer>.";
  return b;
}

namespace {

RefinementStep step_from_response(int index, const CotTemplate& tmpl, const ParallelPair& pair,
                                  const std::string& text, const QualityMetric& metric) {
  RefinementStep step;
  step.step_index = index;
  step.strategy = tmpl.strategy;
  step.template_text = tmpl.template_text;
  const ParseResult parsed = parse_structured(text);
  if (!parsed.ok) {
    step.ok = false;
    step.raw_text = text;
    step.failure = "unparseable output: " + parsed.detail;
    return step;
  }
  step.cot = parsed.output.think_text;
  step.answer = trim_copy(parsed.output.answer_text);
  step.confidence =
      metric.score(step.answer, pair.target_text, pair.source_text, pair.target_lang);
  step.ok = true;
  return step;
}

RefinementStep failed_step(int index, const CotTemplate& tmpl, const std::string& why) {
  RefinementStep step;
  step.step_index = index;
  step.strategy = tmpl.strategy;
  step.template_text = tmpl.template_text;
  step.ok = false;
  step.failure = why;
  return step;
}

}  // namespace

RefinementStep generate_step(const ParallelPair& pair, const CotTemplate& tmpl,
                             LlmGateway& gateway, const QualityMetric& metric,
                             const RefineConfig& config) {
  const PromptBundle prompt = render_incorporate_prompt(pair, tmpl);
  ChatRequest req{prompt.system_text, prompt.user_text, config.generate_temperature,
                  config.max_tokens, config.model_id};
  try {
    const ChatResponse resp = gateway.complete(req);
    return step_from_response(0, tmpl, pair, resp.text, metric);
  } catch (const GatewayError& e) {
    return failed_step(0, tmpl, std::string("gateway: ") + e.what());
  }
}

RefinementChain refine(RefinementChain chain, const RefineConfig& config, LlmGateway& gateway,
                       const QualityMetric& metric) {
  if (chain.steps.empty()) {
    throw std::invalid_argument("refine: chain has no steps");
  }
  if (chain.status != ChainStatus::running) return chain;
  if (chain.metric_id.empty()) chain.metric_id = metric.metric_id();

  // Gains must strictly exceed min_gain (up to fp noise) to reset the
  // stall counter.
  constexpr double kGainEps = 1e-12;

  auto last_ok = [&]() -> const RefinementStep* {
    for (auto it = chain.steps.rbegin(); it != chain.steps.rend(); ++it) {
      if (it->ok) return &*it;
    }
    return nullptr;
  };

  double best = -std::numeric_limits<double>::infinity();
  int stall = 0;
  for (const auto& s : chain.steps) {
    if (s.ok && s.confidence) {
      if (*s.confidence > best + config.min_gain + kGainEps) {
        best = std::max(best, *s.confidence);
        stall = 0;
      } else {
        best = std::max(best, *s.confidence);
        ++stall;
      }
    } else {
      ++stall;
    }
  }

  auto finish = [&](ChainStatus terminal) {
    chain.status = last_ok() ? terminal : ChainStatus::failed;
    return chain;
  };

  if (const RefinementStep* prior = last_ok();
      prior && prior->confidence && *prior->confidence >= config.threshold) {
    return finish(ChainStatus::converged);
  }
  if (static_cast<int>(chain.steps.size()) >= config.max_steps) {
    return finish(ChainStatus::exhausted);
  }
  if (stall >= config.patience) {
    return finish(ChainStatus::exhausted);
  }

  while (static_cast<int>(chain.steps.size()) < config.max_steps) {
    const RefinementStep* prior = last_ok();
    const int index = static_cast<int>(chain.steps.size());
    RefinementStep step;

    if (prior == nullptr) {
      // Nothing usable yet: instantiate the next template from scratch.
      const Strategy next = next_strategy(chain.steps.back().strategy);
      const CotTemplate& tmpl = template_for(next);
      const PromptBundle prompt = render_incorporate_prompt(chain.pair, tmpl);
      ChatRequest req{prompt.system_text, prompt.user_text, config.generate_temperature,
                      config.max_tokens, config.model_id};
      try {
        const ChatResponse resp = gateway.complete(req);
        step = step_from_response(index, tmpl, chain.pair, resp.text, metric);
      } catch (const GatewayError& e) {
        step = failed_step(index, tmpl, std::string("gateway: ") + e.what());
      }
    } else {
      const CotTemplate& tmpl = config.revise_in_place
                                    ? template_for(prior->strategy)
                                    : template_for(next_strategy(prior->strategy));
      const PromptBundle prompt = render_refine_prompt(chain.pair, *prior);
      ChatRequest req{prompt.system_text, prompt.user_text, config.critic_temperature,
                      config.max_tokens, config.model_id};
      try {
        const ChatResponse resp = gateway.complete(req);
        step = step_from_response(index, tmpl, chain.pair, resp.text, metric);
      } catch (const GatewayError& e) {
        step = failed_step(index, tmpl, std::string("gateway: ") + e.what());
      }
    }
    step.step_index = index;
    chain.steps.push_back(step);

    if (step.ok && step.confidence) {
      if (*step.confidence >= config.threshold) {
        return finish(ChainStatus::converged);
      }
      if (*step.confidence > best + config.min_gain + kGainEps) {
        best = std::max(best, *step.confidence);
        stall = 0;
      } else {
        best = std::max(best, *step.confidence);
        ++stall;
      }
    } else {
      ++stall;
    }
    if (stall >= config.patience) {
      return finish(ChainStatus::exhausted);
    }
  }
  return finish(ChainStatus::exhausted);
}

std::variant<CotRecord, Rejection> accept(const RefinementChain& chain, double accept_floor) {
  if (chain.status == ChainStatus::running) {
    throw std::invalid_argument("accept: chain is still running");
  }
  if (chain.status == ChainStatus::failed) {
    return Rejection{chain.pair.id, "all steps failed"};
  }
  const RefinementStep* best = nullptr;
  for (const auto& s : chain.steps) {
    if (!s.ok || !s.confidence) continue;
    if (best == nullptr || *s.confidence > *best->confidence) best = &s;  // earliest on ties
  }
  if (best == nullptr) {
    return Rejection{chain.pair.id, "no successful step"};
  }
  if (*best->confidence < accept_floor) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "best confidence %.4f below floor %.4f", *best->confidence,
                  accept_floor);
    return Rejection{chain.pair.id, buf};
  }
  CotRecord r;
  r.pair = chain.pair;
  r.cot = best->cot;
  r.answer = best->answer;
  r.confidence = *best->confidence;
  r.strategy = best->strategy;
  r.steps_used = static_cast<int>(chain.steps.size());
  r.metric_id = chain.metric_id;
  return r;
}

std::size_t export_sft(const std::vector<CotRecord>& records, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& r : records) {
    const std::string response =
        "<think>" + r.cot + "</think><answer>" + r.answer + "</answer>";
    json j{{"prompt", translation_instruction(r.pair)},
           {"response", response},
           {"meta",
            {{"pair_id", r.pair.id},
             {"strategy", to_string(r.strategy)},
             {"confidence", r.confidence},
             {"steps_used", r.steps_used},
             {"metric_id", r.metric_id},
             {"src_lang", r.pair.source_lang},
             {"tgt_lang", r.pair.target_lang},
             {"domain", to_string(r.pair.domain)}}}};
    out << j.dump() << '\n';
  }
  return records.size();
}

std::size_t export_rl_prompts(const std::vector<CotRecord>& records, const std::string& path) {
  auto out = open_for_write(path);
  for (const auto& r : records) {
    json j{{"prompt", translation_instruction(r.pair)}, {"reference", r.pair.target_text}};
    out << j.dump() << '\n';
  }
  return records.size();
}

json chain_to_json(const RefinementChain& chain) {
  json steps = json::array();
  for (const auto& s : chain.steps) {
    json js{{"step", s.step_index},
            {"strategy", to_string(s.strategy)},
            {"ok", s.ok},
            {"cot", s.cot},
            {"answer", s.answer}};
    js["f"] = s.confidence ? json(*s.confidence) : json(nullptr);
    if (!s.ok) {
      js["failure"] = s.failure;
      js["raw"] = s.raw_text;
    }
    steps.push_back(std::move(js));
  }
  return json{{"pair", pair_to_json(chain.pair)},
              {"status", to_string(chain.status)},
              {"metric_id", chain.metric_id},
              {"steps", steps}};
}

RefinementChain chain_from_json(const json& j, const std::string& name, std::size_t lineno) {
  RefinementChain chain;
  if (!j.contains("pair") || !j.contains("status") || !j.contains("steps")) {
    throw LineError(name, lineno, "chain record needs pair/status/steps");
  }
  chain.pair = pair_from_json(j.at("pair"), name, lineno);
  auto status = chain_status_from_string(j.at("status").get<std::string>());
  if (!status) throw LineError(name, lineno, "unknown chain status");
  chain.status = *status;
  chain.metric_id = j.value("metric_id", "");
  for (const auto& js : j.at("steps")) {
    RefinementStep s;
    s.step_index = js.at("step").get<int>();
    auto strat = strategy_from_string(js.at("strategy").get<std::string>());
    if (!strat) throw LineError(name, lineno, "unknown strategy in chain step");
    s.strategy = *strat;
    s.template_text = template_for(s.strategy).template_text;
    s.ok = js.at("ok").get<bool>();
    s.cot = js.value("cot", "");
    s.answer = js.value("answer", "");
    if (js.contains("f") && !js.at("f").is_null()) s.confidence = js.at("f").get<double>();
    s.failure = js.value("failure", "");
    s.raw_text = js.value("raw", "");
    chain.steps.push_back(std::move(s));
  }
  return chain;
}

json record_to_json(const CotRecord& r) {
  return json{{"pair", pair_to_json(r.pair)},
              {"cot", r.cot},
              {"answer", r.answer},
              {"confidence", r.confidence},
              {"strategy", to_string(r.strategy)},
              {"steps_used", r.steps_used},
              {"metric_id", r.metric_id}};
}

CotRecord record_from_json(const json& j, const std::string& name, std::size_t lineno) {
  CotRecord r;
  if (!j.contains("pair") || !j.contains("cot") || !j.contains("answer")) {
    throw LineError(name, lineno, "record needs pair/cot/answer");
  }
  r.pair = pair_from_json(j.at("pair"), name, lineno);
  r.cot = j.at("cot").get<std::string>();
  r.answer = j.at("answer").get<std::string>();
  r.confidence = j.value("confidence", 0.0);
  auto strat = strategy_from_string(j.value("strategy", "Hierarchical"));
  r.strategy = strat.value_or(Strategy::Hierarchical);
  r.steps_used = j.value("steps_used", 0);
  r.metric_id = j.value("metric_id", "");
  return r;
}

SynthesisCounts run_synthesis(const CorpusSet& corpus, const SynthesisConfig& config,
                              LlmGateway& gateway, const QualityMetric& metric,
                              const std::string& chains_path, const std::string& audit_path) {
  SynthesisCounts counts;

  std::unordered_set<std::string> done;
  if (std::filesystem::exists(chains_path)) {
    for_each_jsonl(chains_path, [&](std::size_t lineno, const json& j) {
      done.insert(chain_from_json(j, chains_path, lineno).pair.id);
    });
  }

  std::ofstream chains_out(chains_path, std::ios::app | std::ios::binary);
  if (!chains_out) throw std::runtime_error("cannot open for writing: " + chains_path);
  std::ofstream audit_out;
  if (!audit_path.empty()) {
    audit_out.open(audit_path, std::ios::app | std::ios::binary);
    if (!audit_out) throw std::runtime_error("cannot open for writing: " + audit_path);
  }

  for (const auto& pair : corpus.pairs) {
    if (done.count(pair.id)) {
      ++counts.resumed;
      continue;
    }
    const KeyConcepts concepts = extract_key_concepts_offline(pair);
    const Strategy strategy = select_strategy(concepts, config.rules);
    const CotTemplate& tmpl = template_for(strategy);

    RefinementChain chain;
    chain.pair = pair;
    chain.metric_id = metric.metric_id();
    chain.steps.push_back(generate_step(pair, tmpl, gateway, metric, config.refine));
    chain = refine(std::move(chain), config.refine, gateway, metric);

    chains_out << chain_to_json(chain).dump() << '\n';
    chains_out.flush();
    if (audit_out.is_open()) {
      for (std::size_t i = 0; i < chain.steps.size(); ++i) {
        const auto& s = chain.steps[i];
        json row{{"pair_id", pair.id},
                 {"step", s.step_index},
                 {"template", to_string(s.strategy)},
                 {"f", s.confidence ? json(*s.confidence) : json(nullptr)},
                 {"status", i + 1 == chain.steps.size() ? to_string(chain.status)
                                                        : std::string("running")}};
        audit_out << row.dump() << '\n';
      }
      audit_out.flush();
    }

    ++counts.chains_written;
    switch (chain.status) {
      case ChainStatus::converged: ++counts.converged; break;
      case ChainStatus::exhausted: ++counts.exhausted; break;
      case ChainStatus::failed: ++counts.failed; break;
      case ChainStatus::running: break;
    }
  }
  return counts;
}

}  // namespace rmt
