#pragma once

#include <iosfwd>
#include <string>

#include "steerdial/config.hpp"

namespace steerdial {

// One function per CLI subcommand. Each works against a validated RunConfig,
// writes its artifacts under cfg.out_dir, and prints a short summary to out.
// Failures surface as Error subclasses; the CLI maps categories to exit codes.

// Loads the datasets, builds the vocabulary from the train split, tokenizes,
// optionally augments with commonsense sentences, and writes vocab.txt plus
// {train,dev,test}_examples.jsonl.
void run_prepare(const RunConfig& cfg, std::ostream& out);

// target: lm, lm_joint, classifier, discriminator, or all. Reads the prepared
// artifacts and writes <name>.ckpt plus <name>_trace.jsonl per component.
void run_train(const RunConfig& cfg, const std::string& target, std::ostream& out);

// Decodes one response per helper turn of the test split into
// generation.jsonl. fudge enables discriminator rescoring.
void run_generate(const RunConfig& cfg, StrategySource source, bool fudge, std::ostream& out);

// Scores a generation file (empty -> cfg.out_dir/generation.jsonl) and writes
// report.json.
void run_evaluate(const RunConfig& cfg, const std::string& generation_file, std::ostream& out);

// Interactive loop: seeker turns on in, labeled responses on out, transcript
// in chat_transcript.txt. The first turn doubles as the dialogue situation.
void run_chat(const RunConfig& cfg, StrategySource source, bool fudge, std::istream& in, std::ostream& out);

}  // namespace steerdial
