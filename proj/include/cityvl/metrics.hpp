#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cityvl {

// Shared tokenizer for all three metrics: lowercase, split on whitespace and
// punctuation boundaries, punctuation kept as single tokens.
std::vector<std::string> metric_tokenize(std::string_view text);

// Suffix-stripping stem used by the meteor stage-2 match.
std::string metric_stem(const std::string& token);

// Geometric mean of modified 1..4-gram precisions with brevity penalty;
// zero-count orders fall back to 1e-9 so short candidates score near zero
// instead of exactly zero.
double bleu4(const std::string& candidate,
             const std::vector<std::string>& references);

// LCS F-measure with beta = 1.
double rouge_l(const std::string& candidate, const std::string& reference);

// Exact + stem matching, F_mean = 10PR/(R+9P), fragmentation penalty
// 0.5*(chunks/matches)^3. No synonym stage.
double meteor_lite(const std::string& candidate, const std::string& reference);

}  // namespace cityvl
