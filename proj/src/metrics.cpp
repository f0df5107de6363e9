#include "cityvl/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "cityvl/errors.hpp"

namespace cityvl {

std::vector<std::string> metric_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::string metric_stem(const std::string& token) {
  auto ends_with = [&](const char* suffix) {
    const std::size_t n = std::char_traits<char>::length(suffix);
    return token.size() > n &&
           token.compare(token.size() - n, n, suffix) == 0;
  };
  if (ends_with("ing") && token.size() > 5) return token.substr(0, token.size() - 3);
  if (ends_with("ed") && token.size() > 4) return token.substr(0, token.size() - 2);
  if (ends_with("es") && token.size() > 4) return token.substr(0, token.size() - 2);
  if (ends_with("ly") && token.size() > 4) return token.substr(0, token.size() - 2);
  if (ends_with("s") && !ends_with("ss") && token.size() > 3)
    return token.substr(0, token.size() - 1);
  return token;
}

namespace {

constexpr double kBleuEpsilon = 1e-9;

using Counts = std::unordered_map<std::string, std::size_t>;

Counts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  Counts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu4(const std::string& candidate,
             const std::vector<std::string>& references) {
  const std::vector<std::string> cand = metric_tokenize(candidate);
  if (cand.empty()) throw EmptyText("candidate");
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) {
    auto toks = metric_tokenize(r);
    if (!toks.empty()) refs.push_back(std::move(toks));
  }
  if (refs.empty()) throw EmptyText("reference");

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const Counts cand_counts = ngram_counts(cand, n);
    std::size_t total = 0, clipped = 0;
    for (const auto& [key, count] : cand_counts) total += count;
    for (const auto& [key, count] : cand_counts) {
      std::size_t best_ref = 0;
      for (const auto& ref : refs) {
        const Counts rc = ngram_counts(ref, n);
        auto it = rc.find(key);
        if (it != rc.end()) best_ref = std::max(best_ref, it->second);
      }
      clipped += std::min(count, best_ref);
    }
    const double p = (total == 0 || clipped == 0)
                         ? kBleuEpsilon
                         : static_cast<double>(clipped) / static_cast<double>(total);
    log_sum += 0.25 * std::log(p);
  }

  // Effective reference length: closest to the candidate, ties to the shorter.
  std::size_t ref_len = refs.front().size();
  for (const auto& ref : refs) {
    const auto diff = [&](std::size_t len) {
      return len > cand.size() ? len - cand.size() : cand.size() - len;
    };
    if (diff(ref.size()) < diff(ref_len) ||
        (diff(ref.size()) == diff(ref_len) && ref.size() < ref_len))
      ref_len = ref.size();
  }
  const double bp =
      cand.size() >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) /
                               static_cast<double>(cand.size()));
  return bp * std::exp(log_sum);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> cand = metric_tokenize(candidate);
  const std::vector<std::string> ref = metric_tokenize(reference);
  if (cand.empty()) throw EmptyText("candidate");
  if (ref.empty()) throw EmptyText("reference");

  const std::size_t m = cand.size(), n = ref.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1
                                         : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(m);
  const double r = lcs / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

double meteor_lite(const std::string& candidate, const std::string& reference) {
  const std::vector<std::string> cand = metric_tokenize(candidate);
  const std::vector<std::string> ref = metric_tokenize(reference);
  if (cand.empty()) throw EmptyText("candidate");
  if (ref.empty()) throw EmptyText("reference");

  // Stage 1: exact matches in order, each reference token used once; stage 2
  // repeats the walk on stems over the leftovers.
  std::vector<std::ptrdiff_t> match(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  auto run_stage = [&](auto&& key) {
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (match[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref_used[j]) continue;
        if (key(cand[i]) == key(ref[j])) {
          match[i] = static_cast<std::ptrdiff_t>(j);
          ref_used[j] = true;
          break;
        }
      }
    }
  };
  run_stage([](const std::string& t) { return t; });
  run_stage([](const std::string& t) { return metric_stem(t); });

  std::size_t matches = 0;
  for (auto mi : match)
    if (mi >= 0) ++matches;
  if (matches == 0) return 0.0;

  // Chunks: maximal runs where both candidate and reference indices advance
  // by one.
  std::size_t chunks = 0;
  std::ptrdiff_t prev_i = -2, prev_j = -2;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (match[i] < 0) continue;
    if (static_cast<std::ptrdiff_t>(i) != prev_i + 1 || match[i] != prev_j + 1)
      ++chunks;
    prev_i = static_cast<std::ptrdiff_t>(i);
    prev_j = match[i];
  }

  const double mm = static_cast<double>(matches);
  const double p = mm / static_cast<double>(cand.size());
  const double r = mm / static_cast<double>(ref.size());
  const double f_mean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(chunks) / mm;
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

}  // namespace cityvl
