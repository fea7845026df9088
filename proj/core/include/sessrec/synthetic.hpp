#pragma once

#include <cstdint>

#include "sessrec/events.hpp"

namespace sessrec {

// Synthetic session-log generator. Item popularity follows Zipf(zipf_exponent)
// over popularity ranks. Each session draws a latent topic; its product picks
// come from the topic's item pool, and item description/image vectors are the
// topic center plus Gaussian noise scaled by topic_noise, so intra-session
// cosine similarity is controllably high. The chance of an off-topic pick
// grows with session length (scaled by topic_noise), which makes longer
// sessions measurably less coherent. A deterministic slice of the catalog is
// "late": those items only occur in the final 3 weeks of the 12-week window,
// giving the corpus genuinely new items near the end. A random subset of SKUs
// carries no metadata (price bucket 0, no category, no vectors).
struct SyntheticConfig {
  std::int64_t num_sessions = 1000;
  int num_skus = 200;
  int num_page_urls = 40;
  double zipf_exponent = 1.3;
  double mean_session_length = 6.0;
  double mix_pageview = 0.70;
  double mix_product = 0.28;
  double mix_search_click = 0.02;
  int d_query = 16;
  int d_desc = 24;
  int d_image = 24;
  double topic_noise = 0.25;
  std::uint64_t seed = 1;

  void validate() const;  // throws Error("synthetic") on bad values
};

// Window geometry shared with the splitter defaults.
constexpr std::int64_t kSynthWindowStartMs = 1600000000000LL;
constexpr int kSynthSpanWeeks = 12;
constexpr int kSynthLateWeeks = 3;

// Pure function of its config: two calls with equal configs produce
// identical logs.
SessionEventLog generate_synthetic(const SyntheticConfig& config);

// Bisection on the Zipf exponent until the generated corpus' item-frequency
// Gini lands within `tolerance` of `target_gini`. At most `max_iter`
// generator evaluations; throws if the target is unreachable.
double calibrate_zipf_exponent(const SyntheticConfig& base, double target_gini,
                               double tolerance = 0.005, int max_iter = 40);

}  // namespace sessrec
