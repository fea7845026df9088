#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sessrec/events.hpp"

namespace sessrec {

// Gini index over interaction counts, sorted-sum form on the ascending
// counts: G = sum_i (2i - n - 1) x_i / (n * sum_i x_i), i 1-based.
double gini(std::vector<std::int64_t> counts);

struct StatsReport {
  std::int64_t n_sessions = 0;
  std::int64_t n_browsing_events = 0;
  std::int64_t n_search_events = 0;
  std::int64_t n_sku_records = 0;
  std::int64_t n_product_interactions = 0;
  std::int64_t n_distinct_skus_interacted = 0;
  double item_frequency_gini = 0.0;
  double top_1pct_share = 0.0;
  double top_5pct_share = 0.0;
  double median_item_frequency = 0.0;
  double repeated_interaction_fraction = 0.0;
  // fraction of events per kind, search clicks counted under search_click
  double mix_product_view = 0.0;
  double mix_product_detail = 0.0;
  double mix_add_to_cart = 0.0;
  double mix_remove_from_cart = 0.0;
  double mix_purchase = 0.0;
  double mix_pageview = 0.0;
  double mix_search_click = 0.0;

  std::string to_json() const;  // flat document
};

// Throws Error("corpus_stats") on an empty log.
StatsReport corpus_stats(const SessionEventLog& log);

}  // namespace sessrec
