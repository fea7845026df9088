#include "sessrec/stats.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "sessrec/error.hpp"

namespace sessrec {

double gini(std::vector<std::int64_t> counts) {
  require(!counts.empty(), "gini", "no counts");
  std::sort(counts.begin(), counts.end());
  const std::int64_t n = static_cast<std::int64_t>(counts.size());
  std::int64_t total = 0;
  std::int64_t num = 0;  // exact as long as counts stay far from 2^63
  for (std::int64_t i = 0; i < n; ++i) {
    total += counts[i];
    num += (2 * (i + 1) - n - 1) * counts[i];
  }
  require(total > 0, "gini", "all counts zero");
  return static_cast<double>(num) / (static_cast<double>(n) * static_cast<double>(total));
}

StatsReport corpus_stats(const SessionEventLog& log) {
  require(!log.browsing.empty() || !log.search.empty(), "corpus_stats", "empty log");

  StatsReport r;
  r.n_browsing_events = static_cast<std::int64_t>(log.browsing.size());
  r.n_search_events = static_cast<std::int64_t>(log.search.size());
  r.n_sku_records = static_cast<std::int64_t>(log.skus.size());

  std::set<std::string> sessions;
  // The frequency distribution covers the whole catalog: items that never
  // got interacted keep a zero count, which is what makes the long tail show
  // up in the Gini index.
  std::map<std::string, std::int64_t> sku_counts;
  for (const auto& r : log.skus) sku_counts.emplace(r.sku, 0);
  std::set<std::pair<std::string, std::string>> session_sku_pairs;
  std::map<EventKind, std::int64_t> kind_counts;
  std::int64_t product_interactions = 0;

  for (const auto& e : log.browsing) {
    sessions.insert(e.session_id);
    ++kind_counts[e.kind];
    if (e.kind != EventKind::pageview) {
      ++sku_counts[e.sku];
      ++product_interactions;
      session_sku_pairs.emplace(e.session_id, e.sku);
    }
  }
  for (const auto& e : log.search) {
    sessions.insert(e.session_id);
    for (const auto& sku : e.clicked_skus) {
      ++kind_counts[EventKind::search_click];
      ++sku_counts[sku];
      ++product_interactions;
      session_sku_pairs.emplace(e.session_id, sku);
    }
  }

  r.n_sessions = static_cast<std::int64_t>(sessions.size());
  r.n_product_interactions = product_interactions;
  for (const auto& [sku, c] : sku_counts)
    if (c > 0) ++r.n_distinct_skus_interacted;

  if (!sku_counts.empty()) {
    std::vector<std::int64_t> counts;
    counts.reserve(sku_counts.size());
    for (const auto& [sku, c] : sku_counts) counts.push_back(c);
    r.item_frequency_gini = gini(counts);

    std::sort(counts.begin(), counts.end(), std::greater<>());
    auto top_share = [&](double pct) {
      std::int64_t k = static_cast<std::int64_t>(
          std::max<double>(1.0, std::ceil(pct * static_cast<double>(counts.size()))));
      std::int64_t s = 0;
      for (std::int64_t i = 0; i < k; ++i) s += counts[i];
      return static_cast<double>(s) / static_cast<double>(product_interactions);
    };
    r.top_1pct_share = top_share(0.01);
    r.top_5pct_share = top_share(0.05);

    std::sort(counts.begin(), counts.end());
    std::size_t m = counts.size();
    r.median_item_frequency =
        m % 2 ? static_cast<double>(counts[m / 2])
              : 0.5 * static_cast<double>(counts[m / 2 - 1] + counts[m / 2]);
    r.repeated_interaction_fraction =
        1.0 - static_cast<double>(session_sku_pairs.size()) / static_cast<double>(product_interactions);
  }

  std::int64_t total_events = 0;
  for (const auto& [k, c] : kind_counts) total_events += c;
  auto mix = [&](EventKind k) {
    auto it = kind_counts.find(k);
    return it == kind_counts.end() || total_events == 0
               ? 0.0
               : static_cast<double>(it->second) / static_cast<double>(total_events);
  };
  r.mix_product_view = mix(EventKind::product_view);
  r.mix_product_detail = mix(EventKind::product_detail);
  r.mix_add_to_cart = mix(EventKind::add_to_cart);
  r.mix_remove_from_cart = mix(EventKind::remove_from_cart);
  r.mix_purchase = mix(EventKind::purchase);
  r.mix_pageview = mix(EventKind::pageview);
  r.mix_search_click = mix(EventKind::search_click);
  return r;
}

std::string StatsReport::to_json() const {
  nlohmann::json j;
  j["n_sessions"] = n_sessions;
  j["n_browsing_events"] = n_browsing_events;
  j["n_search_events"] = n_search_events;
  j["n_sku_records"] = n_sku_records;
  j["n_product_interactions"] = n_product_interactions;
  j["n_distinct_skus_interacted"] = n_distinct_skus_interacted;
  j["item_frequency_gini"] = item_frequency_gini;
  j["top_1pct_share"] = top_1pct_share;
  j["top_5pct_share"] = top_5pct_share;
  j["median_item_frequency"] = median_item_frequency;
  j["repeated_interaction_fraction"] = repeated_interaction_fraction;
  j["mix_product_view"] = mix_product_view;
  j["mix_product_detail"] = mix_product_detail;
  j["mix_add_to_cart"] = mix_add_to_cart;
  j["mix_remove_from_cart"] = mix_remove_from_cart;
  j["mix_purchase"] = mix_purchase;
  j["mix_pageview"] = mix_pageview;
  j["mix_search_click"] = mix_search_click;
  return j.dump(2);
}

}  // namespace sessrec
