#include "sessrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sessrec/error.hpp"
#include "sessrec/rng.hpp"
#include "sessrec/stats.hpp"

namespace sessrec {

namespace {

constexpr double kMissingMetadataRate = 0.10;
constexpr double kLateItemRate = 0.08;
constexpr double kRepeatRate = 0.12;
constexpr double kMeanGapSeconds = 30.0;
constexpr double kFirstPickBoost = 0.7;  // extra Zipf exponent for the opening product
constexpr double kUrlZipfExponent = 1.1;
constexpr std::int64_t kWeekMs = 7LL * 24 * 3600 * 1000;

struct ZipfTable {
  std::vector<int> items;   // global popularity ranks, ascending
  std::vector<double> cum;  // normalized cumulative weights

  void build(const std::vector<int>& members, double exponent) {
    items = members;
    cum.resize(items.size());
    double total = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      total += std::pow(static_cast<double>(items[i] + 1), -exponent);
      cum[i] = total;
    }
    for (auto& c : cum) c /= total;
  }

  int draw(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    std::size_t i = it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    return items[i];
  }
};

std::vector<double> unit_vector(Rng& rng, int d) {
  std::vector<double> v(static_cast<std::size_t>(d));
  double s = 0;
  for (auto& x : v) {
    x = rng.normal();
    s += x * x;
  }
  s = std::sqrt(s);
  if (s > 0)
    for (auto& x : v) x /= s;
  return v;
}

std::vector<double> jittered(Rng& rng, const std::vector<double>& center, double noise) {
  std::vector<double> v(center.size());
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = center[i] + noise * rng.normal();
    s += v[i] * v[i];
  }
  s = std::sqrt(s);
  if (s > 0)
    for (auto& x : v) x /= s;
  return v;
}

std::string sku_name(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%05d", idx);
  return buf;
}

std::string url_name(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U%04d", idx);
  return buf;
}

std::string session_name(std::int64_t idx) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "sess%07lld", static_cast<long long>(idx));
  return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
  require(num_sessions > 0, "synthetic", "num_sessions must be positive");
  require(num_skus > 1, "synthetic", "num_skus must exceed 1");
  require(num_page_urls > 0, "synthetic", "num_page_urls must be positive");
  require(zipf_exponent > 0, "synthetic", "zipf_exponent must be positive");
  require(mean_session_length >= 1.0, "synthetic", "mean_session_length must be >= 1");
  require(mix_pageview >= 0 && mix_product >= 0 && mix_search_click >= 0, "synthetic",
          "event mix entries must be non-negative");
  require(std::abs(mix_pageview + mix_product + mix_search_click - 1.0) <= 1e-9, "synthetic",
          "event mix must sum to 1");
  require(topic_noise >= 0 && topic_noise <= 1, "synthetic", "topic_noise must be in [0,1]");
  require(d_query > 0 && d_desc > 0 && d_image > 0, "synthetic",
          "vector dimensions must be positive");
}

SessionEventLog generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);

  const int topics = std::clamp(config.num_skus / 16, 4, 32);
  const int n_categories = std::max(2, topics / 3);

  std::vector<std::vector<double>> desc_centers, image_centers, query_centers;
  for (int t = 0; t < topics; ++t) {
    desc_centers.push_back(unit_vector(rng, config.d_desc));
    image_centers.push_back(unit_vector(rng, config.d_image));
    query_centers.push_back(unit_vector(rng, config.d_query));
  }

  SessionEventLog log;
  log.dims = {config.d_query, config.d_desc, config.d_image};

  std::vector<bool> late(static_cast<std::size_t>(config.num_skus));
  for (int idx = 0; idx < config.num_skus; ++idx) {
    const int topic = idx % topics;
    SkuRecord r;
    r.sku = sku_name(idx);
    late[idx] = rng.bernoulli(kLateItemRate);
    const bool missing = rng.bernoulli(kMissingMetadataRate);
    // Draw vectors regardless of the missing flag to keep the stream layout
    // independent of it; discard them for metadata-less items.
    auto dv = jittered(rng, desc_centers[topic], config.topic_noise);
    auto iv = jittered(rng, image_centers[topic], config.topic_noise);
    double price_jitter = rng.normal();
    if (!missing) {
      r.description_vector = std::move(dv);
      r.image_vector = std::move(iv);
      char cat[16], sub[16];
      std::snprintf(cat, sizeof(cat), "c%02d", topic % n_categories);
      std::snprintf(sub, sizeof(sub), "s%03d", topic);
      r.category = cat;
      r.subcategory = sub;
      double pop = 1.0 - static_cast<double>(idx) / static_cast<double>(config.num_skus);
      double base = std::clamp(pop + 0.25 * price_jitter, 0.0, 0.9999);
      r.price_bucket = 1 + static_cast<int>(std::floor(9.0 * base));
    }
    log.skus.push_back(std::move(r));
  }

  // Popularity samplers: global and per-topic, plus boosted variants that
  // skew the opening product of a session toward the popular head.
  std::vector<int> all_ranks(static_cast<std::size_t>(config.num_skus));
  for (int i = 0; i < config.num_skus; ++i) all_ranks[i] = i;
  std::vector<std::vector<int>> topic_members(static_cast<std::size_t>(topics));
  for (int i = 0; i < config.num_skus; ++i) topic_members[i % topics].push_back(i);

  ZipfTable global_tbl, global_boost;
  global_tbl.build(all_ranks, config.zipf_exponent);
  global_boost.build(all_ranks, config.zipf_exponent + kFirstPickBoost);
  std::vector<ZipfTable> topic_tbl(topics), topic_boost(topics);
  for (int t = 0; t < topics; ++t) {
    topic_tbl[t].build(topic_members[t], config.zipf_exponent);
    topic_boost[t].build(topic_members[t], config.zipf_exponent + kFirstPickBoost);
  }
  std::vector<int> url_ranks(static_cast<std::size_t>(config.num_page_urls));
  for (int i = 0; i < config.num_page_urls; ++i) url_ranks[i] = i;
  ZipfTable url_tbl;
  url_tbl.build(url_ranks, kUrlZipfExponent);

  // Topics themselves are unevenly popular, otherwise the per-topic pools
  // would flatten the head of the global frequency distribution.
  std::vector<int> topic_ranks(static_cast<std::size_t>(topics));
  for (int t = 0; t < topics; ++t) topic_ranks[t] = t;
  ZipfTable topic_pick;
  topic_pick.build(topic_ranks, kTopicZipfExponent);

  const std::int64_t span_ms = kSynthSpanWeeks * kWeekMs;
  const std::int64_t late_start_ms =
      kSynthWindowStartMs + (kSynthSpanWeeks - kSynthLateWeeks) * kWeekMs;

  auto draw_sku = [&](int topic, bool first_pick, bool off_topic, std::int64_t ts) {
    const ZipfTable& tbl = off_topic ? (first_pick ? global_boost : global_tbl)
                                     : (first_pick ? topic_boost[topic] : topic_tbl[topic]);
    for (int tries = 0; tries < 50; ++tries) {
      int idx = tbl.draw(rng);
      if (ts >= late_start_ms || !late[idx]) return idx;
    }
    for (int idx : tbl.items)
      if (!late[idx]) return idx;
    return tbl.items.front();
  };

  for (std::int64_t s = 0; s < config.num_sessions; ++s) {
    const std::string sid = session_name(s);
    const int topic = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(topics)));
    std::int64_t ts =
        kSynthWindowStartMs + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(span_ms));
    std::int64_t n = 1 + rng.poisson(config.mean_session_length - 1.0);
    n = std::min<std::int64_t>(n, 60);
    // Longer sessions drift off topic more; zero noise means zero drift, so
    // the zero-noise corpus stays perfectly coherent.
    const double p_off =
        config.topic_noise * std::min(0.9, 0.1 * static_cast<double>(std::max<std::int64_t>(0, n - 2)));

    std::vector<int> prior_products;
    bool first_product_pending = true;
    for (std::int64_t e = 0; e < n; ++e) {
      if (e > 0)
        ts += 1 + static_cast<std::int64_t>(rng.exponential(kMeanGapSeconds) * 1000.0);
      const double r = rng.uniform();
      if (r < config.mix_pageview) {
        BrowsingEvent ev;
        ev.session_id = sid;
        ev.timestamp_ms = ts;
        ev.kind = EventKind::pageview;
        ev.page_url_id = url_name(url_tbl.draw(rng));
        log.browsing.push_back(std::move(ev));
      } else if (r < config.mix_pageview + config.mix_product) {
        int idx;
        if (!prior_products.empty() && rng.bernoulli(kRepeatRate)) {
          idx = prior_products[rng.uniform_int(prior_products.size())];
        } else {
          idx = draw_sku(topic, first_product_pending, rng.bernoulli(p_off), ts);
          first_product_pending = false;
        }
        prior_products.push_back(idx);
        double k = rng.uniform();
        EventKind kind = k < 0.72   ? EventKind::product_view
                         : k < 0.87 ? EventKind::product_detail
                         : k < 0.95 ? EventKind::add_to_cart
                         : k < 0.97 ? EventKind::remove_from_cart
                                    : EventKind::purchase;
        BrowsingEvent ev;
        ev.session_id = sid;
        ev.timestamp_ms = ts;
        ev.kind = kind;
        ev.sku = sku_name(idx);
        log.browsing.push_back(std::move(ev));
      } else {
        int clicked = draw_sku(topic, false, rng.bernoulli(p_off), ts);
        first_product_pending = false;
        prior_products.push_back(clicked);
        SearchEvent ev;
        ev.session_id = sid;
        ev.timestamp_ms = ts;
        ev.query_vector = jittered(rng, query_centers[topic], 0.35);
        ev.impressions.push_back(sku_name(clicked));
        for (int i = 0; i < 4; ++i) {
          std::string imp = sku_name(global_tbl.draw(rng));
          if (std::find(ev.impressions.begin(), ev.impressions.end(), imp) ==
              ev.impressions.end())
            ev.impressions.push_back(std::move(imp));
        }
        ev.clicked_skus.push_back(sku_name(clicked));
        log.search.push_back(std::move(ev));
      }
    }
  }
  return log;
}

double calibrate_zipf_exponent(const SyntheticConfig& base, double target_gini, double tolerance,
                               int max_iter) {
  auto measure = [&](double exponent) {
    SyntheticConfig c = base;
    c.zipf_exponent = exponent;
    return corpus_stats(generate_synthetic(c)).item_frequency_gini;
  };
  double lo = 0.05, hi = 4.0;
  double glo = measure(lo), ghi = measure(hi);
  require(target_gini >= glo && target_gini <= ghi, "synthetic",
          "target gini outside achievable range [" + std::to_string(glo) + ", " +
              std::to_string(ghi) + "]");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    double g = measure(mid);
    if (std::abs(g - target_gini) <= tolerance) return mid;
    if (g < target_gini)
      lo = mid;
    else
      hi = mid;
  }
  fail("synthetic", "zipf calibration did not converge");
}

}  // namespace sessrec
