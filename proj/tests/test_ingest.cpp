#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sessrec/dataset_io.hpp"
#include "sessrec/digest.hpp"
#include "sessrec/error.hpp"
#include "sessrec/rng.hpp"
#include "sessrec/stats.hpp"
#include "sessrec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sessrec;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::path("tmp_tests") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Independent oracle: Gini via mean absolute difference,
// G = sum_ij |x_i - x_j| / (2 n^2 mean).
double gini_mad(const std::vector<std::int64_t>& counts) {
  const double n = static_cast<double>(counts.size());
  double total = 0, mad = 0;
  for (auto c : counts) total += static_cast<double>(c);
  for (auto a : counts)
    for (auto b : counts) mad += std::abs(static_cast<double>(a - b));
  return mad / (2.0 * n * total);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST(Gini, HandCase) { EXPECT_DOUBLE_EQ(gini({1, 2, 3, 4}), 0.25); }

TEST(Gini, UniformIsExactlyZero) {
  EXPECT_EQ(gini({7, 7, 7, 7, 7}), 0.0);
  EXPECT_EQ(gini({3}), 0.0);
}

TEST(Gini, MatchesMeanAbsoluteDifferenceOracle) {
  Rng rng(17);
  for (int it = 0; it < 200; ++it) {
    std::size_t n = 2 + rng.uniform_int(10);
    std::vector<std::int64_t> counts(n);
    for (auto& c : counts) c = 1 + static_cast<std::int64_t>(rng.uniform_int(40));
    EXPECT_NEAR(gini(counts), gini_mad(counts), 1e-12);
  }
}

TEST(Gini, PermutationInvariantAndMonotone) {
  Rng rng(18);
  for (int it = 0; it < 100; ++it) {
    std::size_t n = 3 + rng.uniform_int(8);
    std::vector<std::int64_t> counts(n);
    for (auto& c : counts) c = 2 + static_cast<std::int64_t>(rng.uniform_int(30));
    double g = gini(counts);
    std::vector<std::int64_t> shuffled = counts;
    rng.shuffle(shuffled);
    EXPECT_DOUBLE_EQ(gini(shuffled), g);

    // move one unit of mass from a strictly-lower to a strictly-higher count
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] < counts[lo]) lo = i;
      if (counts[i] > counts[hi]) hi = i;
    }
    if (counts[lo] < counts[hi] && counts[lo] > 1) {
      counts[lo] -= 1;
      counts[hi] += 1;
      EXPECT_GT(gini(counts), g);
    }
  }
}

TEST(LoadDataset, WellFormedCounts) {
  auto dir = fresh_dir("load_ok");
  SessionEventLog log;
  for (int i = 0; i < 10; ++i) {
    BrowsingEvent e;
    e.session_id = "s" + std::to_string(i % 3);
    e.timestamp_ms = 1000 + i;
    if (i % 2) {
      e.kind = EventKind::pageview;
      e.page_url_id = "u1";
    } else {
      e.kind = EventKind::product_view;
      e.sku = "sku" + std::to_string(i);
    }
    log.browsing.push_back(e);
  }
  for (int i = 0; i < 2; ++i) {
    SearchEvent e;
    e.session_id = "s0";
    e.timestamp_ms = 2000 + i;
    e.query_vector = {0.1, 0.2, 0.3};
    e.impressions = {"sku0", "sku2"};
    e.clicked_skus = {"sku2"};
    log.search.push_back(e);
  }
  for (int i = 0; i < 5; ++i) {
    SkuRecord r;
    r.sku = "sku" + std::to_string(i);
    r.price_bucket = i;
    r.category = "c";
    r.subcategory = "sc";
    r.description_vector = {1.0, 0.5};
    log.skus.push_back(r);
  }
  save_dataset(log, dir.string());
  auto res = load_dataset((dir / "browsing.csv").string(), (dir / "search.jsonl").string(),
                          (dir / "skus.csv").string());
  EXPECT_EQ(res.log.browsing.size(), 10u);
  EXPECT_EQ(res.log.search.size(), 2u);
  EXPECT_EQ(res.log.skus.size(), 5u);
  EXPECT_EQ(res.rejected_browsing + res.rejected_search + res.rejected_skus, 0);
  EXPECT_EQ(res.log.dims.d_query, 3);
  EXPECT_EQ(res.log.dims.d_desc, 2);
}

TEST(LoadDataset, InvariantViolationsRejected) {
  auto dir = fresh_dir("load_bad");
  {
    std::ofstream b(dir / "browsing.csv");
    b << "session_id,timestamp_ms,event_kind,sku,page_url_id\n";
    b << "s1,1000,pageview,SKU9,u1\n";       // pageview with sku set
    b << "s1,1001,product_view,SKU1,\n";     // fine
    b << "s1,0,product_view,SKU1,\n";        // bad timestamp
    b << "s1,1002,made_up_kind,SKU1,\n";     // unknown kind
  }
  {
    std::ofstream s(dir / "search.jsonl");
    s << R"({"session_id":"s1","timestamp_ms":5,"query_vector":[1,2],"impressions":["a"],"clicked_skus":["b"]})"
      << "\n";  // clicked not among impressions
    s << R"({"session_id":"s1","timestamp_ms":6,"query_vector":[1,2],"impressions":["a"],"clicked_skus":["a"]})"
      << "\n";
    s << "not json\n";
  }
  {
    std::ofstream k(dir / "skus.csv");
    k << "sku,price_bucket,category,subcategory,description_vector,image_vector\n";
    k << "SKU1,3,c,sc,0.1 0.2,\n";
    k << "SKU2,3,c,sc,0.1 0.2 0.3,\n";  // dimension mismatch vs first row
    k << ",3,c,sc,,\n";                 // empty sku
  }
  auto res = load_dataset((dir / "browsing.csv").string(), (dir / "search.jsonl").string(),
                          (dir / "skus.csv").string());
  EXPECT_EQ(res.rejected_browsing, 3);
  EXPECT_EQ(res.log.browsing.size(), 1u);
  EXPECT_EQ(res.rejected_search, 2);
  EXPECT_EQ(res.log.search.size(), 1u);
  EXPECT_EQ(res.rejected_skus, 2);
  EXPECT_EQ(res.log.skus.size(), 1u);
}

TEST(LoadDataset, MissingFileThrows) {
  EXPECT_THROW(load_dataset("nope_a.csv", "nope_b.jsonl", "nope_c.csv"), Error);
}

TEST(LoadDataset, FuzzedRowsNeverViolateInvariants) {
  auto dir = fresh_dir("load_fuzz");
  Rng rng(99);
  std::ofstream b(dir / "browsing.csv");
  b << "session_id,timestamp_ms,event_kind,sku,page_url_id\n";
  const char* kinds[] = {"product_view", "pageview", "add_to_cart", "junk", ""};
  for (int i = 0; i < 500; ++i) {
    std::string sid = rng.bernoulli(0.9) ? "s" + std::to_string(rng.uniform_int(5)) : "";
    std::string ts = rng.bernoulli(0.9) ? std::to_string(rng.uniform_int(5000)) : "xx";
    std::string kind = kinds[rng.uniform_int(5)];
    std::string sku = rng.bernoulli(0.5) ? "SKU" + std::to_string(rng.uniform_int(9)) : "";
    std::string url = rng.bernoulli(0.5) ? "u" + std::to_string(rng.uniform_int(9)) : "";
    b << sid << ',' << ts << ',' << kind << ',' << sku << ',' << url << '\n';
  }
  b.close();
  {
    std::ofstream s(dir / "search.jsonl");
    s.close();
    std::ofstream k(dir / "skus.csv");
    k << "sku,price_bucket,category,subcategory,description_vector,image_vector\n";
  }
  auto res = load_dataset((dir / "browsing.csv").string(), (dir / "search.jsonl").string(),
                          (dir / "skus.csv").string());
  for (const auto& e : res.log.browsing) EXPECT_FALSE(validate_browsing(e).has_value());
}

TEST(Synthetic, DeterministicGivenSeed) {
  SyntheticConfig cfg;
  cfg.num_sessions = 120;
  cfg.num_skus = 80;
  cfg.num_page_urls = 10;
  cfg.seed = 7;
  auto d1 = fresh_dir("synth_a"), d2 = fresh_dir("synth_b");
  save_dataset(generate_synthetic(cfg), d1.string());
  save_dataset(generate_synthetic(cfg), d2.string());
  for (const char* f : {"browsing.csv", "search.jsonl", "skus.csv"})
    EXPECT_EQ(digest_file((d1 / f).string()), digest_file((d2 / f).string())) << f;

  cfg.seed = 8;
  auto d3 = fresh_dir("synth_c");
  save_dataset(generate_synthetic(cfg), d3.string());
  EXPECT_NE(digest_file((d1 / "browsing.csv").string()),
            digest_file((d3 / "browsing.csv").string()));
}

TEST(Synthetic, ZeroTopicNoiseGivesPerfectIntraSessionSimilarity) {
  SyntheticConfig cfg;
  cfg.num_sessions = 60;
  cfg.num_skus = 64;
  cfg.topic_noise = 0.0;
  cfg.seed = 3;
  auto log = generate_synthetic(cfg);
  std::map<std::string, SkuRecord> by_sku;
  for (const auto& r : log.skus) by_sku[r.sku] = r;
  std::map<std::string, std::vector<std::string>> session_skus;
  for (const auto& e : log.browsing)
    if (e.kind != EventKind::pageview) session_skus[e.session_id].push_back(e.sku);
  for (const auto& e : log.search)
    for (const auto& c : e.clicked_skus) session_skus[e.session_id].push_back(c);
  int pairs = 0;
  for (const auto& [sid, skus] : session_skus) {
    for (std::size_t i = 0; i < skus.size(); ++i) {
      for (std::size_t j = i + 1; j < skus.size(); ++j) {
        const auto& a = by_sku[skus[i]].description_vector;
        const auto& b = by_sku[skus[j]].description_vector;
        if (a.empty() || b.empty()) continue;
        EXPECT_NEAR(cosine(a, b), 1.0, 1e-9);
        ++pairs;
      }
    }
  }
  EXPECT_GT(pairs, 50);
}

TEST(Synthetic, EventMixRoughlyHonored) {
  SyntheticConfig cfg;
  cfg.num_sessions = 800;
  cfg.num_skus = 100;
  cfg.seed = 5;
  auto stats = corpus_stats(generate_synthetic(cfg));
  EXPECT_NEAR(stats.mix_pageview, 0.70, 0.03);
  EXPECT_NEAR(stats.mix_search_click, 0.02, 0.01);
}

TEST(Synthetic, CalibratedGiniHitsTarget) {
  SyntheticConfig cfg;
  cfg.num_sessions = 900;
  cfg.num_skus = 150;
  cfg.num_page_urls = 20;
  cfg.seed = 11;
  double exponent = calibrate_zipf_exponent(cfg, 0.88);
  cfg.zipf_exponent = exponent;
  double g = corpus_stats(generate_synthetic(cfg)).item_frequency_gini;
  EXPECT_GE(g, 0.86);
  EXPECT_LE(g, 0.90);
}

TEST(CorpusStats, UniformCounts) {
  SessionEventLog log;
  for (int i = 0; i < 200; ++i) {
    BrowsingEvent e;
    e.session_id = "s" + std::to_string(i);
    e.timestamp_ms = 10 + i;
    e.kind = EventKind::product_view;
    e.sku = "sku" + std::to_string(i);  // every item exactly once
    log.browsing.push_back(e);
  }
  auto r = corpus_stats(log);
  EXPECT_EQ(r.item_frequency_gini, 0.0);
  EXPECT_NEAR(r.top_1pct_share, 0.01, 1e-12);
  EXPECT_EQ(r.repeated_interaction_fraction, 0.0);
}

TEST(CorpusStats, EmptyLogThrows) {
  SessionEventLog log;
  EXPECT_THROW(corpus_stats(log), Error);
}

TEST(CorpusStats, RepeatedFraction) {
  SessionEventLog log;
  for (int i = 0; i < 4; ++i) {
    BrowsingEvent e;
    e.session_id = "s1";
    e.timestamp_ms = 10 + i;
    e.kind = EventKind::product_view;
    e.sku = i < 2 ? "A" : "B";  // A,A,B,B -> 2 repeats of 4
    log.browsing.push_back(e);
  }
  EXPECT_DOUBLE_EQ(corpus_stats(log).repeated_interaction_fraction, 0.5);
}
