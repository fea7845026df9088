#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sessrec {

// search_click never appears in the browsing table; it is introduced when
// search clicks are merged into session sequences.
enum class EventKind {
  product_view,
  product_detail,
  add_to_cart,
  remove_from_cart,
  purchase,
  pageview,
  search_click,
};

const char* to_string(EventKind k);
std::optional<EventKind> parse_event_kind(const std::string& s);
bool is_product_kind(EventKind k);

struct BrowsingEvent {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::product_view;
  std::string sku;          // empty = absent
  std::string page_url_id;  // empty = absent
};

struct SearchEvent {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  std::vector<double> query_vector;
  std::vector<std::string> impressions;
  std::vector<std::string> clicked_skus;
};

// price_bucket 0 is the reserved "no metadata" bucket.
struct SkuRecord {
  std::string sku;
  int price_bucket = 0;
  std::string category;
  std::string subcategory;
  std::vector<double> description_vector;
  std::vector<double> image_vector;
};

struct VectorDims {
  int d_query = 0;
  int d_desc = 0;
  int d_image = 0;
};

struct SessionEventLog {
  std::vector<BrowsingEvent> browsing;
  std::vector<SearchEvent> search;
  std::vector<SkuRecord> skus;
  VectorDims dims;
};

// Returns an error description, or nullopt when the row satisfies its
// invariants.
std::optional<std::string> validate_browsing(const BrowsingEvent& e);
std::optional<std::string> validate_search(const SearchEvent& e, int expected_dq);

}  // namespace sessrec
