#include "sessrec/events.hpp"

#include <algorithm>

namespace sessrec {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::product_view: return "product_view";
    case EventKind::product_detail: return "product_detail";
    case EventKind::add_to_cart: return "add_to_cart";
    case EventKind::remove_from_cart: return "remove_from_cart";
    case EventKind::purchase: return "purchase";
    case EventKind::pageview: return "pageview";
    case EventKind::search_click: return "search_click";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(const std::string& s) {
  for (EventKind k : {EventKind::product_view, EventKind::product_detail, EventKind::add_to_cart,
                      EventKind::remove_from_cart, EventKind::purchase, EventKind::pageview,
                      EventKind::search_click}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

bool is_product_kind(EventKind k) {
  switch (k) {
    case EventKind::product_view:
    case EventKind::product_detail:
    case EventKind::add_to_cart:
    case EventKind::remove_from_cart:
    case EventKind::purchase:
    case EventKind::search_click:
      return true;
    case EventKind::pageview:
      return false;
  }
  return false;
}

std::optional<std::string> validate_browsing(const BrowsingEvent& e) {
  if (e.session_id.empty()) return "empty session_id";
  if (e.timestamp_ms <= 0) return "timestamp_ms must be > 0";
  if (e.kind == EventKind::search_click) return "search_click is not a browsing event kind";
  if (e.kind == EventKind::pageview) {
    if (e.page_url_id.empty()) return "pageview without page_url_id";
    if (!e.sku.empty()) return "pageview with sku set";
  } else {
    if (e.sku.empty()) return "product event without sku";
    if (!e.page_url_id.empty()) return "product event with page_url_id set";
  }
  return std::nullopt;
}

std::optional<std::string> validate_search(const SearchEvent& e, int expected_dq) {
  if (e.session_id.empty()) return "empty session_id";
  if (e.timestamp_ms <= 0) return "timestamp_ms must be > 0";
  if (expected_dq > 0 && static_cast<int>(e.query_vector.size()) != expected_dq)
    return "query_vector dimension mismatch";
  for (const auto& c : e.clicked_skus) {
    if (std::find(e.impressions.begin(), e.impressions.end(), c) == e.impressions.end())
      return "clicked sku not among impressions: " + c;
  }
  return std::nullopt;
}

}  // namespace sessrec
