#include "sessrec/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sessrec/error.hpp"

namespace sessrec {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool parse_i64(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  *out = v;
  return true;
}

bool parse_vector(const std::string& s, std::vector<double>* out) {
  out->clear();
  if (s.empty()) return true;
  std::istringstream iss(s);
  double v;
  while (iss >> v) out->push_back(v);
  return iss.eof();
}

std::string format_vector(const std::vector<double>& v) {
  std::string s;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) s.push_back(' ');
    s += buf;
  }
  return s;
}

std::ifstream open_or_fail(const std::string& path, const char* stage) {
  std::ifstream in(path);
  if (!in) fail(stage, "missing file: " + path);
  return in;
}

}  // namespace

LoadResult load_dataset(const std::string& browsing_path, const std::string& search_path,
                        const std::string& sku_path) {
  LoadResult res;
  VectorDims& dims = res.log.dims;

  {
    std::ifstream in = open_or_fail(browsing_path, "load_dataset");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 5) {
        ++res.rejected_browsing;
        continue;
      }
      BrowsingEvent e;
      e.session_id = f[0];
      auto kind = parse_event_kind(f[2]);
      if (!parse_i64(f[1], &e.timestamp_ms) || !kind) {
        ++res.rejected_browsing;
        continue;
      }
      e.kind = *kind;
      e.sku = f[3];
      e.page_url_id = f[4];
      if (validate_browsing(e)) {
        ++res.rejected_browsing;
        continue;
      }
      res.log.browsing.push_back(std::move(e));
    }
  }

  {
    std::ifstream in = open_or_fail(search_path, "load_dataset");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        ++res.rejected_search;
        continue;
      }
      SearchEvent e;
      try {
        e.session_id = j.at("session_id").get<std::string>();
        e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        e.query_vector = j.at("query_vector").get<std::vector<double>>();
        e.impressions = j.at("impressions").get<std::vector<std::string>>();
        e.clicked_skus = j.at("clicked_skus").get<std::vector<std::string>>();
      } catch (const json::exception&) {
        ++res.rejected_search;
        continue;
      }
      if (dims.d_query == 0 && !e.query_vector.empty())
        dims.d_query = static_cast<int>(e.query_vector.size());
      if (validate_search(e, dims.d_query)) {
        ++res.rejected_search;
        continue;
      }
      res.log.search.push_back(std::move(e));
    }
  }

  {
    std::ifstream in = open_or_fail(sku_path, "load_dataset");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 6 || f[0].empty()) {
        ++res.rejected_skus;
        continue;
      }
      SkuRecord r;
      r.sku = f[0];
      std::int64_t pb = 0;
      if (!f[1].empty()) {
        if (!parse_i64(f[1], &pb) || pb < 0) {
          ++res.rejected_skus;
          continue;
        }
      }
      r.price_bucket = static_cast<int>(pb);
      r.category = f[2];
      r.subcategory = f[3];
      if (!parse_vector(f[4], &r.description_vector) || !parse_vector(f[5], &r.image_vector)) {
        ++res.rejected_skus;
        continue;
      }
      if (!r.description_vector.empty()) {
        if (dims.d_desc == 0) dims.d_desc = static_cast<int>(r.description_vector.size());
        if (static_cast<int>(r.description_vector.size()) != dims.d_desc) {
          ++res.rejected_skus;
          continue;
        }
      }
      if (!r.image_vector.empty()) {
        if (dims.d_image == 0) dims.d_image = static_cast<int>(r.image_vector.size());
        if (static_cast<int>(r.image_vector.size()) != dims.d_image) {
          ++res.rejected_skus;
          continue;
        }
      }
      res.log.skus.push_back(std::move(r));
    }
  }
  return res;
}

void save_dataset(const SessionEventLog& log, const std::string& dir) {
  {
    std::ofstream out(dir + "/browsing.csv");
    if (!out) fail("save_dataset", "cannot write " + dir + "/browsing.csv");
    out << "session_id,timestamp_ms,event_kind,sku,page_url_id\n";
    for (const auto& e : log.browsing) {
      out << e.session_id << ',' << e.timestamp_ms << ',' << to_string(e.kind) << ',' << e.sku
          << ',' << e.page_url_id << '\n';
    }
  }
  {
    std::ofstream out(dir + "/search.jsonl");
    if (!out) fail("save_dataset", "cannot write " + dir + "/search.jsonl");
    for (const auto& e : log.search) {
      json j;
      j["session_id"] = e.session_id;
      j["timestamp_ms"] = e.timestamp_ms;
      j["query_vector"] = e.query_vector;
      j["impressions"] = e.impressions;
      j["clicked_skus"] = e.clicked_skus;
      out << j.dump() << '\n';
    }
  }
  {
    std::ofstream out(dir + "/skus.csv");
    if (!out) fail("save_dataset", "cannot write " + dir + "/skus.csv");
    out << "sku,price_bucket,category,subcategory,description_vector,image_vector\n";
    for (const auto& r : log.skus) {
      out << r.sku << ',' << r.price_bucket << ',' << r.category << ',' << r.subcategory << ','
          << format_vector(r.description_vector) << ',' << format_vector(r.image_vector) << '\n';
    }
  }
}

}  // namespace sessrec
