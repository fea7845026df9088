#pragma once

#include <cstdint>
#include <string>

#include "sessrec/events.hpp"

namespace sessrec {

struct LoadResult {
  SessionEventLog log;
  std::int64_t rejected_browsing = 0;
  std::int64_t rejected_search = 0;
  std::int64_t rejected_skus = 0;
};

// Reads the three-table dataset: browsing and SKU tables as CSV with header,
// search table as JSON-lines. Rows violating their type invariants are
// rejected and counted, not fatal. Missing files throw Error("load_dataset").
// Vector dimensions are fixed by the first row carrying each vector; later
// rows with a different dimension are rejected.
LoadResult load_dataset(const std::string& browsing_path, const std::string& search_path,
                        const std::string& sku_path);

// Writes the three tables into `dir` as browsing.csv, search.jsonl, skus.csv.
// Vector-valued CSV fields hold space-separated decimal values.
void save_dataset(const SessionEventLog& log, const std::string& dir);

}  // namespace sessrec
