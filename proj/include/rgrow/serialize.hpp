#pragma once

#include "rgrow/analysis.hpp"
#include "rgrow/clustering.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rgrow {

// {"leaf_count", "lambda", "leaves": [{raw_error, amplitude}...],
//  "merges": [{step, left, right, new, size, raw_error, regularizer, amplitude}...]}
// Keys in fixed order, doubles in shortest round-trip form.
std::string dendrogram_to_json(const Dendrogram& dendrogram);
// Validates ids, sizes and merge order; throws ParseError.
Dendrogram dendrogram_from_json(const std::string& text);

void save_dendrogram(const Dendrogram& dendrogram, const std::filesystem::path& path);
Dendrogram load_dendrogram(const std::filesystem::path& path);

// Header "region_id,cluster_id,size,raw_error,amplitude", one row per trajectory point.
std::string curves_to_csv(const std::vector<GrowingRegion>& regions);

// [{region_id, rank, best_error, best_size, size_lower, size_upper, jaccard, vertices}...]
// Missing bounds and Jaccard are null.
std::string reports_to_json(const std::vector<RegionReport>& reports);

}  // namespace rgrow
