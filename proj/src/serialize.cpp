#include "rgrow/serialize.hpp"

#include "rgrow/errors.hpp"
#include "rgrow/text_io.hpp"

#include "json.hpp"

namespace rgrow {

using Json = nlohmann::ordered_json;

namespace {

template <typename T>
T field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(std::string("dendrogram: missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ParseError(std::string("dendrogram: field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string dendrogram_to_json(const Dendrogram& dendrogram) {
  Json doc;
  doc["leaf_count"] = dendrogram.leaf_count;
  doc["lambda"] = dendrogram.lambda;
  Json leaves = Json::array();
  for (const auto& leaf : dendrogram.leaves) {
    Json l;
    l["raw_error"] = leaf.raw_error;
    l["amplitude"] = leaf.amplitude;
    leaves.push_back(std::move(l));
  }
  doc["leaves"] = std::move(leaves);
  Json merges = Json::array();
  for (const auto& rec : dendrogram.merges) {
    Json m;
    m["step"] = rec.step;
    m["left"] = rec.left;
    m["right"] = rec.right;
    m["new"] = rec.merged;
    m["size"] = rec.size;
    m["raw_error"] = rec.raw_error;
    m["regularizer"] = rec.regularizer;
    m["amplitude"] = rec.amplitude;
    merges.push_back(std::move(m));
  }
  doc["merges"] = std::move(merges);
  return doc.dump(1) + "\n";
}

Dendrogram dendrogram_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("dendrogram: ") + e.what());
  }
  Dendrogram out;
  out.leaf_count = field<int>(doc, "leaf_count");
  out.lambda = field<double>(doc, "lambda");
  if (out.leaf_count < 0) throw ParseError("dendrogram: negative leaf_count");

  const Json& leaves = doc.contains("leaves") ? doc.at("leaves") : Json();
  if (!leaves.is_array() || static_cast<int>(leaves.size()) != out.leaf_count) {
    throw ParseError("dendrogram: 'leaves' must hold one entry per leaf");
  }
  for (const auto& l : leaves) out.leaves.push_back({field<double>(l, "raw_error"), field<double>(l, "amplitude")});

  const Json& merges = doc.contains("merges") ? doc.at("merges") : Json();
  if (!merges.is_array()) throw ParseError("dendrogram: 'merges' must be an array");
  std::vector<int> sizes(static_cast<std::size_t>(out.leaf_count), 1);
  std::vector<char> consumed(static_cast<std::size_t>(out.leaf_count), 0);
  for (const auto& m : merges) {
    MergeRecord rec;
    rec.step = field<int>(m, "step");
    rec.left = field<int>(m, "left");
    rec.right = field<int>(m, "right");
    rec.merged = field<int>(m, "new");
    rec.size = field<int>(m, "size");
    rec.raw_error = field<double>(m, "raw_error");
    rec.regularizer = field<double>(m, "regularizer");
    rec.amplitude = field<double>(m, "amplitude");
    const int expected_id = out.leaf_count + static_cast<int>(out.merges.size());
    if (rec.step != static_cast<int>(out.merges.size()) || rec.merged != expected_id) {
      throw ParseError("dendrogram: merge " + std::to_string(out.merges.size()) + " is out of order");
    }
    for (ClusterId input : {rec.left, rec.right}) {
      if (input < 0 || input >= expected_id || consumed[static_cast<std::size_t>(input)]) {
        throw ParseError("dendrogram: merge " + std::to_string(rec.step) + " has invalid input " + std::to_string(input));
      }
    }
    if (rec.left >= rec.right) throw ParseError("dendrogram: merge inputs must satisfy left < right");
    if (rec.size != sizes[static_cast<std::size_t>(rec.left)] + sizes[static_cast<std::size_t>(rec.right)]) {
      throw ParseError("dendrogram: merge " + std::to_string(rec.step) + " size mismatch");
    }
    if (!(rec.raw_error >= 0.0)) throw ParseError("dendrogram: negative raw_error");
    consumed[static_cast<std::size_t>(rec.left)] = 1;
    consumed[static_cast<std::size_t>(rec.right)] = 1;
    consumed.push_back(0);
    sizes.push_back(rec.size);
    out.merges.push_back(rec);
  }
  for (std::size_t c = 0; c < consumed.size(); ++c) {
    if (!consumed[c]) out.roots.push_back(static_cast<ClusterId>(c));
  }
  return out;
}

void save_dendrogram(const Dendrogram& dendrogram, const std::filesystem::path& path) {
  write_text_file(path, dendrogram_to_json(dendrogram));
}

Dendrogram load_dendrogram(const std::filesystem::path& path) { return dendrogram_from_json(read_text_file(path)); }

std::string curves_to_csv(const std::vector<GrowingRegion>& regions) {
  std::string out = "region_id,cluster_id,size,raw_error,amplitude\n";
  for (const auto& region : regions) {
    for (const auto& p : region.trajectory) {
      out += std::to_string(region.region_id) + ',' + std::to_string(p.cluster_id) + ',' + std::to_string(p.size) + ',' +
             format_double(p.raw_error) + ',' + format_double(p.amplitude) + '\n';
    }
  }
  return out;
}

std::string reports_to_json(const std::vector<RegionReport>& reports) {
  Json doc = Json::array();
  for (const auto& r : reports) {
    Json j;
    j["region_id"] = r.region_id;
    j["rank"] = r.rank;
    j["best_error"] = r.best_error;
    j["best_size"] = r.best_size;
    j["size_lower"] = r.size_lower ? Json(*r.size_lower) : Json(nullptr);
    j["size_upper"] = r.size_upper ? Json(*r.size_upper) : Json(nullptr);
    j["jaccard"] = r.jaccard ? Json(*r.jaccard) : Json(nullptr);
    j["vertices"] = r.vertices;
    doc.push_back(std::move(j));
  }
  return doc.dump(1) + "\n";
}

}  // namespace rgrow
