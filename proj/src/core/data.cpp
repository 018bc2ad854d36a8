#include "data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace zsle {

namespace {

constexpr char kFeatureMagic[4] = {'D', 'F', 'Z', '1'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

void write_f32(std::ostream& os, const float* v, std::size_t n) {
  os.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * 4));
}

std::uint32_t read_u32(std::istream& is, const std::string& path, const char* what) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4))
    throw IoError(path + ": truncated while reading " + what);
  return v;
}

void read_f32(std::istream& is, float* v, std::size_t n, const std::string& path,
              const char* what) {
  if (!is.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * 4)))
    throw IoError(path + ": truncated while reading " + what);
}

void check_finite(const float* v, std::size_t n, const std::string& path) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) throw IoError(path + ": non-finite value at offset " + std::to_string(i));
}

}  // namespace

int SemanticMatrix::row_of(std::int64_t class_id) const {
  for (std::size_t r = 0; r < class_ids.size(); ++r)
    if (class_ids[r] == class_id) return static_cast<int>(r);
  return -1;
}

const char* role_name(DatasetRole role) {
  switch (role) {
    case DatasetRole::Train: return "train";
    case DatasetRole::TestSeen: return "test-seen";
    case DatasetRole::TestUnseen: return "test-unseen";
  }
  return "?";
}

void write_feature_file(const FeatureDataset& ds, const std::string& path) {
  for (const FeatureRecord& rec : ds.records) {
    if (rec.local.rows() != ds.regions || rec.local.cols() != ds.dim ||
        rec.global_vec.size() != ds.dim)
      throw ValidationError(path + ": record shape disagrees with dataset N/D metadata");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kFeatureMagic, 4);
  write_u32(os, kFeatureVersion);
  write_u32(os, static_cast<std::uint32_t>(ds.records.size()));
  write_u32(os, static_cast<std::uint32_t>(ds.regions));
  write_u32(os, static_cast<std::uint32_t>(ds.dim));
  for (const FeatureRecord& rec : ds.records) {
    write_u32(os, static_cast<std::uint32_t>(rec.label));
    write_f32(os, rec.global_vec.data(), rec.global_vec.size());
    write_f32(os, rec.local.data.data(), rec.local.data.size());
  }
  if (!os) throw IoError("write failed: " + path);
}

FeatureDataset read_feature_file(const std::string& path, DatasetRole role) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  char magic[4];
  if (!is.read(magic, 4)) throw IoError(path + ": truncated header");
  if (std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a feature file");
  const std::uint32_t version = read_u32(is, path, "version");
  if (version != kFeatureVersion)
    throw IoError(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32(is, path, "record count");
  const std::uint32_t n = read_u32(is, path, "region count");
  const std::uint32_t d = read_u32(is, path, "feature dim");

  // verify payload length before deserializing
  const std::streamoff header_end = is.tellg();
  is.seekg(0, std::ios::end);
  const std::streamoff actual = is.tellg() - header_end;
  const std::streamoff expected =
      static_cast<std::streamoff>(count) * (4 + 4ll * d + 4ll * n * d);
  if (actual != expected)
    throw IoError(path + ": payload length mismatch, expected " + std::to_string(expected) +
                  " bytes, got " + std::to_string(actual));
  is.seekg(header_end);

  FeatureDataset ds;
  ds.regions = n;
  ds.dim = d;
  ds.role = role;
  ds.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    rec.label = static_cast<std::int64_t>(read_u32(is, path, "record label"));
    rec.global_vec.resize(d);
    read_f32(is, rec.global_vec.data(), d, path, "global feature");
    rec.local = make_matrix<float>(n, d);
    read_f32(is, rec.local.data.data(), rec.local.data.size(), path, "local features");
    check_finite(rec.global_vec.data(), d, path);
    check_finite(rec.local.data.data(), rec.local.data.size(), path);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_semantic_matrix(const SemanticMatrix& sm, const std::string& matrix_path,
                           const std::string& manifest_path) {
  if (sm.class_ids.size() != sm.values.rows())
    throw ValidationError("semantic matrix row count differs from class id count");
  std::ofstream os(matrix_path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + matrix_path);
  write_u32(os, static_cast<std::uint32_t>(sm.values.rows()));
  write_u32(os, static_cast<std::uint32_t>(sm.values.cols()));
  write_f32(os, sm.values.data.data(), sm.values.data.size());
  if (!os) throw IoError("write failed: " + matrix_path);

  std::ofstream ms(manifest_path, std::ios::trunc);
  if (!ms) throw IoError("cannot open for writing: " + manifest_path);
  for (std::size_t r = 0; r < sm.class_ids.size(); ++r)
    ms << r << '\t' << sm.class_ids[r] << '\n';
  if (!ms) throw IoError("write failed: " + manifest_path);
}

SemanticMatrix load_semantic_matrix(const std::string& matrix_path,
                                    const std::string& manifest_path) {
  std::ifstream is(matrix_path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + matrix_path);
  const std::uint32_t c = read_u32(is, matrix_path, "class count");
  const std::uint32_t m = read_u32(is, matrix_path, "attribute count");
  SemanticMatrix sm;
  sm.values = make_matrix<float>(c, m);
  read_f32(is, sm.values.data.data(), sm.values.data.size(), matrix_path, "values");
  for (float v : sm.values.data)
    if (std::isnan(v)) throw IoError(matrix_path + ": NaN entry in semantic matrix");

  std::ifstream ms(manifest_path);
  if (!ms) throw IoError("cannot open: " + manifest_path);
  std::map<std::size_t, std::int64_t> rows;
  std::set<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ms, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t idx;
    std::int64_t id;
    if (!(ls >> idx >> id))
      throw IoError(manifest_path + ": malformed line " + std::to_string(line_no));
    if (rows.count(idx))
      throw IoError(manifest_path + ": duplicate row index " + std::to_string(idx));
    if (!ids.insert(id).second)
      throw IoError(manifest_path + ": duplicate class id " + std::to_string(id));
    rows[idx] = id;
  }
  if (rows.size() != c)
    throw IoError(manifest_path + ": manifest lists " + std::to_string(rows.size()) +
                  " classes but matrix has " + std::to_string(c) + " rows");
  sm.class_ids.resize(c);
  for (const auto& [idx, id] : rows) {
    if (idx >= c)
      throw IoError(manifest_path + ": row index " + std::to_string(idx) + " out of range");
    sm.class_ids[idx] = id;
  }
  return sm;
}

void write_split(const ClassSplit& split, const std::string& path) {
  nlohmann::json j;
  j["seen"] = split.seen;
  j["unseen"] = split.unseen;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path);
}

ClassSplit read_split(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  if (!j.contains("seen") || !j.contains("unseen"))
    throw IoError(path + ": split file must contain \"seen\" and \"unseen\" arrays");
  ClassSplit split;
  for (const auto& v : j["seen"]) split.seen.insert(v.get<std::int64_t>());
  for (const auto& v : j["unseen"]) split.unseen.insert(v.get<std::int64_t>());
  return split;
}

void validate_split(const ClassSplit& split, const SemanticMatrix& sm,
                    const FeatureDataset& train) {
  if (split.seen.empty()) throw ValidationError("split: seen class set is empty");
  if (split.unseen.empty()) throw ValidationError("split: unseen class set is empty");
  for (std::int64_t id : split.seen)
    if (split.unseen.count(id))
      throw ValidationError("split: class " + std::to_string(id) + " is both seen and unseen");
  for (std::int64_t id : split.seen)
    if (sm.row_of(id) < 0)
      throw ValidationError("split: seen class " + std::to_string(id) +
                            " missing from semantic matrix");
  for (std::int64_t id : split.unseen)
    if (sm.row_of(id) < 0)
      throw ValidationError("split: unseen class " + std::to_string(id) +
                            " missing from semantic matrix");
  for (const FeatureRecord& rec : train.records)
    if (!split.seen.count(rec.label))
      throw ValidationError("train record labeled with non-seen class " +
                            std::to_string(rec.label));
}

void l2_normalize_records(FeatureDataset& ds) {
  auto normalize = [](float* v, std::size_t n) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += static_cast<double>(v[i]) * v[i];
    const double denom = std::max(std::sqrt(sq), 1e-12);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(v[i] / denom);
  };
  for (FeatureRecord& rec : ds.records) {
    for (std::size_t r = 0; r < rec.local.rows(); ++r)
      normalize(rec.local.data.data() + r * rec.local.cols(), rec.local.cols());
    normalize(rec.global_vec.data(), rec.global_vec.size());
  }
}

ClassIndex ClassIndex::build(const SemanticMatrix& sm, const ClassSplit& split) {
  ClassIndex ci;
  ci.class_ids = sm.class_ids;
  ci.is_seen.resize(sm.num_classes(), 0);
  for (std::size_t r = 0; r < sm.num_classes(); ++r) {
    if (split.seen.count(sm.class_ids[r])) {
      ci.is_seen[r] = 1;
      ci.seen_rows.push_back(r);
    } else if (split.unseen.count(sm.class_ids[r])) {
      ci.unseen_rows.push_back(r);
    }
  }
  return ci;
}

int ClassIndex::seen_position(std::int64_t class_id) const {
  for (std::size_t i = 0; i < seen_rows.size(); ++i)
    if (class_ids[seen_rows[i]] == class_id) return static_cast<int>(i);
  return -1;
}

}  // namespace zsle
