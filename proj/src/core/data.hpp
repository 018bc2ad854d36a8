#ifndef ZSLE_DATA_HPP
#define ZSLE_DATA_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace zsle {

// Class-by-attribute matrix. Row r holds the attribute likelihood vector of
// class class_ids[r]; the ordering is the one the sidecar manifest defines.
struct SemanticMatrix {
  Tensor values;                       // C x M
  std::vector<std::int64_t> class_ids;  // length C

  std::size_t num_classes() const { return values.rows(); }
  std::size_t num_attributes() const { return values.cols(); }
  int row_of(std::int64_t class_id) const;  // -1 if absent
};

struct ClassSplit {
  std::set<std::int64_t> seen;
  std::set<std::int64_t> unseen;
};

enum class DatasetRole { Train, TestSeen, TestUnseen };

const char* role_name(DatasetRole role);

// One sample: N region feature rows plus one pooled global feature.
struct FeatureRecord {
  Tensor local;                    // N x D
  std::vector<float> global_vec;   // D
  std::int64_t label = 0;
};

struct FeatureDataset {
  std::vector<FeatureRecord> records;
  std::size_t regions = 0;   // N
  std::size_t dim = 0;       // D
  DatasetRole role = DatasetRole::Train;
};

// Feature file layout (little-endian):
//   "DFZ1" | u32 version=1 | u32 record_count | u32 N | u32 D
//   per record: u32 label | D f32 global | N*D f32 local row-major
void write_feature_file(const FeatureDataset& ds, const std::string& path);
FeatureDataset read_feature_file(const std::string& path, DatasetRole role);

// Semantic matrix file: u32 C | u32 M | C*M f32 row-major. The manifest is a
// UTF-8 text file with one "index<TAB>class_id" line per row.
void write_semantic_matrix(const SemanticMatrix& sm, const std::string& matrix_path,
                           const std::string& manifest_path);
SemanticMatrix load_semantic_matrix(const std::string& matrix_path,
                                    const std::string& manifest_path);

// Split file: JSON {"seen": [...], "unseen": [...]}.
void write_split(const ClassSplit& split, const std::string& path);
ClassSplit read_split(const std::string& path);

// Checks: seen/unseen disjoint and non-empty, both subsets of the matrix's
// class ids, and every train label seen. Throws ValidationError naming the
// offending class id.
void validate_split(const ClassSplit& split, const SemanticMatrix& sm,
                    const FeatureDataset& train);

// In-place per-record L2 normalization of each region row and the global
// vector (eps-guarded).
void l2_normalize_records(FeatureDataset& ds);

// Row bookkeeping shared by training and inference: stable seen/unseen row
// lists in manifest order.
struct ClassIndex {
  std::vector<std::int64_t> class_ids;  // row -> id (copy of matrix order)
  std::vector<char> is_seen;            // per row
  std::vector<std::size_t> seen_rows;   // manifest order
  std::vector<std::size_t> unseen_rows;

  static ClassIndex build(const SemanticMatrix& sm, const ClassSplit& split);
  int seen_position(std::int64_t class_id) const;  // index into seen_rows, -1 if not seen
};

}  // namespace zsle

#endif
