#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "intentgc/graph.hpp"
#include "intentgc/tape.hpp"
#include "intentgc/tensor.hpp"

namespace intentgc {

enum class FieldKind { continuous, discrete_single, discrete_multi };

struct FeatureField {
  std::string name;
  FieldKind kind = FieldKind::continuous;
  std::uint32_t width = 1;       ///< continuous only
  std::uint32_t vocab_size = 0;  ///< discrete only; row 0 is the out-of-vocabulary bucket
  std::uint32_t embed_dim = 0;   ///< discrete only

  std::uint32_t encoded_width() const noexcept { return kind == FieldKind::continuous ? width : embed_dim; }
  bool discrete() const noexcept { return kind != FieldKind::continuous; }

  friend bool operator==(const FeatureField&, const FeatureField&) = default;
};

/// Ordered field lists for the user and item roles.
struct FeatureSchema {
  std::vector<FeatureField> user;
  std::vector<FeatureField> item;

  const std::vector<FeatureField>& fields(Side side) const { return side == Side::user ? user : item; }
  std::vector<FeatureField>& fields(Side side) { return side == Side::user ? user : item; }
  std::uint32_t encoded_width(Side side) const;
  /// Throws SchemaMismatch if a field is malformed or a role's width differs from expected_width.
  void validate(std::uint32_t expected_width) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// One field's raw value: the continuous values, or the discrete ids.
struct RawValue {
  std::vector<double> continuous;
  std::vector<std::uint32_t> ids;
};

/// Raw fields of one node, aligned with the role's schema fields.
struct RawRecord {
  std::vector<RawValue> fields;
};

struct RawFeatures {
  std::vector<RawRecord> users;
  std::vector<RawRecord> items;

  const std::vector<RawRecord>& records(Side side) const { return side == Side::user ? users : items; }
};

/// Record used for nodes absent from a feature file: zeros, OOV ids, empty sets.
RawRecord default_record(const std::vector<FeatureField>& fields);

/// `#field <role> <name> continuous <width>` or `#field <role> <name> discrete|multi <vocab> <dim>`.
std::string format_schema(const FeatureSchema& schema);
FeatureSchema parse_schema(const std::string& text, const std::string& source = "<schema>");

/// Reads a feature file: `#field` header lines followed by
/// `typeName<TAB>nodeId<TAB>field=value(,value)*...` records. Node ids are
/// resolved through the graph's name tables.
struct FeatureFile {
  FeatureSchema schema;
  RawFeatures features;
};
FeatureFile load_features(const std::filesystem::path& path, const TypedGraph& graph);
FeatureFile parse_features(const std::string& text, const TypedGraph& graph, const std::string& source = "<features>");
std::string format_features(const FeatureSchema& schema, const RawFeatures& features, const TypedGraph& graph);

/// Encodes one record: continuous values copied, discrete-single replaced by
/// its table row, discrete-multi by the mean of member rows (zeros if empty),
/// concatenated in schema order. Ids >= vocab_size map to row 0.
/// `tables` holds one vocab_size x embed_dim table per discrete field, in order.
template <class Real>
std::vector<Real> encode_features(const RawRecord& record, const std::vector<FeatureField>& fields,
                                  std::span<const Tensor<Real>> tables);

/// Batched encoding on a tape, with gradients flowing into the table leaves.
template <class Real>
Var encode_features(Tape<Real>& tape, std::span<const std::uint32_t> nodes, const std::vector<RawRecord>& records,
                    const std::vector<FeatureField>& fields, std::span<const Var> tables);

}  // namespace intentgc
