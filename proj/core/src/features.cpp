#include "intentgc/features.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "intentgc/error.hpp"
#include "text_util.hpp"

namespace intentgc {

std::uint32_t FeatureSchema::encoded_width(Side side) const {
  std::uint32_t w = 0;
  for (const auto& f : fields(side)) w += f.encoded_width();
  return w;
}

void FeatureSchema::validate(std::uint32_t expected_width) const {
  for (Side side : {Side::user, Side::item}) {
    for (const auto& f : fields(side)) {
      if (f.name.empty()) throw SchemaMismatch("feature field with empty name");
      if (f.kind == FieldKind::continuous && f.width == 0)
        throw SchemaMismatch("continuous field '" + f.name + "' has zero width");
      if (f.discrete() && f.vocab_size < 1)
        throw SchemaMismatch("discrete field '" + f.name + "' needs vocab_size >= 1");
      if (f.discrete() && f.embed_dim < 1)
        throw SchemaMismatch("discrete field '" + f.name + "' needs embed_dim >= 1");
    }
    const auto w = encoded_width(side);
    if (w != expected_width)
      throw SchemaMismatch(to_string(side) + " features encode to width " + std::to_string(w) + ", expected " +
                           std::to_string(expected_width));
  }
}

RawRecord default_record(const std::vector<FeatureField>& fields) {
  RawRecord r;
  r.fields.resize(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].kind == FieldKind::continuous) r.fields[i].continuous.assign(fields[i].width, 0.0);
    if (fields[i].kind == FieldKind::discrete_single) r.fields[i].ids = {0};
  }
  return r;
}

namespace {

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::continuous:
      return "continuous";
    case FieldKind::discrete_single:
      return "discrete";
    case FieldKind::discrete_multi:
      return "multi";
  }
  return "continuous";
}

std::uint32_t parse_u32_field(const std::string& s, const std::string& source, std::size_t line) {
  auto v = text::parse_u64(s);
  if (!v || *v > std::numeric_limits<std::uint32_t>::max())
    throw ParseError(source, line, "expected a non-negative integer, got '" + s + "'");
  return static_cast<std::uint32_t>(*v);
}

/// Handles one `#field` line; returns false if the line is not a field header.
bool parse_field_line(const std::string& line, FeatureSchema& schema, const std::string& source, std::size_t lineno) {
  auto parts = text::split(line, ' ', true);
  if (parts.empty() || parts[0] != "#field") return false;
  if (parts.size() < 5) throw ParseError(source, lineno, "expected '#field <role> <name> <kind> <params>'");
  Side side;
  try {
    side = parse_side(parts[1]);
  } catch (const ConfigError&) {
    throw ParseError(source, lineno, "unknown role '" + parts[1] + "'");
  }
  FeatureField f;
  f.name = parts[2];
  const std::string& kind = parts[3];
  if (kind == "continuous") {
    if (parts.size() != 5) throw ParseError(source, lineno, "continuous fields take one width");
    f.kind = FieldKind::continuous;
    f.width = parse_u32_field(parts[4], source, lineno);
  } else if (kind == "discrete" || kind == "multi") {
    if (parts.size() != 6) throw ParseError(source, lineno, "discrete fields take '<vocab_size> <embed_dim>'");
    f.kind = kind == "discrete" ? FieldKind::discrete_single : FieldKind::discrete_multi;
    f.vocab_size = parse_u32_field(parts[4], source, lineno);
    f.embed_dim = parse_u32_field(parts[5], source, lineno);
    if (f.vocab_size < 1) throw SchemaMismatch("field '" + f.name + "' needs vocab_size >= 1");
  } else {
    throw ParseError(source, lineno, "unknown field kind '" + kind + "'");
  }
  for (const auto& existing : schema.fields(side))
    if (existing.name == f.name) throw ParseError(source, lineno, "duplicate field '" + f.name + "'");
  schema.fields(side).push_back(std::move(f));
  return true;
}

}  // namespace

std::string format_schema(const FeatureSchema& schema) {
  std::ostringstream out;
  for (Side side : {Side::user, Side::item}) {
    for (const auto& f : schema.fields(side)) {
      out << "#field " << to_string(side) << ' ' << f.name << ' ' << kind_name(f.kind);
      if (f.kind == FieldKind::continuous)
        out << ' ' << f.width;
      else
        out << ' ' << f.vocab_size << ' ' << f.embed_dim;
      out << '\n';
    }
  }
  return out.str();
}

FeatureSchema parse_schema(const std::string& text, const std::string& source) {
  FeatureSchema schema;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty()) continue;
    if (!parse_field_line(line, schema, source, lineno))
      throw ParseError(source, lineno, "expected a '#field' line");
  }
  return schema;
}

FeatureFile parse_features(const std::string& content, const TypedGraph& graph, const std::string& source) {
  FeatureFile file;
  std::istringstream in(content);
  std::string raw;
  std::size_t lineno = 0;
  bool records_started = false;
  std::vector<bool> seen[2];

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (records_started) throw ParseError(source, lineno, "#field headers must precede records");
      if (!parse_field_line(line, file.schema, source, lineno))
        throw ParseError(source, lineno, "unknown header '" + line + "'");
      continue;
    }
    if (!records_started) {
      records_started = true;
      file.features.users.assign(graph.user_count(), default_record(file.schema.user));
      file.features.items.assign(graph.item_count(), default_record(file.schema.item));
      seen[0].assign(graph.user_count(), false);
      seen[1].assign(graph.item_count(), false);
    }

    const auto cols = text::split(line, '\t', false);
    if (cols.size() < 2) throw ParseError(source, lineno, "expected 'typeName<TAB>nodeId<TAB>field=value...'");
    Side side;
    if (cols[0] == "user") {
      side = Side::user;
    } else if (cols[0] == "item") {
      side = Side::item;
    } else {
      throw ParseError(source, lineno, "features are only defined for user and item nodes, got '" + cols[0] + "'");
    }
    const auto index = graph.names(type_of(side)).find(cols[1]);
    if (!index)
      throw IndexOutOfRange(source + ":" + std::to_string(lineno) + ": unknown " + cols[0] + " id '" + cols[1] + "'");
    const int s = side == Side::user ? 0 : 1;
    if (seen[s][*index]) throw ParseError(source, lineno, "duplicate record for '" + cols[1] + "'");
    seen[s][*index] = true;

    const auto& fields = file.schema.fields(side);
    if (cols.size() - 2 != fields.size())
      throw SchemaMismatch(source + ":" + std::to_string(lineno) + ": record has " + std::to_string(cols.size() - 2) +
                           " fields, schema has " + std::to_string(fields.size()));
    RawRecord record;
    record.fields.resize(fields.size());
    std::vector<bool> filled(fields.size(), false);
    for (std::size_t c = 2; c < cols.size(); ++c) {
      const auto eq = cols[c].find('=');
      if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'field=value', got '" + cols[c] + "'");
      const std::string name = cols[c].substr(0, eq);
      const std::string value = cols[c].substr(eq + 1);
      std::size_t f = 0;
      while (f < fields.size() && fields[f].name != name) ++f;
      if (f == fields.size())
        throw SchemaMismatch(source + ":" + std::to_string(lineno) + ": unknown field '" + name + "'");
      if (filled[f]) throw ParseError(source, lineno, "field '" + name + "' repeated");
      filled[f] = true;
      const auto values = value.empty() ? std::vector<std::string>{} : text::split(value, ',', false);
      const FeatureField& field = fields[f];
      RawValue& rv = record.fields[f];
      if (field.kind == FieldKind::continuous) {
        if (values.size() != field.width)
          throw SchemaMismatch(source + ":" + std::to_string(lineno) + ": field '" + name + "' expects " +
                               std::to_string(field.width) + " values");
        for (const auto& v : values) {
          auto d = text::parse_double(v);
          if (!d) throw ParseError(source, lineno, "bad number '" + v + "'");
          if (!std::isfinite(*d))
            throw NumericError(source + ":" + std::to_string(lineno) + ": non-finite value in '" + name + "'");
          rv.continuous.push_back(*d);
        }
      } else {
        if (field.kind == FieldKind::discrete_single && values.size() != 1)
          throw SchemaMismatch(source + ":" + std::to_string(lineno) + ": field '" + name + "' takes one id");
        for (const auto& v : values) {
          auto id = text::parse_i64(v);
          if (!id) throw ParseError(source, lineno, "bad id '" + v + "'");
          const bool in_vocab = *id >= 0 && *id < static_cast<std::int64_t>(field.vocab_size);
          rv.ids.push_back(in_vocab ? static_cast<std::uint32_t>(*id) : 0u);
        }
      }
    }
    (side == Side::user ? file.features.users : file.features.items)[*index] = std::move(record);
  }
  if (!records_started) {
    file.features.users.assign(graph.user_count(), default_record(file.schema.user));
    file.features.items.assign(graph.item_count(), default_record(file.schema.item));
  }
  return file;
}

FeatureFile load_features(const std::filesystem::path& path, const TypedGraph& graph) {
  return parse_features(read_text_file(path), graph, path.string());
}

std::string format_features(const FeatureSchema& schema, const RawFeatures& features, const TypedGraph& graph) {
  std::ostringstream out;
  out << format_schema(schema);
  for (Side side : {Side::user, Side::item}) {
    const auto& records = features.records(side);
    const auto& fields = schema.fields(side);
    for (std::uint32_t n = 0; n < records.size(); ++n) {
      out << to_string(side) << '\t' << graph.names(type_of(side)).name(n);
      for (std::size_t f = 0; f < fields.size(); ++f) {
        out << '\t' << fields[f].name << '=';
        const auto& rv = records[n].fields[f];
        bool first = true;
        if (fields[f].kind == FieldKind::continuous) {
          for (double v : rv.continuous) {
            if (!first) out << ',';
            out << text::format_double(v);
            first = false;
          }
        } else {
          for (auto id : rv.ids) {
            if (!first) out << ',';
            out << id;
            first = false;
          }
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

template <class Real>
std::vector<Real> encode_features(const RawRecord& record, const std::vector<FeatureField>& fields,
                                  std::span<const Tensor<Real>> tables) {
  if (record.fields.size() != fields.size()) throw SchemaMismatch("record field count differs from schema");
  std::vector<Real> out;
  std::size_t table = 0;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const auto& field = fields[f];
    const auto& rv = record.fields[f];
    if (field.kind == FieldKind::continuous) {
      if (rv.continuous.size() != field.width) throw SchemaMismatch("field '" + field.name + "' width");
      for (double v : rv.continuous) {
        if (!std::isfinite(v)) throw NumericError("non-finite continuous value in '" + field.name + "'");
        out.push_back(static_cast<Real>(v));
      }
      continue;
    }
    if (table >= tables.size()) throw SchemaMismatch("missing embedding table for '" + field.name + "'");
    const Tensor<Real>& t = tables[table++];
    require_shape(t.rows() == field.vocab_size && t.cols() == field.embed_dim, "embedding table for " + field.name);
    std::vector<Real> acc(field.embed_dim, Real(0));
    for (auto id : rv.ids) {
      const auto row = t.row(id < field.vocab_size ? id : 0);
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += row[c];
    }
    if (!rv.ids.empty())
      for (auto& v : acc) v /= static_cast<Real>(rv.ids.size());
    out.insert(out.end(), acc.begin(), acc.end());
  }
  return out;
}

template <class Real>
Var encode_features(Tape<Real>& tape, std::span<const std::uint32_t> nodes, const std::vector<RawRecord>& records,
                    const std::vector<FeatureField>& fields, std::span<const Var> tables) {
  std::vector<Var> parts;
  std::size_t table = 0;
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const auto& field = fields[f];
    if (field.kind == FieldKind::continuous) {
      Tensor<Real> block(nodes.size(), field.width);
      for (std::size_t r = 0; r < nodes.size(); ++r) {
        const auto& values = records.at(nodes[r]).fields.at(f).continuous;
        if (values.size() != field.width) throw SchemaMismatch("field '" + field.name + "' width");
        for (std::size_t c = 0; c < field.width; ++c) block(r, c) = static_cast<Real>(values[c]);
      }
      parts.push_back(tape.constant(std::move(block)));
      continue;
    }
    if (table >= tables.size()) throw SchemaMismatch("missing embedding table for '" + field.name + "'");
    std::vector<std::vector<std::uint32_t>> ids(nodes.size());
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      const auto& raw = records.at(nodes[r]).fields.at(f).ids;
      ids[r].reserve(raw.size());
      for (auto id : raw) ids[r].push_back(id < field.vocab_size ? id : 0u);
    }
    parts.push_back(tape.embedding_mean(tables[table++], std::move(ids)));
  }
  if (parts.empty()) throw SchemaMismatch("schema has no fields");
  if (parts.size() == 1) return parts[0];
  return tape.concat_cols(parts);
}

template std::vector<float> encode_features(const RawRecord&, const std::vector<FeatureField>&,
                                            std::span<const Tensor<float>>);
template std::vector<double> encode_features(const RawRecord&, const std::vector<FeatureField>&,
                                             std::span<const Tensor<double>>);
template Var encode_features(Tape<float>&, std::span<const std::uint32_t>, const std::vector<RawRecord>&,
                             const std::vector<FeatureField>&, std::span<const Var>);
template Var encode_features(Tape<double>&, std::span<const std::uint32_t>, const std::vector<RawRecord>&,
                             const std::vector<FeatureField>&, std::span<const Var>);
template Var encode_features(Tape<long double>&, std::span<const std::uint32_t>, const std::vector<RawRecord>&,
                             const std::vector<FeatureField>&, std::span<const Var>);

}  // namespace intentgc
