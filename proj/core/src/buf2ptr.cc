#include "permalloc/buf2ptr.h"

#include <algorithm>
#include <set>

#include "permalloc/error.h"

namespace permalloc::buf2ptr {

std::optional<Annotation> Annotations::first() const {
  for (Annotation a : kAllAnnotations) {
    if (has(a)) return a;
  }
  return std::nullopt;
}

std::string_view AnnotationName(Annotation a) {
  switch (a) {
    case Annotation::kCastTarget: return "cast_target";
    case Annotation::kAnonymousAlloc: return "anonymous_alloc";
    case Annotation::kReturnedByValue: return "returned_by_value";
    case Annotation::kVla: return "vla";
    case Annotation::kMacroWrapped: return "macro_wrapped";
  }
  return "?";
}

std::optional<Annotation> ParseAnnotation(std::string_view name) {
  for (Annotation a : kAllAnnotations) {
    if (AnnotationName(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view ClassificationName(Classification c) {
  switch (c) {
    case Classification::kNonPromotable: return "non_promotable";
    case Classification::kPromotable: return "promotable";
    case Classification::kIncompatible: return "incompatible";
  }
  return "?";
}

Field Field::Scalar(std::string name, std::string type, Annotations a) {
  return Field{std::move(name), FieldKind::kScalar, std::move(type), 0, nullptr, a};
}

Field Field::Pointer(std::string name, std::string target, Annotations a) {
  return Field{std::move(name), FieldKind::kPointer, std::move(target), 0, nullptr, a};
}

Field Field::Array(std::string name, std::string elem, std::uint64_t length, Annotations a) {
  return Field{std::move(name), FieldKind::kArray, std::move(elem), length, nullptr, a};
}

Field Field::Nested(std::string name, StructSchema schema, Annotations a) {
  std::string type = schema.name;
  return Field{std::move(name), FieldKind::kNested, std::move(type), 0,
               std::make_shared<const StructSchema>(std::move(schema)), a};
}

bool operator==(const Field& a, const Field& b) {
  if (a.name != b.name || a.kind != b.kind || a.type != b.type || a.length != b.length ||
      a.annotations != b.annotations) {
    return false;
  }
  if (a.nested == nullptr || b.nested == nullptr) return a.nested == b.nested;
  return *a.nested == *b.nested;
}

bool operator==(const StructSchema& a, const StructSchema& b) {
  return a.name == b.name && a.fields == b.fields && a.annotations == b.annotations &&
         a.promoted == b.promoted;
}

namespace {

void ValidateAt(const StructSchema& s, const std::string& prefix) {
  const std::string path = prefix.empty() ? s.name : prefix + "." + s.name;
  auto bad = [&](const std::string& where, const std::string& why) {
    Fail(ErrorCode::kSchemaError, where + ": " + why);
  };
  if (s.name.empty()) bad(prefix.empty() ? "<record>" : prefix, "record name is empty");
  if (s.fields.empty()) bad(path, "record has no fields");

  std::set<std::string> seen;
  for (const Field& f : s.fields) {
    const std::string fpath = path + "." + (f.name.empty() ? "<unnamed>" : f.name);
    if (f.name.empty()) bad(fpath, "field name is empty");
    if (!seen.insert(f.name).second) bad(fpath, "duplicate field name");
    switch (f.kind) {
      case FieldKind::kScalar:
      case FieldKind::kPointer:
        if (f.type.empty()) bad(fpath, "missing type");
        break;
      case FieldKind::kArray:
        if (f.type.empty()) bad(fpath, "missing element type");
        if (f.length < 1) bad(fpath, "array length must be >= 1");
        break;
      case FieldKind::kNested:
        if (f.nested == nullptr) bad(fpath, "nested field without schema");
        ValidateAt(*f.nested, fpath);
        break;
    }
  }
}

}  // namespace

void StructSchema::Validate() const { ValidateAt(*this, ""); }

double PromotionReport::Percent(Classification c) const {
  const std::size_t total = fields.size();
  if (total == 0) return 0.0;
  const std::size_t n = c == Classification::kNonPromotable ? non_promotable
                        : c == Classification::kPromotable  ? promotable
                                                            : incompatible;
  return 100.0 * static_cast<double>(n) / static_cast<double>(total);
}

namespace {

void Tally(PromotionReport& report, FieldVerdict verdict) {
  switch (verdict.classification) {
    case Classification::kNonPromotable: ++report.non_promotable; break;
    case Classification::kPromotable: ++report.promotable; break;
    case Classification::kIncompatible: ++report.incompatible; break;
  }
  report.fields.push_back(std::move(verdict));
}

FieldVerdict Judge(const StructSchema& schema, const Field& f) {
  FieldVerdict v{schema.name + "." + f.name, Classification::kNonPromotable, std::nullopt};
  if (f.kind != FieldKind::kArray) return v;
  // Any blocking fact on the field or its record blocks the array.
  if (auto reason = f.annotations.first()) {
    v.classification = Classification::kIncompatible;
    v.reason = reason;
  } else if (auto record_reason = schema.annotations.first()) {
    v.classification = Classification::kIncompatible;
    v.reason = record_reason;
  } else if (!schema.promoted) {
    v.classification = Classification::kPromotable;
  }
  return v;
}

}  // namespace

PromotionReport Classify(const StructSchema& schema) {
  schema.Validate();
  PromotionReport report;
  report.record = schema.name;
  for (const Field& f : schema.fields) Tally(report, Judge(schema, f));
  return report;
}

PromotionReport ClassifyAll(const std::vector<StructSchema>& schemas) {
  PromotionReport total;
  total.record = "*";
  for (const StructSchema& s : schemas) {
    PromotionReport one = Classify(s);
    for (FieldVerdict& v : one.fields) Tally(total, std::move(v));
  }
  return total;
}

PromotionResult Promote(const StructSchema& schema) {
  const PromotionReport report = Classify(schema);
  PromotionResult result;
  if (report.promotable == 0) {
    result.schemas.push_back(schema);
    result.no_op = true;
    return result;
  }

  std::set<std::string> names;
  for (const Field& f : schema.fields) names.insert(f.name);

  StructSchema parent = schema;
  std::vector<StructSchema> promoted;
  result.plan.allocation_order.push_back(schema.name);

  for (std::size_t i = 0; i < schema.fields.size(); ++i) {
    if (report.fields[i].classification != Classification::kPromotable) continue;
    const Field& array = schema.fields[i];
    const std::string pointer_name = "p_" + array.name;
    const std::string record_name = schema.name + "_" + array.name;
    if (names.contains(pointer_name)) {
      Fail(ErrorCode::kSchemaError,
           schema.name + "." + pointer_name + ": promoted pointer name collides with a field");
    }

    StructSchema holder;
    holder.name = record_name;
    holder.fields.push_back(array);
    holder.promoted = true;
    promoted.push_back(std::move(holder));

    parent.fields[i] = Field::Pointer(pointer_name, record_name);

    result.plan.allocation_order.push_back(record_name);
    result.plan.usages.push_back(
        {array.name + "[i]", pointer_name + "->" + array.name + "[i]"});
    result.plan.promoted.push_back({schema.name, array.name, pointer_name, record_name});
  }

  result.plan.extra_allocations_per_instance = promoted.size();
  result.plan.deallocation_order.assign(result.plan.allocation_order.rbegin(),
                                        result.plan.allocation_order.rend());

  result.schemas.push_back(std::move(parent));
  for (StructSchema& s : promoted) result.schemas.push_back(std::move(s));
  return result;
}

std::uint64_t ScalarSize(std::string_view type) {
  static constexpr std::pair<std::string_view, std::uint64_t> kSizes[] = {
      {"char", 1},   {"bool", 1},     {"int8", 1},   {"uint8", 1},    {"short", 2},
      {"int16", 2},  {"uint16", 2},   {"int", 4},    {"int32", 4},    {"uint32", 4},
      {"float", 4},  {"long", 8},     {"int64", 8},  {"uint64", 8},   {"double", 8},
      {"size_t", 8}, {"pointer", 8},  {"fnptr", 8},
  };
  for (const auto& [name, size] : kSizes) {
    if (name == type) return size;
  }
  Fail(ErrorCode::kSchemaError, "unknown scalar type '" + std::string(type) + "'");
}

const FieldLayout& RecordLayout::at(std::string_view name) const {
  for (const FieldLayout& f : fields) {
    if (f.name == name) return f;
  }
  Fail(ErrorCode::kSchemaError, "no field '" + std::string(name) + "' in layout");
}

RecordLayout ComputeLayout(const StructSchema& schema) {
  schema.Validate();
  RecordLayout layout;
  std::uint64_t offset = 0;
  for (const Field& f : schema.fields) {
    std::uint64_t size = 0, align = 1;
    switch (f.kind) {
      case FieldKind::kScalar:
        size = align = ScalarSize(f.type);
        break;
      case FieldKind::kPointer:
        size = align = 8;
        break;
      case FieldKind::kArray:
        align = ScalarSize(f.type);
        size = align * f.length;
        break;
      case FieldKind::kNested: {
        const RecordLayout inner = ComputeLayout(*f.nested);
        size = inner.size;
        align = inner.align;
        break;
      }
    }
    offset = (offset + align - 1) / align * align;
    layout.fields.push_back({f.name, offset, size});
    offset += size;
    layout.align = std::max(layout.align, align);
  }
  layout.size = (offset + layout.align - 1) / layout.align * layout.align;
  return layout;
}

}  // namespace permalloc::buf2ptr
