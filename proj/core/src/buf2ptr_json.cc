#include <string>

#include "permalloc/buf2ptr.h"
#include "permalloc/error.h"

namespace permalloc::buf2ptr {
namespace {

using nlohmann::json;

[[noreturn]] void Malformed(const std::string& path, const std::string& why) {
  Fail(ErrorCode::kSchemaError, path + ": " + why);
}

Annotations AnnotationsFromJson(const json& j, const std::string& path) {
  Annotations out;
  if (j.is_null()) return out;
  if (!j.is_array()) Malformed(path, "annotations must be an array");
  for (const json& item : j) {
    if (!item.is_string()) Malformed(path, "annotation must be a string");
    const auto a = ParseAnnotation(item.get<std::string>());
    if (!a) Malformed(path, "unknown annotation '" + item.get<std::string>() + "'");
    out.add(*a);
  }
  return out;
}

json AnnotationsToJson(Annotations a) {
  json out = json::array();
  for (Annotation flag : kAllAnnotations) {
    if (a.has(flag)) out.push_back(AnnotationName(flag));
  }
  return out;
}

std::string StringAt(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    Malformed(path, std::string("missing string '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

StructSchema RecordFromJson(const json& j, const std::string& prefix);

Field FieldFromJson(const json& j, const std::string& record_path) {
  if (!j.is_object()) Malformed(record_path, "field must be an object");
  const std::string name = StringAt(j, "name", record_path + ".<field>");
  const std::string path = record_path + "." + name;
  const std::string kind = StringAt(j, "kind", path);
  const Annotations annotations = AnnotationsFromJson(j.value("annotations", json()), path);

  if (kind == "scalar") return Field::Scalar(name, StringAt(j, "type", path), annotations);
  if (kind == "pointer") return Field::Pointer(name, StringAt(j, "type", path), annotations);
  if (kind == "array") {
    if (!j.contains("length") || !j.at("length").is_number_integer()) {
      Malformed(path, "array needs an integer 'length'");
    }
    const auto length = j.at("length").get<std::int64_t>();
    if (length < 1) Malformed(path, "array length must be >= 1");
    return Field::Array(name, StringAt(j, "type", path), static_cast<std::uint64_t>(length),
                        annotations);
  }
  if (kind == "nested") {
    if (!j.contains("schema")) Malformed(path, "nested field needs 'schema'");
    return Field::Nested(name, RecordFromJson(j.at("schema"), path), annotations);
  }
  Malformed(path, "unknown kind '" + kind + "'");
}

StructSchema RecordFromJson(const json& j, const std::string& prefix) {
  if (!j.is_object()) Malformed(prefix.empty() ? "<record>" : prefix, "record must be an object");
  StructSchema s;
  s.name = StringAt(j, "name", prefix.empty() ? "<record>" : prefix);
  const std::string path = prefix.empty() ? s.name : prefix + "." + s.name;
  s.annotations = AnnotationsFromJson(j.value("annotations", json()), path);
  s.promoted = j.value("promoted", false);
  if (!j.contains("fields") || !j.at("fields").is_array()) Malformed(path, "missing 'fields' array");
  for (const json& f : j.at("fields")) s.fields.push_back(FieldFromJson(f, path));
  return s;
}

std::string_view KindName(FieldKind k) {
  switch (k) {
    case FieldKind::kScalar: return "scalar";
    case FieldKind::kPointer: return "pointer";
    case FieldKind::kArray: return "array";
    case FieldKind::kNested: return "nested";
  }
  return "?";
}

}  // namespace

StructSchema SchemaFromJson(const json& j) {
  StructSchema s = RecordFromJson(j, "");
  s.Validate();
  return s;
}

json SchemaToJson(const StructSchema& schema) {
  json fields = json::array();
  for (const Field& f : schema.fields) {
    json jf = {{"name", f.name}, {"kind", KindName(f.kind)}};
    if (f.kind == FieldKind::kNested) {
      jf["schema"] = SchemaToJson(*f.nested);
    } else {
      jf["type"] = f.type;
    }
    if (f.kind == FieldKind::kArray) jf["length"] = f.length;
    jf["annotations"] = AnnotationsToJson(f.annotations);
    fields.push_back(std::move(jf));
  }
  json out = {{"name", schema.name},
              {"annotations", AnnotationsToJson(schema.annotations)},
              {"fields", std::move(fields)}};
  if (schema.promoted) out["promoted"] = true;
  return out;
}

std::vector<StructSchema> SchemasFromJson(const json& j) {
  std::vector<StructSchema> out;
  if (j.is_object() && j.contains("records")) {
    if (!j.at("records").is_array()) Malformed("<root>", "'records' must be an array");
    for (const json& r : j.at("records")) out.push_back(SchemaFromJson(r));
  } else {
    out.push_back(SchemaFromJson(j));
  }
  return out;
}

json SchemasToJson(const std::vector<StructSchema>& schemas) {
  json records = json::array();
  for (const StructSchema& s : schemas) records.push_back(SchemaToJson(s));
  return {{"records", std::move(records)}};
}

json ReportToJson(const PromotionReport& report) {
  json fields = json::array();
  for (const FieldVerdict& v : report.fields) {
    json jv = {{"path", v.path}, {"classification", ClassificationName(v.classification)}};
    if (v.reason) jv["reason"] = AnnotationName(*v.reason);
    fields.push_back(std::move(jv));
  }
  return {
      {"record", report.record},
      {"fields", std::move(fields)},
      {"counts",
       {{"non_promotable", report.non_promotable},
        {"promotable", report.promotable},
        {"incompatible", report.incompatible}}},
      {"percentages",
       {{"non_promotable", report.Percent(Classification::kNonPromotable)},
        {"promotable", report.Percent(Classification::kPromotable)},
        {"incompatible", report.Percent(Classification::kIncompatible)}}},
  };
}

json PromotionToJson(const PromotionResult& result) {
  json usages = json::array();
  for (const UsageRewrite& u : result.plan.usages) usages.push_back({{"from", u.from}, {"to", u.to}});
  json promoted = json::array();
  for (const PromotedField& p : result.plan.promoted) {
    promoted.push_back({{"parent", p.parent},
                        {"field", p.field},
                        {"pointer_field", p.pointer_field},
                        {"record", p.record}});
  }
  json out = SchemasToJson(result.schemas);
  out["no_op"] = result.no_op;
  out["plan"] = {
      {"allocation_order", result.plan.allocation_order},
      {"deallocation_order", result.plan.deallocation_order},
      {"usages", std::move(usages)},
      {"promoted", std::move(promoted)},
      {"extra_allocations_per_instance", result.plan.extra_allocations_per_instance},
      {"fresh_alias_per_allocation", result.plan.fresh_alias_per_allocation},
  };
  return out;
}

}  // namespace permalloc::buf2ptr
