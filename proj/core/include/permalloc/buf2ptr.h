#ifndef PERMALLOC_BUF2PTR_H_
#define PERMALLOC_BUF2PTR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace permalloc::buf2ptr {

// Facts about a field or record that block promotion. Supplied by the
// caller; nothing here is inferred.
enum class Annotation : std::uint8_t {
  kCastTarget = 1 << 0,
  kAnonymousAlloc = 1 << 1,
  kReturnedByValue = 1 << 2,
  kVla = 1 << 3,
  kMacroWrapped = 1 << 4,
};

class Annotations {
 public:
  constexpr Annotations() = default;
  constexpr Annotations(std::initializer_list<Annotation> flags) {
    for (Annotation a : flags) bits_ |= static_cast<std::uint8_t>(a);
  }

  constexpr bool has(Annotation a) const { return bits_ & static_cast<std::uint8_t>(a); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr void add(Annotation a) { bits_ |= static_cast<std::uint8_t>(a); }
  constexpr Annotations operator|(Annotations o) const {
    Annotations r;
    r.bits_ = bits_ | o.bits_;
    return r;
  }
  // Lowest set flag, in declaration order.
  std::optional<Annotation> first() const;

  friend constexpr bool operator==(Annotations, Annotations) = default;

 private:
  std::uint8_t bits_ = 0;
};

inline constexpr Annotation kAllAnnotations[] = {
    Annotation::kCastTarget, Annotation::kAnonymousAlloc, Annotation::kReturnedByValue,
    Annotation::kVla, Annotation::kMacroWrapped};

std::string_view AnnotationName(Annotation a);
std::optional<Annotation> ParseAnnotation(std::string_view name);

enum class FieldKind { kScalar, kPointer, kArray, kNested };

struct StructSchema;

struct Field {
  std::string name;
  FieldKind kind = FieldKind::kScalar;
  // Scalar type, array element type, or pointer target record.
  std::string type;
  std::uint64_t length = 0;  // arrays only
  std::shared_ptr<const StructSchema> nested;
  Annotations annotations;

  static Field Scalar(std::string name, std::string type, Annotations a = {});
  static Field Pointer(std::string name, std::string target, Annotations a = {});
  static Field Array(std::string name, std::string elem, std::uint64_t length,
                     Annotations a = {});
  static Field Nested(std::string name, StructSchema schema, Annotations a = {});
};

struct StructSchema {
  std::string name;
  std::vector<Field> fields;
  Annotations annotations;
  // Set on records emitted by Promote; their array is already isolated.
  bool promoted = false;

  // Throws kSchemaError naming the offending field path.
  void Validate() const;
};

bool operator==(const Field& a, const Field& b);
bool operator==(const StructSchema& a, const StructSchema& b);

enum class Classification { kNonPromotable, kPromotable, kIncompatible };

std::string_view ClassificationName(Classification c);

struct FieldVerdict {
  std::string path;  // Record.field
  Classification classification = Classification::kNonPromotable;
  std::optional<Annotation> reason;  // set iff incompatible
};

struct PromotionReport {
  std::string record;
  std::vector<FieldVerdict> fields;
  std::size_t non_promotable = 0;
  std::size_t promotable = 0;
  std::size_t incompatible = 0;

  double Percent(Classification c) const;
};

PromotionReport Classify(const StructSchema& schema);

// Aggregate over several records (e.g. a whole program's structs).
PromotionReport ClassifyAll(const std::vector<StructSchema>& schemas);

struct PromotedField {
  std::string parent;
  std::string field;          // original array field
  std::string pointer_field;  // p_<field>
  std::string record;         // <Parent>_<field>
};

struct UsageRewrite {
  std::string from;  // buf[i]
  std::string to;    // p_buf->buf[i]
};

struct RewritePlan {
  // Per instance of the parent: parent first, then each promoted record.
  std::vector<std::string> allocation_order;
  // Promoted records first, parent last.
  std::vector<std::string> deallocation_order;
  std::vector<UsageRewrite> usages;
  std::vector<PromotedField> promoted;
  std::size_t extra_allocations_per_instance = 0;
  // Each promoted allocation draws its own alias number from the arena.
  bool fresh_alias_per_allocation = true;
};

struct PromotionResult {
  std::vector<StructSchema> schemas;  // rewritten parent first, then promoted records
  RewritePlan plan;
  bool no_op = false;
};

// Replaces every promotable array field f of T by a pointer p_f to a new
// record T_f holding only the array. Nothing promotable yields no_op.
PromotionResult Promote(const StructSchema& schema);

// C-style layout with natural alignment; used to place fields in memory.
struct FieldLayout {
  std::string name;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

struct RecordLayout {
  std::vector<FieldLayout> fields;
  std::uint64_t size = 0;
  std::uint64_t align = 1;

  const FieldLayout& at(std::string_view name) const;
};

// Throws kSchemaError for unknown scalar types.
RecordLayout ComputeLayout(const StructSchema& schema);
std::uint64_t ScalarSize(std::string_view type);

// JSON shape:
//   {"records": [{"name": "Foo", "annotations": [...], "promoted": false,
//     "fields": [{"name": "buf", "kind": "array", "type": "char", "length": 10,
//                 "annotations": [...]}]}]}
// "kind" is one of scalar|pointer|array|nested; nested fields carry "schema".
StructSchema SchemaFromJson(const nlohmann::json& j);
nlohmann::json SchemaToJson(const StructSchema& schema);
std::vector<StructSchema> SchemasFromJson(const nlohmann::json& j);
nlohmann::json SchemasToJson(const std::vector<StructSchema>& schemas);
nlohmann::json ReportToJson(const PromotionReport& report);
nlohmann::json PromotionToJson(const PromotionResult& result);

}  // namespace permalloc::buf2ptr

#endif  // PERMALLOC_BUF2PTR_H_
