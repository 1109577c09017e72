#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace teig {

enum class error_kind {
  validation,
  range,
  accuracy,
  contour,
  ambiguity,
  pole,
  consistency,
  datum_inconsistency,
  solve,
  unsupported,
};

inline const char* to_string(error_kind k) {
  switch (k) {
    case error_kind::validation: return "validation";
    case error_kind::range: return "range";
    case error_kind::accuracy: return "accuracy";
    case error_kind::contour: return "contour";
    case error_kind::ambiguity: return "ambiguity";
    case error_kind::pole: return "pole";
    case error_kind::consistency: return "consistency";
    case error_kind::datum_inconsistency: return "datum_inconsistency";
    case error_kind::solve: return "solve";
    case error_kind::unsupported: return "unsupported";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind` classifies it, `stage` names
/// the pipeline step that raised it (empty outside the inverse pipeline) and
/// `estimate` carries the achieved error / condition number when relevant.
class error : public std::runtime_error {
 public:
  error(error_kind kind, const std::string& what, std::optional<double> estimate = std::nullopt)
      : std::runtime_error(what), kind_(kind), estimate_(estimate) {}

  error_kind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  std::optional<double> estimate() const noexcept { return estimate_; }

  error with_stage(std::string stage) const {
    error e = *this;
    e.stage_ = std::move(stage);
    return e;
  }

 private:
  error_kind kind_;
  std::string stage_;
  std::optional<double> estimate_;
};

}  // namespace teig
