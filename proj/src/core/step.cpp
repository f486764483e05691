#include "epilogue/core/step.hpp"

namespace epilogue {

std::string_view alignment_name(Alignment alignment) {
  return alignment == Alignment::sar ? "sar" : "rsa";
}

std::optional<Alignment> parse_alignment(std::string_view name) {
  if (name == "sar" || name == "SAR") return Alignment::sar;
  if (name == "rsa" || name == "RSA") return Alignment::rsa;
  return std::nullopt;
}

DefinedFields defined_fields(bool is_first, bool is_last, Alignment alignment) {
  DefinedFields d;
  if (alignment == Alignment::sar) {
    if (is_last) d.action = d.reward = d.discount = false;
  } else {
    if (is_first) d.reward = d.discount = false;
    if (is_last) d.action = false;
  }
  return d;
}

}  // namespace epilogue
