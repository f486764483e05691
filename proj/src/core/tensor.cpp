#include "epilogue/core/tensor.hpp"

#include <sstream>

namespace epilogue {

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::i32: return "i32";
    case DType::i64: return "i64";
    case DType::u8: return "u8";
    case DType::boolean: return "bool";
    case DType::bytes: return "bytes";
  }
  return "?";
}

std::optional<DType> parse_dtype(std::string_view name) {
  for (DType d : {DType::f32, DType::f64, DType::i32, DType::i64, DType::u8, DType::boolean,
                  DType::bytes}) {
    if (dtype_name(d) == name) return d;
  }
  return std::nullopt;
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::i32: return 4;
    case DType::i64: return 8;
    case DType::u8: return 1;
    case DType::boolean: return 1;
    case DType::bytes: return 0;
  }
  return 0;
}

std::uint64_t shape_elements(const Shape& shape) {
  std::uint64_t n = 1;
  for (auto extent : shape) n *= static_cast<std::uint64_t>(extent < 0 ? 0 : extent);
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.size() > 8) fail(ErrorCode::invalid_argument, "tensor rank exceeds 8");
  for (auto extent : shape) {
    if (extent < 0) fail(ErrorCode::invalid_argument, "negative extent in " + shape_string(shape));
  }
}

}  // namespace

Tensor Tensor::zeros(DType dtype, Shape shape) {
  check_shape(shape);
  Tensor t(dtype, std::move(shape));
  if (dtype == DType::bytes) {
    t.strings_.resize(t.size());
  } else {
    t.raw_.assign(t.size() * dtype_size(dtype), 0);
  }
  return t;
}

Tensor Tensor::from_raw(DType dtype, Shape shape, std::vector<std::uint8_t> raw) {
  check_shape(shape);
  if (dtype == DType::bytes) fail(ErrorCode::invalid_argument, "bytes tensors hold strings");
  Tensor t(dtype, std::move(shape));
  if (raw.size() != t.size() * dtype_size(dtype)) {
    fail(ErrorCode::invalid_argument, "raw buffer length does not match shape " +
                                          shape_string(t.shape_));
  }
  t.raw_ = std::move(raw);
  return t;
}

Tensor Tensor::from_strings(Shape shape, std::vector<std::string> values) {
  check_shape(shape);
  Tensor t(DType::bytes, std::move(shape));
  if (values.size() != t.size()) {
    fail(ErrorCode::invalid_argument, "string count does not match shape " +
                                          shape_string(t.shape_));
  }
  t.strings_ = std::move(values);
  return t;
}

Tensor Tensor::string(std::string value) {
  return from_strings({}, {std::move(value)});
}

double Tensor::as_double(std::size_t i) const {
  switch (dtype_) {
    case DType::f32: return values<float>()[i];
    case DType::f64: return values<double>()[i];
    case DType::i32: return values<std::int32_t>()[i];
    case DType::i64: return static_cast<double>(values<std::int64_t>()[i]);
    case DType::u8:
    case DType::boolean: return raw_[i];
    case DType::bytes: break;
  }
  fail(ErrorCode::unsupported_dtype, "bytes values have no numeric value");
}

void Tensor::check_view(DType requested) const {
  bool ok = requested == dtype_ || (requested == DType::u8 && dtype_ == DType::boolean);
  if (!ok) {
    fail(ErrorCode::invalid_argument, std::string("cannot view ") + std::string(dtype_name(dtype_)) +
                                          " tensor as " + std::string(dtype_name(requested)));
  }
}

}  // namespace epilogue
