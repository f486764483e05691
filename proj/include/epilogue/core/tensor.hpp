#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "epilogue/core/error.hpp"

namespace epilogue {

static_assert(std::endian::native == std::endian::little,
              "tensor payloads are stored in host order and must be little-endian");

enum class DType : std::uint8_t { f32, f64, i32, i64, u8, boolean, bytes };

std::string_view dtype_name(DType dtype);
std::optional<DType> parse_dtype(std::string_view name);

// Width of one element in bytes; 0 for the variable-length bytes dtype.
std::size_t dtype_size(DType dtype);
inline bool is_numeric(DType dtype) { return dtype != DType::bytes; }

template <class T>
struct dtype_of;
template <> struct dtype_of<float> { static constexpr DType value = DType::f32; };
template <> struct dtype_of<double> { static constexpr DType value = DType::f64; };
template <> struct dtype_of<std::int32_t> { static constexpr DType value = DType::i32; };
template <> struct dtype_of<std::int64_t> { static constexpr DType value = DType::i64; };
template <> struct dtype_of<std::uint8_t> { static constexpr DType value = DType::u8; };
template <> struct dtype_of<bool> { static constexpr DType value = DType::boolean; };

using Shape = std::vector<std::int64_t>;

std::uint64_t shape_elements(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Numeric and bool elements live in a little-endian
/// byte buffer (bool as one byte, 0 or 1); bytes elements are strings.
/// Equality is bitwise, so NaN payloads compare by representation.
class Tensor {
 public:
  Tensor() : Tensor(zeros(DType::f64, {})) {}

  static Tensor zeros(DType dtype, Shape shape);
  static Tensor from_raw(DType dtype, Shape shape, std::vector<std::uint8_t> raw);
  static Tensor from_strings(Shape shape, std::vector<std::string> values);

  template <class T>
  static Tensor from_values(Shape shape, std::span<const T> values) {
    constexpr DType dtype = dtype_of<T>::value;
    if (values.size() != shape_elements(shape)) {
      fail(ErrorCode::invalid_argument, "value count does not match shape " + shape_string(shape));
    }
    std::vector<std::uint8_t> raw(values.size() * dtype_size(dtype));
    if constexpr (std::is_same_v<T, bool>) {
      for (std::size_t i = 0; i < values.size(); ++i) raw[i] = values[i] ? 1 : 0;
    } else if (!values.empty()) {
      std::memcpy(raw.data(), values.data(), raw.size());
    }
    return from_raw(dtype, std::move(shape), std::move(raw));
  }

  template <class T>
  static Tensor from_values(Shape shape, const std::vector<T>& values) {
    if constexpr (std::is_same_v<T, bool>) {
      std::vector<std::uint8_t> raw(values.begin(), values.end());
      return from_raw(DType::boolean, std::move(shape), std::move(raw));
    } else {
      return from_values<T>(std::move(shape), std::span<const T>(values));
    }
  }

  template <class T>
  static Tensor vector(const std::vector<T>& values) {
    return from_values<T>({static_cast<std::int64_t>(values.size())}, values);
  }

  template <class T>
  static Tensor scalar(T value) {
    return from_values<T>({}, std::vector<T>{value});
  }

  static Tensor string(std::string value);

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::uint64_t size() const { return shape_elements(shape_); }

  std::span<const std::uint8_t> raw() const { return raw_; }
  std::span<std::uint8_t> mutable_raw() { return raw_; }
  const std::vector<std::string>& strings() const { return strings_; }

  // Typed view over the element buffer. bool tensors are viewed as uint8_t.
  template <class T>
  std::span<const T> values() const {
    static_assert(!std::is_same_v<T, bool>, "view bool tensors as uint8_t");
    check_view(dtype_of<T>::value);
    return {reinterpret_cast<const T*>(raw_.data()), raw_.size() / sizeof(T)};
  }
  template <class T>
  std::span<T> mutable_values() {
    static_assert(!std::is_same_v<T, bool>, "view bool tensors as uint8_t");
    check_view(dtype_of<T>::value);
    return {reinterpret_cast<T*>(raw_.data()), raw_.size() / sizeof(T)};
  }

  // Element i promoted to double; bool promotes to 0/1. Throws
  // UNSUPPORTED_DTYPE for bytes.
  double as_double(std::size_t i) const;

  bool operator==(const Tensor&) const = default;

 private:
  Tensor(DType dtype, Shape shape) : dtype_(dtype), shape_(std::move(shape)) {}
  void check_view(DType requested) const;

  DType dtype_;
  Shape shape_;
  std::vector<std::uint8_t> raw_;
  std::vector<std::string> strings_;
};

}  // namespace epilogue
