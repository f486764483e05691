#pragma once

#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

namespace epilogue {

/// Pull-based, single-pass lazy sequence. Operators consume the stream they
/// are called on and return a new one; nothing is evaluated until next().
template <class T>
class Stream {
 public:
  using value_type = T;
  using Pull = std::function<std::optional<T>()>;

  Stream() : pull_([] { return std::optional<T>{}; }) {}
  explicit Stream(Pull pull) : pull_(std::move(pull)) {}

  static Stream from_vector(std::vector<T> items) {
    auto state = std::make_shared<std::pair<std::vector<T>, std::size_t>>(std::move(items), 0);
    return Stream([state]() -> std::optional<T> {
      auto& [items, pos] = *state;
      if (pos >= items.size()) return std::nullopt;
      return std::move(items[pos++]);
    });
  }

  std::optional<T> next() { return pull_(); }

  template <class F>
  auto map(F fn) && {
    using U = std::decay_t<std::invoke_result_t<F, T>>;
    return Stream<U>([pull = std::move(pull_), fn = std::move(fn)]() mutable -> std::optional<U> {
      auto item = pull();
      if (!item) return std::nullopt;
      return fn(std::move(*item));
    });
  }

  template <class P>
  Stream filter(P pred) && {
    return Stream([pull = std::move(pull_), pred = std::move(pred)]() mutable -> std::optional<T> {
      while (auto item = pull()) {
        if (pred(*item)) return item;
      }
      return std::nullopt;
    });
  }

  // fn maps each item to a Stream<U>; the results are concatenated.
  template <class F>
  auto flat_map(F fn) && {
    using Inner = std::decay_t<std::invoke_result_t<F, T>>;
    using U = typename Inner::value_type;
    auto current = std::make_shared<std::optional<Inner>>();
    return Stream<U>([pull = std::move(pull_), fn = std::move(fn), current]() mutable
                     -> std::optional<U> {
      for (;;) {
        if (*current) {
          if (auto item = (*current)->next()) return item;
          current->reset();
        }
        auto outer = pull();
        if (!outer) return std::nullopt;
        current->emplace(fn(std::move(*outer)));
      }
    });
  }

  Stream take(std::size_t n) && {
    return Stream([pull = std::move(pull_), n]() mutable -> std::optional<T> {
      if (n == 0) return std::nullopt;
      --n;
      return pull();
    });
  }

  std::vector<T> collect() && {
    std::vector<T> out;
    while (auto item = pull_()) out.push_back(std::move(*item));
    return out;
  }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = T;
    using difference_type = std::ptrdiff_t;
    using pointer = T*;
    using reference = T&;

    iterator() = default;
    explicit iterator(Stream* stream) : stream_(stream) { advance(); }
    T& operator*() { return *current_; }
    T* operator->() { return &*current_; }
    iterator& operator++() {
      advance();
      return *this;
    }
    void operator++(int) { advance(); }
    bool operator==(const iterator& other) const { return done() == other.done(); }

   private:
    bool done() const { return !current_.has_value(); }
    void advance() { current_ = stream_ ? stream_->next() : std::nullopt; }
    Stream* stream_ = nullptr;
    std::optional<T> current_;
  };

  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  Pull pull_;
};

}  // namespace epilogue
