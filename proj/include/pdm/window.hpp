#pragma once

#include <cstddef>

namespace pdm {

/// Fixed-length slicing of a sample stream.
struct WindowSpec {
    std::size_t window_len = 10;
    std::size_t stride = 1;

    void validate() const;
    /// floor((n - window_len) / stride) + 1 when n >= window_len, else 0.
    std::size_t count(std::size_t n) const;

    friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

}  // namespace pdm
