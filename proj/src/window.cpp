#include "pdm/window.hpp"

#include "pdm/error.hpp"

namespace pdm {

void WindowSpec::validate() const {
    if (window_len < 1) throw InvalidInput("window_len must be at least 1");
    if (stride < 1) throw InvalidInput("stride must be at least 1");
}

std::size_t WindowSpec::count(std::size_t n) const {
    validate();
    return n < window_len ? 0 : (n - window_len) / stride + 1;
}

}  // namespace pdm
