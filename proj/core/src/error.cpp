#include "gvps/error.hpp"

#include <utility>

namespace gvps {

Error::Error(std::string module, const std::string& message)
    : std::runtime_error(message), module_(std::move(module)) {}

}  // namespace gvps
