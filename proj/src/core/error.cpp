#include "objattn/core/error.hpp"

namespace objattn {

SchemaError::SchemaError(const std::string& field, const std::string& problem)
    : Error("schema error at \"" + field + "\": " + problem), field_(field) {}

}  // namespace objattn
