#include "flowseq/error.hpp"

namespace flowseq {

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

}  // namespace flowseq
