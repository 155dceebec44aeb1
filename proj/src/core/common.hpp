// Shared aliases and error plumbing for the nucsel core.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nucsel {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IndexList = std::vector<Index>;

// All recoverable failures in the core throw Error; the C API boundary
// converts them into errptr strings, the CLI into nonzero exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

// Parallelism cap honoured by the replicate worker pools. The value comes
// from NUCSEL_THREADS when set, otherwise from the hardware.
unsigned thread_cap();

namespace detail {
unsigned thread_cap_impl();
}

inline unsigned thread_cap() {
  static const unsigned cap = detail::thread_cap_impl();
  return cap;
}

}  // namespace nucsel
