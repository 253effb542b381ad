#ifndef FNS_COMMON_HPP
#define FNS_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fns {

using complex = std::complex<double>;

/** Invalid user-facing configuration (bad grid sizes, mask intervals, ...).
 *  The CLI maps this to exit status 2. */
struct config_error : std::invalid_argument {
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/** Failure inside a numerical routine (non-convergent iteration, singular
 *  system, ...). The CLI maps this to exit status 3. */
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fns

#endif
