#ifndef INTVIT_ERROR_HPP
#define INTVIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace intvit {

// Error categories. Mirrored one-to-one by the C API status codes.
enum class errc {
  ok = 0,
  invalid_argument = 1,
  dim_mismatch = 2,
  overflow = 3,
  underflow = 4,
  io = 5,
  format = 6,
  null_pointer = 7,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace intvit

#endif
