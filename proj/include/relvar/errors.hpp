#pragma once

#include <stdexcept>
#include <string>

namespace relvar {

// Error identities used across the toolkit. Every throwing operation names
// one of these so callers (and tests) can match on the condition instead of
// parsing message text.
enum class errc {
    length_mismatch,
    zero_variance,
    too_few_samples,
    negative_mi,
    degenerate_correlation,
    too_few_rows,
    dimension_mismatch,
    singular_normal_equations,
    non_finite_loss,
    missing_column,
    unparsable_cell,
    empty_file,
    all_rows_dropped,
    empty_universe,
    universe_too_large,
    checkpoint_corrupt,
    expr_syntax,
    invalid_config,
    io_error,
};

const char* errc_name(errc code) noexcept;

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw error(code, message);
}

}  // namespace relvar
