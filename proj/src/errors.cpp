#include "relvar/errors.hpp"

namespace relvar {

const char* errc_name(errc code) noexcept {
    switch (code) {
        case errc::length_mismatch: return "length mismatch";
        case errc::zero_variance: return "zero variance";
        case errc::too_few_samples: return "too few samples";
        case errc::negative_mi: return "negative MI";
        case errc::degenerate_correlation: return "degenerate correlation";
        case errc::too_few_rows: return "too few rows";
        case errc::dimension_mismatch: return "dimension mismatch";
        case errc::singular_normal_equations: return "singular normal equations";
        case errc::non_finite_loss: return "non-finite loss";
        case errc::missing_column: return "missing column";
        case errc::unparsable_cell: return "unparsable cell";
        case errc::empty_file: return "empty file";
        case errc::all_rows_dropped: return "all rows dropped";
        case errc::empty_universe: return "empty universe";
        case errc::universe_too_large: return "universe too large";
        case errc::checkpoint_corrupt: return "checkpoint corrupt";
        case errc::expr_syntax: return "expression syntax error";
        case errc::invalid_config: return "invalid configuration";
        case errc::io_error: return "I/O error";
    }
    return "error";
}

}  // namespace relvar
