#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "relvar/errors.hpp"

namespace relvar::search {

// A selection over an ordered universe of candidate regressor columns.
// The canonical form is the ascending list of 1-based positions, e.g.
// "2,3,4,5,6,7,8,9,10,11,12,13,14,15".
struct FeatureSubset {
    std::shared_ptr<const std::vector<std::string>> universe;
    std::uint64_t mask = 0;

    std::size_t size() const noexcept;
    bool contains(int position_1based) const noexcept;
    std::vector<std::string> column_names() const;
    std::string canonical() const;
};

// Parse a canonical string back into a subset over the given universe.
FeatureSubset subset_from_canonical(std::shared_ptr<const std::vector<std::string>> universe,
                                    const std::string& canonical);

// Every subset with size in [min_size, max_size], in ascending bitmask order.
// The universe is capped at 20 columns; beyond that the enumeration would
// not fit in memory (or in anyone's compute budget).
std::vector<FeatureSubset> enumerate_subsets(
    std::shared_ptr<const std::vector<std::string>> universe, int min_size, int max_size);

}  // namespace relvar::search
