#include "relvar/subset.hpp"

#include <bit>
#include <cstdlib>

namespace relvar::search {

std::size_t FeatureSubset::size() const noexcept { return std::popcount(mask); }

bool FeatureSubset::contains(int position_1based) const noexcept {
    if (position_1based < 1 || position_1based > 64) return false;
    return (mask >> (position_1based - 1)) & 1u;
}

std::vector<std::string> FeatureSubset::column_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < universe->size(); ++i) {
        if ((mask >> i) & 1u) names.push_back((*universe)[i]);
    }
    return names;
}

std::string FeatureSubset::canonical() const {
    std::string out;
    for (std::size_t i = 0; i < universe->size(); ++i) {
        if ((mask >> i) & 1u) {
            if (!out.empty()) out += ',';
            out += std::to_string(i + 1);
        }
    }
    return out;
}

FeatureSubset subset_from_canonical(std::shared_ptr<const std::vector<std::string>> universe,
                                    const std::string& canonical) {
    FeatureSubset subset{std::move(universe), 0};
    std::size_t pos = 0;
    while (pos < canonical.size()) {
        char* end = nullptr;
        const long index = std::strtol(canonical.c_str() + pos, &end, 10);
        const auto consumed = static_cast<std::size_t>(end - (canonical.c_str() + pos));
        if (consumed == 0 || index < 1 ||
            index > static_cast<long>(subset.universe->size())) {
            raise(errc::invalid_config, "bad subset string \"" + canonical + "\"");
        }
        subset.mask |= 1ull << (index - 1);
        pos += consumed;
        if (pos < canonical.size()) {
            if (canonical[pos] != ',') {
                raise(errc::invalid_config, "bad subset string \"" + canonical + "\"");
            }
            ++pos;
        }
    }
    if (subset.mask == 0) raise(errc::invalid_config, "empty subset string");
    return subset;
}

std::vector<FeatureSubset> enumerate_subsets(
    std::shared_ptr<const std::vector<std::string>> universe, int min_size, int max_size) {
    if (!universe || universe->empty()) raise(errc::empty_universe, "no candidate columns");
    const int n = static_cast<int>(universe->size());
    if (n > 20) {
        raise(errc::universe_too_large,
              std::to_string(n) + " columns would enumerate to 2^" + std::to_string(n) +
                  " subsets; the cap is 20");
    }
    if (min_size < 1 || min_size > max_size || max_size > n) {
        raise(errc::invalid_config, "need 1 <= min_size <= max_size <= " + std::to_string(n));
    }

    std::vector<FeatureSubset> subsets;
    const std::uint64_t all = (1ull << n) - 1;
    for (std::uint64_t mask = 1; mask <= all; ++mask) {
        const int bits = std::popcount(mask);
        if (bits >= min_size && bits <= max_size) subsets.push_back({universe, mask});
    }
    return subsets;
}

}  // namespace relvar::search
