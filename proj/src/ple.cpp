#include "ngram/ple.hpp"

#include <stdexcept>
#include <string>

namespace ngram {

void ple_shape_check(int d_model, int hidden, std::uint32_t base_vocab) {
    if (d_model < 1 || hidden < 1) {
        throw std::invalid_argument("ple: d_model and hidden must be >= 1");
    }
    if (base_vocab < 2) {
        throw std::invalid_argument("ple: base vocabulary must be >= 2");
    }
}

}  // namespace ngram
