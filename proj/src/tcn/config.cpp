#include <string>

#include "dap/error.hpp"
#include "dap/tcn.hpp"

namespace dap::tcn {

void TcnConfig::validate() const {
    if (num_blocks < 1) throw InvalidArgument("tcn.num_blocks must be >= 1");
    if (kernel_size < 2) throw InvalidArgument("tcn.kernel_size must be >= 2");
    if (channels_per_block < 1) throw InvalidArgument("tcn.channels_per_block must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("tcn.dropout_rate must be in [0, 1)");
    if (num_classes != 2) throw InvalidArgument("tcn.num_classes must be 2");
    if (input_channels < 1) throw InvalidArgument("tcn.input_channels must be >= 1");
}

int TcnConfig::dilation(int block) const {
    if (dilation_schedule == DilationSchedule::increment) return 2 + block;
    return 2 << block;
}

std::size_t receptive_field(const TcnConfig& config) {
    config.validate();
    std::size_t rf = 1;
    for (int b = 0; b < config.num_blocks; ++b)
        rf += 2 * static_cast<std::size_t>(config.kernel_size - 1) * static_cast<std::size_t>(config.dilation(b));
    return rf;
}

}  // namespace dap::tcn
