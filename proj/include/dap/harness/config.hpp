#pragma once

// Run configuration: a UTF-8 text file of `section.key = value` lines
// (`#` starts a comment). Unknown or duplicate keys and invalid values are
// rejected with a ConfigError naming the offending section.key.

#include <cstdint>
#include <filesystem>
#include <string>

#include "dap/fusion.hpp"
#include "dap/harness/pipeline.hpp"
#include "dap/ssfcn.hpp"
#include "dap/tcn.hpp"

namespace dap::harness {

struct TcnTrainSettings {
    std::size_t epochs = 30;
    double learning_rate = 5e-4;
    std::size_t batch_size = 8;
    tcn::Optimizer optimizer = tcn::Optimizer::adam;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DspConfig dsp;
    tcn::TcnConfig tcn;
    bool tcn_seed_explicit = false;
    TcnTrainSettings tcn_train;
    ssfcn::SsfcnConfig ssfcn;
    bool ssfcn_seed_explicit = false;
    std::size_t ssfcn_epochs = 100;
    fusion::FusionConfig fusion;
    double train_fraction = 0.70;

    /// Throws ConfigError naming section.key on the first invalid field.
    void validate() const;

    /// Module configs with their seeds resolved: an explicit tcn.seed /
    /// ssfcn.seed wins, otherwise derive_seed(seed, "tcn" / "ssfcn").
    tcn::TcnConfig effective_tcn() const;
    ssfcn::SsfcnConfig effective_ssfcn() const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace dap::harness
