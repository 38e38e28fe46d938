#include "dap/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dap/error.hpp"
#include "dap/rng.hpp"

namespace dap::harness {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
    T out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a real number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true|false");
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    if (!v.empty() && v.front() == '-') bad_value(key, v, "a non-negative integer");
    return parse_integer<std::size_t>(key, v);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_integer<std::uint64_t>(k, v); }},
        {"split.train_fraction", [](RunConfig& c, auto& k, auto& v) { c.train_fraction = parse_real(k, v); }},

        {"dsp.decimate_factor", [](RunConfig& c, auto& k, auto& v) { c.dsp.decimate_factor = parse_count(k, v); }},
        {"dsp.fir_order", [](RunConfig& c, auto& k, auto& v) { c.dsp.fir_order = parse_integer<int>(k, v); }},
        {"dsp.window_len_s", [](RunConfig& c, auto& k, auto& v) { c.dsp.window_len_s = parse_real(k, v); }},
        {"dsp.hop_s", [](RunConfig& c, auto& k, auto& v) { c.dsp.hop_s = parse_real(k, v); }},
        {"dsp.trim_transient", [](RunConfig& c, auto& k, auto& v) { c.dsp.trim_transient = parse_bool(k, v); }},

        {"tcn.num_blocks", [](RunConfig& c, auto& k, auto& v) { c.tcn.num_blocks = parse_integer<int>(k, v); }},
        {"tcn.kernel_size", [](RunConfig& c, auto& k, auto& v) { c.tcn.kernel_size = parse_integer<int>(k, v); }},
        {"tcn.dilation_schedule",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "increment")
                 c.tcn.dilation_schedule = tcn::DilationSchedule::increment;
             else if (v == "doubling")
                 c.tcn.dilation_schedule = tcn::DilationSchedule::doubling;
             else
                 bad_value(k, v, "increment|doubling");
         }},
        {"tcn.channels_per_block",
         [](RunConfig& c, auto& k, auto& v) { c.tcn.channels_per_block = parse_integer<int>(k, v); }},
        {"tcn.dropout_rate", [](RunConfig& c, auto& k, auto& v) { c.tcn.dropout_rate = parse_real(k, v); }},
        {"tcn.num_classes", [](RunConfig& c, auto& k, auto& v) { c.tcn.num_classes = parse_integer<int>(k, v); }},
        {"tcn.input_channels", [](RunConfig& c, auto& k, auto& v) { c.tcn.input_channels = parse_integer<int>(k, v); }},
        {"tcn.strict_causal", [](RunConfig& c, auto& k, auto& v) { c.tcn.strict_causal = parse_bool(k, v); }},
        {"tcn.seed",
         [](RunConfig& c, auto& k, auto& v) {
             c.tcn.seed = parse_integer<std::uint64_t>(k, v);
             c.tcn_seed_explicit = true;
         }},
        {"tcn.epochs", [](RunConfig& c, auto& k, auto& v) { c.tcn_train.epochs = parse_count(k, v); }},
        {"tcn.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.tcn_train.learning_rate = parse_real(k, v); }},
        {"tcn.batch_size", [](RunConfig& c, auto& k, auto& v) { c.tcn_train.batch_size = parse_count(k, v); }},
        {"tcn.optimizer",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "adam")
                 c.tcn_train.optimizer = tcn::Optimizer::adam;
             else if (v == "sgd")
                 c.tcn_train.optimizer = tcn::Optimizer::sgd;
             else
                 bad_value(k, v, "adam|sgd");
         }},

        {"ssfcn.clip_len", [](RunConfig& c, auto& k, auto& v) { c.ssfcn.clip_len = parse_count(k, v); }},
        {"ssfcn.encoder_channels",
         [](RunConfig& c, auto& k, auto& v) {
             c.ssfcn.encoder_channels.clear();
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) c.ssfcn.encoder_channels.push_back(parse_count(k, trim(item)));
             if (c.ssfcn.encoder_channels.empty()) bad_value(k, v, "a comma-separated list of widths");
         }},
        {"ssfcn.decoder_blocks", [](RunConfig& c, auto& k, auto& v) { c.ssfcn.decoder_blocks = parse_count(k, v); }},
        {"ssfcn.input_channels", [](RunConfig& c, auto& k, auto& v) { c.ssfcn.input_channels = parse_count(k, v); }},
        {"ssfcn.bridge",
         [](RunConfig& c, auto& k, auto& v) {
             if (v != "mean" && v != "max") bad_value(k, v, "mean|max");
             c.ssfcn.bridge = ssfcn::parse_bridge(v);
         }},
        {"ssfcn.separable", [](RunConfig& c, auto& k, auto& v) { c.ssfcn.separable = parse_bool(k, v); }},
        {"ssfcn.seed",
         [](RunConfig& c, auto& k, auto& v) {
             c.ssfcn.seed = parse_integer<std::uint64_t>(k, v);
             c.ssfcn_seed_explicit = true;
         }},
        {"ssfcn.learning_rate", [](RunConfig& c, auto& k, auto& v) { c.ssfcn.learning_rate = parse_real(k, v); }},
        {"ssfcn.optimizer",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "adam")
                 c.ssfcn.optimizer = ssfcn::SsfcnOptimizer::adam;
             else if (v == "sgd")
                 c.ssfcn.optimizer = ssfcn::SsfcnOptimizer::sgd;
             else
                 bad_value(k, v, "adam|sgd");
         }},
        {"ssfcn.epochs", [](RunConfig& c, auto& k, auto& v) { c.ssfcn_epochs = parse_count(k, v); }},

        {"fusion.theta", [](RunConfig& c, auto& k, auto& v) { c.fusion.theta = parse_real(k, v); }},
        {"fusion.attention_high_min",
         [](RunConfig& c, auto& k, auto& v) { c.fusion.attention_high_min = parse_real(k, v); }},
        {"fusion.debounce_windows",
         [](RunConfig& c, auto& k, auto& v) { c.fusion.debounce_windows = parse_integer<int>(k, v); }},
    };
    return table;
}

}  // namespace

void RunConfig::validate() const {
    // Module validators already name their section.key; anything they
    // raise is reported as a configuration error.
    try {
        dsp.validate();
        tcn.validate();
        ssfcn.validate();
        fusion.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (tcn.input_channels != static_cast<int>(dsp::kBankChannels))
        throw ConfigError("tcn.input_channels must equal the filter-bank width (" +
                          std::to_string(dsp::kBankChannels) + ")");
    if (tcn_train.epochs < 1) throw ConfigError("tcn.epochs must be >= 1");
    if (tcn_train.batch_size < 1) throw ConfigError("tcn.batch_size must be >= 1");
    if (!(tcn_train.learning_rate > 0.0)) throw ConfigError("tcn.learning_rate must be positive");
    if (ssfcn_epochs < 1) throw ConfigError("ssfcn.epochs must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction must be in (0, 1)");
}

tcn::TcnConfig RunConfig::effective_tcn() const {
    auto c = tcn;
    if (!tcn_seed_explicit) c.seed = derive_seed(seed, "tcn");
    return c;
}

ssfcn::SsfcnConfig RunConfig::effective_ssfcn() const {
    auto c = ssfcn;
    if (!ssfcn_seed_explicit) c.seed = derive_seed(seed, "ssfcn");
    return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
        if (value.empty()) throw ConfigError(where + key + ": missing value");
        try {
            it->second(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.string());
}

}  // namespace dap::harness
