#include <algorithm>
#include <cmath>
#include <fstream>

#include "dap/binio.hpp"
#include "dap/error.hpp"
#include "dap/ssfcn.hpp"

namespace dap::ssfcn {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'F', '1'};

template <typename Params, typename Ptr>
std::vector<Ptr> collect(Params& p) {
    std::vector<Ptr> out;
    auto unit = [&](auto& u) {
        out.push_back(&u.w);
        if (u.tw) out.push_back(&*u.tw);
    };
    for (auto& b : p.encoder) {
        unit(b.conv1);
        out.push_back(&b.norm1.scale);
        out.push_back(&b.norm1.shift);
        unit(b.conv2);
        out.push_back(&b.norm2.scale);
        out.push_back(&b.norm2.shift);
    }
    for (auto& b : p.decoder) {
        out.push_back(&b.conv_w);
        out.push_back(&b.norm.scale);
        out.push_back(&b.norm.shift);
        if (b.proj_w) out.push_back(&*b.proj_w);
    }
    out.push_back(&p.head_w);
    out.push_back(&p.head_b);
    return out;
}

ConvUnit make_unit(std::size_t cin, std::size_t cout, bool separable) {
    ConvUnit u;
    if (separable) {
        u.w = ParamTensor({cout, cin * 9});
        u.tw = ParamTensor({cout, cout * 3});
    } else {
        u.w = ParamTensor({cout, cin * 27});
    }
    return u;
}

NormParams make_norm(std::size_t c) { return {ParamTensor({c}, 1.0), ParamTensor({c})}; }

SsfcnParams allocate(const SsfcnConfig& cfg) {
    SsfcnParams p;
    p.config = cfg;
    std::size_t cin = cfg.input_channels;
    for (std::size_t c : cfg.encoder_channels) {
        p.encoder.push_back({make_unit(cin, c, cfg.separable), make_norm(c), make_unit(c, c, cfg.separable),
                             make_norm(c)});
        cin = c;
    }
    for (std::size_t j = 0; j < cfg.decoder_blocks; ++j) {
        const std::size_t c = cfg.decoder_channels(j);
        DecoderBlockParams d{ParamTensor({c, cin * 9}), make_norm(c), std::nullopt};
        if (c != cin) d.proj_w = ParamTensor({c, cin});
        p.decoder.push_back(std::move(d));
        cin = c;
    }
    p.head_w = ParamTensor({1, cin});
    p.head_b = ParamTensor({1});
    return p;
}

}  // namespace

void SsfcnConfig::validate() const {
    if (clip_len < 1) throw InvalidSpec("ssfcn.clip_len must be >= 1");
    if (encoder_channels.empty() || encoder_channels.size() > 8)
        throw InvalidSpec("ssfcn.encoder_channels must list 1..8 block widths");
    for (std::size_t c : encoder_channels)
        if (c < 1) throw InvalidSpec("ssfcn.encoder_channels entries must be >= 1");
    if (decoder_blocks != encoder_channels.size())
        throw InvalidSpec("ssfcn.decoder_blocks must equal the number of encoder blocks");
    if (input_channels != 1 && input_channels != 3) throw InvalidSpec("ssfcn.input_channels must be 1 or 3");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw InvalidSpec("ssfcn.learning_rate must be positive");
}

std::size_t SsfcnConfig::decoder_channels(std::size_t j) const {
    const std::size_t nb = encoder_channels.size();
    return encoder_channels[j + 2 <= nb ? nb - 2 - j : 0];
}

std::vector<ParamTensor*> SsfcnParams::tensors() { return collect<SsfcnParams, ParamTensor*>(*this); }

std::vector<const ParamTensor*> SsfcnParams::tensors() const {
    return collect<const SsfcnParams, const ParamTensor*>(*this);
}

SsfcnParams SsfcnParams::zeros_like() const {
    SsfcnParams z = allocate(config);
    for (auto* t : z.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
    return z;
}

bool SsfcnParams::operator==(const SsfcnParams& o) const {
    if (!(config == o.config)) return false;
    const auto a = tensors(), b = o.tensors();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(*a[i] == *b[i])) return false;
    return true;
}

SsfcnParams init_params(const SsfcnConfig& config) {
    config.validate();
    SsfcnParams p = allocate(config);
    Rng rng(derive_seed(config.seed, "ssfcn.init"));
    auto init_unit = [&](ConvUnit& u) {
        const std::size_t cout = u.w.shape[0], k = u.w.shape[1];
        const std::size_t taps = config.separable ? 9 : 27;
        u.w.glorot(rng, k, cout * taps);
        if (u.tw) u.tw->glorot(rng, u.tw->shape[1], cout * 3);
    };
    for (auto& b : p.encoder) {
        init_unit(b.conv1);
        init_unit(b.conv2);
    }
    for (auto& d : p.decoder) {
        d.conv_w.glorot(rng, d.conv_w.shape[1], d.conv_w.shape[0] * 9);
        if (d.proj_w) d.proj_w->glorot(rng, d.proj_w->shape[1], d.proj_w->shape[0]);
    }
    p.head_w.glorot(rng, p.head_w.shape[1], 1);
    return p;
}

void save_checkpoint(const SsfcnParams& params, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IngestError("cannot open checkpoint for writing: " + path.string());
    const auto& c = params.config;
    os.write(kMagic, 4);
    binio::put_u64(os, c.clip_len);
    binio::put_u64(os, c.encoder_channels.size());
    for (std::size_t ch : c.encoder_channels) binio::put_u64(os, ch);
    binio::put_u64(os, c.decoder_blocks);
    binio::put_u64(os, c.input_channels);
    binio::put_i32(os, c.bridge == Bridge::mean ? 0 : 1);
    binio::put_i32(os, c.separable ? 1 : 0);
    binio::put_i32(os, c.optimizer == SsfcnOptimizer::sgd ? 0 : 1);
    binio::put_u64(os, c.seed);
    binio::put_f64(os, c.learning_rate);
    for (const auto* t : params.tensors()) binio::put_f64s(os, t->v);
    if (!os) throw IngestError("failed writing checkpoint: " + path.string());
}

SsfcnParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
        throw IngestError("not an SSF1 checkpoint: " + path.string());
    SsfcnConfig c;
    c.clip_len = binio::get_u64(is);
    const auto nb = binio::get_u64(is);
    if (nb > 8) throw IngestError("checkpoint has implausible encoder depth");
    c.encoder_channels.assign(nb, 0);
    for (auto& ch : c.encoder_channels) ch = binio::get_u64(is);
    c.decoder_blocks = binio::get_u64(is);
    c.input_channels = binio::get_u64(is);
    const auto bridge = binio::get_i32(is), sep = binio::get_i32(is), opt = binio::get_i32(is);
    if (bridge != 0 && bridge != 1) throw IngestError("checkpoint has unknown bridge");
    if (opt != 0 && opt != 1) throw IngestError("checkpoint has unknown optimizer");
    c.bridge = bridge == 0 ? Bridge::mean : Bridge::max;
    c.separable = sep != 0;
    c.optimizer = opt == 0 ? SsfcnOptimizer::sgd : SsfcnOptimizer::adam;
    c.seed = binio::get_u64(is);
    c.learning_rate = binio::get_f64(is);
    try {
        c.validate();
    } catch (const Error& e) {
        throw IngestError(std::string("checkpoint config invalid: ") + e.what());
    }
    SsfcnParams p = allocate(c);
    for (auto* t : p.tensors()) binio::get_f64s(is, t->v);
    if (is.peek() != std::char_traits<char>::eof()) throw IngestError("trailing bytes in checkpoint");
    return p;
}

}  // namespace dap::ssfcn
