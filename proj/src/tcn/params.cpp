#include <fstream>

#include "dap/binio.hpp"
#include "dap/error.hpp"
#include "dap/tcn.hpp"

namespace dap::tcn {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'N', '1'};

template <typename Params, typename Ptr>
std::vector<Ptr> collect(Params& p) {
    std::vector<Ptr> out;
    for (auto& b : p.blocks) {
        for (auto* t : {&b.conv1_w, &b.conv1_b, &b.norm1_scale, &b.norm1_shift, &b.conv2_w, &b.conv2_b,
                        &b.norm2_scale, &b.norm2_shift})
            out.push_back(t);
        if (b.proj_w) out.push_back(&*b.proj_w);
    }
    out.push_back(&p.head_w);
    out.push_back(&p.head_b);
    return out;
}

// Shapes only; values zero except normalisation scales, which start at one.
TcnParams allocate(const TcnConfig& cfg) {
    const std::size_t ks = static_cast<std::size_t>(cfg.kernel_size);
    const std::size_t ch = static_cast<std::size_t>(cfg.channels_per_block);
    TcnParams p;
    p.config = cfg;
    std::size_t cin = static_cast<std::size_t>(cfg.input_channels);
    for (int b = 0; b < cfg.num_blocks; ++b) {
        TcnBlockParams bp;
        bp.conv1_w = ParamTensor({ch, cin, ks});
        bp.conv1_b = ParamTensor({ch});
        bp.norm1_scale = ParamTensor({ch}, 1.0);
        bp.norm1_shift = ParamTensor({ch});
        bp.conv2_w = ParamTensor({ch, ch, ks});
        bp.conv2_b = ParamTensor({ch});
        bp.norm2_scale = ParamTensor({ch}, 1.0);
        bp.norm2_shift = ParamTensor({ch});
        if (cin != ch) bp.proj_w = ParamTensor({ch, cin});
        p.blocks.push_back(std::move(bp));
        cin = ch;
    }
    p.head_w = ParamTensor({static_cast<std::size_t>(cfg.num_classes), ch});
    p.head_b = ParamTensor({static_cast<std::size_t>(cfg.num_classes)});
    return p;
}

}  // namespace

std::vector<ParamTensor*> TcnParams::tensors() { return collect<TcnParams, ParamTensor*>(*this); }

std::vector<const ParamTensor*> TcnParams::tensors() const {
    return collect<const TcnParams, const ParamTensor*>(*this);
}

TcnParams TcnParams::zeros_like() const {
    TcnParams z = allocate(config);
    for (auto* t : z.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
    return z;
}

bool operator==(const TcnParams& a, const TcnParams& b) {
    if (!(a.config == b.config)) return false;
    const auto ta = a.tensors(), tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!(*ta[i] == *tb[i])) return false;
    return true;
}

TcnParams init_params(const TcnConfig& config) {
    config.validate();
    TcnParams p = allocate(config);
    Rng rng(derive_seed(config.seed, "tcn.init"));
    const std::size_t ks = static_cast<std::size_t>(config.kernel_size);
    for (auto& b : p.blocks) {
        const std::size_t ch = b.conv1_w.shape[0], cin = b.conv1_w.shape[1];
        b.conv1_w.glorot(rng, cin * ks, ch * ks);
        b.conv2_w.glorot(rng, ch * ks, ch * ks);
        if (b.proj_w) b.proj_w->glorot(rng, cin, ch);
    }
    // The classifier head starts at zero so the initial prediction is the
    // uninformed 0.5 regardless of the residual stream's scale.
    return p;
}

void save_checkpoint(const TcnParams& params, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IngestError("cannot open checkpoint for writing: " + path.string());
    const auto& c = params.config;
    os.write(kMagic, 4);
    binio::put_i32(os, c.num_blocks);
    binio::put_i32(os, c.kernel_size);
    binio::put_i32(os, c.dilation_schedule == DilationSchedule::increment ? 0 : 1);
    binio::put_i32(os, c.channels_per_block);
    binio::put_i32(os, c.num_classes);
    binio::put_i32(os, c.input_channels);
    binio::put_i32(os, c.strict_causal ? 1 : 0);
    binio::put_f64(os, c.dropout_rate);
    binio::put_u64(os, c.seed);
    for (const auto* t : params.tensors()) binio::put_f64s(os, t->v);
    if (!os) throw IngestError("failed writing checkpoint: " + path.string());
}

TcnParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("cannot open checkpoint: " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
        throw IngestError("not a TCN1 checkpoint: " + path.string());
    TcnConfig c;
    c.num_blocks = binio::get_i32(is);
    c.kernel_size = binio::get_i32(is);
    const auto sched = binio::get_i32(is);
    if (sched != 0 && sched != 1) throw IngestError("checkpoint has unknown dilation schedule");
    c.dilation_schedule = sched == 0 ? DilationSchedule::increment : DilationSchedule::doubling;
    c.channels_per_block = binio::get_i32(is);
    c.num_classes = binio::get_i32(is);
    c.input_channels = binio::get_i32(is);
    c.strict_causal = binio::get_i32(is) != 0;
    c.dropout_rate = binio::get_f64(is);
    c.seed = binio::get_u64(is);
    try {
        c.validate();
    } catch (const Error& e) {
        throw IngestError(std::string("checkpoint config invalid: ") + e.what());
    }
    TcnParams p = allocate(c);
    for (auto* t : p.tensors()) binio::get_f64s(is, t->v);
    if (is.peek() != std::char_traits<char>::eof()) throw IngestError("trailing bytes in checkpoint");
    return p;
}

}  // namespace dap::tcn
