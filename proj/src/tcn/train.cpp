#include <numeric>

#include "dap/error.hpp"
#include "dap/tcn.hpp"

namespace dap::tcn {

TrainResult train(TcnParams params, const std::vector<dsp::HyperPatternWindow>& dataset, const TrainOptions& opts) {
    if (dataset.empty()) throw InvalidDataset("train: empty dataset");
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (!dataset[i].label) throw InvalidDataset("train: window " + std::to_string(i) + " is unlabelled");
    if (opts.batch_size == 0) throw InvalidArgument("train: batch size must be >= 1");
    if (opts.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");

    Rng shuffle_rng(derive_seed(opts.seed, "tcn.shuffle"));
    Rng dropout_rng(derive_seed(opts.seed, "tcn.dropout"));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult res;
    res.loss_history.reserve(static_cast<std::size_t>(opts.epochs));
    auto param_ptrs = params.tensors();
    Adam adam;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t end = std::min(order.size(), start + opts.batch_size);
            TcnParams acc = params.zeros_like();
            auto acc_ptrs = acc.tensors();
            for (std::size_t j = start; j < end; ++j) {
                const auto lg = loss_and_grad(params, dataset[order[j]], Mode::train, dropout_rng.next_u64());
                epoch_loss += lg.loss;
                const auto gp = lg.grad.tensors();
                for (std::size_t t = 0; t < acc_ptrs.size(); ++t)
                    for (std::size_t k = 0; k < acc_ptrs[t]->v.size(); ++k) acc_ptrs[t]->v[k] += gp[t]->v[k];
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto* t : acc_ptrs)
                for (double& g : t->v) g *= inv;
            std::vector<const ParamTensor*> grads(acc_ptrs.begin(), acc_ptrs.end());
            if (opts.optimizer == Optimizer::adam)
                adam.step(param_ptrs, grads, opts.learning_rate);
            else
                sgd_step(param_ptrs, grads, opts.learning_rate);
        }
        res.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size()));
        if (opts.on_epoch) opts.on_epoch(epoch, res.loss_history.back(), params);
    }
    res.params = std::move(params);
    return res;
}

double accuracy(const TcnParams& params, const std::vector<dsp::HyperPatternWindow>& dataset) {
    if (dataset.empty()) throw InvalidDataset("accuracy: empty dataset");
    std::size_t correct = 0;
    for (const auto& w : dataset) {
        if (!w.label) throw InvalidDataset("accuracy: unlabelled window");
        const bool wakeful = predict_score(params, w).value >= 0.5;
        correct += (wakeful == (*w.label == dsp::Label::wakeful)) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace dap::tcn
