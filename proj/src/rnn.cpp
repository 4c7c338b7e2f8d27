#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"
#include "kooptx/models.hpp"
#include "models_detail.hpp"

namespace kooptx {

namespace {

struct RnnLayout {
    size_t wx, wh, b, head_w, head_b, total;
};

RnnLayout rnn_layout(const RnnConfig& cfg, std::vector<ParamView>& views) {
    const auto in = static_cast<size_t>(cfg.in_dim);
    const auto h = static_cast<size_t>(cfg.hidden);
    const auto c = static_cast<size_t>(cfg.n_classes);
    RnnLayout lo;
    lo.total = 0;
    lo.wx = detail::add_view(views, lo.total, "rnn.wx", {in, h});
    lo.wh = detail::add_view(views, lo.total, "rnn.wh", {h, h});
    lo.b = detail::add_view(views, lo.total, "rnn.b", {h});
    lo.head_w = detail::add_view(views, lo.total, "head.w", {h, c});
    lo.head_b = detail::add_view(views, lo.total, "head.b", {c});
    return lo;
}

void check_record(const RnnConfig& cfg, const Mat& record) {
    if (record.rows == 0) throw DataError("rnn: empty sequence");
    if (record.cols != static_cast<size_t>(cfg.in_dim))
        throw DataError("rnn: input dimension " + std::to_string(record.cols) +
                        " does not match the model's " + std::to_string(cfg.in_dim));
}

// Runs the recurrence for a group of equal-length records, keeping every
// hidden state for backpropagation through time. h[t] is B × hidden with
// h[0] = 0 and h[steps] the readout state.
void rnn_unroll(const Classifier& model, const RnnLayout& lo,
                const std::vector<const Mat*>& records, std::vector<Mat>& h) {
    const auto& cfg = model.rnn;
    const auto hid = static_cast<size_t>(cfg.hidden);
    const auto in = static_cast<size_t>(cfg.in_dim);
    const size_t nb = records.size();
    const size_t steps = records[0]->rows;
    const double* pp = model.params.data();
    const auto& kn = kernels::active();

    h.assign(steps + 1, Mat(nb, hid));
    Mat xt(nb, in), act(nb, hid);
    for (size_t t = 0; t < steps; ++t) {
        for (size_t i = 0; i < nb; ++i)
            std::memcpy(xt.row(i), records[i]->row(t), in * sizeof(double));
        kn.gemm_nn(xt.data.data(), pp + lo.wx, act.data.data(), nb, in, hid, false);
        kn.gemm_nn(h[t].data.data(), pp + lo.wh, act.data.data(), nb, hid, hid, true);
        for (size_t i = 0; i < nb; ++i) {
            const double* ar = act.row(i);
            double* hr = h[t + 1].row(i);
            for (size_t c = 0; c < hid; ++c) hr[c] = std::tanh(ar[c] + pp[lo.b + c]);
        }
    }
}

}  // namespace

Classifier make_rnn(const RnnConfig& cfg, uint64_t seed) {
    if (cfg.hidden < 1) throw ConfigError("rnn: hidden size must be positive");
    if (cfg.n_classes < 2) throw ConfigError("rnn: need at least 2 classes");
    if (cfg.in_dim < 1) throw ConfigError("rnn: in_dim must be positive");

    Classifier model;
    model.kind = ModelKind::Rnn;
    model.rnn = cfg;
    const RnnLayout lo = rnn_layout(cfg, model.views);
    model.params.assign(lo.total, 0.0);

    Rng rng(seed);
    double* p = model.params.data();
    detail::xavier_fill(rng, p + lo.wx, cfg.in_dim, cfg.hidden);
    detail::xavier_fill(rng, p + lo.wh, cfg.hidden, cfg.hidden);
    detail::xavier_fill(rng, p + lo.head_w, cfg.hidden, cfg.n_classes);
    return model;
}

namespace detail {

std::vector<double> rnn_logits(const Classifier& model, const Mat& record) {
    check_record(model.rnn, record);
    std::vector<ParamView> scratch;
    const RnnLayout lo = rnn_layout(model.rnn, scratch);
    std::vector<Mat> h;
    const std::vector<const Mat*> one{&record};
    rnn_unroll(model, lo, one, h);

    const auto nc = static_cast<size_t>(model.rnn.n_classes);
    const auto hid = static_cast<size_t>(model.rnn.hidden);
    const double* pp = model.params.data();
    // head.w is hidden × n_classes (row-major), so walk it column-wise.
    std::vector<double> logits(nc);
    for (size_t c = 0; c < nc; ++c) {
        double acc = pp[lo.head_b + c];
        const double* hr = h.back().row(0);
        for (size_t j = 0; j < hid; ++j) acc += hr[j] * pp[lo.head_w + j * nc + c];
        logits[c] = acc;
    }
    return logits;
}

double rnn_batch_grad(const Classifier& model, const std::vector<const Mat*>& records,
                      const std::vector<int>& labels, std::vector<double>& grads) {
    const auto& cfg = model.rnn;
    for (const Mat* r : records) check_record(cfg, *r);

    std::vector<ParamView> scratch;
    const RnnLayout lo = rnn_layout(cfg, scratch);
    const auto hid = static_cast<size_t>(cfg.hidden);
    const auto in = static_cast<size_t>(cfg.in_dim);
    const auto nc = static_cast<size_t>(cfg.n_classes);
    const double* pp = model.params.data();
    double* gp = grads.data();
    const auto& kn = kernels::active();
    const double inv_total = 1.0 / static_cast<double>(records.size());

    // Equal-length records advance together as one batched recurrence;
    // mixed-length batches fall apart into per-length groups.
    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return records[a]->rows < records[b]->rows;
    });

    double loss = 0.0;
    size_t g0 = 0;
    while (g0 < order.size()) {
        size_t g1 = g0;
        while (g1 < order.size() &&
               records[order[g1]]->rows == records[order[g0]]->rows)
            ++g1;
        std::vector<const Mat*> group;
        std::vector<int> group_labels;
        for (size_t i = g0; i < g1; ++i) {
            group.push_back(records[order[i]]);
            group_labels.push_back(labels[order[i]]);
        }
        const size_t nb = group.size();
        const size_t steps = group[0]->rows;

        std::vector<Mat> h;
        rnn_unroll(model, lo, group, h);

        Mat logits(nb, nc);
        kn.gemm_nn(h[steps].data.data(), pp + lo.head_w, logits.data.data(), nb, hid,
                   nc, false);
        Mat dlogits(nb, nc);
        for (size_t i = 0; i < nb; ++i) {
            std::vector<double> lg(logits.row(i), logits.row(i) + nc);
            for (size_t c = 0; c < nc; ++c) lg[c] += pp[lo.head_b + c];
            loss += cross_entropy(lg, group_labels[i]);
            double mx = lg[0];
            for (double v : lg) mx = std::max(mx, v);
            double total = 0.0;
            for (double v : lg) total += std::exp(v - mx);
            for (size_t c = 0; c < nc; ++c) {
                const double soft = std::exp(lg[c] - mx) / total;
                dlogits(i, c) =
                    (soft - (static_cast<size_t>(group_labels[i]) == c ? 1.0 : 0.0)) *
                    inv_total;
            }
        }

        kn.gemm_tn(h[steps].data.data(), dlogits.data.data(), gp + lo.head_w, hid, nb,
                   nc, true);
        for (size_t i = 0; i < nb; ++i)
            for (size_t c = 0; c < nc; ++c) gp[lo.head_b + c] += dlogits(i, c);

        Mat dh(nb, hid);
        kn.gemm_nt(dlogits.data.data(), pp + lo.head_w, dh.data.data(), nb, nc, hid,
                   false);

        Mat da(nb, hid), xt(nb, in);
        for (size_t t = steps; t >= 1; --t) {
            for (size_t i = 0; i < nb; ++i) {
                const double* hr = h[t].row(i);
                const double* dr = dh.row(i);
                double* ar = da.row(i);
                for (size_t c = 0; c < hid; ++c) ar[c] = dr[c] * (1.0 - hr[c] * hr[c]);
            }
            for (size_t i = 0; i < nb; ++i)
                std::memcpy(xt.row(i), group[i]->row(t - 1), in * sizeof(double));
            kn.gemm_tn(xt.data.data(), da.data.data(), gp + lo.wx, in, nb, hid, true);
            kn.gemm_tn(h[t - 1].data.data(), da.data.data(), gp + lo.wh, hid, nb, hid,
                       true);
            for (size_t i = 0; i < nb; ++i) {
                const double* ar = da.row(i);
                for (size_t c = 0; c < hid; ++c) gp[lo.b + c] += ar[c];
            }
            kn.gemm_nt(da.data.data(), pp + lo.wh, dh.data.data(), nb, hid, hid, false);
        }
        g0 = g1;
    }
    return loss * inv_total;
}

}  // namespace detail

}  // namespace kooptx
