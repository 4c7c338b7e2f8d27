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

using detail::apply_dropout;

constexpr double kLnEps = 1e-5;

struct LayerOffsets {
    size_t ln1_g, ln1_b;
    size_t wq, wk, wv, wo, bq, bk, bv, bo;
    size_t ln2_g, ln2_b;
    size_t w1, b1, w2, b2;
};

struct TfLayout {
    size_t embed_w, embed_b;
    std::vector<LayerOffsets> layer;
    size_t head_w, head_b;
    size_t total;
};

TfLayout tf_layout(const TransformerConfig& cfg, std::vector<ParamView>& views) {
    const auto in = static_cast<size_t>(cfg.in_dim);
    const auto e = static_cast<size_t>(cfg.emb_dim);
    const auto f = static_cast<size_t>(cfg.ff_dim);
    const auto c = static_cast<size_t>(cfg.n_classes);

    TfLayout lo;
    lo.total = 0;
    lo.embed_w = detail::add_view(views, lo.total, "embed.w", {in, e});
    lo.embed_b = detail::add_view(views, lo.total, "embed.b", {e});
    lo.layer.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        auto& L = lo.layer[l];
        L.ln1_g = detail::add_view(views, lo.total, p + "ln1.g", {e});
        L.ln1_b = detail::add_view(views, lo.total, p + "ln1.b", {e});
        L.wq = detail::add_view(views, lo.total, p + "attn.wq", {e, e});
        L.wk = detail::add_view(views, lo.total, p + "attn.wk", {e, e});
        L.wv = detail::add_view(views, lo.total, p + "attn.wv", {e, e});
        L.wo = detail::add_view(views, lo.total, p + "attn.wo", {e, e});
        L.bq = detail::add_view(views, lo.total, p + "attn.bq", {e});
        L.bk = detail::add_view(views, lo.total, p + "attn.bk", {e});
        L.bv = detail::add_view(views, lo.total, p + "attn.bv", {e});
        L.bo = detail::add_view(views, lo.total, p + "attn.bo", {e});
        L.ln2_g = detail::add_view(views, lo.total, p + "ln2.g", {e});
        L.ln2_b = detail::add_view(views, lo.total, p + "ln2.b", {e});
        L.w1 = detail::add_view(views, lo.total, p + "ff.w1", {e, f});
        L.b1 = detail::add_view(views, lo.total, p + "ff.b1", {f});
        L.w2 = detail::add_view(views, lo.total, p + "ff.w2", {f, e});
        L.b2 = detail::add_view(views, lo.total, p + "ff.b2", {e});
    }
    lo.head_w = detail::add_view(views, lo.total, "head.w", {e, c});
    lo.head_b = detail::add_view(views, lo.total, "head.b", {c});
    return lo;
}

void validate_config(const TransformerConfig& cfg) {
    if (cfg.layers < 1 || cfg.heads < 1 || cfg.emb_dim < 1 || cfg.ff_dim < 1)
        throw ConfigError("transformer: layers/heads/dims must be positive");
    if (cfg.emb_dim % cfg.heads != 0)
        throw ConfigError("transformer: emb_dim " + std::to_string(cfg.emb_dim) +
                          " not divisible by heads " + std::to_string(cfg.heads));
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
        throw ConfigError("transformer: dropout must be in [0,1)");
    if (cfg.n_classes < 2) throw ConfigError("transformer: need at least 2 classes");
    if (cfg.max_tokens < 1) throw ConfigError("transformer: max_tokens must be >= 1");
    if (cfg.in_dim < 1) throw ConfigError("transformer: in_dim must be set");
}

double pos_encoding(size_t pos, size_t channel, size_t emb_dim) {
    const double i2 = static_cast<double>(channel - channel % 2);
    const double angle = static_cast<double>(pos) /
                         std::pow(10000.0, i2 / static_cast<double>(emb_dim));
    return channel % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

// y = x·w + b, with w taken from the flat parameter store.
void linear(const Mat& x, const double* w, const double* b, size_t out_dim, Mat& y) {
    y = Mat(x.rows, out_dim);
    kernels::active().gemm_nn(x.data.data(), w, y.data.data(), x.rows, x.cols, out_dim,
                              false);
    for (size_t r = 0; r < y.rows; ++r) {
        double* row = y.row(r);
        for (size_t c = 0; c < out_dim; ++c) row[c] += b[c];
    }
}

void ln_forward(const Mat& x, const double* g, const double* b, Mat& y, Mat& xh,
                std::vector<double>& inv_s) {
    const size_t e = x.cols;
    y = Mat(x.rows, e);
    xh = Mat(x.rows, e);
    inv_s.resize(x.rows);
    for (size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double mu = 0.0;
        for (size_t c = 0; c < e; ++c) mu += xr[c];
        mu /= static_cast<double>(e);
        double var = 0.0;
        for (size_t c = 0; c < e; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= static_cast<double>(e);
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        inv_s[r] = inv;
        double* hr = xh.row(r);
        double* yr = y.row(r);
        for (size_t c = 0; c < e; ++c) {
            hr[c] = (xr[c] - mu) * inv;
            yr[c] = g[c] * hr[c] + b[c];
        }
    }
}

// dx += (1/σ)·(dy⊙g − mean(dy⊙g) − x̂·mean(dy⊙g⊙x̂)); also accumulates the
// gain/shift gradients.
void ln_backward(const Mat& dy, const Mat& xh, const std::vector<double>& inv_s,
                 const double* g, Mat& dx, double* dg, double* db) {
    const size_t e = dy.cols;
    std::vector<double> t(e);
    for (size_t r = 0; r < dy.rows; ++r) {
        const double* dyr = dy.row(r);
        const double* hr = xh.row(r);
        double m1 = 0.0, m2 = 0.0;
        for (size_t c = 0; c < e; ++c) {
            t[c] = dyr[c] * g[c];
            m1 += t[c];
            m2 += t[c] * hr[c];
            dg[c] += dyr[c] * hr[c];
            db[c] += dyr[c];
        }
        m1 /= static_cast<double>(e);
        m2 /= static_cast<double>(e);
        double* dxr = dx.row(r);
        for (size_t c = 0; c < e; ++c) dxr[c] += inv_s[r] * (t[c] - m1 - hr[c] * m2);
    }
}

void softmax_rows(Mat& s) {
    for (size_t r = 0; r < s.rows; ++r) {
        double* row = s.row(r);
        double mx = row[0];
        for (size_t c = 1; c < s.cols; ++c) mx = std::max(mx, row[c]);
        double total = 0.0;
        for (size_t c = 0; c < s.cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            total += row[c];
        }
        for (size_t c = 0; c < s.cols; ++c) row[c] /= total;
    }
}

// dS = P ⊙ (dP − rowsum(dP ⊙ P)), written over dp.
void softmax_backward(const Mat& p, Mat& dp) {
    for (size_t r = 0; r < p.rows; ++r) {
        const double* pr = p.row(r);
        double* dr = dp.row(r);
        double acc = 0.0;
        for (size_t c = 0; c < p.cols; ++c) acc += dr[c] * pr[c];
        for (size_t c = 0; c < p.cols; ++c) dr[c] = pr[c] * (dr[c] - acc);
    }
}

struct Segment {
    size_t start, len;
};

void gather_head(const Mat& src, size_t start, size_t len, size_t col0, size_t dk,
                 Mat& dst) {
    dst = Mat(len, dk);
    for (size_t t = 0; t < len; ++t)
        std::memcpy(dst.row(t), src.row(start + t) + col0, dk * sizeof(double));
}

void scatter_head(const Mat& src, size_t start, size_t col0, Mat& dst) {
    for (size_t t = 0; t < src.rows; ++t)
        std::memcpy(dst.row(t + start) + col0, src.row(t), src.cols * sizeof(double));
}

void add_colsum(const Mat& x, double* out) {
    for (size_t r = 0; r < x.rows; ++r) {
        const double* row = x.row(r);
        for (size_t c = 0; c < x.cols; ++c) out[c] += row[c];
    }
}

struct LayerCache {
    Mat x_in, xh1, q, k, v, a, r1, xh2, u, gg;
    std::vector<double> inv_s1, inv_s2;
    std::vector<Mat> p;  // segment-major, heads within: p[seg*H + h]
};

struct TfCache {
    Mat feats;  // concatenated input features (R × in_dim)
    std::vector<Segment> segs;
    std::vector<LayerCache> layers;
    Mat x_out;
    Mat pooled;
    Mat logits;
};

void tf_forward(const Classifier& model, TfCache& cc, const DropoutCtx& drop) {
    const auto& cfg = model.tf;
    std::vector<ParamView> scratch;
    const TfLayout lo = tf_layout(cfg, scratch);
    const double* pp = model.params.data();
    const auto& kn = kernels::active();

    const size_t e = static_cast<size_t>(cfg.emb_dim);
    const size_t heads = static_cast<size_t>(cfg.heads);
    const size_t dk = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const size_t rows = cc.feats.rows;

    Mat x;
    linear(cc.feats, pp + lo.embed_w, pp + lo.embed_b, e, x);
    for (const auto& seg : cc.segs)
        for (size_t t = 0; t < seg.len; ++t) {
            double* row = x.row(seg.start + t);
            for (size_t c = 0; c < e; ++c) row[c] += pos_encoding(t, c, e);
        }

    cc.layers.assign(cfg.layers, {});
    for (int l = 0; l < cfg.layers; ++l) {
        const auto& L = lo.layer[l];
        auto& lc = cc.layers[l];
        lc.x_in = std::move(x);

        Mat y1;
        ln_forward(lc.x_in, pp + L.ln1_g, pp + L.ln1_b, y1, lc.xh1, lc.inv_s1);
        linear(y1, pp + L.wq, pp + L.bq, e, lc.q);
        linear(y1, pp + L.wk, pp + L.bk, e, lc.k);
        linear(y1, pp + L.wv, pp + L.bv, e, lc.v);

        lc.a = Mat(rows, e);
        lc.p.resize(cc.segs.size() * heads);
        for (size_t s = 0; s < cc.segs.size(); ++s) {
            const auto& seg = cc.segs[s];
            for (size_t h = 0; h < heads; ++h) {
                Mat qh, kh, vh;
                gather_head(lc.q, seg.start, seg.len, h * dk, dk, qh);
                gather_head(lc.k, seg.start, seg.len, h * dk, dk, kh);
                gather_head(lc.v, seg.start, seg.len, h * dk, dk, vh);
                Mat& p = lc.p[s * heads + h];
                p = Mat(seg.len, seg.len);
                kn.gemm_nt(qh.data.data(), kh.data.data(), p.data.data(), seg.len, dk,
                           seg.len, false);
                for (double& v2 : p.data) v2 *= scale;
                softmax_rows(p);
                Mat ah(seg.len, dk);
                kn.gemm_nn(p.data.data(), vh.data.data(), ah.data.data(), seg.len,
                           seg.len, dk, false);
                scatter_head(ah, seg.start, h * dk, lc.a);
            }
        }

        Mat o;
        linear(lc.a, pp + L.wo, pp + L.bo, e, o);
        apply_dropout(o.data.data(), o.size(), cfg.dropout, drop, 2 * l);
        lc.r1 = Mat(rows, e);
        kn.vadd(lc.x_in.data.data(), o.data.data(), lc.r1.data.data(), rows * e);

        Mat y2;
        ln_forward(lc.r1, pp + L.ln2_g, pp + L.ln2_b, y2, lc.xh2, lc.inv_s2);
        linear(y2, pp + L.w1, pp + L.b1, static_cast<size_t>(cfg.ff_dim), lc.u);
        lc.gg = Mat(lc.u.rows, lc.u.cols);
        for (size_t i = 0; i < lc.u.size(); ++i)
            lc.gg.data[i] = detail::gelu(lc.u.data[i]);
        Mat w;
        linear(lc.gg, pp + L.w2, pp + L.b2, e, w);
        apply_dropout(w.data.data(), w.size(), cfg.dropout, drop, 2 * l + 1);
        x = Mat(rows, e);
        kn.vadd(lc.r1.data.data(), w.data.data(), x.data.data(), rows * e);
    }
    cc.x_out = std::move(x);

    cc.pooled = Mat(cc.segs.size(), e);
    for (size_t s = 0; s < cc.segs.size(); ++s) {
        const auto& seg = cc.segs[s];
        double* pr = cc.pooled.row(s);
        for (size_t t = 0; t < seg.len; ++t) {
            const double* row = cc.x_out.row(seg.start + t);
            for (size_t c = 0; c < e; ++c) pr[c] += row[c];
        }
        for (size_t c = 0; c < e; ++c) pr[c] /= static_cast<double>(seg.len);
    }
    linear(cc.pooled, pp + lo.head_w, pp + lo.head_b,
           static_cast<size_t>(cfg.n_classes), cc.logits);
}

// Backpropagates dlogits (B × n_classes) through the cached forward pass.
void tf_backward(const Classifier& model, const TfCache& cc, const Mat& dlogits,
                 const DropoutCtx& drop, std::vector<double>& grads) {
    const auto& cfg = model.tf;
    std::vector<ParamView> scratch;
    const TfLayout lo = tf_layout(cfg, scratch);
    const double* pp = model.params.data();
    double* gp = grads.data();
    const auto& kn = kernels::active();

    const size_t e = static_cast<size_t>(cfg.emb_dim);
    const size_t ff = static_cast<size_t>(cfg.ff_dim);
    const size_t heads = static_cast<size_t>(cfg.heads);
    const size_t dk = e / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const size_t rows = cc.x_out.rows;
    const size_t nb = cc.segs.size();

    kn.gemm_tn(cc.pooled.data.data(), dlogits.data.data(), gp + lo.head_w, e, nb,
               dlogits.cols, true);
    add_colsum(dlogits, gp + lo.head_b);
    Mat dpooled(nb, e);
    kn.gemm_nt(dlogits.data.data(), pp + lo.head_w, dpooled.data.data(), nb,
               dlogits.cols, e, false);

    Mat dx(rows, e);
    for (size_t s = 0; s < nb; ++s) {
        const auto& seg = cc.segs[s];
        const double* dp = dpooled.row(s);
        for (size_t t = 0; t < seg.len; ++t) {
            double* row = dx.row(seg.start + t);
            for (size_t c = 0; c < e; ++c) row[c] = dp[c] / static_cast<double>(seg.len);
        }
    }

    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& L = lo.layer[l];
        const auto& lc = cc.layers[l];

        // Feedforward branch: x_out = r1 + drop(gg·W2 + b2).
        Mat dw = dx;
        apply_dropout(dw.data.data(), dw.size(), cfg.dropout, drop, 2 * l + 1);
        kn.gemm_tn(lc.gg.data.data(), dw.data.data(), gp + L.w2, ff, rows, e, true);
        add_colsum(dw, gp + L.b2);
        Mat du(rows, ff);
        kn.gemm_nt(dw.data.data(), pp + L.w2, du.data.data(), rows, e, ff, false);
        for (size_t i = 0; i < du.size(); ++i)
            du.data[i] *= detail::gelu_grad(lc.u.data[i]);

        Mat y2(rows, e);
        for (size_t r = 0; r < rows; ++r)
            for (size_t c = 0; c < e; ++c)
                y2(r, c) = pp[L.ln2_g + c] * lc.xh2(r, c) + pp[L.ln2_b + c];
        kn.gemm_tn(y2.data.data(), du.data.data(), gp + L.w1, e, rows, ff, true);
        add_colsum(du, gp + L.b1);
        Mat dy2(rows, e);
        kn.gemm_nt(du.data.data(), pp + L.w1, dy2.data.data(), rows, ff, e, false);

        Mat dr1 = dx;  // residual path
        ln_backward(dy2, lc.xh2, lc.inv_s2, pp + L.ln2_g, dr1, gp + L.ln2_g,
                    gp + L.ln2_b);

        // Attention branch: r1 = x_in + drop(a·Wo + bo).
        Mat dor = dr1;
        apply_dropout(dor.data.data(), dor.size(), cfg.dropout, drop, 2 * l);
        kn.gemm_tn(lc.a.data.data(), dor.data.data(), gp + L.wo, e, rows, e, true);
        add_colsum(dor, gp + L.bo);
        Mat da(rows, e);
        kn.gemm_nt(dor.data.data(), pp + L.wo, da.data.data(), rows, e, e, false);

        Mat dq(rows, e), dkm(rows, e), dv(rows, e);
        for (size_t s = 0; s < nb; ++s) {
            const auto& seg = cc.segs[s];
            for (size_t h = 0; h < heads; ++h) {
                Mat dah, qh, kh, vh;
                gather_head(da, seg.start, seg.len, h * dk, dk, dah);
                gather_head(lc.q, seg.start, seg.len, h * dk, dk, qh);
                gather_head(lc.k, seg.start, seg.len, h * dk, dk, kh);
                gather_head(lc.v, seg.start, seg.len, h * dk, dk, vh);
                const Mat& p = lc.p[s * heads + h];

                Mat dp(seg.len, seg.len);
                kn.gemm_nt(dah.data.data(), vh.data.data(), dp.data.data(), seg.len, dk,
                           seg.len, false);
                Mat dvh(seg.len, dk);
                kn.gemm_tn(p.data.data(), dah.data.data(), dvh.data.data(), seg.len,
                           seg.len, dk, false);
                softmax_backward(p, dp);
                Mat dqh(seg.len, dk), dkh(seg.len, dk);
                kn.gemm_nn(dp.data.data(), kh.data.data(), dqh.data.data(), seg.len,
                           seg.len, dk, false);
                kn.gemm_tn(dp.data.data(), qh.data.data(), dkh.data.data(), seg.len,
                           seg.len, dk, false);
                for (double& v2 : dqh.data) v2 *= scale;
                for (double& v2 : dkh.data) v2 *= scale;
                scatter_head(dqh, seg.start, h * dk, dq);
                scatter_head(dkh, seg.start, h * dk, dkm);
                scatter_head(dvh, seg.start, h * dk, dv);
            }
        }

        Mat y1(rows, e);
        for (size_t r = 0; r < rows; ++r)
            for (size_t c = 0; c < e; ++c)
                y1(r, c) = pp[L.ln1_g + c] * lc.xh1(r, c) + pp[L.ln1_b + c];
        kn.gemm_tn(y1.data.data(), dq.data.data(), gp + L.wq, e, rows, e, true);
        kn.gemm_tn(y1.data.data(), dkm.data.data(), gp + L.wk, e, rows, e, true);
        kn.gemm_tn(y1.data.data(), dv.data.data(), gp + L.wv, e, rows, e, true);
        add_colsum(dq, gp + L.bq);
        add_colsum(dkm, gp + L.bk);
        add_colsum(dv, gp + L.bv);
        Mat dy1(rows, e);
        kn.gemm_nt(dq.data.data(), pp + L.wq, dy1.data.data(), rows, e, e, false);
        kn.gemm_nt(dkm.data.data(), pp + L.wk, dy1.data.data(), rows, e, e, true);
        kn.gemm_nt(dv.data.data(), pp + L.wv, dy1.data.data(), rows, e, e, true);

        Mat dx_in = dr1;  // residual path into the layer input
        ln_backward(dy1, lc.xh1, lc.inv_s1, pp + L.ln1_g, dx_in, gp + L.ln1_g,
                    gp + L.ln1_b);
        dx = std::move(dx_in);
    }

    kn.gemm_tn(cc.feats.data.data(), dx.data.data(), gp + lo.embed_w, cc.feats.cols,
               rows, e, true);
    add_colsum(dx, gp + lo.embed_b);
}

void check_record(const Classifier& model, const Mat& record) {
    const auto& cfg = model.tf;
    if (record.rows == 0) throw DataError("transformer: empty token sequence");
    if (record.cols != static_cast<size_t>(cfg.in_dim))
        throw DataError("transformer: token dimension " + std::to_string(record.cols) +
                        " does not match the embedding input size " +
                        std::to_string(cfg.in_dim));
    if (record.rows > static_cast<size_t>(cfg.max_tokens))
        throw DataError("transformer: " + std::to_string(record.rows) +
                        " tokens exceeds max_tokens " + std::to_string(cfg.max_tokens));
}

}  // namespace

Classifier make_transformer(const TransformerConfig& cfg, uint64_t seed) {
    validate_config(cfg);
    Classifier model;
    model.kind = ModelKind::Transformer;
    model.tf = cfg;
    const TfLayout lo = tf_layout(cfg, model.views);
    model.params.assign(lo.total, 0.0);

    Rng rng(seed);
    double* p = model.params.data();
    const auto in = static_cast<size_t>(cfg.in_dim);
    const auto e = static_cast<size_t>(cfg.emb_dim);
    const auto f = static_cast<size_t>(cfg.ff_dim);
    detail::xavier_fill(rng, p + lo.embed_w, in, e);
    for (const auto& L : lo.layer) {
        std::fill(p + L.ln1_g, p + L.ln1_g + e, 1.0);
        detail::xavier_fill(rng, p + L.wq, e, e);
        detail::xavier_fill(rng, p + L.wk, e, e);
        detail::xavier_fill(rng, p + L.wv, e, e);
        detail::xavier_fill(rng, p + L.wo, e, e);
        std::fill(p + L.ln2_g, p + L.ln2_g + e, 1.0);
        detail::xavier_fill(rng, p + L.w1, e, f);
        detail::xavier_fill(rng, p + L.w2, f, e);
    }
    detail::xavier_fill(rng, p + lo.head_w, e, static_cast<size_t>(cfg.n_classes));
    return model;
}

Mat embed_tokens(const Mat& features, const Mat& w, const std::vector<double>& b) {
    if (features.cols != w.rows)
        throw DataError("embed_tokens: feature dimension " +
                        std::to_string(features.cols) +
                        " does not match projection rows " + std::to_string(w.rows));
    if (b.size() != w.cols)
        throw DataError("embed_tokens: bias length does not match projection columns");
    Mat tok = matmul(features, w);
    for (size_t r = 0; r < tok.rows; ++r) {
        double* row = tok.row(r);
        for (size_t c = 0; c < tok.cols; ++c)
            row[c] += b[c] + pos_encoding(r, c, tok.cols);
    }
    return tok;
}

Mat attention(const Mat& q, const Mat& k, const Mat& v) {
    if (q.cols != k.cols) throw DataError("attention: Q and K widths differ");
    if (k.rows != v.rows) throw DataError("attention: K and V row counts differ");
    for (const Mat* m : {&q, &k, &v})
        for (double x : m->data)
            if (!std::isfinite(x)) throw NumericError("attention: non-finite input");

    Mat s(q.rows, k.rows);
    kernels::active().gemm_nt(q.data.data(), k.data.data(), s.data.data(), q.rows,
                              q.cols, k.rows, false);
    const double scale = 1.0 / std::sqrt(static_cast<double>(k.cols));
    for (double& x : s.data) x *= scale;
    softmax_rows(s);
    return matmul(s, v);
}

double cross_entropy(const std::vector<double>& logits, int label) {
    if (logits.empty()) throw DataError("cross_entropy: empty logits");
    if (label < 0 || static_cast<size_t>(label) >= logits.size())
        throw DataError("cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(logits.size()) +
                        " classes");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double total = 0.0;
    for (double v : logits) total += std::exp(v - mx);
    return mx + std::log(total) - logits[static_cast<size_t>(label)];
}

namespace detail {

std::vector<double> tf_logits(const Classifier& model, const Mat& record,
                              const DropoutCtx& drop) {
    check_record(model, record);
    TfCache cc;
    cc.feats = record;
    cc.segs = {{0, record.rows}};
    tf_forward(model, cc, drop);
    return {cc.logits.row(0), cc.logits.row(0) + cc.logits.cols};
}

double tf_batch_grad(const Classifier& model, const std::vector<const Mat*>& records,
                     const std::vector<int>& labels, const DropoutCtx& drop,
                     std::vector<double>& grads) {
    size_t rows = 0;
    TfCache cc;
    cc.segs.reserve(records.size());
    for (const Mat* r : records) {
        check_record(model, *r);
        cc.segs.push_back({rows, r->rows});
        rows += r->rows;
    }
    cc.feats = Mat(rows, static_cast<size_t>(model.tf.in_dim));
    for (size_t i = 0; i < records.size(); ++i)
        std::memcpy(cc.feats.row(cc.segs[i].start), records[i]->data.data(),
                    records[i]->size() * sizeof(double));

    tf_forward(model, cc, drop);

    const size_t nb = records.size();
    const auto nc = static_cast<size_t>(model.tf.n_classes);
    Mat dlogits(nb, nc);
    double loss = 0.0;
    for (size_t i = 0; i < nb; ++i) {
        const std::vector<double> lg(cc.logits.row(i), cc.logits.row(i) + nc);
        loss += cross_entropy(lg, labels[i]);
        double mx = lg[0];
        for (double v : lg) mx = std::max(mx, v);
        double total = 0.0;
        for (double v : lg) total += std::exp(v - mx);
        for (size_t c = 0; c < nc; ++c) {
            const double soft = std::exp(lg[c] - mx) / total;
            dlogits(i, c) =
                (soft - (static_cast<size_t>(labels[i]) == c ? 1.0 : 0.0)) /
                static_cast<double>(nb);
        }
    }
    tf_backward(model, cc, dlogits, drop, grads);
    return loss / static_cast<double>(nb);
}

}  // namespace detail

std::vector<double> classifier_logits(const Classifier& model, const Mat& record,
                                      const DropoutCtx& drop) {
    return model.kind == ModelKind::Transformer ? detail::tf_logits(model, record, drop)
                                                : detail::rnn_logits(model, record);
}

double classifier_batch_grad(const Classifier& model,
                             const std::vector<const Mat*>& records,
                             const std::vector<int>& labels, const DropoutCtx& drop,
                             std::vector<double>& grads) {
    if (records.empty()) throw DataError("batch gradient: empty batch");
    if (records.size() != labels.size())
        throw DataError("batch gradient: record/label count mismatch");
    grads.assign(model.params.size(), 0.0);
    return model.kind == ModelKind::Transformer
               ? detail::tf_batch_grad(model, records, labels, drop, grads)
               : detail::rnn_batch_grad(model, records, labels, grads);
}

}  // namespace kooptx
