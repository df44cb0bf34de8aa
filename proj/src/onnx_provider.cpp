#include "drfuse/deep/onnx_provider.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "drfuse/imaging.hpp"
#include "drfuse/util/binary_io.hpp"
#include "drfuse/util/hash.hpp"
#include "onnx.pb.h"

namespace drfuse {

ModelSidecar ModelSidecar::load(const std::filesystem::path& path)
{
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        fail(Errc::FileNotFound, "model sidecar " + path.string());
    ModelSidecar sc;
    try {
        const YAML::Node root = YAML::LoadFile(path.string());
        sc.name = root["name"].as<std::string>();
        sc.output_dim = root["output_dim"].as<std::size_t>();
        const auto layout = root["layout"].as<std::string>("nchw");
        if (layout == "nchw")
            sc.layout = TensorLayout::Nchw;
        else if (layout == "nhwc")
            sc.layout = TensorLayout::Nhwc;
        else
            fail(Errc::InputShapeUnsupported, "sidecar layout must be nchw or nhwc, got " + layout);
        sc.scale = root["scale"].as<double>(1.0 / 255.0);
        if (root["mean"]) {
            if (root["mean"].size() != 3)
                fail(Errc::ModelLoadError, "sidecar mean needs 3 entries");
            for (int c = 0; c < 3; ++c)
                sc.mean[c] = root["mean"][c].as<double>();
        }
        if (root["std"]) {
            if (root["std"].size() != 3)
                fail(Errc::ModelLoadError, "sidecar std needs 3 entries");
            for (int c = 0; c < 3; ++c)
                sc.std[c] = root["std"][c].as<double>();
        }
    } catch (const YAML::Exception& e) {
        fail(Errc::ModelLoadError, "sidecar " + path.string() + ": " + e.what());
    }
    for (double s : sc.std)
        if (!(s > 0.0))
            fail(Errc::ModelLoadError, "sidecar std entries must be > 0");
    return sc;
}

namespace {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& s)
{
    return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
}

struct Tensor {
    Shape shape;
    std::vector<float> f;
    std::vector<std::int64_t> i;
    bool is_int = false;

    std::int64_t size() const { return numel(shape); }
};

using TensorPtr = std::shared_ptr<const Tensor>;

[[noreturn]] void load_error(const std::string& what) { fail(Errc::ModelLoadError, what); }

Tensor from_proto(const onnx::TensorProto& tp)
{
    Tensor t;
    for (auto d : tp.dims())
        t.shape.push_back(d);
    const auto n = static_cast<std::size_t>(numel(t.shape));
    if (tp.data_location() == onnx::TensorProto::EXTERNAL)
        load_error("tensor '" + tp.name() + "' uses external data, which is not supported");
    const std::string& raw = tp.raw_data();
    switch (tp.data_type()) {
    case onnx::TensorProto::FLOAT:
        t.f.resize(n);
        if (!raw.empty()) {
            if (raw.size() != n * 4)
                load_error("tensor '" + tp.name() + "' raw size mismatch");
            std::memcpy(t.f.data(), raw.data(), raw.size());
        } else {
            if (static_cast<std::size_t>(tp.float_data_size()) != n)
                load_error("tensor '" + tp.name() + "' float_data size mismatch");
            std::copy(tp.float_data().begin(), tp.float_data().end(), t.f.begin());
        }
        break;
    case onnx::TensorProto::DOUBLE:
        t.f.resize(n);
        if (!raw.empty()) {
            if (raw.size() != n * 8)
                load_error("tensor '" + tp.name() + "' raw size mismatch");
            for (std::size_t k = 0; k < n; ++k) {
                double d;
                std::memcpy(&d, raw.data() + 8 * k, 8);
                t.f[k] = static_cast<float>(d);
            }
        } else {
            for (std::size_t k = 0; k < n; ++k)
                t.f[k] = static_cast<float>(tp.double_data(static_cast<int>(k)));
        }
        break;
    case onnx::TensorProto::INT64:
        t.is_int = true;
        t.i.resize(n);
        if (!raw.empty()) {
            if (raw.size() != n * 8)
                load_error("tensor '" + tp.name() + "' raw size mismatch");
            std::memcpy(t.i.data(), raw.data(), raw.size());
        } else {
            std::copy(tp.int64_data().begin(), tp.int64_data().end(), t.i.begin());
        }
        break;
    case onnx::TensorProto::INT32:
        t.is_int = true;
        t.i.resize(n);
        if (!raw.empty()) {
            if (raw.size() != n * 4)
                load_error("tensor '" + tp.name() + "' raw size mismatch");
            for (std::size_t k = 0; k < n; ++k) {
                std::int32_t v;
                std::memcpy(&v, raw.data() + 4 * k, 4);
                t.i[k] = v;
            }
        } else {
            std::copy(tp.int32_data().begin(), tp.int32_data().end(), t.i.begin());
        }
        break;
    default:
        load_error("tensor '" + tp.name() + "' has unsupported data type " + std::to_string(tp.data_type()));
    }
    return t;
}

const onnx::AttributeProto* find_attr(const onnx::NodeProto& node, const std::string& name)
{
    for (const auto& a : node.attribute())
        if (a.name() == name)
            return &a;
    return nullptr;
}

std::int64_t attr_int(const onnx::NodeProto& node, const std::string& name, std::int64_t def)
{
    const auto* a = find_attr(node, name);
    return a ? a->i() : def;
}

float attr_float(const onnx::NodeProto& node, const std::string& name, float def)
{
    const auto* a = find_attr(node, name);
    return a ? a->f() : def;
}

std::vector<std::int64_t> attr_ints(const onnx::NodeProto& node, const std::string& name,
                                    std::vector<std::int64_t> def = {})
{
    const auto* a = find_attr(node, name);
    if (!a)
        return def;
    return {a->ints().begin(), a->ints().end()};
}

std::string attr_string(const onnx::NodeProto& node, const std::string& name, const std::string& def)
{
    const auto* a = find_attr(node, name);
    return a ? a->s() : def;
}

std::int64_t normalize_axis(std::int64_t axis, std::size_t rank)
{
    if (axis < 0)
        axis += static_cast<std::int64_t>(rank);
    if (axis < 0 || axis > static_cast<std::int64_t>(rank))
        load_error("axis out of range");
    return axis;
}

Shape broadcast_shape(const Shape& a, const Shape& b)
{
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t k = 0; k < r; ++k) {
        const std::int64_t da = k < r - a.size() ? 1 : a[k - (r - a.size())];
        const std::int64_t db = k < r - b.size() ? 1 : b[k - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            load_error("shapes are not broadcastable");
        out[k] = std::max(da, db);
    }
    return out;
}

// Strides of `s` aligned to `out`, zero on broadcast axes.
std::vector<std::int64_t> broadcast_strides(const Shape& s, const Shape& out)
{
    std::vector<std::int64_t> st(out.size(), 0);
    std::int64_t acc = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
        const std::size_t o = k + (out.size() - s.size());
        st[o] = s[k] == 1 ? 0 : acc;
        acc *= s[k];
    }
    return st;
}

template <class Op>
Tensor elementwise(const Tensor& a, const Tensor& b, Op op)
{
    Tensor out;
    out.shape = broadcast_shape(a.shape, b.shape);
    const auto n = out.size();
    out.f.resize(static_cast<std::size_t>(n));
    const auto sa = broadcast_strides(a.shape, out.shape);
    const auto sb = broadcast_strides(b.shape, out.shape);
    const std::size_t r = out.shape.size();
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t ia = 0, ib = 0;
    for (std::int64_t k = 0; k < n; ++k) {
        out.f[static_cast<std::size_t>(k)] = op(a.f[static_cast<std::size_t>(ia)], b.f[static_cast<std::size_t>(ib)]);
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < out.shape[d]) {
                ia += sa[d];
                ib += sb[d];
                break;
            }
            ia -= sa[d] * (out.shape[d] - 1);
            ib -= sb[d] * (out.shape[d] - 1);
            idx[d] = 0;
        }
    }
    return out;
}

template <class Op>
Tensor unary(const Tensor& a, Op op)
{
    Tensor out;
    out.shape = a.shape;
    out.f.resize(a.f.size());
    std::transform(a.f.begin(), a.f.end(), out.f.begin(), op);
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.shape.size() < 2 || b.shape.size() < 2)
        load_error("MatMul supports rank >= 2 operands only");
    const std::int64_t m = a.shape[a.shape.size() - 2], k = a.shape.back();
    const std::int64_t k2 = b.shape[b.shape.size() - 2], n = b.shape.back();
    if (k != k2)
        load_error("MatMul inner dimensions differ");
    const Shape ba(a.shape.begin(), a.shape.end() - 2), bb(b.shape.begin(), b.shape.end() - 2);
    const Shape batch = broadcast_shape(ba, bb);
    const auto nb = numel(batch);
    const auto sa = broadcast_strides(ba, batch), sb = broadcast_strides(bb, batch);
    Tensor out;
    out.shape = batch;
    out.shape.push_back(m);
    out.shape.push_back(n);
    out.f.assign(static_cast<std::size_t>(numel(out.shape)), 0.0f);
    for (std::int64_t t = 0; t < nb; ++t) {
        std::int64_t rem = t, oa = 0, ob = 0;
        for (std::size_t d = batch.size(); d-- > 0;) {
            const auto id = rem % batch[d];
            rem /= batch[d];
            oa += id * sa[d];
            ob += id * sb[d];
        }
        const float* pa = a.f.data() + oa * m * k;
        const float* pb = b.f.data() + ob * k * n;
        float* po = out.f.data() + t * m * n;
        for (std::int64_t r = 0; r < m; ++r)
            for (std::int64_t q = 0; q < k; ++q) {
                const float av = pa[r * k + q];
                for (std::int64_t c = 0; c < n; ++c)
                    po[r * n + c] += av * pb[q * n + c];
            }
    }
    return out;
}

Tensor gemm(const onnx::NodeProto& node, const Tensor& a, const Tensor& b, const Tensor* c)
{
    const float alpha = attr_float(node, "alpha", 1.0f), beta = attr_float(node, "beta", 1.0f);
    const bool ta = attr_int(node, "transA", 0) != 0, tb = attr_int(node, "transB", 0) != 0;
    if (a.shape.size() != 2 || b.shape.size() != 2)
        load_error("Gemm operands must be 2-D");
    const std::int64_t m = ta ? a.shape[1] : a.shape[0], k = ta ? a.shape[0] : a.shape[1];
    const std::int64_t kb = tb ? b.shape[1] : b.shape[0], n = tb ? b.shape[0] : b.shape[1];
    if (k != kb)
        load_error("Gemm inner dimensions differ");
    Tensor out;
    out.shape = {m, n};
    out.f.assign(static_cast<std::size_t>(m * n), 0.0f);
    for (std::int64_t r = 0; r < m; ++r)
        for (std::int64_t col = 0; col < n; ++col) {
            float acc = 0.0f;
            for (std::int64_t q = 0; q < k; ++q) {
                const float av = ta ? a.f[q * a.shape[1] + r] : a.f[r * a.shape[1] + q];
                const float bv = tb ? b.f[col * b.shape[1] + q] : b.f[q * b.shape[1] + col];
                acc += av * bv;
            }
            out.f[r * n + col] = alpha * acc;
        }
    if (c && beta != 0.0f) {
        Tensor scaled = unary(*c, [beta](float v) { return v * beta; });
        scaled.shape = c->shape;
        out = elementwise(out, scaled, std::plus<float>());
        if (out.shape != Shape{m, n})
            load_error("Gemm bias does not broadcast to output");
    }
    return out;
}

struct Pads2d {
    std::int64_t top, left, bottom, right;
};

Pads2d resolve_pads(const onnx::NodeProto& node, std::int64_t ih, std::int64_t iw, std::int64_t kh, std::int64_t kw,
                    std::int64_t sh, std::int64_t sw, std::int64_t dh, std::int64_t dw)
{
    const auto auto_pad = attr_string(node, "auto_pad", "NOTSET");
    if (auto_pad == "NOTSET") {
        const auto p = attr_ints(node, "pads", {0, 0, 0, 0});
        if (p.size() != 4)
            load_error(node.op_type() + " pads must have 4 entries");
        return {p[0], p[1], p[2], p[3]};
    }
    if (auto_pad == "VALID")
        return {0, 0, 0, 0};
    if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
        auto total = [](std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t d) {
            const std::int64_t out = (in + s - 1) / s;
            return std::max<std::int64_t>(0, (out - 1) * s + (k - 1) * d + 1 - in);
        };
        const auto th = total(ih, kh, sh, dh), tw = total(iw, kw, sw, dw);
        if (auto_pad == "SAME_UPPER")
            return {th / 2, tw / 2, th - th / 2, tw - tw / 2};
        return {th - th / 2, tw - tw / 2, th / 2, tw / 2};
    }
    load_error("unsupported auto_pad " + auto_pad);
}

Tensor conv(const onnx::NodeProto& node, const Tensor& x, const Tensor& w, const Tensor* bias)
{
    if (x.shape.size() != 4 || w.shape.size() != 4)
        load_error("Conv supports 2-D NCHW convolution only");
    const std::int64_t n = x.shape[0], c = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    const std::int64_t m = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
    const std::int64_t group = attr_int(node, "group", 1);
    if (group < 1 || c != cg * group || m % group != 0)
        load_error("Conv channel/group mismatch");
    const auto strides = attr_ints(node, "strides", {1, 1});
    const auto dil = attr_ints(node, "dilations", {1, 1});
    if (strides.size() != 2 || dil.size() != 2)
        load_error("Conv strides/dilations must have 2 entries");
    const auto pads = resolve_pads(node, ih, iw, kh, kw, strides[0], strides[1], dil[0], dil[1]);
    const std::int64_t oh = (ih + pads.top + pads.bottom - (kh - 1) * dil[0] - 1) / strides[0] + 1;
    const std::int64_t ow = (iw + pads.left + pads.right - (kw - 1) * dil[1] - 1) / strides[1] + 1;
    if (oh < 1 || ow < 1)
        load_error("Conv output would be empty");

    Tensor out;
    out.shape = {n, m, oh, ow};
    out.f.assign(static_cast<std::size_t>(numel(out.shape)), 0.0f);
    const std::int64_t mg = m / group;
    for (std::int64_t b = 0; b < n; ++b)
        for (std::int64_t oc = 0; oc < m; ++oc) {
            const std::int64_t g = oc / mg;
            float* po = out.f.data() + ((b * m + oc) * oh) * ow;
            const float bv = bias ? bias->f[static_cast<std::size_t>(oc)] : 0.0f;
            for (std::int64_t k = 0; k < oh * ow; ++k)
                po[k] = bv;
            for (std::int64_t ic = 0; ic < cg; ++ic) {
                const float* px = x.f.data() + ((b * c + g * cg + ic) * ih) * iw;
                const float* pw = w.f.data() + ((oc * cg + ic) * kh) * kw;
                for (std::int64_t ky = 0; ky < kh; ++ky)
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        const float wv = pw[ky * kw + kx];
                        for (std::int64_t oy = 0; oy < oh; ++oy) {
                            const std::int64_t iy = oy * strides[0] - pads.top + ky * dil[0];
                            if (iy < 0 || iy >= ih)
                                continue;
                            for (std::int64_t ox = 0; ox < ow; ++ox) {
                                const std::int64_t ix = ox * strides[1] - pads.left + kx * dil[1];
                                if (ix < 0 || ix >= iw)
                                    continue;
                                po[oy * ow + ox] += wv * px[iy * iw + ix];
                            }
                        }
                    }
            }
        }
    return out;
}

Tensor pool(const onnx::NodeProto& node, const Tensor& x, bool is_max)
{
    if (x.shape.size() != 4)
        load_error(node.op_type() + " supports 4-D input only");
    const auto ks = attr_ints(node, "kernel_shape");
    if (ks.size() != 2)
        load_error(node.op_type() + " kernel_shape must have 2 entries");
    const auto strides = attr_ints(node, "strides", {1, 1});
    const auto dil = attr_ints(node, "dilations", {1, 1});
    if (attr_int(node, "ceil_mode", 0) != 0)
        load_error(node.op_type() + " ceil_mode is not supported");
    const bool include_pad = attr_int(node, "count_include_pad", 0) != 0;
    const std::int64_t n = x.shape[0], c = x.shape[1], ih = x.shape[2], iw = x.shape[3];
    const auto pads = resolve_pads(node, ih, iw, ks[0], ks[1], strides[0], strides[1], dil[0], dil[1]);
    const std::int64_t oh = (ih + pads.top + pads.bottom - (ks[0] - 1) * dil[0] - 1) / strides[0] + 1;
    const std::int64_t ow = (iw + pads.left + pads.right - (ks[1] - 1) * dil[1] - 1) / strides[1] + 1;
    Tensor out;
    out.shape = {n, c, oh, ow};
    out.f.resize(static_cast<std::size_t>(numel(out.shape)));
    for (std::int64_t p = 0; p < n * c; ++p) {
        const float* px = x.f.data() + p * ih * iw;
        float* po = out.f.data() + p * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy)
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
                std::int64_t count = 0;
                for (std::int64_t ky = 0; ky < ks[0]; ++ky)
                    for (std::int64_t kx = 0; kx < ks[1]; ++kx) {
                        const std::int64_t iy = oy * strides[0] - pads.top + ky * dil[0];
                        const std::int64_t ix = ox * strides[1] - pads.left + kx * dil[1];
                        if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) {
                            if (include_pad)
                                ++count;
                            continue;
                        }
                        const float v = px[iy * iw + ix];
                        acc = is_max ? std::max(acc, v) : acc + v;
                        ++count;
                    }
                po[oy * ow + ox] = is_max ? acc : (count ? acc / static_cast<float>(count) : 0.0f);
            }
    }
    return out;
}

Tensor global_average_pool(const Tensor& x)
{
    if (x.shape.size() < 3)
        load_error("GlobalAveragePool needs rank >= 3");
    const std::int64_t spatial = numel(Shape(x.shape.begin() + 2, x.shape.end()));
    Tensor out;
    out.shape = {x.shape[0], x.shape[1]};
    for (std::size_t k = 2; k < x.shape.size(); ++k)
        out.shape.push_back(1);
    out.f.resize(static_cast<std::size_t>(x.shape[0] * x.shape[1]));
    for (std::size_t p = 0; p < out.f.size(); ++p) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < spatial; ++k)
            acc += x.f[p * spatial + k];
        out.f[p] = static_cast<float>(acc / static_cast<double>(spatial));
    }
    return out;
}

Tensor transpose(const Tensor& x, std::vector<std::int64_t> perm)
{
    const std::size_t r = x.shape.size();
    if (perm.empty()) {
        perm.resize(r);
        for (std::size_t k = 0; k < r; ++k)
            perm[k] = static_cast<std::int64_t>(r - 1 - k);
    }
    if (perm.size() != r)
        load_error("Transpose perm rank mismatch");
    Tensor out;
    out.is_int = x.is_int;
    out.shape.resize(r);
    for (std::size_t k = 0; k < r; ++k)
        out.shape[k] = x.shape[static_cast<std::size_t>(perm[k])];
    std::vector<std::int64_t> in_strides(r, 1);
    for (std::size_t k = r; k-- > 1;)
        in_strides[k - 1] = in_strides[k] * x.shape[k];
    const auto n = numel(out.shape);
    if (x.is_int)
        out.i.resize(static_cast<std::size_t>(n));
    else
        out.f.resize(static_cast<std::size_t>(n));
    std::vector<std::int64_t> idx(r, 0);
    for (std::int64_t k = 0; k < n; ++k) {
        std::int64_t src = 0;
        for (std::size_t d = 0; d < r; ++d)
            src += idx[d] * in_strides[static_cast<std::size_t>(perm[d])];
        if (x.is_int)
            out.i[static_cast<std::size_t>(k)] = x.i[static_cast<std::size_t>(src)];
        else
            out.f[static_cast<std::size_t>(k)] = x.f[static_cast<std::size_t>(src)];
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < out.shape[d])
                break;
            idx[d] = 0;
        }
    }
    return out;
}

Tensor reshape(const Tensor& x, const Tensor& shape_t)
{
    if (!shape_t.is_int)
        load_error("Reshape shape must be an int64 tensor");
    Shape s(shape_t.i.begin(), shape_t.i.end());
    std::int64_t known = 1;
    int infer = -1;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == 0) {
            if (k >= x.shape.size())
                load_error("Reshape 0 refers past input rank");
            s[k] = x.shape[k];
        }
        if (s[k] == -1) {
            if (infer >= 0)
                load_error("Reshape has more than one -1");
            infer = static_cast<int>(k);
        } else {
            known *= s[k];
        }
    }
    if (infer >= 0) {
        if (known == 0 || x.size() % known != 0)
            load_error("Reshape cannot infer dimension");
        s[static_cast<std::size_t>(infer)] = x.size() / known;
    }
    if (numel(s) != x.size())
        load_error("Reshape element count mismatch");
    Tensor out = x;
    out.shape = std::move(s);
    return out;
}

Tensor softmax(const Tensor& x, std::int64_t axis, bool legacy)
{
    Tensor out = x;
    const auto r = x.shape.size();
    axis = normalize_axis(axis, r);
    std::int64_t outer = 1, inner = 1, len = 1;
    if (legacy) {
        outer = numel(Shape(x.shape.begin(), x.shape.begin() + axis));
        len = numel(Shape(x.shape.begin() + axis, x.shape.end()));
    } else {
        outer = numel(Shape(x.shape.begin(), x.shape.begin() + axis));
        len = x.shape[static_cast<std::size_t>(axis)];
        inner = numel(Shape(x.shape.begin() + axis + 1, x.shape.end()));
    }
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t in = 0; in < inner; ++in) {
            auto at = [&](std::int64_t k) -> float& { return out.f[static_cast<std::size_t>((o * len + k) * inner + in)]; };
            float mx = -std::numeric_limits<float>::infinity();
            for (std::int64_t k = 0; k < len; ++k)
                mx = std::max(mx, at(k));
            double sum = 0.0;
            for (std::int64_t k = 0; k < len; ++k) {
                at(k) = std::exp(at(k) - mx);
                sum += at(k);
            }
            for (std::int64_t k = 0; k < len; ++k)
                at(k) = static_cast<float>(at(k) / sum);
        }
    return out;
}

const std::set<std::string>& supported_ops()
{
    static const std::set<std::string> ops = {
        "Identity", "Relu",      "Sigmoid",       "Tanh",      "Clip",    "Add",       "Sub",
        "Mul",      "Div",       "MatMul",        "Gemm",      "Conv",    "BatchNormalization",
        "MaxPool",  "AveragePool", "GlobalAveragePool", "Flatten", "Reshape", "Transpose", "Concat",
        "Constant", "Softmax",   "Squeeze",       "Unsqueeze", "Dropout",
    };
    return ops;
}

class OnnxProvider final : public FeatureProvider {
public:
    OnnxProvider(const std::filesystem::path& path, std::size_t expected_dim)
    {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(path, ec))
            fail(Errc::FileNotFound, "model file " + path.string());
        const auto sidecar_path = sidecar_path_for(path);
        sidecar_ = ModelSidecar::load(sidecar_path);

        const std::string bytes = read_file(path);
        if (!model_.ParseFromString(bytes))
            load_error("cannot parse " + path.string() + " as an ONNX model");
        fingerprint_ = "onnx;model=" + std::to_string(fnv1a(bytes)) + ";sidecar="
                       + std::to_string(fnv1a(read_file(sidecar_path)));
        for (const auto& op : model_.opset_import())
            if (op.domain().empty() || op.domain() == "ai.onnx")
                opset_ = op.version();

        const auto& graph = model_.graph();
        for (const auto& init : graph.initializer())
            initializers_.emplace(init.name(), std::make_shared<const Tensor>(from_proto(init)));
        for (const auto& in : graph.input())
            if (!initializers_.count(in.name()))
                inputs_.push_back(&in);
        if (inputs_.size() != 1)
            fail(Errc::InputShapeUnsupported, "model must have exactly one image input");
        if (graph.output_size() != 1)
            load_error("model must have exactly one output");
        for (const auto& node : graph.node()) {
            if (!(node.domain().empty() || node.domain() == "ai.onnx"))
                load_error("operator domain '" + node.domain() + "' not supported");
            if (!supported_ops().count(node.op_type()))
                load_error("operator " + node.op_type() + " not supported");
        }
        check_input_shape();

        // Dry run fixes the output length before any embed call.
        const RasterImage probe(kCanonicalSize, kCanonicalSize, 3, 0);
        const auto out = run(probe);
        output_dim_ = out.size();
        if (sidecar_.output_dim != output_dim_)
            fail(Errc::DimensionMismatch, "sidecar declares output_dim " + std::to_string(sidecar_.output_dim)
                                              + " but the model produces " + std::to_string(output_dim_));
        if (expected_dim != 0 && expected_dim != output_dim_)
            fail(Errc::DimensionMismatch, "expected dim " + std::to_string(expected_dim) + " but the model produces "
                                              + std::to_string(output_dim_));
    }

    std::string name() const override { return sidecar_.name; }
    std::size_t output_dim() const override { return output_dim_; }
    std::string fingerprint() const override { return fingerprint_; }

    std::vector<double> embed(const RasterImage& img) const override
    {
        if (img.empty())
            fail(Errc::EmptyImage, "embed on empty image");
        auto out = run(img);
        if (out.size() != output_dim_)
            fail(Errc::DimensionMismatch, "model output length changed between calls");
        for (double v : out)
            if (!std::isfinite(v))
                fail(Errc::NonFiniteFeature, "model produced a non-finite activation");
        return out;
    }

private:
    void check_input_shape() const
    {
        const auto& type = inputs_.front()->type();
        if (!type.has_tensor_type())
            fail(Errc::InputShapeUnsupported, "input is not a tensor");
        const auto elem = type.tensor_type().elem_type();
        if (elem != onnx::TensorProto::FLOAT)
            fail(Errc::InputShapeUnsupported, "input element type must be float32");
        const auto& dims = type.tensor_type().shape().dim();
        if (dims.size() != 4)
            fail(Errc::InputShapeUnsupported, "input must be rank 4");
        const Shape want = sidecar_.layout == TensorLayout::Nchw ? Shape{1, 3, kCanonicalSize, kCanonicalSize}
                                                                 : Shape{1, kCanonicalSize, kCanonicalSize, 3};
        for (int k = 0; k < 4; ++k) {
            const auto& d = dims[k];
            if (d.has_dim_value() && d.dim_value() != want[static_cast<std::size_t>(k)])
                fail(Errc::InputShapeUnsupported, "input dimension " + std::to_string(k) + " is "
                                                      + std::to_string(d.dim_value()) + ", expected "
                                                      + std::to_string(want[static_cast<std::size_t>(k)]));
            if (!d.has_dim_value() && k != 0)
                fail(Errc::InputShapeUnsupported, "only the batch dimension may be symbolic");
        }
    }

    Tensor preprocess(const RasterImage& src) const
    {
        const RasterImage img = resize_bilinear(to_rgb(src), kCanonicalSize, kCanonicalSize);
        const std::int64_t s = kCanonicalSize;
        Tensor t;
        t.shape = sidecar_.layout == TensorLayout::Nchw ? Shape{1, 3, s, s} : Shape{1, s, s, 3};
        t.f.resize(static_cast<std::size_t>(3 * s * s));
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double v = (img.at(x, y, c) * sidecar_.scale - sidecar_.mean[c]) / sidecar_.std[c];
                    const std::size_t idx = sidecar_.layout == TensorLayout::Nchw
                                                ? (static_cast<std::size_t>(c) * s + y) * s + x
                                                : (static_cast<std::size_t>(y) * s + x) * 3 + c;
                    t.f[idx] = static_cast<float>(v);
                }
        return t;
    }

    std::vector<double> run(const RasterImage& img) const
    {
        std::unordered_map<std::string, TensorPtr> env(initializers_.begin(), initializers_.end());
        env[inputs_.front()->name()] = std::make_shared<const Tensor>(preprocess(img));

        for (const auto& node : model_.graph().node()) {
            auto in = [&](int k) -> const Tensor& {
                if (k >= node.input_size() || node.input(k).empty())
                    load_error(node.op_type() + " is missing input " + std::to_string(k));
                auto it = env.find(node.input(k));
                if (it == env.end())
                    load_error("tensor '" + node.input(k) + "' used before definition");
                return *it->second;
            };
            auto opt = [&](int k) -> const Tensor* {
                if (k >= node.input_size() || node.input(k).empty())
                    return nullptr;
                return &in(k);
            };
            env[node.output(0)] = std::make_shared<const Tensor>(eval(node, in, opt));
        }
        const auto it = env.find(model_.graph().output(0).name());
        if (it == env.end())
            load_error("graph output was never produced");
        const Tensor& out = *it->second;
        if (out.is_int)
            return {out.i.begin(), out.i.end()};
        return {out.f.begin(), out.f.end()};
    }

    template <class In, class Opt>
    Tensor eval(const onnx::NodeProto& node, In&& in, Opt&& opt) const
    {
        const std::string& op = node.op_type();
        if (op == "Identity" || op == "Dropout")
            return in(0);
        if (op == "Relu")
            return unary(in(0), [](float v) { return v > 0.0f ? v : 0.0f; });
        if (op == "Sigmoid")
            return unary(in(0), [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
        if (op == "Tanh")
            return unary(in(0), [](float v) { return std::tanh(v); });
        if (op == "Clip") {
            float lo = attr_float(node, "min", -std::numeric_limits<float>::infinity());
            float hi = attr_float(node, "max", std::numeric_limits<float>::infinity());
            if (const auto* t = opt(1))
                lo = t->f.at(0);
            if (const auto* t = opt(2))
                hi = t->f.at(0);
            return unary(in(0), [lo, hi](float v) { return std::min(std::max(v, lo), hi); });
        }
        if (op == "Add")
            return elementwise(in(0), in(1), std::plus<float>());
        if (op == "Sub")
            return elementwise(in(0), in(1), std::minus<float>());
        if (op == "Mul")
            return elementwise(in(0), in(1), std::multiplies<float>());
        if (op == "Div")
            return elementwise(in(0), in(1), std::divides<float>());
        if (op == "MatMul")
            return matmul(in(0), in(1));
        if (op == "Gemm")
            return gemm(node, in(0), in(1), opt(2));
        if (op == "Conv")
            return conv(node, in(0), in(1), opt(2));
        if (op == "BatchNormalization") {
            const Tensor& x = in(0);
            const Tensor &scale = in(1), &bias = in(2), &mean = in(3), &var = in(4);
            const float eps = attr_float(node, "epsilon", 1e-5f);
            if (x.shape.size() < 2)
                load_error("BatchNormalization needs rank >= 2");
            Tensor out = x;
            const std::int64_t c = x.shape[1];
            const std::int64_t inner = numel(Shape(x.shape.begin() + 2, x.shape.end()));
            for (std::int64_t b = 0; b < x.shape[0]; ++b)
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    const auto k = static_cast<std::size_t>(ch);
                    const float s = scale.f[k] / std::sqrt(var.f[k] + eps);
                    float* p = out.f.data() + (b * c + ch) * inner;
                    for (std::int64_t q = 0; q < inner; ++q)
                        p[q] = (p[q] - mean.f[k]) * s + bias.f[k];
                }
            return out;
        }
        if (op == "MaxPool")
            return pool(node, in(0), true);
        if (op == "AveragePool")
            return pool(node, in(0), false);
        if (op == "GlobalAveragePool")
            return global_average_pool(in(0));
        if (op == "Flatten") {
            const Tensor& x = in(0);
            const auto axis = normalize_axis(attr_int(node, "axis", 1), x.shape.size());
            Tensor out = x;
            out.shape = {numel(Shape(x.shape.begin(), x.shape.begin() + axis)),
                         numel(Shape(x.shape.begin() + axis, x.shape.end()))};
            return out;
        }
        if (op == "Reshape")
            return reshape(in(0), in(1));
        if (op == "Transpose")
            return transpose(in(0), attr_ints(node, "perm"));
        if (op == "Softmax") {
            const bool legacy = opset_ < 13;
            return softmax(in(0), attr_int(node, "axis", legacy ? 1 : -1), legacy);
        }
        if (op == "Squeeze" || op == "Unsqueeze") {
            const Tensor& x = in(0);
            std::vector<std::int64_t> axes = attr_ints(node, "axes");
            if (const auto* t = opt(1))
                axes.assign(t->i.begin(), t->i.end());
            Tensor out = x;
            if (op == "Squeeze") {
                Shape s;
                const auto r = x.shape.size();
                std::set<std::int64_t> drop;
                for (auto a : axes)
                    drop.insert(normalize_axis(a, r));
                for (std::size_t k = 0; k < r; ++k) {
                    const bool squeeze = axes.empty() ? x.shape[k] == 1 : drop.count(static_cast<std::int64_t>(k)) > 0;
                    if (squeeze && x.shape[k] != 1)
                        load_error("Squeeze on a non-unit axis");
                    if (!squeeze)
                        s.push_back(x.shape[k]);
                }
                out.shape = s;
            } else {
                const auto r = x.shape.size() + axes.size();
                std::set<std::int64_t> add;
                for (auto a : axes)
                    add.insert(normalize_axis(a, r));
                Shape s;
                std::size_t src = 0;
                for (std::size_t k = 0; k < r; ++k)
                    s.push_back(add.count(static_cast<std::int64_t>(k)) ? 1 : x.shape[src++]);
                out.shape = s;
            }
            return out;
        }
        if (op == "Concat") {
            const auto axis_raw = attr_int(node, "axis", 0);
            const Tensor& first = in(0);
            const auto axis = normalize_axis(axis_raw, first.shape.size());
            Shape shape = first.shape;
            shape[static_cast<std::size_t>(axis)] = 0;
            for (int k = 0; k < node.input_size(); ++k)
                shape[static_cast<std::size_t>(axis)] += in(k).shape[static_cast<std::size_t>(axis)];
            const std::int64_t outer = numel(Shape(first.shape.begin(), first.shape.begin() + axis));
            Tensor out;
            out.shape = shape;
            out.is_int = first.is_int;
            for (std::int64_t o = 0; o < outer; ++o)
                for (int k = 0; k < node.input_size(); ++k) {
                    const Tensor& t = in(k);
                    const std::int64_t chunk = numel(Shape(t.shape.begin() + axis, t.shape.end()));
                    if (t.is_int)
                        out.i.insert(out.i.end(), t.i.begin() + o * chunk, t.i.begin() + (o + 1) * chunk);
                    else
                        out.f.insert(out.f.end(), t.f.begin() + o * chunk, t.f.begin() + (o + 1) * chunk);
                }
            return out;
        }
        if (op == "Constant") {
            const auto* a = find_attr(node, "value");
            if (!a || !a->has_t())
                load_error("Constant without a tensor 'value' attribute");
            return from_proto(a->t());
        }
        load_error("operator " + op + " not supported");
    }

    onnx::ModelProto model_;
    ModelSidecar sidecar_;
    std::unordered_map<std::string, TensorPtr> initializers_;
    std::vector<const onnx::ValueInfoProto*> inputs_;
    std::int64_t opset_ = 13;
    std::size_t output_dim_ = 0;
    std::string fingerprint_;
};

} // namespace

ProviderPtr model_file_provider(const std::filesystem::path& path, std::size_t expected_dim)
{
    return std::make_shared<OnnxProvider>(path, expected_dim);
}

} // namespace drfuse
