// SPDX-License-Identifier: Apache-2.0
//
// stnsec: cognitive secure downlink scheduling for satellite-terrestrial networks
// Copyright (C) 2026 The stnsec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef STNSEC_NN_HPP
#define STNSEC_NN_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stnsec/error.hpp"
#include "stnsec/rng.hpp"

namespace stnsec {

/// Forward-mode dual number: value plus one directional derivative.
struct Dual {
    double v = 0.0;
    double d = 0.0;

    Dual() = default;
    Dual(double value, double tangent = 0.0) : v(value), d(tangent) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
};
inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator/(const Dual& a, const Dual& b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
inline Dual exp(const Dual& a) {
    const double e = std::exp(a.v);
    return {e, e * a.d};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

enum class Activation : std::uint32_t { identity = 0, relu = 1, sigmoid = 2, elu = 3, tanh = 4 };

namespace detail {

template <class T>
T activate(Activation a, const T& x) {
    using std::exp;
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return value_of(x) > 0.0 ? x : T(0.0);
        case Activation::sigmoid: return T(1.0) / (T(1.0) + exp(-x));
        case Activation::elu: return value_of(x) > 0.0 ? x : exp(x) - T(1.0);
        case Activation::tanh: {
            const T e = exp(T(-2.0) * x);
            return (T(1.0) - e) / (T(1.0) + e);
        }
    }
    return x;
}

// Derivative expressed through the pre-activation x and output y.
template <class T>
T activate_grad(Activation a, const T& x, const T& y) {
    switch (a) {
        case Activation::identity: return T(1.0);
        case Activation::relu: return T(value_of(x) > 0.0 ? 1.0 : 0.0);
        case Activation::sigmoid: return y * (T(1.0) - y);
        case Activation::elu: return value_of(x) > 0.0 ? T(1.0) : y + T(1.0);
        case Activation::tanh: return T(1.0) - y * y;
    }
    return T(1.0);
}

}  // namespace detail

struct LayerShape {
    int in = 0;
    int out = 0;
    Activation act = Activation::identity;
    bool operator==(const LayerShape&) const = default;
};

template <class T>
struct TapeOf {
    std::uint64_t net_id = 0;
    std::uint64_t version = 0;
    std::vector<std::vector<T>> inputs;  // input of each layer
    std::vector<std::vector<T>> pre;     // pre-activation of each layer
    std::vector<std::vector<T>> post;    // activation output of each layer
};
using Tape = TapeOf<double>;

template <class T>
struct GradientsOf {
    std::vector<T> params;
    std::vector<T> input;
};
using Gradients = GradientsOf<double>;

/// Dense feed-forward network. Parameters live in one flat vector: for each layer
/// the out x in weight matrix (row-major) followed by the bias.
class Mlp {
public:
    Mlp() = default;

    /// widths = {input, hidden..., output}; acts has one entry per layer.
    Mlp(const std::vector<int>& widths, const std::vector<Activation>& acts, Rng& rng) : id_(next_id()) {
        if (widths.size() < 2 || acts.size() + 1 != widths.size())
            throw ShapeError("need at least two widths and one activation per layer");
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            if (widths[i] < 1 || widths[i + 1] < 1) throw ShapeError("layer widths must be positive");
            layers_.push_back({widths[i], widths[i + 1], acts[i]});
        }
        index();
        theta_.assign(count_, 0.0);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layers_[l].in));
            const std::size_t nw = static_cast<std::size_t>(layers_[l].in) * layers_[l].out;
            for (std::size_t i = 0; i < nw; ++i) theta_[offset_[l] + i] = bound * (2.0 * rng.uniform() - 1.0);
            for (int o = 0; o < layers_[l].out; ++o) theta_[offset_[l] + nw + o] = bound * (2.0 * rng.uniform() - 1.0);
        }
    }

    Mlp(const Mlp& o) : layers_(o.layers_), offset_(o.offset_), theta_(o.theta_), count_(o.count_), id_(next_id()) {}
    Mlp& operator=(const Mlp& o) {
        layers_ = o.layers_;
        offset_ = o.offset_;
        theta_ = o.theta_;
        count_ = o.count_;
        id_ = next_id();
        ++version_;
        return *this;
    }

    const std::vector<LayerShape>& layers() const { return layers_; }
    int input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
    int output_width() const { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t param_count() const { return count_; }
    const std::vector<double>& params() const { return theta_; }

    /// Mutable access; any write invalidates outstanding tapes.
    std::vector<double>& mutable_params() {
        ++version_;
        return theta_;
    }

    double weight(std::size_t l, int o, int i) const {
        return theta_[offset_[l] + static_cast<std::size_t>(o) * layers_[l].in + i];
    }
    double bias(std::size_t l, int o) const {
        return theta_[offset_[l] + static_cast<std::size_t>(layers_[l].in) * layers_[l].out + o];
    }

    template <class T>
    std::vector<T> run(const std::vector<T>& x, TapeOf<T>* tape = nullptr) const {
        if (static_cast<int>(x.size()) != input_width())
            throw ShapeError("input width " + std::to_string(x.size()) + " != " + std::to_string(input_width()));
        if (tape) {
            tape->net_id = id_;
            tape->version = version_;
            tape->inputs.clear();
            tape->pre.clear();
            tape->post.clear();
        }
        std::vector<T> h = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& s = layers_[l];
            const double* w = &theta_[offset_[l]];
            const double* b = w + static_cast<std::size_t>(s.in) * s.out;
            std::vector<T> z(static_cast<std::size_t>(s.out));
            for (int o = 0; o < s.out; ++o) {
                T acc(b[o]);
                const double* row = w + static_cast<std::size_t>(o) * s.in;
                for (int i = 0; i < s.in; ++i) acc += T(row[i]) * h[static_cast<std::size_t>(i)];
                z[static_cast<std::size_t>(o)] = acc;
            }
            std::vector<T> y(z.size());
            for (std::size_t o = 0; o < z.size(); ++o) y[o] = detail::activate(s.act, z[o]);
            if (tape) {
                tape->inputs.push_back(std::move(h));
                tape->pre.push_back(std::move(z));
                tape->post.push_back(y);
            }
            h = std::move(y);
        }
        return h;
    }

    /// Reverse pass; parameter gradients are added into `grads.params` (resized if empty).
    template <class T>
    void backprop(const TapeOf<T>& tape, const std::vector<T>& grad_out, GradientsOf<T>& grads) const {
        if (tape.net_id != id_ || tape.version != version_ || tape.inputs.size() != layers_.size())
            throw ShapeError("tape does not belong to the current network state");
        if (static_cast<int>(grad_out.size()) != output_width()) throw ShapeError("output gradient width mismatch");
        if (grads.params.empty()) grads.params.assign(count_, T(0.0));
        if (grads.params.size() != count_) throw ShapeError("gradient buffer size mismatch");
        std::vector<T> g = grad_out;
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const auto& s = layers_[li];
            const auto& in = tape.inputs[li];
            const auto& z = tape.pre[li];
            const auto& y = tape.post[li];
            for (int o = 0; o < s.out; ++o)
                g[static_cast<std::size_t>(o)] *= detail::activate_grad(s.act, z[static_cast<std::size_t>(o)], y[static_cast<std::size_t>(o)]);
            const std::size_t wo = offset_[li];
            const std::size_t bo = wo + static_cast<std::size_t>(s.in) * s.out;
            std::vector<T> gin(static_cast<std::size_t>(s.in), T(0.0));
            for (int o = 0; o < s.out; ++o) {
                const T go = g[static_cast<std::size_t>(o)];
                grads.params[bo + o] += go;
                const std::size_t row = wo + static_cast<std::size_t>(o) * s.in;
                for (int i = 0; i < s.in; ++i) {
                    grads.params[row + i] += go * in[static_cast<std::size_t>(i)];
                    gin[static_cast<std::size_t>(i)] += T(theta_[row + i]) * go;
                }
            }
            g = std::move(gin);
        }
        grads.input = std::move(g);
    }

    std::vector<double> forward(const std::vector<double>& x) const { return run<double>(x); }
    std::vector<double> forward(const std::vector<double>& x, Tape& tape) const { return run<double>(x, &tape); }

    Gradients backward(const Tape& tape, const std::vector<double>& grad_out) const {
        Gradients g;
        backprop(tape, grad_out, g);
        return g;
    }

    /// theta -= lr * grad. Rejects non-finite gradients without touching the net.
    void sgd_update(const std::vector<double>& grad, double lr) {
        if (grad.size() != count_) throw ShapeError("gradient size mismatch");
        for (std::size_t i = 0; i < grad.size(); ++i)
            if (!std::isfinite(grad[i]))
                throw TrainingError("sgd", "non-finite gradient at parameter " + std::to_string(i));
        for (std::size_t i = 0; i < grad.size(); ++i) theta_[i] -= lr * grad[i];
        ++version_;
    }

    bool all_finite() const {
        return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
    }

    /// FNV-1a over the raw parameter bytes.
    std::uint64_t checksum() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (double v : theta_) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xff;
                h *= 1099511628211ULL;
            }
        }
        return h;
    }

    // Binary layout, little-endian: "STNMLP01", u32 layer count, then per layer
    // u32 in, u32 out, u32 activation, then every parameter as an f64.
    void save(std::ostream& os) const {
        os.write("STNMLP01", 8);
        put_u32(os, static_cast<std::uint32_t>(layers_.size()));
        for (const auto& s : layers_) {
            put_u32(os, static_cast<std::uint32_t>(s.in));
            put_u32(os, static_cast<std::uint32_t>(s.out));
            put_u32(os, static_cast<std::uint32_t>(s.act));
        }
        for (double v : theta_) put_u64(os, std::bit_cast<std::uint64_t>(v));
        if (!os) throw FormatError("failed writing network parameters");
    }

    static Mlp load(std::istream& is) {
        char magic[8];
        if (!is.read(magic, 8) || std::memcmp(magic, "STNMLP01", 8) != 0) throw FormatError("bad network magic");
        Mlp m;
        m.id_ = next_id();
        const std::uint32_t n = get_u32(is);
        if (n == 0 || n > 1024) throw FormatError("bad layer count");
        for (std::uint32_t i = 0; i < n; ++i) {
            LayerShape s;
            s.in = static_cast<int>(get_u32(is));
            s.out = static_cast<int>(get_u32(is));
            const auto a = get_u32(is);
            if (a > 4 || s.in < 1 || s.out < 1 || s.in > (1 << 20) || s.out > (1 << 20))
                throw FormatError("bad layer shape");
            s.act = static_cast<Activation>(a);
            if (!m.layers_.empty() && m.layers_.back().out != s.in) throw FormatError("layer shapes do not chain");
            m.layers_.push_back(s);
        }
        m.index();
        m.theta_.resize(m.count_);
        for (auto& v : m.theta_) v = std::bit_cast<double>(get_u64(is));
        return m;
    }

private:
    std::vector<LayerShape> layers_;
    std::vector<std::size_t> offset_;
    std::vector<double> theta_;
    std::size_t count_ = 0;
    std::uint64_t id_ = 0;
    std::uint64_t version_ = 0;

    // Shared by worker threads; only tape validation reads it.
    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{0};
        return ++counter;
    }

    void index() {
        offset_.clear();
        count_ = 0;
        for (const auto& s : layers_) {
            offset_.push_back(count_);
            count_ += static_cast<std::size_t>(s.in) * s.out + static_cast<std::size_t>(s.out);
        }
    }

    static void put_u32(std::ostream& os, std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        os.write(b, 4);
    }
    static void put_u64(std::ostream& os, std::uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        os.write(b, 8);
    }
    static std::uint32_t get_u32(std::istream& is) {
        unsigned char b[4];
        if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated network file");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    static std::uint64_t get_u64(std::istream& is) {
        unsigned char b[8];
        if (!is.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated network file");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
};

/// Parameter count of a dense stack with the given widths.
inline std::size_t dense_param_count(const std::vector<int>& widths) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        n += static_cast<std::size_t>(widths[i]) * widths[i + 1] + static_cast<std::size_t>(widths[i + 1]);
    return n;
}

/// Central-difference gradient of a scalar function of the network parameters.
/// Meant for small nets; refuses more than 2048 parameters.
inline std::vector<double> finite_difference_gradient(Mlp& net, const std::function<double(const Mlp&)>& f,
                                                      double step = 1e-5) {
    if (net.param_count() > 2048) throw CapacityError("finite differences limited to 2048 parameters");
    std::vector<double> g(net.param_count());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double keep = net.params()[i];
        net.mutable_params()[i] = keep + step;
        const double up = f(net);
        net.mutable_params()[i] = keep - step;
        const double down = f(net);
        net.mutable_params()[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

/// Adam state for one parameter vector.
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
    std::vector<double> m, v;
    long t = 0;

    void step(std::vector<double>& theta, const std::vector<double>& grad) {
        if (grad.size() != theta.size()) throw ShapeError("gradient size mismatch");
        for (double g : grad)
            if (!std::isfinite(g)) throw TrainingError("adam", "non-finite gradient");
        if (m.size() != theta.size()) {
            m.assign(theta.size(), 0.0);
            v.assign(theta.size(), 0.0);
            t = 0;
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

/// Scales `g` in place so its Euclidean norm is at most `max_norm`; returns the
/// norm before clipping.
inline double clip_norm(std::vector<double>& g, double max_norm) {
    double s = 0.0;
    for (double v : g) s += v * v;
    const double n = std::sqrt(s);
    if (max_norm > 0.0 && n > max_norm) {
        const double k = max_norm / n;
        for (double& v : g) v *= k;
    }
    return n;
}

}  // namespace stnsec

#endif  // STNSEC_NN_HPP
