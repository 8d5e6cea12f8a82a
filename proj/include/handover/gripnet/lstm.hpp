#pragma once

// Single-layer LSTM cell with the usual i, f, g, o gate layout and a single
// bias vector per cell. Sizes may be fixed (the model) or Eigen::Dynamic
// (hand-built test cells); dynamic sizes are checked at run time.

#include "handover/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace handover::gripnet {

constexpr int gate_rows(int hidden) { return hidden == Eigen::Dynamic ? Eigen::Dynamic : 4 * hidden; }

template <int I, int H>
struct LstmCell {
    using Input = Eigen::Matrix<double, I, 1>;
    using Hidden = Eigen::Matrix<double, H, 1>;
    using Gates = Eigen::Matrix<double, gate_rows(H), 1>;

    Eigen::Matrix<double, gate_rows(H), I> w_ih;
    Eigen::Matrix<double, gate_rows(H), H> w_hh;
    Gates bias;

    Eigen::Index input_size() const { return w_ih.cols(); }
    Eigen::Index hidden_size() const { return w_hh.cols(); }

    void set_zero()
    {
        w_ih.setZero();
        w_hh.setZero();
        bias.setZero();
    }
};

template <int H>
struct LstmState {
    Eigen::Matrix<double, H, 1> h;
    Eigen::Matrix<double, H, 1> c;

    static LstmState zero(Eigen::Index hidden)
    {
        LstmState s;
        s.h.setZero(hidden);
        s.c.setZero(hidden);
        return s;
    }
};

// Everything the backward step needs from one forward step.
template <int I, int H>
struct LstmCache {
    Eigen::Matrix<double, I, 1> x;
    Eigen::Matrix<double, H, 1> h_prev, c_prev, i, f, g, o, tanh_c;
};

namespace detail {

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

template <int I, int H>
void check_shapes(const LstmCell<I, H>& cell, Eigen::Index x_size, const LstmState<H>& s)
{
    const auto hidden = cell.hidden_size();
    if (cell.w_ih.rows() != 4 * hidden || cell.w_hh.rows() != 4 * hidden || cell.bias.size() != 4 * hidden ||
        cell.input_size() != x_size || s.h.size() != hidden || s.c.size() != hidden)
        fail(ErrorKind::Shape, "lstm_step: input " + std::to_string(x_size) + ", hidden " + std::to_string(s.h.size()) + "/" +
                                   std::to_string(s.c.size()) + " do not match a cell of input " + std::to_string(cell.input_size()) +
                                   " and hidden " + std::to_string(hidden));
}

}  // namespace detail

template <int I, int H>
LstmState<H> lstm_step(const LstmCell<I, H>& cell, const Eigen::Matrix<double, I, 1>& x, const LstmState<H>& s,
                       LstmCache<I, H>* cache = nullptr)
{
    if constexpr (I == Eigen::Dynamic || H == Eigen::Dynamic) detail::check_shapes(cell, x.size(), s);
    const Eigen::Index n = cell.hidden_size();
    typename LstmCell<I, H>::Gates a = cell.bias;
    a.noalias() += cell.w_ih * x;
    a.noalias() += cell.w_hh * s.h;

    Eigen::Matrix<double, H, 1> i(n), f(n), g(n), o(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        i[k] = detail::logistic(a[k]);
        f[k] = detail::logistic(a[n + k]);
        g[k] = std::tanh(a[2 * n + k]);
        o[k] = detail::logistic(a[3 * n + k]);
    }
    LstmState<H> next;
    next.c = f.cwiseProduct(s.c) + i.cwiseProduct(g);
    const Eigen::Matrix<double, H, 1> tanh_c = next.c.array().tanh().matrix();
    next.h = o.cwiseProduct(tanh_c);

    if (cache) {
        cache->x = x;
        cache->h_prev = s.h;
        cache->c_prev = s.c;
        cache->i = i;
        cache->f = f;
        cache->g = g;
        cache->o = o;
        cache->tanh_c = tanh_c;
    }
    return next;
}

// Backpropagates dh/dc (gradients w.r.t. the step's output state) through one
// step. Parameter gradients are accumulated into `grad`; dx is overwritten and
// dh/dc are replaced by the gradients w.r.t. the previous state.
template <int I, int H>
void lstm_step_backward(const LstmCell<I, H>& cell, const LstmCache<I, H>& c, LstmCell<I, H>& grad, Eigen::Matrix<double, H, 1>& dh,
                        Eigen::Matrix<double, H, 1>& dc, Eigen::Matrix<double, I, 1>& dx)
{
    const Eigen::Index n = cell.hidden_size();
    const Eigen::Matrix<double, H, 1> dc_total =
        dc + dh.cwiseProduct(c.o).cwiseProduct((1.0 - c.tanh_c.array().square()).matrix());

    typename LstmCell<I, H>::Gates da(4 * n);
    for (Eigen::Index k = 0; k < n; ++k) {
        da[k] = dc_total[k] * c.g[k] * c.i[k] * (1.0 - c.i[k]);
        da[n + k] = dc_total[k] * c.c_prev[k] * c.f[k] * (1.0 - c.f[k]);
        da[2 * n + k] = dc_total[k] * c.i[k] * (1.0 - c.g[k] * c.g[k]);
        da[3 * n + k] = dh[k] * c.tanh_c[k] * c.o[k] * (1.0 - c.o[k]);
    }
    grad.w_ih.noalias() += da * c.x.transpose();
    grad.w_hh.noalias() += da * c.h_prev.transpose();
    grad.bias += da;

    dx.noalias() = cell.w_ih.transpose() * da;
    dc = dc_total.cwiseProduct(c.f);
    dh.noalias() = cell.w_hh.transpose() * da;
}

using DynamicCell = LstmCell<Eigen::Dynamic, Eigen::Dynamic>;
using DynamicState = LstmState<Eigen::Dynamic>;

}  // namespace handover::gripnet
