#ifndef QHYDRO_SPLINE_HPP
#define QHYDRO_SPLINE_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace qhydro {

/// Cubic spline through (x_i, y_i) with not-a-knot ends (x strictly
/// increasing), so the error is O(h^4) up to the table edges.
/// Evaluation at a node returns the node value exactly.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw PreconditionError("spline needs at least two matching nodes");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw PreconditionError("spline nodes must increase strictly");
        m_.assign(n, 0.0);
        if (n == 2) return;
        auto h = [&](std::size_t i) { return x_[i + 1] - x_[i]; };
        auto slope = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h(i); };
        if (n == 3) {
            // the interpolating parabola
            const double c = 2 * (slope(1) - slope(0)) / (x_[2] - x_[0]);
            m_.assign(3, c);
            return;
        }
        // tridiagonal system for the interior second derivatives; the end
        // values M_0, M_{n-1} are eliminated through the not-a-knot conditions
        std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), r(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            lo[i] = h(i - 1) / 6;
            di[i] = (h(i - 1) + h(i)) / 3;
            up[i] = h(i) / 6;
            r[i] = slope(i) - slope(i - 1);
        }
        di[1] += lo[1] * (h(0) + h(1)) / h(1);
        up[1] -= lo[1] * h(0) / h(1);
        const std::size_t k = n - 2;
        di[k] += up[k] * (h(k) + h(k - 1)) / h(k - 1);
        lo[k] -= up[k] * h(k) / h(k - 1);
        for (std::size_t i = 2; i <= k; ++i) {
            const double w = lo[i] / di[i - 1];
            di[i] -= w * up[i - 1];
            r[i] -= w * r[i - 1];
        }
        m_[k] = r[k] / di[k];
        for (std::size_t i = k - 1; i >= 1; --i) m_[i] = (r[i] - up[i] * m_[i + 1]) / di[i];
        m_[0] = m_[1] - h(0) * (m_[2] - m_[1]) / h(1);
        m_[n - 1] = m_[k] + h(k) * (m_[k] - m_[k - 1]) / h(k - 1);
    }

    /// Value, first and second derivative.
    std::array<double, 3> eval(double x) const {
        const std::size_t n = x_.size();
        std::size_t i = std::size_t(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
        i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = x - x_[i];
        if (t == 0.0) {
            const double slope = (y_[i + 1] - y_[i]) / h - h * (2 * m_[i] + m_[i + 1]) / 6;
            return {y_[i], slope, m_[i]};
        }
        const double a = (x_[i + 1] - x) / h, b = t / h;
        const double v = a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6;
        const double dv = (y_[i + 1] - y_[i]) / h - (3 * a * a - 1) * h * m_[i] / 6 + (3 * b * b - 1) * h * m_[i + 1] / 6;
        const double ddv = a * m_[i] + b * m_[i + 1];
        return {v, dv, ddv};
    }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    std::vector<double> x_, y_, m_;
};

/// Tensor-product cubic spline on a rectilinear grid, values[i][j] at (x_i, y_j).
class BicubicSpline {
public:
    struct Value {
        double f = 0, fx = 0, fy = 0, fxx = 0, fxy = 0, fyy = 0;
    };

    BicubicSpline() = default;
    BicubicSpline(std::vector<double> x, std::vector<double> y, const std::vector<std::vector<double>>& values)
        : x_(std::move(x)), y_(std::move(y)) {
        if (values.size() != x_.size()) throw PreconditionError("bicubic table has the wrong number of rows");
        // splines in x for every fixed y_j
        for (std::size_t j = 0; j < y_.size(); ++j) {
            std::vector<double> col(x_.size());
            for (std::size_t i = 0; i < x_.size(); ++i) {
                if (values[i].size() != y_.size()) throw PreconditionError("bicubic table has a ragged row");
                col[i] = values[i][j];
            }
            along_x_.emplace_back(x_, std::move(col));
        }
    }

    bool contains(double x, double y) const {
        return x >= x_.front() && x <= x_.back() && y >= y_.front() && y <= y_.back();
    }

    Value eval(double x, double y) const {
        std::vector<double> f(y_.size()), fx(y_.size()), fxx(y_.size());
        for (std::size_t j = 0; j < y_.size(); ++j) {
            auto v = along_x_[j].eval(x);
            f[j] = v[0];
            fx[j] = v[1];
            fxx[j] = v[2];
        }
        auto a = CubicSpline(y_, std::move(f)).eval(y);
        auto b = CubicSpline(y_, std::move(fx)).eval(y);
        auto c = CubicSpline(y_, std::move(fxx)).eval(y);
        return {a[0], b[0], a[1], c[0], b[1], a[2]};
    }

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

private:
    std::vector<double> x_, y_;
    std::vector<CubicSpline> along_x_;
};

} // namespace qhydro

#endif
