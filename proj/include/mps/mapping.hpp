#pragma once

#include <cmath>
#include <numbers>

#include "mps/common.hpp"
#include "mps/multipatch.hpp"

namespace mps {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct Jacobian2 {
    double dxdr = 0.0, dxdt = 0.0;
    double dydr = 0.0, dydt = 0.0;

    double det() const { return dxdr * dydt - dxdt * dydr; }
};

inline Point2 czarny_forward(double r, double th, double eps, double e) {
    const double xi = 1.0 / std::sqrt(1.0 - 0.25 * eps * eps);
    const double s = std::sqrt(1.0 + eps * (eps + 2.0 * r * std::cos(th)));
    return {(1.0 - s) / eps, e * xi * r * std::sin(th) / (2.0 - s)};
}

/// Closed-form inverse of the Czarny map; theta is wrapped into [0, 2*pi).
inline void czarny_inverse(double x, double y, double eps, double e, double& r, double& th) {
    const double xi = 1.0 / std::sqrt(1.0 - 0.25 * eps * eps);
    const double s = 1.0 - eps * x;
    const double rc = (s * s - 1.0 - eps * eps) / (2.0 * eps);
    const double rs = y * (2.0 - s) / (e * xi);
    r = std::hypot(rc, rs);
    if (r == 0.0) {
        th = 0.0;
        return;
    }
    th = std::atan2(rs, rc);
    if (th < 0.0) th += 2.0 * std::numbers::pi;
}

/// Analytic logical-to-physical map with Jacobian and closed-form inverse.
class Mapping {
public:
    enum class Kind { Identity, Circular, Czarny };

    static Mapping identity() { return Mapping(Kind::Identity, 0.0, 0.0); }
    static Mapping circular() { return Mapping(Kind::Circular, 0.0, 0.0); }
    static Mapping czarny(double eps, double e) {
        require(eps > 0.0 && eps < 2.0, "czarny mapping: epsilon out of range");
        return Mapping(Kind::Czarny, eps, e);
    }

    Kind kind() const { return kind_; }
    double epsilon() const { return eps_; }
    double elongation() const { return e_; }

    Point2 forward(double r, double th) const {
        switch (kind_) {
        case Kind::Identity: return {r, th};
        case Kind::Circular: return {r * std::cos(th), r * std::sin(th)};
        case Kind::Czarny: return czarny_forward(r, th, eps_, e_);
        }
        throw InternalError("mapping: unreachable");
    }

    Jacobian2 jacobian(double r, double th) const {
        switch (kind_) {
        case Kind::Identity: return {1.0, 0.0, 0.0, 1.0};
        case Kind::Circular: {
            double c = std::cos(th), s = std::sin(th);
            return {c, -r * s, s, r * c};
        }
        case Kind::Czarny: {
            const double xi = 1.0 / std::sqrt(1.0 - 0.25 * eps_ * eps_);
            const double c = std::cos(th), sn = std::sin(th);
            const double s = std::sqrt(1.0 + eps_ * (eps_ + 2.0 * r * c));
            const double ts = 2.0 - s;
            Jacobian2 j;
            j.dxdr = -c / s;
            j.dxdt = r * sn / s;
            j.dydr = e_ * xi * sn * (ts + r * eps_ * c / s) / (ts * ts);
            j.dydt = e_ * xi * (r * c * ts - eps_ * r * r * sn * sn / s) / (ts * ts);
            return j;
        }
        }
        throw InternalError("mapping: unreachable");
    }

    /// Inverse map; negative radii are folded through the pole,
    /// (r, th) -> (-r, th + pi).
    void inverse(double x, double y, double& r, double& th) const {
        switch (kind_) {
        case Kind::Identity:
            r = x;
            th = y;
            break;
        case Kind::Circular:
            r = std::hypot(x, y);
            th = r == 0.0 ? 0.0 : std::atan2(y, x);
            if (th < 0.0) th += 2.0 * std::numbers::pi;
            break;
        case Kind::Czarny: czarny_inverse(x, y, eps_, e_, r, th); break;
        }
        if (r < 0.0) {   // pole fold
            r = -r;
            th += std::numbers::pi;
        }
    }

private:
    Mapping(Kind k, double eps, double e) : kind_(k), eps_(eps), e_(e) {}
    Kind kind_;
    double eps_, e_;
};

/// Identify the patch holding a physical point and its logical coordinates.
/// Points exactly on an interface radius belong to the outer patch.
inline MultipatchDomain2D::Located locate(const MultipatchDomain2D& dom, const Mapping& map,
                                          double x, double y, bool clamp_r = false) {
    double r, th;
    map.inverse(x, y, r, th);
    return dom.locate_logical(r, th, clamp_r);
}

} // namespace mps
