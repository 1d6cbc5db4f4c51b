#pragma once

#include <algorithm>
#include <cmath>

namespace mlt {

/// 2D point / displacement in pixel coordinates.
struct Vec2 {
    double x{0.0};
    double y{0.0};

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
};

/// Mean patch color, channels in [0, 255].
struct Color3 {
    double r{0.0};
    double g{0.0};
    double b{0.0};

    bool operator==(const Color3& o) const { return r == o.r && g == o.g && b == o.b; }
};

inline double color_distance(const Color3& a, const Color3& b) {
    const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

/// Axis-aligned box given by center and extent.
struct Box {
    Vec2 center;
    double width{0.0};
    double height{0.0};

    double left() const { return center.x - width * 0.5; }
    double right() const { return center.x + width * 0.5; }
    double top() const { return center.y - height * 0.5; }
    double bottom() const { return center.y + height * 0.5; }
    double area() const { return width > 0.0 && height > 0.0 ? width * height : 0.0; }

    // Edges are inclusive.
    bool contains(const Vec2& p) const {
        return std::abs(p.x - center.x) <= width * 0.5 &&
               std::abs(p.y - center.y) <= height * 0.5;
    }
};

inline double intersection_area(const Box& a, const Box& b) {
    const double w = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

inline double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_from_rad(double rad) { return rad * 180.0 / kPi; }

/// Unsigned angle between two nonzero vectors, degrees in [0, 180].
inline double angle_between_deg(const Vec2& a, const Vec2& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = (a.x * b.x + a.y * b.y) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return deg_from_rad(std::acos(c));
}

}  // namespace mlt
