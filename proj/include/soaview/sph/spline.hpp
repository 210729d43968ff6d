#pragma once

namespace soaview::sph {

// M5 quartic spline, 2-D normalization. Support is q < 5/2, the
// normalization constant is 96/(1199*pi); the quadrature test pins
// the integral of W over the plane to 1.
inline constexpr double kSplineSupport = 2.5;
inline constexpr double kSplineNorm2d = 0.025486029252413597;

// Dimensionless shape: W(r, h) = kernel_w(r/h) / h^2.
inline double kernel_w(double q) {
  if (q >= 2.5) return 0.0;
  double t1 = 2.5 - q;
  double acc = t1 * t1 * t1 * t1;
  if (q < 1.5) {
    double t2 = 1.5 - q;
    acc = acc - 5.0 * (t2 * t2 * t2 * t2);
  }
  if (q < 0.5) {
    double t3 = 0.5 - q;
    acc = acc + 10.0 * (t3 * t3 * t3 * t3);
  }
  return kSplineNorm2d * acc;
}

// dW/dq; dW/dr = kernel_dw(r/h) / h^3.
inline double kernel_dw(double q) {
  if (q >= 2.5) return 0.0;
  double t1 = 2.5 - q;
  double acc = t1 * t1 * t1;
  if (q < 1.5) {
    double t2 = 1.5 - q;
    acc = acc - 5.0 * (t2 * t2 * t2);
  }
  if (q < 0.5) {
    double t3 = 0.5 - q;
    acc = acc + 10.0 * (t3 * t3 * t3);
  }
  return kSplineNorm2d * -4.0 * acc;
}

} // namespace soaview::sph
