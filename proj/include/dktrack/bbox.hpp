// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace dktrack {

// Axis-aligned box, top-left corner plus size, in pixel units.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }
};

}  // namespace dktrack
