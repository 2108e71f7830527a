#pragma once

#include <cstdint>

namespace great {

// Double-double accumulator. Addition order is still fixed by the caller
// (ascending sample index everywhere in this library), but the compensation
// makes the rounded result agree across permutations to within 1 ulp.
class CompensatedSum {
public:
    void add(double x) {
        // two_sum(hi_, x)
        double s = hi_ + x;
        double bb = s - hi_;
        double err = (hi_ - (s - bb)) + (x - bb);
        lo_ += err;
        // renormalize
        double t = s + lo_;
        lo_ = lo_ - (t - s);
        hi_ = t;
    }

    double value() const { return hi_ + lo_; }

private:
    double hi_ = 0.0;
    double lo_ = 0.0;
};

}  // namespace great
