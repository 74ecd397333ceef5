#pragma once

#include <cmath>
#include <vector>

namespace melep {

/// Correctly rounded floating-point sum (Shewchuk's non-overlapping partials,
/// with the final half-way correction used by Python's math.fsum).
///
/// The result is the exact sum rounded once, so it does not depend on the
/// order in which terms are added. Inputs must be finite.
template <typename Scalar>
class ExactSum
{
public:
    void add(Scalar x)
    {
        std::size_t used = 0;
        for (Scalar y : partials_) {
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const Scalar hi = x + y;
            const Scalar lo = y - (hi - x);
            if (lo != Scalar(0)) partials_[used++] = lo;
            x = hi;
        }
        partials_.resize(used);
        partials_.push_back(x);
    }

    ExactSum& operator+=(Scalar x)
    {
        add(x);
        return *this;
    }

    Scalar value() const
    {
        std::size_t n = partials_.size();
        if (n == 0) return Scalar(0);
        Scalar hi = partials_[--n];
        Scalar lo = Scalar(0);
        while (n > 0) {
            const Scalar x = hi;
            const Scalar y = partials_[--n];
            hi = x + y;
            const Scalar yr = hi - x;
            lo = y - yr;
            if (lo != Scalar(0)) break;
        }
        // Round half-way cases using the sign of the remaining partials.
        if (n > 0 && ((lo < Scalar(0) && partials_[n - 1] < Scalar(0)) ||
                      (lo > Scalar(0) && partials_[n - 1] > Scalar(0)))) {
            const Scalar y = lo * Scalar(2);
            const Scalar x = hi + y;
            const Scalar yr = x - hi;
            if (y == yr) hi = x;
        }
        return hi;
    }

private:
    std::vector<Scalar> partials_;
};

} // namespace melep
