#pragma once

#include <cmath>
#include <vector>

#include "gtcnn/error.hpp"
#include "gtcnn/fft.hpp"

namespace gtcnn {

/// Instantaneous envelope |x + i*H{x}| via the DFT construction of the
/// analytic signal: zero the negative-frequency bins, double the positive
/// ones, keep DC and Nyquist, inverse-transform, take the magnitude.
/// `plan` must match the row length; `scratch` is reused between calls.
inline void analytic_envelope_inplace(double* row, std::size_t n, const Dft& plan,
                                      std::vector<cplx>& scratch) {
    if (n == 0) throw ConfigError("analytic_envelope: empty input");
    if (plan.size() != n) throw ConfigError("analytic_envelope: plan size mismatch");

    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = cplx(row[i], 0.0);
    auto spectrum = plan.forward(scratch);

    const std::size_t half = n / 2;
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) spectrum[k] *= 2.0;
    if (n % 2 == 0) {
        // bin `half` is the Nyquist bin: kept as-is
        for (std::size_t k = half + 1; k < n; ++k) spectrum[k] = cplx(0.0, 0.0);
    } else {
        for (std::size_t k = half + 1; k < n; ++k) spectrum[k] = cplx(0.0, 0.0);
    }

    auto analytic = plan.inverse(spectrum);
    for (std::size_t i = 0; i < n; ++i) row[i] = std::abs(analytic[i]);
}

inline std::vector<double> analytic_envelope(const std::vector<double>& x) {
    if (x.empty()) throw ConfigError("analytic_envelope: empty input");
    std::vector<double> out(x);
    Dft plan(x.size());
    std::vector<cplx> scratch;
    analytic_envelope_inplace(out.data(), out.size(), plan, scratch);
    return out;
}

} // namespace gtcnn
