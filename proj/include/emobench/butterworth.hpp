#pragma once

#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// One second-order section in direct form II transposed, normalized a0 = 1.
struct Biquad {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Cascade of second-order sections. Butterworth band-pass of prototype order N
// yields N sections (2N poles).
struct SosFilter {
  std::vector<Biquad> sections;
  int prototype_order = 0;

  // Reflected-padding length required by filtfilt: 3 x (2N + 1) taps of the
  // equivalent transfer function.
  int pad_length() const { return 3 * (2 * prototype_order + 1); }
};

// Designs a digital Butterworth band-pass via the bilinear transform with
// edge prewarping. Gain is normalized to 1 at the (warped) center frequency.
// Throws InvalidBandEdges unless 0 < low < high < rate/2.
SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                      double rate_hz);

// Zero-phase forward-backward filtering with odd-reflection padding and
// steady-state section initialization, so constant inputs produce no edge
// transients. Throws SignalTooShort when input length <= pad_length().
std::vector<double> filtfilt(const SosFilter& filter, const std::vector<double>& x);

// Applies filtfilt to every row of a channels x samples matrix.
// Throws InvalidBandEdges, SignalTooShort.
Matrix bandpass(const Matrix& signal, double low_hz, double high_hz, double rate_hz,
                int order);

}  // namespace emobench
