#include "emobench/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace emobench {

namespace {

using cplx = std::complex<double>;

// Pairs the 2N digital poles into conjugate pairs. Complex poles are matched
// with their conjugates; real poles (possible for odd prototype orders with
// wide bands) are paired with each other.
std::vector<std::pair<cplx, cplx>> pair_poles(std::vector<cplx> poles) {
  constexpr double kRealTol = 1e-10;
  std::vector<std::pair<cplx, cplx>> pairs;
  while (!poles.empty()) {
    // Take the pole with the largest |imag| first.
    auto it = std::max_element(poles.begin(), poles.end(), [](const cplx& a, const cplx& b) {
      return std::abs(a.imag()) < std::abs(b.imag());
    });
    const cplx p = *it;
    poles.erase(it);
    if (std::abs(p.imag()) > kRealTol) {
      auto jt = std::min_element(poles.begin(), poles.end(), [&](const cplx& a, const cplx& b) {
        return std::abs(a - std::conj(p)) < std::abs(b - std::conj(p));
      });
      pairs.emplace_back(p, *jt);
      poles.erase(jt);
    } else {
      // Real pole: pair with the closest remaining real pole.
      auto jt = std::min_element(poles.begin(), poles.end(), [&](const cplx& a, const cplx& b) {
        return std::abs(a - p) < std::abs(b - p);
      });
      pairs.emplace_back(p, *jt);
      poles.erase(jt);
    }
  }
  return pairs;
}

// Complex frequency response of the cascade at z = e^{j theta}.
cplx response_at(const std::vector<Biquad>& sections, double theta) {
  const cplx z1 = std::exp(cplx(0.0, -theta));
  const cplx z2 = z1 * z1;
  cplx h(1.0, 0.0);
  for (const Biquad& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

// DC gain of one section.
double section_dc_gain(const Biquad& s) {
  return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
}

// Steady-state DF2T state (s1, s2) for constant input u (and the implied
// constant output). Seeding the filter with this state makes the response to a
// constant signal exactly constant, so reflect-padded edges carry no step
// transient.
void steady_state(const Biquad& s, double u, double& s1, double& s2) {
  const double v = section_dc_gain(s) * u;
  s2 = s.b2 * u - s.a2 * v;
  s1 = s.b1 * u - s.a1 * v + s2;
}

// Single forward pass of the cascade over x, starting from the steady state
// for constant input x0.
void sosfilt_inplace(const SosFilter& f, std::vector<double>& x) {
  double u = x.empty() ? 0.0 : x.front();
  for (const Biquad& s : f.sections) {
    double s1 = 0.0, s2 = 0.0;
    steady_state(s, u, s1, s2);
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
    u *= section_dc_gain(s);  // constant level seen by the next section
  }
}

}  // namespace

SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                      double rate_hz) {
  if (order < 1) {
    throw Error(ErrorCode::InvalidBandEdges, "filter order must be >= 1");
  }
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < rate_hz / 2.0)) {
    throw Error(ErrorCode::InvalidBandEdges,
                "need 0 < low < high < rate/2, got [" + std::to_string(low_hz) + ", " +
                    std::to_string(high_hz) + "] at " + std::to_string(rate_hz) + " Hz");
  }

  const double fs2 = 2.0 * rate_hz;
  // Prewarped analog edge frequencies (rad/s).
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / rate_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / rate_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  // Analog low-pass prototype poles on the unit circle, left half-plane.
  std::vector<cplx> analog_poles;
  analog_poles.reserve(2 * static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double phi =
        std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order) + std::numbers::pi / 2.0;
    const cplx p(std::cos(phi), std::sin(phi));
    // Low-pass -> band-pass: each prototype pole maps to two.
    const cplx t = 0.5 * bw * p;
    const cplx d = std::sqrt(t * t - cplx(w0 * w0, 0.0));
    analog_poles.push_back(t + d);
    analog_poles.push_back(t - d);
  }

  // Bilinear transform. Band-pass zeros land at z = +1 (order of them, from
  // s = 0) and z = -1 (order of them, from s = infinity).
  std::vector<cplx> digital_poles;
  digital_poles.reserve(analog_poles.size());
  for (const cplx& s : analog_poles) {
    digital_poles.push_back((fs2 + s) / (fs2 - s));
  }

  SosFilter filter;
  filter.prototype_order = order;
  for (const auto& [p, q] : pair_poles(std::move(digital_poles))) {
    Biquad s;
    // (1 - z^-1)(1 + z^-1) numerator: one +1 zero and one -1 zero per section.
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    s.a1 = -(p + q).real();
    s.a2 = (p * q).real();
    filter.sections.push_back(s);
  }

  // Normalize to unit gain at the warped center frequency.
  const double theta0 = 2.0 * std::atan(w0 / fs2);
  const double mag = std::abs(response_at(filter.sections, theta0));
  if (!(mag > 0.0) || !std::isfinite(mag)) {
    throw Error(ErrorCode::InvalidBandEdges, "degenerate band produced a zero response");
  }
  filter.sections.front().b0 /= mag;
  filter.sections.front().b2 /= mag;

  return filter;
}

std::vector<double> filtfilt(const SosFilter& filter, const std::vector<double>& x) {
  const int pad = filter.pad_length();
  const std::size_t n = x.size();
  if (n <= static_cast<std::size_t>(pad)) {
    throw Error(ErrorCode::SignalTooShort,
                "signal length " + std::to_string(n) + " must exceed padding " +
                    std::to_string(pad));
  }

  // Odd reflection about the end points.
  std::vector<double> ext;
  ext.reserve(n + 2 * static_cast<std::size_t>(pad));
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[static_cast<std::size_t>(i)]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = 1; i <= pad; ++i) {
    ext.push_back(2.0 * x.back() - x[n - 1 - static_cast<std::size_t>(i)]);
  }

  sosfilt_inplace(filter, ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(filter, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + pad, ext.begin() + pad + static_cast<long>(n));
}

Matrix bandpass(const Matrix& signal, double low_hz, double high_hz, double rate_hz,
                int order) {
  const SosFilter filter = design_butterworth_bandpass(order, low_hz, high_hz, rate_hz);
  Matrix out(signal.rows(), signal.cols());
  std::vector<double> row(static_cast<std::size_t>(signal.cols()));
  for (Eigen::Index ch = 0; ch < signal.rows(); ++ch) {
    for (Eigen::Index i = 0; i < signal.cols(); ++i) row[static_cast<std::size_t>(i)] = signal(ch, i);
    const std::vector<double> filtered = filtfilt(filter, row);
    for (Eigen::Index i = 0; i < signal.cols(); ++i) out(ch, i) = filtered[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace emobench
