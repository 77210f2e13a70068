#include "emobench/aux_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

namespace emobench {

namespace {

constexpr double kFloor = 1e-12;

double population_var(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / static_cast<double>(v.size());
}

double de_of(const std::vector<double>& v) {
  const double var = std::max(population_var(v), kFloor);
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

// Moving average over a centered span; the low-frequency proxy for sub-band DE.
std::vector<double> moving_average(const std::vector<double>& v, int span) {
  if (span <= 1 || v.size() < 2) return v;
  const int half = span / 2;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - static_cast<std::size_t>(half) : 0;
    const std::size_t hi = std::min(v.size() - 1, i + static_cast<std::size_t>(half));
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += v[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

struct EventStats {
  double mean = 0.0, stdev = 0.0, min = 0.0, max = 0.0;
};

EventStats duration_stats(const std::vector<double>& durations) {
  EventStats s;
  if (durations.empty()) return s;  // zero-event convention
  double sum = 0.0;
  s.min = durations.front();
  s.max = durations.front();
  for (double d : durations) {
    sum += d;
    s.min = std::min(s.min, d);
    s.max = std::max(s.max, d);
  }
  s.mean = sum / static_cast<double>(durations.size());
  double var = 0.0;
  for (double d : durations) var += (d - s.mean) * (d - s.mean);
  s.stdev = std::sqrt(var / static_cast<double>(durations.size()));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<std::string> eye_feature_names() {
  std::vector<std::string> names;
  names.reserve(kEyeFeatureDim);
  for (const char* sig : {"pupil_x", "pupil_y", "dispersion_x", "dispersion_y"}) {
    for (const char* band : {"raw", "slow", "fast"}) {
      names.push_back(std::string(sig) + "_de_" + band);
    }
  }
  for (const char* ev : {"fixation_duration", "blink_duration", "saccade_duration",
                         "saccade_amplitude"}) {
    for (const char* stat : {"mean", "std", "min", "max"}) {
      names.push_back(std::string(ev) + "_" + stat);
    }
  }
  names.emplace_back("blink_frequency");
  names.emplace_back("saccade_frequency");
  names.emplace_back("gaze_x_std");
  names.emplace_back("gaze_y_std");
  names.emplace_back("gaze_radial_mean");
  return names;
}

EyeStream read_eye_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(f, line)) {
    throw Error(ErrorCode::TruncatedPayload, "'" + path.string() + "' is empty");
  }

  EyeStream stream;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    {
      std::string cur;
      for (char c : line) {
        if (c == ',') {
          cells.push_back(cur);
          cur.clear();
        } else if (c != '\r') {
          cur.push_back(c);
        }
      }
      cells.push_back(cur);
    }
    if (cells.size() != 8) {
      throw Error(ErrorCode::RowCountMismatch,
                  "'" + path.string() + "' line " + std::to_string(lineno) +
                      " has " + std::to_string(cells.size()) + " columns, expected 8");
    }
    auto num = [&](int i) {
      char* end = nullptr;
      const double v = std::strtod(cells[static_cast<std::size_t>(i)].c_str(), &end);
      if (end == cells[static_cast<std::size_t>(i)].c_str() || !std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteSample,
                    "'" + path.string() + "' line " + std::to_string(lineno) +
                        ": bad value '" + cells[static_cast<std::size_t>(i)] + "'");
      }
      return v;
    };
    EyeSample sample;
    sample.t_s = num(0);
    sample.pupil_x = num(1);
    sample.pupil_y = num(2);
    sample.gaze_x = num(3);
    sample.gaze_y = num(4);
    stream.samples.push_back(sample);

    const std::string ev = trim(cells[5]);
    if (!ev.empty()) {
      EyeEvent event;
      if (ev == "fixation") {
        event.type = EyeEvent::Type::Fixation;
      } else if (ev == "blink") {
        event.type = EyeEvent::Type::Blink;
      } else if (ev == "saccade") {
        event.type = EyeEvent::Type::Saccade;
      } else {
        throw Error(ErrorCode::MissingEventAnnotations,
                    "'" + path.string() + "' line " + std::to_string(lineno) +
                        ": unknown event type '" + ev + "'");
      }
      event.start_s = num(6);
      event.end_s = num(7);
      stream.events.push_back(event);
    }
  }
  return stream;
}

FeatureTensor eye_features(const EyeStream& stream, double window_seconds,
                           int expected_windows) {
  if (stream.samples.empty()) {
    throw Error(ErrorCode::MissingEventAnnotations, "eye stream has no samples");
  }
  for (std::size_t i = 1; i < stream.samples.size(); ++i) {
    if (stream.samples[i].t_s < stream.samples[i - 1].t_s) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  "timestamp at record " + std::to_string(i) + " (" +
                      std::to_string(stream.samples[i].t_s) + "s) precedes its predecessor");
    }
  }

  const double t0 = stream.samples.front().t_s;
  const double t_last = stream.samples.back().t_s;

  int n_windows = expected_windows;
  if (n_windows < 0) {
    // Streams cover [t0, t_last + dt): include the last sample's own interval
    // so a T-second stream at any rate yields floor(T / window) windows.
    double dt = 0.0;
    if (stream.samples.size() > 1) {
      std::vector<double> dts;
      dts.reserve(stream.samples.size() - 1);
      for (std::size_t i = 1; i < stream.samples.size(); ++i) {
        dts.push_back(stream.samples[i].t_s - stream.samples[i - 1].t_s);
      }
      std::nth_element(dts.begin(), dts.begin() + static_cast<long>(dts.size() / 2), dts.end());
      dt = dts[dts.size() / 2];
    }
    n_windows = static_cast<int>(std::floor((t_last - t0 + dt) / window_seconds + 1e-9));
  }
  if (n_windows < 1) {
    throw Error(ErrorCode::RowCountMismatch, "eye stream does not cover one window");
  }

  FeatureTensor tensor;
  tensor.values.resize(n_windows, kEyeFeatureDim);
  tensor.window_seconds = window_seconds;
  tensor.feature_names = eye_feature_names();
  tensor.origin.modality = "eye";

  std::size_t cursor = 0;
  for (int w = 0; w < n_windows; ++w) {
    const double win_lo = t0 + w * window_seconds;
    const double win_hi = win_lo + window_seconds;

    while (cursor < stream.samples.size() && stream.samples[cursor].t_s < win_lo) ++cursor;
    std::vector<double> pupil_x, pupil_y, gaze_x, gaze_y;
    for (std::size_t i = cursor; i < stream.samples.size() && stream.samples[i].t_s < win_hi; ++i) {
      pupil_x.push_back(stream.samples[i].pupil_x);
      pupil_y.push_back(stream.samples[i].pupil_y);
      gaze_x.push_back(stream.samples[i].gaze_x);
      gaze_y.push_back(stream.samples[i].gaze_y);
    }
    if (pupil_x.empty()) {
      throw Error(ErrorCode::RowCountMismatch,
                  "eye stream has no samples in window " + std::to_string(w));
    }

    // Dispersion series: radial deviation of gaze from the window centroid,
    // split per axis.
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < gaze_x.size(); ++i) {
      mx += gaze_x[i];
      my += gaze_y[i];
    }
    mx /= static_cast<double>(gaze_x.size());
    my /= static_cast<double>(gaze_y.size());
    std::vector<double> disp_x(gaze_x.size()), disp_y(gaze_y.size());
    for (std::size_t i = 0; i < gaze_x.size(); ++i) {
      disp_x[i] = std::abs(gaze_x[i] - mx);
      disp_y[i] = std::abs(gaze_y[i] - my);
    }

    // One-second moving-average span from the realized in-window rate.
    const int span = std::max(1, static_cast<int>(std::lround(
                                      static_cast<double>(pupil_x.size()) / window_seconds)));

    int col = 0;
    for (const std::vector<double>* sig : {&pupil_x, &pupil_y, &disp_x, &disp_y}) {
      const std::vector<double> slow = moving_average(*sig, span);
      std::vector<double> fast(sig->size());
      for (std::size_t i = 0; i < sig->size(); ++i) fast[i] = (*sig)[i] - slow[i];
      tensor.values(w, col++) = de_of(*sig);
      tensor.values(w, col++) = de_of(slow);
      tensor.values(w, col++) = de_of(fast);
    }

    // Events attributed to the window containing their start.
    std::vector<double> fix_dur, blink_dur, sac_dur, sac_amp;
    for (const EyeEvent& ev : stream.events) {
      if (ev.start_s < win_lo || ev.start_s >= win_hi) continue;
      const double dur = std::max(0.0, ev.end_s - ev.start_s);
      switch (ev.type) {
        case EyeEvent::Type::Fixation:
          fix_dur.push_back(dur);
          break;
        case EyeEvent::Type::Blink:
          blink_dur.push_back(dur);
          break;
        case EyeEvent::Type::Saccade: {
          sac_dur.push_back(dur);
          // Amplitude from the gaze positions nearest the event boundaries.
          auto gaze_at = [&](double t) {
            std::size_t best = 0;
            double best_d = std::abs(stream.samples[0].t_s - t);
            for (std::size_t i = 1; i < stream.samples.size(); ++i) {
              const double d = std::abs(stream.samples[i].t_s - t);
              if (d < best_d) {
                best_d = d;
                best = i;
              }
            }
            return std::make_pair(stream.samples[best].gaze_x, stream.samples[best].gaze_y);
          };
          const auto [x0, y0] = gaze_at(ev.start_s);
          const auto [x1, y1] = gaze_at(ev.end_s);
          sac_amp.push_back(std::hypot(x1 - x0, y1 - y0));
          break;
        }
      }
    }
    for (const std::vector<double>* durs : {&fix_dur, &blink_dur, &sac_dur, &sac_amp}) {
      const EventStats s = duration_stats(*durs);
      tensor.values(w, col++) = s.mean;
      tensor.values(w, col++) = s.stdev;
      tensor.values(w, col++) = s.min;
      tensor.values(w, col++) = s.max;
    }
    tensor.values(w, col++) = static_cast<double>(blink_dur.size()) / window_seconds;
    tensor.values(w, col++) = static_cast<double>(sac_dur.size()) / window_seconds;

    tensor.values(w, col++) = std::sqrt(population_var(gaze_x));
    tensor.values(w, col++) = std::sqrt(population_var(gaze_y));
    double radial = 0.0;
    for (std::size_t i = 0; i < gaze_x.size(); ++i) {
      radial += std::hypot(gaze_x[i] - mx, gaze_y[i] - my);
    }
    tensor.values(w, col++) = radial / static_cast<double>(gaze_x.size());
  }

  tensor.require_finite();
  return tensor;
}

std::vector<std::string> peripheral_feature_names(
    const std::vector<std::string>& channel_names) {
  std::vector<std::string> names;
  names.reserve(channel_names.size() * kPeripheralStats);
  for (const std::string& ch : channel_names) {
    for (const char* stat : {"max", "min", "mean", "std", "var", "sumsq"}) {
      names.push_back(ch + "_" + stat);
    }
  }
  return names;
}

FeatureTensor peripheral_features(const Matrix& signal, double rate_hz,
                                  double window_seconds) {
  if (signal.rows() != kPeripheralChannels) {
    throw Error(ErrorCode::WrongChannelCount,
                "peripheral features expect " + std::to_string(kPeripheralChannels) +
                    " channels, got " + std::to_string(signal.rows()));
  }
  const auto window_samples =
      static_cast<Eigen::Index>(std::llround(window_seconds * rate_hz));
  if (window_samples < 1 || signal.cols() < window_samples) {
    throw Error(ErrorCode::SignalTooShort,
                "signal of " + std::to_string(signal.cols()) +
                    " samples is shorter than one window");
  }
  const Eigen::Index n_windows = signal.cols() / window_samples;

  FeatureTensor tensor;
  tensor.values.resize(n_windows, kPeripheralChannels * kPeripheralStats);
  tensor.window_seconds = window_seconds;
  tensor.origin.modality = "peripheral";

  for (Eigen::Index w = 0; w < n_windows; ++w) {
    for (Eigen::Index ch = 0; ch < kPeripheralChannels; ++ch) {
      const auto seg = signal.row(ch).segment(w * window_samples, window_samples);
      const double mx = seg.maxCoeff();
      const double mn = seg.minCoeff();
      const double mean = seg.mean();
      const double var = (seg.array() - mean).square().sum() / static_cast<double>(window_samples);
      const double sumsq = seg.array().square().sum();
      const Eigen::Index base = ch * kPeripheralStats;
      tensor.values(w, base + 0) = mx;
      tensor.values(w, base + 1) = mn;
      tensor.values(w, base + 2) = mean;
      tensor.values(w, base + 3) = std::sqrt(var);
      tensor.values(w, base + 4) = var;
      tensor.values(w, base + 5) = sumsq;
    }
  }

  std::vector<std::string> channel_names;
  for (int ch = 0; ch < kPeripheralChannels; ++ch) channel_names.push_back("aux" + std::to_string(ch));
  tensor.feature_names = peripheral_feature_names(channel_names);
  return tensor;
}

FeatureTensor precomputed_eye_passthrough(const Matrix& features, int expected_windows,
                                          double window_seconds) {
  if (features.rows() != expected_windows) {
    throw Error(ErrorCode::RowCountMismatch,
                "precomputed eye features have " + std::to_string(features.rows()) +
                    " rows, EEG grid has " + std::to_string(expected_windows) + " windows");
  }
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (!std::isfinite(features(r, c))) {
        throw Error(ErrorCode::NonFiniteSample,
                    "precomputed eye feature cell (" + std::to_string(r) + ", " +
                        std::to_string(c) + ") is not finite");
      }
    }
  }
  FeatureTensor tensor;
  tensor.values = features;
  tensor.window_seconds = window_seconds;
  tensor.origin.modality = "eye";
  tensor.feature_names.reserve(static_cast<std::size_t>(features.cols()));
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    tensor.feature_names.push_back("eye_feat" + std::to_string(c));
  }
  return tensor;
}

}  // namespace emobench
