#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emobench/types.hpp"

namespace emobench {

// --- Eye movement -------------------------------------------------------------
//
// 33 features per 4 s window, in this fixed order:
//
//   0-11  DE of {pupil_x, pupil_y, dispersion_x, dispersion_y}, each over the
//         {raw, slow, fast} band proxies. "slow" is a one-second moving
//         average, "fast" the residual; DE = 0.5*ln(2*pi*e*var) with the
//         shared 1e-12 variance floor.
//  12-15  fixation duration mean / std / min / max (seconds)
//  16-19  blink duration mean / std / min / max
//  20-23  saccade duration mean / std / min / max
//  24-27  saccade amplitude mean / std / min / max (gaze units, displacement
//         between event start and end positions)
//  28-29  blink frequency, saccade frequency (events per second; events are
//         attributed to the window containing their start time)
//  30-32  gaze dispersion extras: std of gaze_x, std of gaze_y, mean radial
//         deviation from the window centroid
//
// Windows with no events of a kind emit zeros for that kind's statistics.

inline constexpr int kEyeFeatureDim = 33;

std::vector<std::string> eye_feature_names();

// CSV stream format: header row
//   timestamp_s,pupil_x,pupil_y,gaze_x,gaze_y,event_type,event_start_s,event_end_s
// Every row is one tracking sample; rows that also announce an event carry a
// non-empty event_type (fixation | blink | saccade) with its interval. Each
// event is announced exactly once.
EyeStream read_eye_csv(const std::filesystem::path& path);

// expected_windows < 0 derives the count from the stream span; the pipeline
// passes the EEG window count so the grids align row-for-row.
// Throws MissingEventAnnotations, NonMonotonicTimestamps, RowCountMismatch.
FeatureTensor eye_features(const EyeStream& stream, double window_seconds = 4.0,
                           int expected_windows = -1);

// --- Peripheral physiological signals -------------------------------------------
//
// Exactly 8 channels; per window and channel: max, min, mean, std, variance,
// sum of squares (population conventions), channel-major then statistic.

inline constexpr int kPeripheralChannels = 8;
inline constexpr int kPeripheralStats = 6;

std::vector<std::string> peripheral_feature_names(
    const std::vector<std::string>& channel_names);

// Throws WrongChannelCount, SignalTooShort.
FeatureTensor peripheral_features(const Matrix& signal, double rate_hz,
                                  double window_seconds = 1.0);

// --- Precomputed eye features ----------------------------------------------------

// Validates and wraps a windows x dim matrix shipped with the dataset; values
// pass through unchanged. Throws RowCountMismatch, NonFiniteSample.
FeatureTensor precomputed_eye_passthrough(const Matrix& features, int expected_windows,
                                          double window_seconds = 4.0);

}  // namespace emobench
