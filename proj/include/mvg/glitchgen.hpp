#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mvg/rng.hpp"
#include "mvg/sample.hpp"
#include "mvg/tensor.hpp"

namespace mvg {

enum class DurationCategory : std::uint8_t { short_duration, long_duration };

std::string to_string(DurationCategory c);

// Building blocks of a glitch morphology in the time-frequency plane.
// Frequency is a normalized log axis u in [0, 1] (0 = bottom row).
enum class ComponentKind : std::uint8_t {
  blob,                // Gaussian in time and frequency
  repeated_blobs,      // `repetitions` blobs, `spacing` apart, centered on t0
  horizontal_line,     // line over |t - t0| < extent, frequency f0 + slope (t - t0)
  low_frequency_band,  // same geometry as a line, wide in frequency
  arch_set,            // u = f0 + excursion |cos(pi (t - t0) / spacing)|
  wandering_track,     // u = f0 + excursion sin(2 pi t / spacing + phase)
  broadband_burst,     // blob spanning a large part of the band
  modulated_band,      // band gated by Gaussian pulses at t0 + k spacing
  chopped_line,        // line with raised-cosine amplitude of period `spacing`
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

/// Parameter ranges for one component. Which fields matter depends on the kind.
struct ComponentSpec {
  ComponentKind kind = ComponentKind::blob;
  Range time_center{0.0, 0.0};  // s, relative to the glitch center
  Range duration{0.0, 0.0};     // s: time sigma of blobs and pulses
  Range extent{0.0, 0.0};       // s: half-length of lines, tracks and bands
  Range center_freq;            // u
  Range bandwidth;              // frequency sigma in u
  Range intensity;
  Range repetitions{1.0, 1.0};  // integer, inclusive
  Range spacing{0.0, 0.0};      // s: blob spacing or period
  Range excursion{0.0, 0.0};    // u: arch height or wander amplitude
  Range slope{0.0, 0.0};        // u per second
};

struct GlitchClassSpec {
  std::string name;
  DurationCategory category = DurationCategory::short_duration;
  std::vector<ComponentSpec> components;
  double noise_level = 0.05;  // uniform background floor, fraction of peak
};

/// The fixed 20-class catalog. Indices are the class labels.
const std::vector<GlitchClassSpec>& glitch_catalog();

/// Concrete parameters drawn from a ComponentSpec.
struct ComponentDraw {
  ComponentKind kind = ComponentKind::blob;
  double time_center = 0, duration = 0, extent = 0, center_freq = 0, bandwidth = 0, intensity = 0;
  int repetitions = 1;
  double spacing = 0, excursion = 0, slope = 0, phase = 0;
};

std::vector<ComponentDraw> draw_glitch(const GlitchClassSpec& spec, Rng& rng);

/// Pixel layout of a view. The 4 s canvas is 8 view-widths wide so the
/// 0.5 s view is a 1:1 crop and wider views are 2×, 4×, 8× box averages.
struct ViewGeometry {
  std::size_t rows = 47;
  std::size_t cols = 57;

  friend bool operator==(const ViewGeometry&, const ViewGeometry&) = default;
};

inline constexpr double kCanvasSeconds = 4.0;
inline constexpr std::size_t kCanvasWidthInViews = 8;

/// Noise-free glitch energy over t in [-2, 2) s. Row 0 is the highest frequency.
struct Canvas {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> pixels;  // row-major, unclipped

  float at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  double column_time(std::size_t c) const {
    return -kCanvasSeconds / 2 + (static_cast<double>(c) + 0.5) * kCanvasSeconds / static_cast<double>(cols);
  }
};

Canvas render_canvas(const std::vector<ComponentDraw>& glitch, const ViewGeometry& geometry = {});

/// Window of kViewDurations[view] seconds around the center, box-resampled to
/// 1×rows×cols. No noise and no clipping.
BasicTensor<float> extract_view(const Canvas& canvas, std::size_t view, const ViewGeometry& geometry = {});

/// Full pipeline for one sample: draw, render, window, add noise, clip to [0, 1].
MultiViewSample render_sample(const GlitchClassSpec& spec, std::size_t label, std::uint64_t seed,
                              const ViewGeometry& geometry = {});

enum class Split : std::uint8_t { train, validation, test };

std::string to_string(Split s);
Split parse_split(std::string_view text);

struct ClassInfo {
  std::string name;
  DurationCategory category = DurationCategory::short_duration;

  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

/// Labeled samples with a train/validation/test assignment per sample.
struct Corpus {
  std::vector<ClassInfo> classes;
  std::vector<MultiViewSample> samples;
  std::vector<Split> splits;
  std::uint64_t seed = 0;
  ViewGeometry geometry;

  std::size_t class_count() const noexcept { return classes.size(); }
  std::vector<std::size_t> indices(Split s) const;
  std::vector<std::string> class_names() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline constexpr std::size_t kMinimumPerClass = 8;
inline constexpr std::size_t kDeskPerClass = 40;
inline constexpr std::size_t kPaperPerClass = 386;  // 20 * 386 = 7720, nearest uniform count to 7730
inline constexpr std::size_t kPaperCorpusSize = 7730;

/// Per-class split sizes: round(0.75 n) train, round(0.125 n) validation,
/// remainder test.
struct SplitCounts {
  std::size_t train, validation, test;
};
SplitCounts split_counts(std::size_t per_class);

/// `per_class` samples of every catalog class, stratified 75/12.5/12.5.
/// Sample (class c, index i) is seeded by derive_seed(seed, {c, i}).
Corpus generate_corpus(std::size_t per_class, std::uint64_t seed, const ViewGeometry& geometry = {});

}  // namespace mvg
