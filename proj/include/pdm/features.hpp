#pragma once
// Windowing of raw vibration recordings, the shareable feature encoder, and
// within-RPM interpolation augmentation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/artifact.hpp"
#include "pdm/matrix.hpp"
#include "pdm/vibration.hpp"
#include "pdm/window.hpp"

namespace pdm::features {

/// Axes in feature order: X, then Z, then Y.
using AxisSet = std::vector<Axis>;

/// Sorts into feature order and drops duplicates; empty sets are rejected.
AxisSet make_axis_set(std::vector<Axis> axes);
/// "XZ", "XZY", ...
std::string to_string(const AxisSet& axes);
/// Accepts letters in any order and case, e.g. "xz", "XYZ".
AxisSet parse_axis_set(std::string_view text);

inline const AxisSet kAllAxes{Axis::X, Axis::Z, Axis::Y};
inline const AxisSet kXZ{Axis::X, Axis::Z};

/// Per-axis sample window lengths used when none is given.
inline constexpr std::size_t kPiezoWindow = 320;
inline constexpr std::size_t kMemsWindow = 10;
std::size_t default_window(SensorKind kind);

struct LabeledWindow {
    Vector features;  // window_len samples per axis, axis blocks in `axes` order
    int rpm = 0;
    Health label = Health::Normal;
    SensorKind sensor_kind = SensorKind::Mems;
    AxisSet axes;

    std::size_t window_len() const { return axes.empty() ? 0 : features.size() / axes.size(); }
    friend bool operator==(const LabeledWindow&, const LabeledWindow&) = default;
};

/// Windows of `spec.window_len` samples every `spec.stride` samples (stride ==
/// window_len gives non-overlapping windows). `axis_samples` holds one array
/// per axis, already in feature order; each vector is the concatenation of
/// the axes' windows.
std::vector<Vector> window_signal(std::span<const std::span<const double>> axis_samples, const WindowSpec& spec);

/// window_signal over a recording's selected axes, tagged with its metadata.
std::vector<LabeledWindow> window_recording(const RawRecording& rec, const WindowSpec& spec, const AxisSet& axes);

/// All recordings, windows concatenated in recording order.
std::vector<LabeledWindow> window_recordings(std::span<const RawRecording> recs, const WindowSpec& spec,
                                             const AxisSet& axes);

/// Keeps only `axes` (which must all be present) in every window.
std::vector<LabeledWindow> select_axes(std::span<const LabeledWindow> windows, const AxisSet& axes);

/// Keeps every factor-th sample of each axis block, so a window of length
/// factor * L becomes one of length L.
LabeledWindow decimate(const LabeledWindow& w, std::size_t factor);
std::vector<LabeledWindow> decimate_to(std::span<const LabeledWindow> windows, std::size_t window_len);

Matrix feature_matrix(std::span<const LabeledWindow> windows);

/// Per-feature z-score constants of a training set (population std).
struct FeatureEncoder {
    static constexpr int kFormatVersion = 1;

    Vector mean;
    Vector stddev;
    AxisSet axes;
    std::size_t window_len = 0;

    std::size_t dim() const { return mean.size(); }
    Vector apply(std::span<const double> x) const;
    Matrix apply(const Matrix& x) const;
    Vector invert(std::span<const double> z) const;

    /// mean 0, std 1: encoding is the identity.
    static FeatureEncoder identity(const AxisSet& axes, std::size_t window_len);

    ModelArtifact to_artifact() const;
    static FeatureEncoder from_artifact(const ModelArtifact& art);
    /// Writes the encoder's fields as "encoder.*" metadata and arrays into `art`.
    void store(ModelArtifact& art) const;
    static FeatureEncoder load(const ModelArtifact& art);

    friend bool operator==(const FeatureEncoder&, const FeatureEncoder&) = default;
};

/// Throws DegenerateData naming the first zero-variance feature.
FeatureEncoder fit_encoder(std::span<const LabeledWindow> windows);
FeatureEncoder fit_encoder(const Matrix& x, const AxisSet& axes, std::size_t window_len);

std::vector<LabeledWindow> apply_encoder(const FeatureEncoder& enc, std::span<const LabeledWindow> windows);

struct Interpolant {
    std::size_t parent_a = 0;  // indices into the input set
    std::size_t parent_b = 0;
    double lambda = 0.0;       // generated = lambda * a + (1 - lambda) * b
};

struct AugmentResult {
    std::vector<LabeledWindow> windows;  // the inputs, then the interpolants
    std::vector<Interpolant> parents;    // one per interpolant, same order
    std::vector<std::string> warnings;
};

/// For every rpm present, draws `per_rpm` interpolants. Each picks a window
/// uniformly among those whose label has at least two windows at that rpm,
/// a distinct partner of the same rpm and label, and lambda in (0, 1).
/// Labels with a single window at an rpm are skipped with a warning; an rpm
/// with no eligible label contributes nothing.
AugmentResult augment(std::span<const LabeledWindow> windows, std::size_t per_rpm, std::uint64_t seed);

/// Header feature_0..feature_{k-1},rpm,label,sensor_kind,axes; one window per row.
std::string windows_to_csv(std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> windows_from_csv(const std::filesystem::path& path);

}  // namespace pdm::features
