#pragma once
// Health-state classifier over vibration windows: fresh training (DNN-R),
// transfer from another sensor's model (DNN-TL), and evaluation.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/artifact.hpp"
#include "pdm/dense.hpp"
#include "pdm/features.hpp"

namespace pdm::classifier {

using features::LabeledWindow;

enum class ClassSet { ThreeClass, Binary };
enum class Provenance { TrainedFresh, Transferred };

std::string to_string(ClassSet c);
std::string to_string(Provenance p);
std::size_t class_count(ClassSet c);
/// "Normal", "NearFailure", "Failure" or "Normal", "NotNormal".
std::vector<std::string> class_names(ClassSet c);
/// Class index of a health label under the given class set.
std::size_t class_index(Health label, ClassSet c);

/// Hidden layer widths plus the training knobs the tuning ladder moves.
struct Preset {
    std::string name;
    std::vector<std::size_t> hidden{50, 50};
    int epochs = 50;
    int batch_size = 50;
    features::AxisSet axes = features::kAllAxes;
    bool normalize = true;
};

/// The tuning ladder in order: none, feature-selection, normalization,
/// neurons, layers, epochs, batch. Each step keeps the previous ones.
const std::vector<Preset>& preset_ladder();
/// Looks up a ladder step by name; "baseline" is the normalization step.
Preset preset(std::string_view name);

struct Prediction {
    std::size_t cls = 0;
    Vector probabilities;
};

struct DefectClassifier {
    DenseNetwork network;
    features::FeatureEncoder encoder;
    ClassSet classes = ClassSet::ThreeClass;
    Provenance provenance = Provenance::TrainedFresh;

    void validate() const;
    /// Ties in the probability vector go to the lowest class index.
    Prediction predict(std::span<const double> window) const;
    std::vector<std::size_t> predict_classes(std::span<const LabeledWindow> windows) const;

    ModelArtifact to_artifact() const;
    static DefectClassifier from_artifact(const ModelArtifact& art);

    friend bool operator==(const DefectClassifier&, const DefectClassifier&) = default;
};

/// argmax with ties to the lowest index.
std::size_t argmax(std::span<const double> v);

struct Split {
    std::vector<LabeledWindow> train;
    std::vector<LabeledWindow> test;
};

/// Seeded shuffle, then the first floor(n * train_fraction) windows train.
Split split_windows(std::span<const LabeledWindow> windows, double train_fraction, std::uint64_t seed);

/// Fits the encoder (or an identity one when !normalize) on `train`, then
/// trains a softmax network with cross-entropy. Throws InvalidInput when
/// fewer than two classes are present.
DefectClassifier train_dnn_r(std::span<const LabeledWindow> train, const TrainConfig& cfg,
                             const std::vector<std::size_t>& hidden, ClassSet classes = ClassSet::ThreeClass,
                             bool normalize = true);

/// Brings target windows to the source encoder's layout: selects its axes and
/// decimates longer windows by an integer factor. Throws InvalidInput naming
/// both dimensionalities when that is impossible.
std::vector<LabeledWindow> reconcile(const features::FeatureEncoder& source, std::span<const LabeledWindow> target);

/// Copies the source network and encoder; with fine_tune, continues training
/// on the reconciled target windows. The source is never modified.
DefectClassifier transfer(const DefectClassifier& source, std::span<const LabeledWindow> target,
                          const std::optional<TrainConfig>& fine_tune);

/// Learning rate used for fine-tuning when none is given: a tenth of fresh training's.
TrainConfig fine_tune_config(const TrainConfig& fresh);

struct ConfusionMatrix {
    ClassSet classes = ClassSet::ThreeClass;
    std::vector<std::vector<std::size_t>> counts;  // [true][predicted]
    std::vector<std::vector<double>> rates;        // rows normalized; zero rows stay zero
    double accuracy = 0.0;
    std::size_t total = 0;

    /// Rows labeled with class names, columns predicted classes, as in a published table.
    std::string to_table() const;
};

/// Counts (true, predicted) pairs. Both spans hold class indices < class_count.
ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, ClassSet classes);

/// Confusion of the classifier on `test` (reconciled to its encoder layout first).
ConfusionMatrix confusion(const DefectClassifier& c, std::span<const LabeledWindow> test);

/// NearFailure and Failure become NotNormal.
std::vector<LabeledWindow> binarize(std::span<const LabeledWindow> windows);

struct GridOptions {
    std::vector<std::size_t> hidden{50, 50};
    TrainConfig train;
    ClassSet classes = ClassSet::ThreeClass;
    bool normalize = true;
    double train_fraction = 0.7;
    bool include_augmented = false;
    std::size_t interpolants_per_rpm = 0;
    std::uint64_t seed = 0;
};

struct RpmGrid {
    std::vector<int> rpms;
    std::vector<std::vector<double>> accuracy;  // [train rpm][test rpm]
    std::vector<double> row_average;
    std::optional<std::vector<double>> augmented;  // per test rpm
    std::optional<double> augmented_average;

    /// Average over every single-rpm cell.
    double grid_average() const;
    std::string to_table() const;
};

/// One model per training rpm, evaluated on every rpm's held-out split; the
/// optional augmented row trains on all training splits plus interpolants.
/// Rows train in parallel.
RpmGrid rpm_generalization_grid(const std::map<int, std::vector<LabeledWindow>>& by_rpm, const GridOptions& opt);

}  // namespace pdm::classifier
