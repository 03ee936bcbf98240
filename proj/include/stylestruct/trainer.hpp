#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stylestruct/config.hpp"
#include "stylestruct/dataset.hpp"
#include "stylestruct/model.hpp"

namespace stylestruct {

// ---- single iterations -------------------------------------------------
// Each step takes its batch and noise explicitly and updates the model in
// place with the learning rates held in each network's AdamState.

struct StructureStep {
    double d_loss = 0;
    double g_loss = 0;
};

/// D on real vs detached generated normals, then G through the updated D.
StructureStep structure_step(Model& m, const Tensor<float>& real_normals, const Tensor<float>& z);

struct StyleInputs {
    Tensor<float> real_normals;              // [H,3,S,S] paired with real_images
    Tensor<float> real_images;               // [H,3,S,S]
    std::vector<std::int32_t> real_labels;   // [H,S,S], used when fine-tuning the FCN
    Tensor<float> cond_normals;              // [H,3,S,S] conditions of the generated half
    std::vector<std::int32_t> cond_labels;   // [H,S,S]
    Tensor<float> z;                         // [H,100]
};

struct StyleOptions {
    double fcn_weight = 1.0;
    bool finetune_fcn = false;  // false: FCN frozen in eval mode
};

struct StyleStep {
    double d_loss = 0;
    double g_adv = 0;
    double g_fcn = 0;
    double g_loss = 0;
    double fcn_loss = 0;  // only when fine-tuning
};

StyleStep style_step(Model& m, const StyleInputs& in, const StyleOptions& opt);

/// One FCN update on labelled images; returns the loss.
double fcn_step(Model& m, const Tensor<float>& images, const std::vector<std::int32_t>& labels);

struct JointObjective {
    Tensor<float> structure_term;  // adversarial loss of the structure generator
    Tensor<float> style_term;      // style generator loss on the upsampled structure output
    Tensor<float> total;           // structure_term + lambda * style_term
};

/// Structure generator objective during joint learning. `generated` is the
/// structure generator output still attached to its graph. The style
/// networks must be frozen by the caller.
JointObjective joint_structure_objective(Model& m, const Tensor<float>& generated, const Tensor<float>& z_tilde,
                                         double lambda);

struct JointInputs {
    Tensor<float> real_structure;  // [H,3,s,s]
    Tensor<float> real_normals;    // [H,3,S,S]
    Tensor<float> real_images;     // [H,3,S,S]
    Tensor<float> z_hat;           // [H,100] structure noise
    Tensor<float> z_tilde;         // [H,100] style noise
};

struct JointStep {
    double structure_d = 0;
    double style_d = 0;
    double style_g = 0;
    double structure_g = 0;      // total objective
    double structure_g_adv = 0;  // its adversarial term
    double style_chain = 0;      // its style term
};

/// Structure D, style D, style G, then structure G through the upsample.
JointStep joint_step(Model& m, const JointInputs& in, double lambda);

// ---- metrics -----------------------------------------------------------

/// 1-based argmax labels of [N,40,H,W] logits.
std::vector<std::int32_t> argmax_labels(const Tensor<float>& logits);

/// Fraction of pixels whose eval-mode FCN prediction equals the label.
double fcn_pixel_accuracy(Model& m, const SceneDataset& ds, Index batch);

/// Mean angle in degrees between predicted centroids and the [N,3,H,W]
/// reference normals.
double label_angular_error(const std::vector<std::int32_t>& labels, const NormalCodebook& cb,
                           const Tensor<float>& normals);

/// Mean |norm - 1| over the pixels of a [N,3,H,W] normal map.
double normal_norm_deviation(const Tensor<float>& normals);

/// Fraction of real scores above 0.5 and generated scores below 0.5.
double discriminator_accuracy(const Tensor<float>& real_scores, const Tensor<float>& fake_scores);

// ---- phases ------------------------------------------------------------

enum class Phase { Fcn, Structure, Style, Joint };

const char* phase_name(Phase p);
Phase parse_phase(const std::string& text);

struct LossRow {
    std::uint64_t iteration = 0;
    std::string phase;
    std::string name;
    double value = 0;
};

struct PhaseReport {
    Phase phase = Phase::Fcn;
    std::uint64_t start_iteration = 0;
    std::uint64_t end_iteration = 0;
    std::uint64_t total_iterations = 0;
    bool complete = false;
    bool early_stopped = false;
    double test_accuracy = -1;  // FCN phase only
    std::string checkpoint;
    std::vector<LossRow> rows;
};

/// Requests a checkpointed stop at the next iteration boundary.
void request_stop();
void clear_stop();
bool stop_requested();

/// Runs training phases under one configuration and output directory.
///
/// Layout: <out>/checkpoints/<phase>.ckpt, <out>/losses_<phase>.csv,
/// <out>/codebook.txt. A phase resumes from its own checkpoint when that is
/// incomplete. Prerequisites: style needs a complete fcn checkpoint, joint
/// needs complete structure and style checkpoints.
class Trainer {
public:
    explicit Trainer(TrainConfig cfg);

    PhaseReport run(Phase p);

    /// Caps the iterations executed by the next run() calls; 0 removes the cap.
    void set_iteration_budget(std::uint64_t n) { budget_ = n; }

    const TrainConfig& config() const { return cfg_; }
    Model& model() { return model_; }
    std::uint64_t total_iterations(Phase p);
    std::string checkpoint_path(Phase p) const;
    std::string csv_path(Phase p) const;

    const SceneDataset& train_data();
    const SceneDataset& test_data();

private:
    void prepare(Phase p);
    void load_prerequisite(Phase needed, const std::vector<NetworkKind>& nets);
    void save_checkpoint(Phase p, std::uint64_t iteration, std::uint64_t total, bool complete);
    std::uint64_t resume_point(Phase p, std::uint64_t total);
    void open_csv(Phase p, std::uint64_t start);
    void log(PhaseReport& r, std::uint64_t it, const std::string& phase, const std::string& name, double v);
    void guard(Phase p, std::uint64_t it, double loss);
    void ensure_labels(SceneDataset& ds);

    TrainConfig cfg_;
    Model model_;
    std::unique_ptr<SceneDataset> train_;
    std::unique_ptr<SceneDataset> test_;
    std::ofstream csv_;
    std::uint64_t budget_ = 0;
    std::uint64_t divergence_run_ = 0;
};

}  // namespace stylestruct
