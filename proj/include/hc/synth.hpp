#pragma once

#include <string>
#include <vector>

#include "hc/coarse_model.hpp"
#include "hc/rng.hpp"
#include "hc/tensor.hpp"

namespace hc {

// 7-joint upper-body skeleton. Flip swaps the left/right pairs.
enum Joint : int {
    kHead = 0,
    kLShoulder = 1,
    kRShoulder = 2,
    kLElbow = 3,
    kRElbow = 4,
    kLWrist = 5,
    kRWrist = 6,
    kJointCount = 7
};

const char* joint_name(int j);

struct SampleSpec {
    int h = 64, w = 64;
    int joints = kJointCount;
    double distractor_prob = 0.0;  // second unannotated figure, for the torso prior
    int clutter_min = 3, clutter_max = 8;
};

struct AnnotatedSample {
    Tensor<float> image;  // [3, H, W], values in [0, 1]
    std::vector<Pt> joints;
    std::vector<std::uint8_t> valid;
    Pt torso;
    float person_scale = 1.f;

    JointSet joint_set() const { return JointSet{joints, valid}; }
};

// Skeleton geometry in pixels; rendering and annotation share these points.
struct FigureGeom {
    std::vector<Pt> joints;  // kJointCount entries
    Pt neck, pelvis, torso;
    double unit = 1.0;
};

FigureGeom sample_figure(Rng& rng, const SampleSpec& spec, double center_x_frac);
void render_figure(Tensor<float>& img, const FigureGeom& fig);

AnnotatedSample generate_sample(Rng& rng, const SampleSpec& spec);

// Paper-protocol augmentation: rotate in [-20, +20] degrees, scale in
// [0.5, 1.5], flip with probability 0.5. Image is resampled bilinearly about
// the center; joints get the same affine; a flip swaps left/right labels;
// joints pushed out of bounds become invalid.
AnnotatedSample augment(const AnnotatedSample& s, Rng& rng);

struct AffineDraw {
    double rot_deg = 0, scale = 1;
    bool flip = false;
};
AnnotatedSample augment_with(const AnnotatedSample& s, const AffineDraw& d);

struct Dataset {
    SampleSpec spec;
    std::vector<AnnotatedSample> samples;
};

Dataset make_dataset(std::uint64_t seed, int count, const SampleSpec& spec);

// Binary container: header + per-sample records, little-endian floats.
// image_format 0 stores raw float32 (exact round-trip), 1 stores 8-bit.
void save_dataset(const Dataset& ds, const std::string& path, int image_format = 0);
Dataset load_dataset(const std::string& path);

}  // namespace hc
