#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irsr/core/image.hpp"

namespace irsr::synth {

enum class ShapeKind { Disk, Rectangle, Triangle, Ring };
enum class TextureKind { Flat, Gradient, Stripes, Checker };

const char* shape_kind_name(ShapeKind k);
ShapeKind shape_kind_from_name(const std::string& name);

struct SceneSpec {
    int width = 64;
    int height = 64;
    int num_instances = 5;  // in [1, 16]
    std::vector<ShapeKind> shape_palette = {ShapeKind::Disk, ShapeKind::Rectangle, ShapeKind::Triangle,
                                            ShapeKind::Ring};
    std::vector<TextureKind> texture_kinds = {TextureKind::Flat, TextureKind::Gradient, TextureKind::Stripes,
                                              TextureKind::Checker};
    uint64_t seed = 0;
};

struct InstanceInfo {
    int32_t id = 0;         // contiguous, 1-based; 0 is background and never listed
    ShapeKind category = ShapeKind::Disk;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel bbox
    int64_t area = 0;       // visible pixels
};

struct SceneSample {
    Image image;            // H x W x 3 in [0,1]
    IdMask mask;            // H x W instance ids, 0 = background
    std::vector<InstanceInfo> instances;
};

// Deterministic multi-instance scene synthesis. Shapes are drawn back to
// front (later shapes occlude earlier ones); fully occluded shapes are
// removed and the surviving IDs re-compacted to 1..N in draw order.
SceneSample generate_scene(const SceneSpec& spec, int patch_size = 4);

// Paired-file dataset layout: {name}_img.png, {name}_mask.png (RGB-coded)
// and {name}_meta.txt listing the instances.
void save_scene(const std::string& dir, const std::string& name, const SceneSample& sample);
SceneSample load_scene(const std::string& dir, const std::string& name);

}  // namespace irsr::synth
