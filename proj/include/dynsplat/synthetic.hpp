#pragma once

#include <cstdint>

#include "dynsplat/splat.hpp"

namespace dynsplat
{

/// Square room of randomly placed, randomly yawed boxes over a thin floor, plus faint floaters
/// that opacity filtering is expected to drop.
struct SyntheticSceneOptions
{
    double size = 12.0; // m, side of the square floor starting at the origin
    int boxes = 20;
    double footprint_min = 0.4;
    double footprint_max = 1.4;
    double height_min = 0.6;
    double height_max = 1.5;
    double lattice = 0.15; // m between box Gaussians
    double sigma = 0.09;
    double box_opacity = 0.9;
    double floor_spacing = 0.25;
    double floor_opacity = 0.3;
    int floaters = 200;
    double floater_opacity = 0.15;
};

SplatScene make_synthetic_scene(std::uint64_t seed, const SyntheticSceneOptions& options = {});

} // namespace dynsplat
