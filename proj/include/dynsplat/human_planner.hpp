#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dynsplat/grid_search.hpp"
#include "dynsplat/human.hpp"

namespace dynsplat
{

enum class Interaction
{
    Crossing,
    Parallel
};

std::string to_string(Interaction i);
Interaction interaction_from_string(const std::string& s);

struct EndpointPair
{
    Vec2d start;
    Vec2d goal;
    Interaction interaction = Interaction::Crossing;
};

struct InteractionRules
{
    double parallel_max_angle = 15.0 * kPi / 180.0; // rad, undirected
    double parallel_min_offset = 0.5;               // m
    double parallel_max_offset = 2.0;               // m
    double min_human_path = 2.0;                    // m, shortest accepted human segment
    int max_draws = 10000;
};

/// Proper (strict) intersection of segments [a0,a1] and [b0,b1].
bool segments_cross(const Vec2d& a0, const Vec2d& a1, const Vec2d& b0, const Vec2d& b1);

/// Human segment within the angular band of the robot line, both endpoints offset to the same side.
bool is_parallel(const Vec2d& robot_start, const Vec2d& robot_goal, const Vec2d& start, const Vec2d& goal,
                 const InteractionRules& rules);

bool satisfies_interaction(const Vec2d& robot_start, const Vec2d& robot_goal, const EndpointPair& pair,
                           const InteractionRules& rules);

/// Rejection-sample human endpoints among free cells. When `kind` is empty the interaction is
/// drawn uniformly. Throws SamplingError after `rules.max_draws` failures.
EndpointPair sample_interaction_endpoints(const Vec2d& robot_start, const Vec2d& robot_goal,
                                          const OccupancyGrid2D& grid, std::uint64_t seed,
                                          std::optional<Interaction> kind = std::nullopt,
                                          const InteractionRules& rules = {});

struct SmoothingOptions
{
    double frame_dt = 0.1;         // s, trajectory sample period
    double waypoint_spacing = 0.5; // m
    int iterations = 200;
    double barrier_radius = 0.3;   // m, clearance below this from the blocked region is penalized
    double barrier_weight = 10.0;
};

/// Interpolating cubic spline through `points` (chord-length knots) with end slopes along
/// the first and last chords.
class ClampedCubicSpline
{
public:
    explicit ClampedCubicSpline(const Polyline2d& points);

    double length() const { return knots_.back(); }
    Vec2d operator()(double s) const;

    /// Samples every `step` of the parameter (plus the final knot).
    Polyline2d sample(double step) const;

private:
    std::vector<double> knots_;
    Polyline2d values_;
    Polyline2d second_; // second derivatives at knots
};

/// Drop seed vertices closer than `spacing` to the previously kept one; endpoints are kept.
Polyline2d downsample_waypoints(const Polyline2d& seed, double spacing);

/// Smooth a seed path into a constant-speed trajectory that stays in free space.
/// Falls back to the seed polyline (flagged) when the smoothed curve collides.
HumanTrajectory smooth_spline(const Polyline2d& seed, const OccupancyGrid2D& grid, double speed,
                              const SmoothingOptions& options = {});

/// True when every point along the polyline (checked at <= resolution/2 spacing) is free.
bool polyline_free(const OccupancyGrid2D& grid, const Polyline2d& line);

} // namespace dynsplat
