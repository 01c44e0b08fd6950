#include "dynsplat/scenario.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace dynsplat
{

namespace
{

// Human endpoints keep this far from the robot's start and goal so that nobody spawns on,
// or parks on, the robot's endpoints.
constexpr double kHumanEndpointClearance = 1.5;
constexpr int kEpisodeAttempts = 1000;
constexpr int kHumanAttempts = 200;

nlohmann::json vec_json(const Vec2d& v) { return {v.x(), v.y()}; }

Vec2d vec_from(const nlohmann::json& j, const char* what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(std::string(what) + " must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Pose2d pose_from(const nlohmann::json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw ConfigError(std::string(what) + " must be [x, y, heading]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what)
{
    if (!j.is_object())
        throw ConfigError(std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items())
    {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || key == a;
        if (!ok)
            throw ConfigError(std::string("unknown key '") + key + "' in " + what);
    }
}

bool reachable(const OccupancyGrid2D& grid, const Vec2d& from, const Vec2d& to)
{
    const auto a = grid.cell_of(from);
    const auto b = grid.cell_of(to);
    if (!a || !b || !grid.cell_free(a->x(), a->y()) || !grid.cell_free(b->x(), b->y()))
        return false;
    const auto field = distance_field(grid, *b);
    return field[grid.index(a->x(), a->y())] < kUnreachable;
}

std::string episode_id(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ep%04d", i);
    return buf;
}

} // namespace

SceneMaps build_scene_maps(const VoxelGrid& voxels, double ground_z, const Config& config)
{
    SceneMaps maps;
    maps.ground_z = ground_z;
    const double z0 = ground_z + config.scene.ground_band;
    maps.robot = inflate(project_occupancy(voxels, z0, ground_z + config.robot.height, MapKind::RobotNavigable),
                         config.robot.radius);
    maps.human = inflate(project_occupancy(voxels, z0, ground_z + config.human.height, MapKind::HumanWalkable),
                         config.human.radius);
    return maps;
}

SceneMaps build_scene_maps(const SplatScene& scene, const Config& config)
{
    const auto voxels = voxelize(scene, config.scene.resolution, config.scene.opacity_threshold);
    return build_scene_maps(voxels, scene.ground_z, config);
}

nlohmann::json to_json(const EpisodeConfig& ep)
{
    nlohmann::json humans = nlohmann::json::array();
    for (const auto& h : ep.humans)
        humans.push_back({{"interaction", to_string(h.interaction)},
                          {"start", vec_json(h.start)},
                          {"goal", vec_json(h.goal)},
                          {"speed", h.speed}});
    return {{"scene", ep.scene},
            {"seed", ep.seed},
            {"start", {ep.start.x, ep.start.y, ep.start.theta}},
            {"goal", vec_json(ep.goal)},
            {"humans", humans},
            {"control_dt", ep.control_dt},
            {"time_limit", ep.time_limit},
            {"goal_tolerance", ep.goal_tolerance}};
}

EpisodeConfig episode_from_json(const nlohmann::json& j)
{
    check_keys(j, {"scene", "seed", "start", "goal", "humans", "control_dt", "time_limit", "goal_tolerance"},
               "episode");
    if (!j.contains("start") || !j.contains("goal"))
        throw ConfigError("episode needs start and goal");
    EpisodeConfig ep;
    try
    {
        ep.scene = j.value("scene", std::string());
        ep.seed = j.value("seed", std::uint64_t{0});
        ep.control_dt = j.value("control_dt", ep.control_dt);
        ep.time_limit = j.value("time_limit", ep.time_limit);
        ep.goal_tolerance = j.value("goal_tolerance", ep.goal_tolerance);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("episode: ") + e.what());
    }
    ep.start = pose_from(j.at("start"), "episode.start");
    ep.goal = vec_from(j.at("goal"), "episode.goal");
    if (j.contains("humans"))
    {
        if (!j.at("humans").is_array())
            throw ConfigError("episode.humans must be an array");
        for (const auto& h : j.at("humans"))
        {
            check_keys(h, {"interaction", "start", "goal", "speed"}, "episode.humans[]");
            HumanSpec spec;
            try
            {
                spec.interaction = interaction_from_string(h.value("interaction", std::string("crossing")));
                spec.speed = h.value("speed", spec.speed);
            }
            catch (const nlohmann::json::exception& e)
            {
                throw ConfigError(std::string("episode.humans: ") + e.what());
            }
            catch (const Error& e)
            {
                throw ConfigError(e.what());
            }
            spec.start = vec_from(h.at("start"), "human start");
            spec.goal = vec_from(h.at("goal"), "human goal");
            if (!(spec.speed > 0.0))
                throw ConfigError("human speed must be positive");
            ep.humans.push_back(spec);
        }
    }
    if (ep.humans.size() > 2)
        throw ConfigError("an episode has at most two humans");
    if (!(ep.control_dt > 0.0) || !(ep.time_limit > 0.0) || !(ep.goal_tolerance > 0.0))
        throw ConfigError("control_dt, time_limit and goal_tolerance must be positive");
    return ep;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::pair<Pose2d, Vec2d> sample_robot_endpoints(const OccupancyGrid2D& grid, double min_dist, std::mt19937_64& rng,
                                                int max_draws, double start_clearance)
{
    std::vector<std::size_t> free_cells;
    for (std::size_t idx = 0; idx < grid.size(); ++idx)
        if (!grid.inflated[idx])
            free_cells.push_back(idx);
    if (free_cells.empty())
        throw SamplingError("sample_robot_endpoints: no free space");
    std::vector<double> clearance;
    if (start_clearance > 0.0)
        clearance = clearance_field(grid);
    std::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);
    const auto center = [&](std::size_t idx) {
        return grid.cell_center(static_cast<int>(idx % grid.width()), static_cast<int>(idx / grid.width()));
    };
    for (int draw = 0; draw < max_draws; ++draw)
    {
        const std::size_t si = free_cells[pick(rng)];
        const Vec2d s = center(si);
        const Vec2d g = center(free_cells[pick(rng)]);
        const Vec2d d = g - s;
        if (d.norm() >= min_dist && (clearance.empty() || clearance[si] >= start_clearance))
            return {Pose2d{s.x(), s.y(), std::atan2(d.y(), d.x())}, g};
    }
    throw SamplingError("sample_robot_endpoints: exhausted " + std::to_string(max_draws) + " draws");
}

double turning_clearance(const Config& config)
{
    return config.robot.v_max / (3.0 * config.robot.w_max) + config.scene.resolution;
}

EpisodeConfig sample_episode(const SceneMaps& maps, const Config& config, const std::string& scene,
                             std::uint64_t seed)
{
    EpisodeConfig ep;
    ep.scene = scene;
    ep.seed = seed;
    ep.control_dt = config.dataset.control_dt;
    ep.time_limit = config.dataset.time_limit;
    ep.goal_tolerance = config.dataset.goal_tolerance;

    std::mt19937_64 rng(derive_seed(seed, 0));
    bool found = false;
    for (int attempt = 0; attempt < kEpisodeAttempts && !found; ++attempt)
    {
        const auto [start, goal] = sample_robot_endpoints(maps.robot, config.dataset.min_endpoint_distance, rng, 10000,
                                                         turning_clearance(config));
        if (!reachable(maps.robot, start.position(), goal))
            continue;
        ep.start = start;
        ep.goal = goal;
        found = true;
    }
    if (!found)
        throw SamplingError("sample_episode: no connected robot start/goal pair");

    InteractionRules rules;
    rules.parallel_max_angle = config.human.parallel_max_angle_deg * kPi / 180.0;
    rules.parallel_min_offset = config.human.parallel_min_offset;
    rules.parallel_max_offset = config.human.parallel_max_offset;
    rules.min_human_path = config.human.min_path_length;
    std::optional<Interaction> kind;
    if (config.human.interaction != "mixed")
        kind = interaction_from_string(config.human.interaction);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int h = 0; h < config.human.count; ++h)
    {
        HumanSpec spec;
        bool ok = false;
        for (int attempt = 0; attempt < kHumanAttempts && !ok; ++attempt)
        {
            const auto pair = sample_interaction_endpoints(ep.start.position(), ep.goal, maps.human,
                                                           derive_seed(seed, 1000 + 1000 * h + attempt), kind, rules);
            const auto far_from_robot = [&](const Vec2d& p) {
                return (p - ep.start.position()).norm() >= kHumanEndpointClearance &&
                       (p - ep.goal).norm() >= kHumanEndpointClearance;
            };
            if (!far_from_robot(pair.start) || !far_from_robot(pair.goal))
                continue;
            if (!reachable(maps.human, pair.start, pair.goal))
                continue;
            spec.interaction = pair.interaction;
            spec.start = pair.start;
            spec.goal = pair.goal;
            ok = true;
        }
        if (!ok)
            throw SamplingError("sample_episode: no valid human endpoints");
        const bool run = unit(rng) < config.human.run_probability;
        const double lo = run ? config.human.run_speed_min : config.human.walk_speed_min;
        const double hi = run ? config.human.run_speed_max : config.human.walk_speed_max;
        spec.speed = lo + (hi - lo) * unit(rng);
        ep.humans.push_back(spec);
    }
    return ep;
}

std::vector<HumanTrajectory> plan_human_trajectories(const EpisodeConfig& ep, const SceneMaps& maps,
                                                     const Config& config)
{
    SmoothingOptions opts;
    opts.frame_dt = ep.control_dt;
    opts.waypoint_spacing = config.human.waypoint_spacing;
    opts.iterations = config.human.smoothing_iterations;
    std::vector<HumanTrajectory> out;
    for (const auto& h : ep.humans)
    {
        const auto seed_path = astar_2d(maps.human, h.start, h.goal);
        out.push_back(smooth_spline(seed_path.points, maps.human, h.speed, opts));
    }
    return out;
}

std::vector<HumanActor> make_actors(const HumanModel& model, const std::vector<HumanTrajectory>& trajectories,
                                    double frame_dt)
{
    std::vector<HumanActor> actors;
    actors.reserve(trajectories.size());
    for (const auto& t : trajectories)
        actors.emplace_back(model, t, frame_dt);
    return actors;
}

HumanModel load_or_make_human_model(const Config& config)
{
    if (!config.human.model_path.empty())
        return load_human_model(config.human.model_path, config.human.height, config.human.radius);
    return make_human_model(config.human.height, config.human.radius, config.human.primitive_count,
                            config.human.model_seed);
}

ExpertConfig expert_config_for(const Config& config, const EpisodeConfig& ep)
{
    ExpertConfig e = config.expert();
    e.control_dt = ep.control_dt;
    e.search.control_dt = ep.control_dt;
    e.time_limit = ep.time_limit;
    e.success_tolerance = ep.goal_tolerance;
    return e;
}

nlohmann::json to_json(const Sample& s)
{
    return {{"index", s.index},
            {"t", s.t},
            {"frames", s.frames},
            {"prev_action", vec_json(s.prev_action)},
            {"rel_goal", vec_json(s.rel_goal)},
            {"pose", {s.pose.x, s.pose.y, s.pose.theta}},
            {"action", vec_json(s.action)}};
}

Sample sample_from_json(const nlohmann::json& j)
{
    Sample s;
    try
    {
        s.index = j.at("index").get<int>();
        s.t = j.at("t").get<double>();
        s.frames = j.at("frames").get<std::array<std::string, 3>>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("sample: ") + e.what());
    }
    s.prev_action = vec_from(j.at("prev_action"), "prev_action");
    s.rel_goal = vec_from(j.at("rel_goal"), "rel_goal");
    s.pose = pose_from(j.at("pose"), "pose");
    s.action = vec_from(j.at("action"), "action");
    return s;
}

std::string frame_name(int k) { return "frames/" + std::to_string(k) + ".png"; }

std::vector<Sample> make_samples(const EpisodeConfig& ep, const PlannedPath& executed, double frame_interval)
{
    const auto stride = static_cast<std::size_t>(std::lround(frame_interval / executed.dt));
    if (stride == 0)
        throw ConfigError("frame_interval shorter than control_dt");
    std::vector<Sample> out;
    for (std::size_t i = 0; i < executed.actions.size(); i += stride)
    {
        const int k = static_cast<int>(i / stride);
        Sample s;
        s.index = k;
        s.t = static_cast<double>(i) * executed.dt;
        s.frames = {frame_name(std::max(k - 2, 0)), frame_name(std::max(k - 1, 0)), frame_name(k)};
        s.prev_action = out.empty() ? Vec2d::Zero() : out.back().action;
        s.pose = executed.states[i].pose();
        s.rel_goal = compute_relative_goal(s.pose, ep.goal);
        s.action = executed.actions[i];
        out.push_back(s);
    }
    return out;
}

EpisodeRecord run_episode(const SplatScene& scene, const SceneMaps& maps, const HumanModel& model,
                          const EpisodeConfig& ep, const Config& config, const EpisodeOutput* output,
                          const TraceSink& trace)
{
    EpisodeRecord rec;
    rec.config = ep;
    rec.humans = plan_human_trajectories(ep, maps, config);
    const auto actors = make_actors(model, rec.humans, ep.control_dt);
    rec.expert = execute_expert(maps.robot, actors, ep.start, ep.goal, expert_config_for(config, ep), trace);
    rec.samples = make_samples(ep, rec.expert.executed, config.dataset.frame_interval);

    if (output)
    {
        std::filesystem::create_directories(output->dir / "frames");
        write_episode(rec, output->dir);
        if (output->render)
        {
            const auto cfg = expert_config_for(config, ep);
            RenderOptions ro;
            ro.threads = output->render_threads;
            const auto stride = static_cast<std::size_t>(std::lround(config.dataset.frame_interval / ep.control_dt));
            for (const auto& s : rec.samples)
            {
                const auto& state = rec.expert.executed.states[static_cast<std::size_t>(s.index) * stride];
                const auto cam = robot_camera(state.pose(), cfg.camera_height, cfg.image_width, cfg.image_height,
                                              cfg.hfov);
                const auto img = render_observation(scene, actors, s.t, cam, config.background(), ro);
                write_png(img, output->dir / frame_name(s.index));
            }
        }
    }
    return rec;
}

void write_episode(const EpisodeRecord& rec, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "samples.jsonl");
        if (!out)
            throw IoError("cannot write " + (dir / "samples.jsonl").string());
        for (const auto& s : rec.samples)
            out << to_json(s).dump() << '\n';
        if (!out)
            throw IoError("write failed for " + (dir / "samples.jsonl").string());
    }
    const auto& ex = rec.expert;
    nlohmann::json states = nlohmann::json::array();
    for (const auto& s : ex.executed.states)
        states.push_back({s.x, s.y, s.theta, s.v, s.w});
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& a : ex.executed.actions)
        actions.push_back(vec_json(a));
    nlohmann::json humans = nlohmann::json::array();
    for (const auto& h : rec.humans)
        humans.push_back({{"speed", h.speed},
                          {"smoothing_fallback", h.smoothing_fallback},
                          {"trajectory", trajectory_to_json(h)}});
    nlohmann::json meta = {{"config", to_json(rec.config)},
                           {"outcome", to_string(ex.outcome)},
                           {"reason", ex.reason},
                           {"reaching_time", ex.reaching_time},
                           {"replans", ex.replans},
                           {"replanned_at", ex.executed.replanned_at},
                           {"control_dt", ex.executed.dt},
                           {"states", states},
                           {"actions", actions},
                           {"humans", humans},
                           {"samples", rec.samples.size()}};
    if (std::isfinite(ex.min_human_clearance))
        meta["min_human_clearance"] = ex.min_human_clearance;
    write_json(meta, dir / "meta.json");
}

Metrics compute_metrics(std::span<const EpisodeSummary> episodes, double time_limit)
{
    if (episodes.empty())
        throw Error("compute_metrics: no episodes");
    Metrics m;
    m.episodes = episodes.size();
    double total = 0.0;
    for (const auto& e : episodes)
    {
        ++m.outcome_counts[static_cast<std::size_t>(e.outcome)];
        if (e.outcome == Outcome::Success)
        {
            ++m.successes;
            total += e.reaching_time;
        }
        else
        {
            total += time_limit;
        }
    }
    m.success_rate = static_cast<double>(m.successes) / static_cast<double>(m.episodes);
    m.average_reaching_time = total / static_cast<double>(m.episodes);
    return m;
}

Metrics compute_metrics(std::span<const EpisodeRecord> records, double time_limit)
{
    std::vector<EpisodeSummary> s;
    s.reserve(records.size());
    for (const auto& r : records)
        s.push_back({r.outcome(), r.reaching_time()});
    return compute_metrics(std::span<const EpisodeSummary>(s), time_limit);
}

nlohmann::json to_json(const Metrics& m)
{
    nlohmann::json counts;
    for (auto o : {Outcome::Success, Outcome::Collision, Outcome::Timeout, Outcome::PlanFailure})
        counts[to_string(o)] = m.outcome_counts[static_cast<std::size_t>(o)];
    return {{"episodes", m.episodes},
            {"successes", m.successes},
            {"success_rate", m.success_rate},
            {"average_reaching_time", m.average_reaching_time},
            {"outcomes", counts}};
}

DatasetResult generate_dataset(const SplatScene& scene, const SceneMaps& maps, const Config& config,
                               const DatasetOptions& options)
{
    if (options.episodes < 0)
        throw ConfigError("episode count must be non-negative");
    DatasetResult result;
    result.root = options.out_dir / (scene.name.empty() ? std::string("scene") : scene.name);
    std::filesystem::create_directories(result.root);
    const HumanModel model = load_or_make_human_model(config);

    const auto n = static_cast<std::size_t>(options.episodes);
    std::vector<nlohmann::json> entries(n);
    std::vector<EpisodeSummary> summaries(n);
    std::vector<std::size_t> counts(n, 0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const int workers = std::max(1, std::min<int>(options.workers, std::max<int>(1, options.episodes)));
    const auto work = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                const auto seed = derive_seed(options.seed, i);
                const auto ep = sample_episode(maps, config, scene.name, seed);
                EpisodeOutput out{result.root / episode_id(static_cast<int>(i)), options.render, workers > 1 ? 1 : 0};
                const auto rec = run_episode(scene, maps, model, ep, config, &out);
                summaries[i] = {rec.outcome(), rec.reaching_time()};
                counts[i] = rec.samples.size();
                entries[i] = {{"id", episode_id(static_cast<int>(i))},
                              {"seed", seed},
                              {"outcome", to_string(rec.outcome())},
                              {"reaching_time", rec.reaching_time()},
                              {"replans", rec.replans()},
                              {"humans", rec.config.humans.size()},
                              {"samples", rec.samples.size()}};
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    if (workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    if (failure)
        std::rethrow_exception(failure);

    result.episodes = summaries;
    for (auto c : counts)
        result.total_samples += c;
    nlohmann::json manifest = {{"scene", scene.name},
                               {"seed", options.seed},
                               {"episodes_requested", options.episodes},
                               {"rendered", options.render},
                               {"config_hash", fnv1a_hex(config.to_json().dump())},
                               {"config", config.to_json()},
                               {"total_samples", result.total_samples},
                               {"episodes", entries.empty() ? nlohmann::json::array() : nlohmann::json(entries)}};
    if (n > 0)
    {
        result.metrics = compute_metrics(std::span<const EpisodeSummary>(summaries), config.dataset.time_limit);
        manifest["metrics"] = to_json(result.metrics);
    }
    else
    {
        manifest["metrics"] = nullptr;
    }
    write_json(manifest, result.root / "manifest.json");
    return result;
}

Metrics dataset_metrics(const std::filesystem::path& root)
{
    const auto manifest = read_json(root / "manifest.json");
    std::vector<EpisodeSummary> eps;
    double limit = 50.0;
    try
    {
        limit = manifest.at("config").at("dataset").at("time_limit").get<double>();
        for (const auto& e : manifest.at("episodes"))
            eps.push_back({outcome_from_string(e.at("outcome").get<std::string>()), e.at("reaching_time").get<double>()});
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError("manifest: " + std::string(e.what()));
    }
    return compute_metrics(std::span<const EpisodeSummary>(eps), limit);
}

nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path, int indent)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << j.dump(indent) << '\n';
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace dynsplat
