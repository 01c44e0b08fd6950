#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynsplat/config.hpp"
#include "dynsplat/scenario.hpp"
#include "dynsplat/service.hpp"
#include "dynsplat/synthetic.hpp"

using namespace dynsplat;

namespace
{

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kBadConfig = 2,
    kNoPath = 3,
    kIo = 4
};

Config load_config(const std::string& path) { return path.empty() ? Config{} : Config::load(path); }

struct Common
{
    std::string scene;
    std::string config;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--scene", c.scene, "3DGS PLY scene (with optional .meta.json sidecar)")->required();
    cmd->add_option("--config", c.config, "JSON config file");
}

Pose2d parse_pose(const std::string& s)
{
    Pose2d p;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.theta) != 3)
        throw ConfigError("pose must be x,y,theta");
    return p;
}

int cmd_synth(std::uint64_t seed, const std::string& out)
{
    auto scene = make_synthetic_scene(seed);
    scene.name = std::filesystem::path(out).stem().string();
    if (const auto parent = std::filesystem::path(out).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    save_scene(scene, out);
    std::cout << "wrote " << scene.primitives.size() << " primitives to " << out << "\n";
    return kOk;
}

int cmd_voxelize(const Common& c, const std::string& out, bool slices)
{
    const auto config = load_config(c.config);
    const auto scene = load_scene(c.scene);
    const auto voxels = voxelize(scene, config.scene.resolution, config.scene.opacity_threshold);
    const auto maps = build_scene_maps(voxels, scene.ground_z, config);
    std::filesystem::create_directories(out);
    write_pgm(maps.robot, std::filesystem::path(out) / "robot_map.pgm");
    write_pgm(maps.human, std::filesystem::path(out) / "human_map.pgm");
    if (slices)
        write_pgm_slices(voxels, std::filesystem::path(out) / "slices");
    std::size_t occupied = 0;
    for (auto o : voxels.occupied)
        occupied += o;
    const auto describe = [](const OccupancyGrid2D& g) {
        return nlohmann::json{{"origin", {g.origin.x(), g.origin.y()}},
                              {"resolution", g.resolution},
                              {"dims", {g.dims.x(), g.dims.y()}},
                              {"inflation_radius", g.inflation_radius},
                              {"occupied", g.count_occupied()},
                              {"inflated", g.count_inflated()}};
    };
    const nlohmann::json summary = {
        {"scene", scene.name},
        {"primitives", scene.primitives.size()},
        {"voxels", {{"origin", {voxels.origin.x(), voxels.origin.y(), voxels.origin.z()}},
                    {"resolution", voxels.resolution},
                    {"dims", {voxels.dims.x(), voxels.dims.y(), voxels.dims.z()}},
                    {"occupied", occupied}}},
        {"robot_map", describe(maps.robot)},
        {"human_map", describe(maps.human)}};
    write_json(summary, std::filesystem::path(out) / "maps.json");
    std::cout << summary.dump(1) << "\n";
    return kOk;
}

EpisodeConfig episode_for(const SceneMaps& maps, const Config& config, const SplatScene& scene,
                          const std::string& episode_file, std::uint64_t seed)
{
    if (!episode_file.empty())
        return episode_from_json(read_json(episode_file));
    return sample_episode(maps, config, scene.name, seed);
}

int cmd_plan(const Common& c, const std::string& episode_file, std::uint64_t seed, const std::string& trace_path,
             const std::string& out, bool render)
{
    const auto config = load_config(c.config);
    const auto scene = load_scene(c.scene);
    const auto maps = build_scene_maps(scene, config);
    const auto ep = episode_for(maps, config, scene, episode_file, seed);
    const auto model = load_or_make_human_model(config);

    std::ofstream trace_file;
    if (!trace_path.empty() && trace_path != "-")
    {
        trace_file.open(trace_path);
        if (!trace_file)
            throw IoError("cannot write " + trace_path);
    }
    std::ostream* trace_out = trace_path == "-" ? &std::cout : (trace_file.is_open() ? &trace_file : nullptr);
    TraceSink sink;
    if (trace_out)
        sink = [trace_out](const nlohmann::json& j) { *trace_out << j.dump() << '\n'; };

    std::optional<EpisodeOutput> output;
    if (!out.empty())
        output = EpisodeOutput{out, render, 0};
    const auto rec = run_episode(scene, maps, model, ep, config, output ? &*output : nullptr, sink);
    nlohmann::json summary = {{"episode", to_json(ep)},
                              {"outcome", to_string(rec.outcome())},
                              {"reason", rec.expert.reason},
                              {"reaching_time", rec.reaching_time()},
                              {"replans", rec.replans()},
                              {"samples", rec.samples.size()}};
    if (std::isfinite(rec.expert.min_human_clearance))
        summary["min_human_clearance"] = rec.expert.min_human_clearance;
    std::cerr << summary.dump(1) << "\n";
    return rec.outcome() == Outcome::PlanFailure ? kNoPath : kOk;
}

int cmd_gen(const Common& c, int episodes, std::uint64_t seed, const std::string& out, std::optional<int> workers,
            bool no_render)
{
    const auto config = load_config(c.config);
    const auto scene = load_scene(c.scene);
    const auto maps = build_scene_maps(scene, config);
    DatasetOptions opts;
    opts.episodes = episodes;
    opts.seed = seed;
    opts.out_dir = out;
    opts.workers = workers.value_or(config.dataset.workers);
    opts.render = config.dataset.render && !no_render;
    const auto result = generate_dataset(scene, maps, config, opts);
    std::cout << "dataset " << result.root.string() << ": " << episodes << " episodes, " << result.total_samples
              << " samples\n";
    if (episodes > 0)
        std::cout << to_json(result.metrics).dump(1) << "\n";
    return kOk;
}

int cmd_metrics(const std::string& dataset, bool as_json)
{
    const auto m = dataset_metrics(dataset);
    if (as_json)
    {
        std::cout << to_json(m).dump(1) << "\n";
        return kOk;
    }
    std::printf("%-10s %8s %8s %10s %10s %8s %13s\n", "dataset", "episodes", "SR(%)", "ART(s)", "collision", "timeout",
                "plan-failure");
    std::printf("%-10s %8zu %8.1f %10.2f %10zu %8zu %13zu\n", std::filesystem::path(dataset).filename().c_str(),
                m.episodes, 100.0 * m.success_rate, m.average_reaching_time,
                m.outcome_counts[static_cast<int>(Outcome::Collision)],
                m.outcome_counts[static_cast<int>(Outcome::Timeout)],
                m.outcome_counts[static_cast<int>(Outcome::PlanFailure)]);
    return kOk;
}

int cmd_render(const Common& c, const std::string& pose, std::optional<std::uint64_t> seed, double t,
               const std::string& out)
{
    const auto config = load_config(c.config);
    const auto scene = load_scene(c.scene);
    const auto expert = config.expert();
    const auto model = load_or_make_human_model(config);
    std::vector<HumanActor> actors;
    Pose2d robot = pose.empty() ? Pose2d{} : parse_pose(pose);
    if (seed)
    {
        const auto maps = build_scene_maps(scene, config);
        const auto ep = sample_episode(maps, config, scene.name, *seed);
        actors = make_actors(model, plan_human_trajectories(ep, maps, config), ep.control_dt);
        if (pose.empty())
            robot = ep.start;
    }
    const auto cam = robot_camera(robot, expert.camera_height, expert.image_width, expert.image_height, expert.hfov);
    const auto img = render_observation(scene, actors, t, cam, config.background());
    write_png(img, out);
    std::cout << "wrote " << out << "\n";
    return kOk;
}

int cmd_serve(const Common& c, const std::string& obs, const std::string& obs_dir)
{
    const auto config = load_config(c.config);
    const auto scene = load_scene(c.scene);
    const auto maps = build_scene_maps(scene, config);
    const auto model = load_or_make_human_model(config);
    ServiceOptions opts;
    opts.obs = obs_mode_from_string(obs);
    opts.obs_dir = obs_dir;
    StepService service(scene, maps, model, config, opts);
    return service.run(std::cin, std::cout);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gaussian-splat dynamic navigation simulator and dataset generator"};
    app.require_subcommand(1);

    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth-scene", "Write a procedural box-room scene");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out", synth_out)->required();

    Common vox_c;
    std::string vox_out;
    bool vox_slices = false;
    auto* vox = app.add_subcommand("voxelize", "Voxelize a scene and write its planning maps");
    add_common(vox, vox_c);
    vox->add_option("--out", vox_out)->required();
    vox->add_flag("--slices", vox_slices, "also dump one PGM per voxel layer");

    Common plan_c;
    std::string plan_episode, plan_trace, plan_out;
    std::uint64_t plan_seed = 0;
    bool plan_render = false;
    auto* plan = app.add_subcommand("plan", "Run one expert episode");
    add_common(plan, plan_c);
    plan->add_option("--episode", plan_episode, "episode JSON; sampled from --seed when absent");
    plan->add_option("--seed", plan_seed);
    plan->add_option("--trace", plan_trace, "JSON-lines planner trace ('-' for stdout)");
    plan->add_option("--out", plan_out, "write the episode directory here");
    plan->add_flag("--render", plan_render, "render frames into --out");

    Common gen_c;
    int gen_episodes = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::optional<int> gen_workers;
    bool gen_no_render = false;
    auto* gen = app.add_subcommand("gen-data", "Generate an imitation dataset");
    add_common(gen, gen_c);
    gen->add_option("--episodes", gen_episodes)->required()->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--workers", gen_workers)->check(CLI::PositiveNumber);
    gen->add_flag("--no-render", gen_no_render);

    std::string met_dataset;
    bool met_json = false;
    auto* met = app.add_subcommand("metrics", "SR/ART of a generated dataset");
    met->add_option("--dataset", met_dataset, "dataset scene directory (holding manifest.json)")->required();
    met->add_flag("--json", met_json);

    Common ren_c;
    std::string ren_pose, ren_out;
    std::optional<std::uint64_t> ren_seed;
    double ren_t = 0.0;
    auto* ren = app.add_subcommand("render", "Render one debug observation");
    add_common(ren, ren_c);
    ren->add_option("--pose", ren_pose, "robot pose x,y,theta");
    ren->add_option("--seed", ren_seed, "include the humans of this sampled episode");
    ren->add_option("--t", ren_t, "time along the human trajectories");
    ren->add_option("--out", ren_out)->required();

    Common srv_c;
    std::string srv_obs = "path", srv_obs_dir = "obs";
    auto* srv = app.add_subcommand("serve", "Closed-loop step protocol on stdin/stdout");
    add_common(srv, srv_c);
    srv->add_option("--obs", srv_obs, "path | base64 | none");
    srv->add_option("--obs-dir", srv_obs_dir);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return kBadConfig;
    }

    try
    {
        if (*synth)
            return cmd_synth(synth_seed, synth_out);
        if (*vox)
            return cmd_voxelize(vox_c, vox_out, vox_slices);
        if (*plan)
            return cmd_plan(plan_c, plan_episode, plan_seed, plan_trace, plan_out, plan_render);
        if (*gen)
            return cmd_gen(gen_c, gen_episodes, gen_seed, gen_out, gen_workers, gen_no_render);
        if (*met)
            return cmd_metrics(met_dataset, met_json);
        if (*ren)
            return cmd_render(ren_c, ren_pose, ren_seed, ren_t, ren_out);
        if (*srv)
            return cmd_serve(srv_c, srv_obs, srv_obs_dir);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kBadConfig;
    }
    catch (const NoPathError& e)
    {
        std::cerr << "no path: " << e.what() << "\n";
        return kNoPath;
    }
    catch (const IoError& e)
    {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    }
    catch (const FormatError& e)
    {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
