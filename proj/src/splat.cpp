#include "dynsplat/splat.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dynsplat
{
namespace
{

constexpr double kShC0 = 0.2820947918;

struct PlyProperty
{
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::string type;
};

std::size_t type_size(const std::string& t)
{
    static const std::map<std::string, std::size_t> sizes = {
        {"char", 1},   {"uchar", 1},  {"int8", 1},    {"uint8", 1},   {"short", 2},  {"ushort", 2},
        {"int16", 2},  {"uint16", 2}, {"int", 4},     {"uint", 4},    {"int32", 4},  {"uint32", 4},
        {"float", 4},  {"float32", 4}, {"double", 8}, {"float64", 8},
    };
    auto it = sizes.find(t);
    if (it == sizes.end())
        throw FormatError("unsupported PLY property type '" + t + "'");
    return it->second;
}

double read_value(const char* p, const std::string& type)
{
    static_assert(std::endian::native == std::endian::little, "PLY reader assumes a little-endian host");
    if (type == "float" || type == "float32")
    {
        float f;
        std::memcpy(&f, p, 4);
        return f;
    }
    if (type == "double" || type == "float64")
    {
        double d;
        std::memcpy(&d, p, 8);
        return d;
    }
    if (type == "uchar" || type == "uint8")
        return static_cast<unsigned char>(*p);
    if (type == "char" || type == "int8")
        return static_cast<signed char>(*p);
    if (type == "short" || type == "int16")
    {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "ushort" || type == "uint16")
    {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        return v;
    }
    if (type == "int" || type == "int32")
    {
        std::int32_t v;
        std::memcpy(&v, p, 4);
        return v;
    }
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

std::filesystem::path meta_path_for(const std::filesystem::path& ply)
{
    auto p = ply;
    p.replace_extension(".meta.json");
    return p;
}

void validate_primitives(const Primitives& prims)
{
    for (std::size_t i = 0; i < prims.size(); ++i)
    {
        const auto& g = prims[i];
        const bool finite = g.mean.allFinite() && g.scale.allFinite() && g.color.allFinite() &&
                            g.rotation.coeffs().allFinite() && std::isfinite(g.opacity);
        if (!finite)
            throw FormatError("non-finite value in primitive " + std::to_string(i));
        if ((g.scale.array() <= 0.0).any())
            throw FormatError("non-positive scale in primitive " + std::to_string(i));
        if (g.opacity < 0.0 || g.opacity > 1.0)
            throw FormatError("opacity outside [0,1] in primitive " + std::to_string(i));
        if (std::abs(g.rotation.norm() - 1.0) > 1e-6)
            throw FormatError("non-unit quaternion in primitive " + std::to_string(i));
    }
}

Primitives load_primitives(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::string line;
    std::getline(in, line);
    if (line != "ply")
        throw FormatError(path.string() + ": missing 'ply' magic");

    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool saw_vertex = false;
    std::vector<PlyProperty> props;
    std::size_t stride = 0;
    std::string format;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format")
            ss >> format;
        else if (word == "element")
        {
            std::string kind;
            std::size_t n = 0;
            ss >> kind >> n;
            in_vertex = kind == "vertex";
            if (in_vertex)
            {
                vertex_count = n;
                saw_vertex = true;
            }
            else if (saw_vertex && n > 0)
                throw FormatError("elements after 'vertex' are not supported");
        }
        else if (word == "property")
        {
            std::string type, name;
            ss >> type;
            if (type == "list")
                throw FormatError("list properties are not supported");
            ss >> name;
            if (in_vertex)
            {
                const auto sz = type_size(type);
                props.push_back({name, stride, sz, type});
                stride += sz;
            }
        }
        else if (word == "end_header")
            break;
    }
    if (format != "binary_little_endian")
        throw FormatError("only binary_little_endian PLY is supported (got '" + format + "')");
    if (vertex_count == 0)
        throw FormatError("empty scene: PLY has zero vertices");

    std::map<std::string, const PlyProperty*> by_name;
    for (const auto& p : props)
        by_name[p.name] = &p;
    static const std::array<const char*, 14> required = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                                         "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                                         "rot_0",   "rot_1",   "rot_2",   "rot_3"};
    std::array<const PlyProperty*, 14> field{};
    for (std::size_t i = 0; i < required.size(); ++i)
    {
        auto it = by_name.find(required[i]);
        if (it == by_name.end())
            throw FormatError(std::string("missing required PLY field '") + required[i] + "'");
        field[i] = it->second;
    }

    std::vector<char> buffer(stride * vertex_count);
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (static_cast<std::size_t>(in.gcount()) != buffer.size())
        throw FormatError("truncated PLY body");

    Primitives prims(vertex_count);
    std::array<double, 14> v{};
    for (std::size_t i = 0; i < vertex_count; ++i)
    {
        const char* row = buffer.data() + i * stride;
        for (std::size_t k = 0; k < field.size(); ++k)
        {
            v[k] = read_value(row + field[k]->offset, field[k]->type);
            if (!std::isfinite(v[k]))
                throw FormatError("non-finite value in vertex " + std::to_string(i) + " field '" + required[k] + "'");
        }
        auto& g = prims[i];
        g.mean = Vec3d(v[0], v[1], v[2]);
        g.color = (0.5 + kShC0 * Vec3d(v[3], v[4], v[5]).array()).cwiseMax(0.0).cwiseMin(1.0);
        g.opacity = logistic(v[6]);
        g.scale = Vec3d(v[7], v[8], v[9]).array().exp();
        Eigen::Quaterniond q(v[10], v[11], v[12], v[13]);
        if (q.norm() == 0.0)
            throw FormatError("zero quaternion in vertex " + std::to_string(i));
        g.rotation = q.normalized();
    }
    validate_primitives(prims);
    return prims;
}

SplatScene load_scene(const std::filesystem::path& path)
{
    SplatScene scene;
    scene.primitives = load_primitives(path);
    scene.name = path.stem().string();
    const auto meta = meta_path_for(path);
    if (std::filesystem::exists(meta))
    {
        std::ifstream in(meta);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception& e)
        {
            throw FormatError(meta.string() + ": " + e.what());
        }
        scene.ground_z = j.value("ground_z", 0.0);
        scene.name = j.value("name", scene.name);
    }
    return scene;
}

void save_primitives(const Primitives& prims, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << prims.size() << "\n";
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                             "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        out << "property float " << name << "\n";
    out << "end_header\n";

    constexpr double eps = 1e-7;
    for (const auto& g : prims)
    {
        const double a = std::clamp(g.opacity, eps, 1.0 - eps);
        const Vec3d dc = (g.color.array() - 0.5) / kShC0;
        const Vec3d ls = g.scale.array().log();
        const std::array<float, 17> row = {
            float(g.mean.x()),     float(g.mean.y()),     float(g.mean.z()),     0.f, 0.f, 0.f,
            float(dc.x()),         float(dc.y()),         float(dc.z()),         float(std::log(a / (1.0 - a))),
            float(ls.x()),         float(ls.y()),         float(ls.z()),         float(g.rotation.w()),
            float(g.rotation.x()), float(g.rotation.y()), float(g.rotation.z())};
        out.write(reinterpret_cast<const char*>(row.data()), sizeof(row));
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

void save_scene(const SplatScene& scene, const std::filesystem::path& path)
{
    save_primitives(scene.primitives, path);
    std::ofstream meta(meta_path_for(path));
    if (!meta)
        throw IoError("cannot write " + meta_path_for(path).string());
    meta << nlohmann::json{{"ground_z", scene.ground_z}, {"name", scene.name}}.dump(2) << "\n";
}

} // namespace dynsplat
