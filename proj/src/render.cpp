#include "dynsplat/render.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <thread>

#include <png.h>

namespace dynsplat
{

Image render(std::span<const GaussianPrimitive> prims, const CameraModel& camera, const Eigen::Vector3f& background,
             const RenderOptions& options)
{
    camera.validate();
    using S = float;
    const int W = camera.width, H = camera.height;
    Image image(W, H);
    if (options.with_depth)
        image.depth.assign(static_cast<std::size_t>(W) * H, 0.f);

    std::vector<Splat2D<S>> splats;
    splats.reserve(prims.size());
    for (std::size_t n = 0; n < prims.size(); ++n)
    {
        Splat2D<S> s;
        if (project_splat(prims[n].cast<S>(), camera, s))
            splats.push_back(s);
    }
    std::vector<std::uint32_t> order(splats.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return splats[a].depth < splats[b].depth; });

    const int ts = std::max(1, options.tile_size);
    const int tiles_x = (W + ts - 1) / ts;
    const int tiles_y = (H + ts - 1) / ts;
    std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (auto id : order)
    {
        const auto& s = splats[id];
        for (int ty = s.y0 / ts; ty <= s.y1 / ts; ++ty)
            for (int tx = s.x0 / ts; tx <= s.x1 / ts; ++tx)
                tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(id);
    }

    // Splat-major within a tile: each pixel keeps its own front-to-back state, and the tile is
    // finished once every pixel has saturated.
    auto shade_tile = [&](int tile) {
        const int tx = tile % tiles_x, ty = tile / tiles_x;
        const int px0 = tx * ts, py0 = ty * ts;
        const int pw = std::min(W, px0 + ts) - px0, ph = std::min(H, py0 + ts) - py0;
        const int npix = pw * ph;
        std::vector<S> T(static_cast<std::size_t>(npix), S(1)), D(static_cast<std::size_t>(npix), S(0));
        std::vector<Eigen::Vector3f> C(static_cast<std::size_t>(npix), Eigen::Vector3f::Zero());
        std::vector<std::uint8_t> done(static_cast<std::size_t>(npix), 0);
        int ndone = 0;
        for (auto id : tiles[static_cast<std::size_t>(tile)])
        {
            const auto& s = splats[id];
            const int xa = std::max(s.x0, px0), xb = std::min(s.x1, px0 + pw - 1);
            const int ya = std::max(s.y0, py0), yb = std::min(s.y1, py0 + ph - 1);
            for (int y = ya; y <= yb; ++y)
                for (int x = xa; x <= xb; ++x)
                {
                    const int k = (y - py0) * pw + (x - px0);
                    if (done[k])
                        continue;
                    const S a = s.opacity * splat_weight(s, S(x), S(y));
                    if (a <= S(0))
                        continue;
                    C[k] += T[k] * a * s.color;
                    D[k] += T[k] * a * s.depth;
                    T[k] *= S(1) - a;
                    if (T[k] < S(kTransmittanceStop))
                    {
                        done[k] = 1;
                        ++ndone;
                    }
                }
            if (ndone == npix)
                break;
        }
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x)
            {
                const int k = y * pw + x;
                image.pixel(px0 + x, py0 + y) = C[k] + T[k] * background;
                if (options.with_depth)
                    image.depth[static_cast<std::size_t>(py0 + y) * W + px0 + x] = D[k];
            }
    };

    const int ntiles = tiles_x * tiles_y;
    int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, ntiles);
    if (threads == 1)
    {
        for (int t = 0; t < ntiles; ++t)
            shade_tile(t);
        return image;
    }
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int t = next++; t < ntiles; t = next++)
                shade_tile(t);
        });
    pool.clear();
    return image;
}

Image render_observation(const SplatScene& scene, std::span<const HumanActor> humans, double t,
                         const CameraModel& camera, const Eigen::Vector3f& background, const RenderOptions& options)
{
    if (humans.empty())
        return render(scene.primitives, camera, background, options);
    Primitives all = scene.primitives;
    for (const auto& h : humans)
    {
        auto p = h.primitives(t);
        all.insert(all.end(), p.begin(), p.end());
    }
    return render(all, camera, background, options);
}

namespace
{

std::vector<unsigned char> to_rgb8(const Image& image)
{
    std::vector<unsigned char> bytes(image.rgb.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.rgb[i], 0.f, 1.f) * 255.f));
    return bytes;
}

void encode(const Image& image, png_structp png, png_infop info)
{
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    auto bytes = to_rgb8(image);
    for (int y = 0; y < image.height; ++y)
        png_write_row(png, bytes.data() + static_cast<std::size_t>(y) * image.width * 3);
    png_write_end(png, nullptr);
}

} // namespace

void write_png(const Image& image, const std::filesystem::path& path)
{
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp)
        throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("PNG encoding failed for " + path.string());
    }
    png_init_io(png, fp);
    encode(image, png, info);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0)
        throw IoError("write failed for " + path.string());
}

std::string encode_png(const Image& image)
{
    std::string out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
        },
        nullptr);
    encode(image, png, info);
    png_destroy_write_struct(&png, &info);
    return out;
}

} // namespace dynsplat
