#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flearn/pgm.hpp"
#include "flearn/rng.hpp"
#include "flearn/scene.hpp"

using namespace flearn;
namespace fs = std::filesystem;

namespace {

// Random generator over valid scene configurations. Geometry is constructed
// to satisfy validate() directly instead of by rejection.
SceneConfig random_config(Rng& rng) {
    SceneConfig cfg;
    cfg.image_size = 8 + static_cast<int>(rng.next_u64() % 41);  // 8..48
    const int n = cfg.image_size;

    do {
        cfg.grid_rows = 1 + static_cast<int>(rng.next_u64() % 3);
        cfg.grid_cols = 1 + static_cast<int>(rng.next_u64() % 3);
    } while (cfg.grid_rows * cfg.grid_cols < 2);
    cfg.overlap = 1 + static_cast<int>(rng.next_u64() % (n / 2));

    const double max_r = (n - 1) / 2.0;
    cfg.circle_r = rng.uniform(2.0, max_r);
    cfg.circle_cx = rng.uniform(cfg.circle_r, (n - 1) - cfg.circle_r);
    cfg.circle_cy = rng.uniform(cfg.circle_r, (n - 1) - cfg.circle_r);

    cfg.square_side = 3 + static_cast<int>(rng.next_u64() % (n - 3));
    cfg.square_x = static_cast<int>(rng.next_u64() % (n - cfg.square_side + 1));
    cfg.square_y = static_cast<int>(rng.next_u64() % (n - cfg.square_side + 1));

    cfg.stroke = rng.next_u64() % 2 == 0 ? StrokeMode::Outline : StrokeMode::Filled;
    cfg.thickness = 1 + static_cast<int>(rng.next_u64() % 3);
    return cfg;
}

bool is_binary(const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] != 0.0 && t[i] != 1.0) return false;
    }
    return true;
}

std::size_t count_positive(const Tensor& t) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < t.size(); ++i) c += t[i] == 1.0;
    return c;
}

bool configs_equal(const SceneConfig& a, const SceneConfig& b) {
    return a.image_size == b.image_size && a.circle_cx == b.circle_cx &&
           a.circle_cy == b.circle_cy && a.circle_r == b.circle_r && a.square_x == b.square_x &&
           a.square_y == b.square_y && a.square_side == b.square_side &&
           a.grid_rows == b.grid_rows && a.grid_cols == b.grid_cols && a.overlap == b.overlap &&
           a.stroke == b.stroke && a.thickness == b.thickness;
}

// Checks that both fragments reproduce the target on the full seam band;
// `vertical` selects row seams (between tile rows) vs column seams.
void check_seam_band(const FragmentScene& scene, int ti, int tj, bool vertical) {
    const SceneConfig& cfg = scene.config;
    const int n = cfg.image_size;
    const int ka = ti * cfg.grid_cols + tj;
    const int kb = vertical ? (ti + 1) * cfg.grid_cols + tj : ti * cfg.grid_cols + tj + 1;

    // the seam sits at the documented floor-division boundary; the band is
    // the overlap margin on both sides, clamped to the image
    const int seam = vertical ? (ti + 1) * n / cfg.grid_rows : (tj + 1) * n / cfg.grid_cols;
    const int lo = std::max(0, seam - cfg.overlap);
    const int hi = std::min(n, seam + cfg.overlap);
    REQUIRE(lo < hi);

    // restrict the other axis to the owning tiles' undilated extent, which
    // both dilated boxes contain
    const int u0 = vertical ? tj * n / cfg.grid_cols : ti * n / cfg.grid_rows;
    const int u1 = vertical ? (tj + 1) * n / cfg.grid_cols : (ti + 1) * n / cfg.grid_rows;

    for (int s = lo; s < hi; ++s) {
        for (int u = u0; u < u1; ++u) {
            const int y = vertical ? s : u;
            const int x = vertical ? u : s;
            const double want = scene.target.at(0, y, x);
            if (scene.fragments.at(ka, y, x) != want || scene.fragments.at(kb, y, x) != want) {
                CAPTURE(ti);
                CAPTURE(tj);
                CAPTURE(y);
                CAPTURE(x);
                REQUIRE(scene.fragments.at(ka, y, x) == want);
                REQUIRE(scene.fragments.at(kb, y, x) == want);
            }
        }
    }
}

}  // namespace

TEST_CASE("scene invariants hold over 250 randomized configurations") {
    Rng rng(1009);
    int degenerate_seen = 0;
    for (int iter = 0; iter < 250; ++iter) {
        const SceneConfig cfg = random_config(rng);
        CAPTURE(iter);
        REQUIRE_NOTHROW(cfg.validate());
        const FragmentScene scene = make_scene(cfg);
        const int n = cfg.image_size;
        const int k = cfg.fragment_count();

        REQUIRE(scene.target.shape() == std::vector<int>{1, n, n});
        REQUIRE(scene.fragments.shape() == std::vector<int>{k, n, n});
        REQUIRE(is_binary(scene.target));
        REQUIRE(is_binary(scene.fragments));
        REQUIRE(count_positive(scene.target) > 0);

        // subset: no fragment invents pixels, and coverage: the union of the
        // fragments is exactly the target
        int subset_violations = 0;
        int coverage_violations = 0;
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const double t = scene.target.at(0, y, x);
                double best = 0;
                for (int f = 0; f < k; ++f) {
                    const double v = scene.fragments.at(f, y, x);
                    if (v > t) ++subset_violations;
                    best = std::max(best, v);
                }
                if (best != t) ++coverage_violations;
            }
        }
        REQUIRE(subset_violations == 0);
        REQUIRE(coverage_violations == 0);

        // adjacent fragments agree with the target across every seam band
        for (int ti = 0; ti < cfg.grid_rows; ++ti) {
            for (int tj = 0; tj + 1 < cfg.grid_cols; ++tj) {
                check_seam_band(scene, ti, tj, false);
            }
        }
        for (int ti = 0; ti + 1 < cfg.grid_rows; ++ti) {
            for (int tj = 0; tj < cfg.grid_cols; ++tj) {
                check_seam_band(scene, ti, tj, true);
            }
        }

        if (degenerate_overlap_warning(cfg)) ++degenerate_seen;
    }
    // the generator explores both healthy and degenerate overlaps
    CHECK(degenerate_seen > 0);
    CHECK(degenerate_seen < 250);
}

TEST_CASE("the default scene matches its frozen statistics") {
    const SceneConfig cfg;
    const FragmentScene scene = make_scene(cfg);
    CHECK(scene.target.shape() == std::vector<int>{1, 128, 128});
    CHECK(scene.fragments.shape() == std::vector<int>{4, 128, 128});
    CHECK(count_positive(scene.target) == 1150);
    CHECK_FALSE(degenerate_overlap_warning(cfg).has_value());

    // each default fragment is a proper subset: the structure spans the grid
    const std::size_t total = count_positive(scene.target);
    for (int f = 0; f < 4; ++f) {
        Tensor one({1, 128, 128});
        for (int y = 0; y < 128; ++y) {
            for (int x = 0; x < 128; ++x) one.at(0, y, x) = scene.fragments.at(f, y, x);
        }
        const std::size_t frag = count_positive(one);
        CHECK(frag > 0);
        CHECK(frag < total);
    }
}

TEST_CASE("outline strokes are subsets of their filled counterparts") {
    Rng rng(1013);
    for (int iter = 0; iter < 20; ++iter) {
        SceneConfig cfg = random_config(rng);
        cfg.stroke = StrokeMode::Outline;
        const Tensor outline = render_structure(cfg);
        cfg.stroke = StrokeMode::Filled;
        const Tensor filled = render_structure(cfg);
        for (std::size_t i = 0; i < outline.size(); ++i) {
            REQUIRE(outline[i] <= filled[i]);
        }
        // a thick enough outline degenerates to the filled shape
        cfg.stroke = StrokeMode::Outline;
        cfg.thickness = cfg.image_size;
        const Tensor thick = render_structure(cfg);
        REQUIRE(thick == filled);
    }
}

TEST_CASE("filled circle pixel count brackets the continuous area") {
    SceneConfig cfg;
    cfg.stroke = StrokeMode::Filled;
    cfg.square_side = 1;  // park the square inside the circle
    cfg.square_x = 48;
    cfg.square_y = 48;
    const double r = cfg.circle_r;
    const double count = static_cast<double>(count_positive(render_structure(cfg)));
    const double pi = 3.14159265358979323846;
    CHECK(count > pi * (r - 1) * (r - 1));
    CHECK(count < pi * (r + 1) * (r + 1));
}

TEST_CASE("config validation rejects malformed geometry") {
    const auto expect_throw = [](auto&& mutate) {
        SceneConfig cfg;
        cfg.image_size = 32;
        cfg.circle_cx = cfg.circle_cy = 10;
        cfg.circle_r = 6;
        cfg.square_x = cfg.square_y = 12;
        cfg.square_side = 10;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    };
    expect_throw([](SceneConfig& c) { c.image_size = 1; });
    expect_throw([](SceneConfig& c) { c.grid_rows = 0; });
    expect_throw([](SceneConfig& c) { c.grid_rows = c.grid_cols = 1; });
    expect_throw([](SceneConfig& c) { c.grid_rows = 64; });
    expect_throw([](SceneConfig& c) { c.overlap = 0; });
    expect_throw([](SceneConfig& c) { c.circle_r = -1; });
    expect_throw([](SceneConfig& c) { c.circle_cx = 3; });  // circle leaves the image
    expect_throw([](SceneConfig& c) { c.square_side = 0; });
    expect_throw([](SceneConfig& c) { c.square_x = 30; });  // square leaves the image
    expect_throw([](SceneConfig& c) { c.thickness = 0; });

    SceneConfig ok;
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("degenerate overlap is warned about, not rejected") {
    SceneConfig cfg;
    CHECK_FALSE(degenerate_overlap_warning(cfg).has_value());
    cfg.overlap = cfg.image_size;
    CHECK_NOTHROW(cfg.validate());
    const auto warning = degenerate_overlap_warning(cfg);
    REQUIRE(warning.has_value());
    CHECK(warning->find("cover the whole image") != std::string::npos);
}

TEST_CASE("decompose validates the mask shape") {
    SceneConfig cfg;
    const Tensor mask = render_structure(cfg);
    CHECK_THROWS_AS(decompose(Tensor({1, 64, 64}), cfg), std::invalid_argument);
    CHECK_THROWS_AS(decompose(Tensor({2, 128, 128}), cfg), std::invalid_argument);
    CHECK_NOTHROW(decompose(mask, cfg));
}

TEST_CASE("save_scene / load_scene round-trips bitwise") {
    const fs::path dir = fs::temp_directory_path() / "flearn_scene_rt";
    fs::remove_all(dir);
    Rng rng(1019);
    for (int iter = 0; iter < 5; ++iter) {
        const FragmentScene scene = make_scene(random_config(rng));
        save_scene(scene, dir);
        const FragmentScene back = load_scene(dir);
        CHECK(configs_equal(scene.config, back.config));
        CHECK(scene.target == back.target);
        CHECK(scene.fragments == back.fragments);
    }
    fs::remove_all(dir);
}

TEST_CASE("saved scenes have canonical PGM headers and binary payloads") {
    const fs::path dir = fs::temp_directory_path() / "flearn_scene_pgm";
    fs::remove_all(dir);
    SceneConfig cfg;
    const FragmentScene scene = make_scene(cfg);
    save_scene(scene, dir);

    std::ifstream in(dir / "target.pgm", std::ios::binary);
    REQUIRE(in.good());
    std::string header(15, '\0');
    in.read(header.data(), 15);
    CHECK(header == "P5\n128 128\n255\n");
    std::vector<unsigned char> pixels(128 * 128);
    in.read(reinterpret_cast<char*>(pixels.data()), 128 * 128);
    REQUIRE(in.gcount() == 128 * 128);
    std::size_t positives = 0;
    for (unsigned char v : pixels) {
        REQUIRE((v == 0 || v == 255));
        positives += v == 255;
    }
    CHECK(positives == 1150);

    // saving twice produces byte-identical files
    std::ifstream a(dir / "fragment_0.pgm", std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    save_scene(scene, dir);
    std::ifstream b(dir / "fragment_0.pgm", std::ios::binary);
    const std::string bytes2((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
    CHECK_FALSE(bytes1.empty());
    fs::remove_all(dir);
}

TEST_CASE("load_scene reports tampered inputs by file name") {
    const fs::path dir = fs::temp_directory_path() / "flearn_scene_bad";

    const auto fresh = [&] {
        fs::remove_all(dir);
        SceneConfig cfg;
        cfg.image_size = 16;
        cfg.circle_cx = cfg.circle_cy = 5;
        cfg.circle_r = 3;
        cfg.square_x = cfg.square_y = 7;
        cfg.square_side = 6;
        cfg.overlap = 2;
        cfg.thickness = 1;
        save_scene(make_scene(cfg), dir);
    };
    const auto patch_manifest = [&](const std::string& from, const std::string& to) {
        std::ifstream in(dir / "scene.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto pos = text.find(from);
        REQUIRE(pos != std::string::npos);
        text.replace(pos, from.size(), to);
        std::ofstream out(dir / "scene.json");
        out << text;
    };

    SUBCASE("missing manifest") {
        fs::remove_all(dir);
        CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("scene.json"),
                             std::runtime_error);
    }
    SUBCASE("fragment count mismatch") {
        fresh();
        patch_manifest("\"grid_cols\": 2", "\"grid_cols\": 3");
        CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("manifest lists"),
                             std::runtime_error);
    }
    SUBCASE("dimension mismatch") {
        fresh();
        patch_manifest("\"image_size\": 16", "\"image_size\": 32");
        CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("expected 32x32"),
                             std::runtime_error);
    }
    SUBCASE("non-binary pixel") {
        fresh();
        PgmImage img = read_pgm(dir / "fragment_1.pgm");
        img.pixels[40] = 128;
        write_pgm(dir / "fragment_1.pgm", img);
        CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("non-binary pixel"),
                             std::runtime_error);
    }
    SUBCASE("unparseable manifest") {
        fresh();
        std::ofstream(dir / "scene.json") << "{ not json";
        CHECK_THROWS_AS(load_scene(dir), std::runtime_error);
    }
    SUBCASE("unsupported version") {
        fresh();
        patch_manifest("\"version\": 1", "\"version\": 2");
        CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("version"), std::runtime_error);
    }
    fs::remove_all(dir);
}

TEST_CASE("stroke mode names round-trip") {
    CHECK(parse_stroke_mode(to_string(StrokeMode::Filled)) == StrokeMode::Filled);
    CHECK(parse_stroke_mode(to_string(StrokeMode::Outline)) == StrokeMode::Outline);
    CHECK_THROWS_AS(parse_stroke_mode("dashed"), std::invalid_argument);
}
