#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "cnet/dataset.hpp"

using namespace cnet;

namespace {

FourierCurve circle_curve() {
    FourierCurve c;
    c.ax = {1.0};
    c.bx = {0.0};
    c.ay = {0.0};
    c.by = {1.0};
    return c;
}

// curvature via numerically differentiated coordinates, independent of the
// analytic derivative formulas
double fd_curvature(const FourierCurve& c, double t, double dt = 1e-5) {
    const double xd = (c.x(t + dt) - c.x(t - dt)) / (2 * dt);
    const double yd = (c.y(t + dt) - c.y(t - dt)) / (2 * dt);
    const double xdd = (c.x(t + dt) - 2 * c.x(t) + c.x(t - dt)) / (dt * dt);
    const double ydd = (c.y(t + dt) - 2 * c.y(t) + c.y(t - dt)) / (dt * dt);
    const double sp = xd * xd + yd * yd;
    return std::fabs(xd * ydd - yd * xdd) / (sp * std::sqrt(sp));
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("curvature: circle has kappa = 1 everywhere") {
    const FourierCurve c = circle_curve();
    for (double t : {0.0, 0.7, 2.0, 4.5})
        CHECK(analytic_curvature(c, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("curvature: ellipse 2cos/sin has kappa(0) = 2") {
    FourierCurve e;
    e.ax = {2.0};
    e.bx = {0.0};
    e.ay = {0.0};
    e.by = {1.0};
    CHECK(analytic_curvature(e, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("curvature: scaling the curve by s scales kappa by 1/s") {
    Rng rng(211);
    FourierCurve c;
    for (int k = 0; k < 3; ++k) {
        c.ax.push_back(rng.uniform(-1.0, 1.0));
        c.bx.push_back(rng.uniform(-1.0, 1.0));
        c.ay.push_back(rng.uniform(-1.0, 1.0));
        c.by.push_back(rng.uniform(-1.0, 1.0));
    }
    FourierCurve scaled = c;
    for (auto* v : {&scaled.ax, &scaled.bx, &scaled.ay, &scaled.by})
        for (double& x : *v) x *= 3.0;
    for (double t : {0.3, 1.1, 5.0})
        CHECK(analytic_curvature(scaled, t) ==
              doctest::Approx(analytic_curvature(c, t) / 3.0).epsilon(1e-10));
}

TEST_CASE("curvature: vanishing speed raises CuspError") {
    FourierCurve flat;
    flat.ax = {1.0};
    flat.bx = {0.0};
    flat.ay = {0.0};
    flat.by = {0.0};  // y identically 0, speed vanishes at t = 0
    CHECK_THROWS_AS(analytic_curvature(flat, 0.0), CuspError);
}

TEST_CASE("curvature: analytic values match numeric differentiation") {
    Rng rng(213);
    FourierCurve c;
    for (int k = 0; k < 4; ++k) {
        c.ax.push_back(rng.uniform(-1.0, 1.0));
        c.bx.push_back(rng.uniform(-1.0, 1.0));
        c.ay.push_back(rng.uniform(-1.0, 1.0));
        c.by.push_back(rng.uniform(-1.0, 1.0));
    }
    std::vector<double> rel;
    for (int i = 0; i < 100; ++i) {
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double analytic;
        try {
            analytic = analytic_curvature(c, t);
        } catch (const CuspError&) {
            continue;
        }
        const double numeric = fd_curvature(c, t);
        rel.push_back(std::fabs(analytic - numeric) /
                      std::max(analytic, 1e-8));
    }
    REQUIRE(rel.size() > 50);
    std::sort(rel.begin(), rel.end());
    CHECK(rel[rel.size() / 2] <= 1e-4);  // median
}

TEST_CASE("arc-length sampling: equal gaps and monotone cumulative length") {
    Rng rng(217);
    FourierCurve c;
    for (int k = 0; k < 3; ++k) {
        c.ax.push_back(rng.uniform(-1.0, 1.0));
        c.bx.push_back(rng.uniform(-1.0, 1.0));
        c.ay.push_back(rng.uniform(-1.0, 1.0));
        c.by.push_back(rng.uniform(-1.0, 1.0));
    }
    std::vector<double> arcs;
    const std::vector<double> params = arc_length_parameters(c, 100, 10000, &arcs);
    REQUIRE(params.size() == 100);
    for (std::size_t i = 1; i < arcs.size(); ++i) CHECK(arcs[i] > arcs[i - 1]);

    // integrate the speed densely between consecutive parameters
    const auto arc_between = [&](double t0, double t1) {
        const int steps = 400;
        double acc = 0.0;
        double prev = std::hypot(c.dx(t0), c.dy(t0));
        for (int s = 1; s <= steps; ++s) {
            const double t = t0 + (t1 - t0) * s / steps;
            const double sp = std::hypot(c.dx(t), c.dy(t));
            acc += 0.5 * (prev + sp) * (t1 - t0) / steps;
            prev = sp;
        }
        return acc;
    };
    double total = 0.0;
    std::vector<double> gaps(100);
    for (int i = 0; i < 100; ++i) {
        const double t1 = i + 1 < 100 ? params[i + 1]
                                      : params[0] + 2.0 * std::numbers::pi;
        gaps[i] = arc_between(params[i], t1);
        total += gaps[i];
    }
    for (double g : gaps) CHECK(std::fabs(g - total / 100) / (total / 100) <= 0.005);
}

TEST_CASE("generator: caps curvature, 100 points, deterministic") {
    const GenResult a = generate_curvature_dataset(20, 42);
    const GenResult b = generate_curvature_dataset(20, 42);
    REQUIRE(a.records.size() == 20);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const DatasetRecord& rec = a.records[i];
        CHECK(rec.contour.n() == 100);
        CHECK(rec.contour.k() == 1);
        REQUIRE(rec.node_targets.has_value());
        CHECK(rec.node_targets->size() == 100);
        for (double kappa : *rec.node_targets) {
            CHECK(kappa >= 0.0);
            CHECK(kappa <= 1000.0);
        }
        CHECK(rec.contour.data() == b.records[i].contour.data());
        CHECK(*rec.node_targets == *b.records[i].node_targets);
    }
    const GenResult c = generate_curvature_dataset(20, 43);
    CHECK(a.records[0].contour.data() != c.records[0].contour.data());
}

TEST_CASE("generator: mode labels are uniform within 3 sigma") {
    GenOptions opts;
    opts.with_curvature = false;
    opts.label_modes = true;
    const GenResult r = generate_curvature_dataset(400, 7, opts);
    std::vector<int> counts(4, 0);
    for (const DatasetRecord& rec : r.records) ++counts.at(*rec.label);
    for (int c : counts) {
        // binomial(400, 1/4): 3 sigma ~ 26
        CHECK(c >= 100 - 26);
        CHECK(c <= 100 + 26);
    }
}

TEST_CASE("jsonl: round trip preserves every field bit-for-bit") {
    Rng rng(219);
    std::vector<DatasetRecord> records;
    DatasetRecord multi;
    multi.id = "multi-0";
    {
        std::vector<cplx> data;
        for (int i = 0; i < 4 * 6; ++i)
            data.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        multi.contour = Contour(4, 6, std::move(data));
    }
    multi.label = 3;
    multi.features = std::vector<double>{0.25, 1.0 / 3.0, 1e-17};
    records.push_back(multi);
    DatasetRecord targets;
    targets.id = "targets-1";
    targets.contour = Contour(1, 3, {cplx{0.1, -0.2}, cplx{1e300, 0.0},
                                     cplx{-3.0, 5e-324}});
    targets.node_targets = std::vector<double>{0.0, 123.456, 1e-9};
    records.push_back(targets);

    const std::string path = "/tmp/cnet_test_ds.jsonl";
    write_jsonl(records, path);
    const std::vector<DatasetRecord> back = read_jsonl(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "multi-0");
    CHECK(back[0].contour.k() == 4);
    CHECK(back[0].contour.data() == multi.contour.data());
    CHECK(*back[0].label == 3);
    CHECK(*back[0].features == *multi.features);
    CHECK(!back[0].node_targets.has_value());
    CHECK(back[1].contour.data() == targets.contour.data());
    CHECK(*back[1].node_targets == *targets.node_targets);
    std::remove(path.c_str());
}

TEST_CASE("jsonl: empty file and malformed lines") {
    const std::string path = "/tmp/cnet_test_empty.jsonl";
    { std::ofstream out(path); }
    CHECK(read_jsonl(path).empty());
    {
        std::ofstream out(path);
        out << R"({"id":"ok","channels":[[[1,0]]]})" << "\n";
        out << "{nope\n";
    }
    try {
        read_jsonl(path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("idx: handcrafted pair parses; corrupt inputs error") {
    const std::string imgs = "/tmp/cnet_test_images.idx";
    const std::string labs = "/tmp/cnet_test_labels.idx";
    const auto be32 = [](std::ofstream& f, std::uint32_t v) {
        const unsigned char b[4] = {
            static_cast<unsigned char>(v >> 24),
            static_cast<unsigned char>(v >> 16),
            static_cast<unsigned char>(v >> 8),
            static_cast<unsigned char>(v)};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    {
        std::ofstream fi(imgs, std::ios::binary);
        be32(fi, 0x803);
        be32(fi, 1);
        be32(fi, 2);
        be32(fi, 3);
        const unsigned char payload[6] = {1, 2, 3, 4, 5, 6};
        fi.write(reinterpret_cast<const char*>(payload), 6);
        std::ofstream fl(labs, std::ios::binary);
        be32(fl, 0x801);
        be32(fl, 1);
        const unsigned char label = 7;
        fl.write(reinterpret_cast<const char*>(&label), 1);
    }
    const auto [images, labels] = read_idx(imgs, labs);
    REQUIRE(images.size() == 1);
    CHECK(images[0].width == 3);
    CHECK(images[0].height == 2);
    CHECK(images[0].at(2, 1) == 6);
    CHECK(labels[0] == 7);

    {
        std::ofstream fl(labs, std::ios::binary);
        be32(fl, 0x801);
        be32(fl, 2);  // count mismatch
    }
    CHECK_THROWS_AS(read_idx(imgs, labs), IoError);
    {
        std::ofstream fi(imgs, std::ios::binary);
        be32(fi, 0x123);  // bad magic
    }
    CHECK_THROWS_AS(read_idx(imgs, labs), IoError);
    {
        std::ofstream fi(imgs, std::ios::binary);
        be32(fi, 0x803);
        be32(fi, 1);
        be32(fi, 28);
        be32(fi, 28);  // truncated payload
    }
    {
        std::ofstream fl(labs, std::ios::binary);
        be32(fl, 0x801);
        be32(fl, 1);
        const char label = 1;
        fl.write(&label, 1);
    }
    CHECK_THROWS_AS(read_idx(imgs, labs), IoError);
    std::remove(imgs.c_str());
    std::remove(labs.c_str());
}

TEST_CASE("split: sizes, determinism, exhaustive union") {
    std::vector<DatasetRecord> records(10);
    for (int i = 0; i < 10; ++i) {
        records[i].id = "r" + std::to_string(i);
        records[i].contour = Contour(1, 2);
    }
    const auto [train, val] = split_train_val(records, {0.1, 5});
    CHECK(train.size() == 9);
    CHECK(val.size() == 1);
    const auto [train2, val2] = split_train_val(records, {0.1, 5});
    CHECK(val2[0].id == val[0].id);

    std::vector<std::string> ids;
    for (const auto& r : train) ids.push_back(r.id);
    for (const auto& r : val) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> expect;
    for (const auto& r : records) expect.push_back(r.id);
    std::sort(expect.begin(), expect.end());
    CHECK(ids == expect);

    std::vector<DatasetRecord> one(1);
    one[0].contour = Contour(1, 2);
    CHECK_THROWS_AS(split_train_val(one, {0.1, 5}), ShapeError);
}

}  // TEST_SUITE
