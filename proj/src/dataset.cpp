#include "cnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace cnet {

double FourierCurve::x(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc += ax[k - 1] * std::cos(k * t) + bx[k - 1] * std::sin(k * t);
    return acc;
}

double FourierCurve::y(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc += ay[k - 1] * std::cos(k * t) + by[k - 1] * std::sin(k * t);
    return acc;
}

double FourierCurve::dx(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc += k * (-ax[k - 1] * std::sin(k * t) + bx[k - 1] * std::cos(k * t));
    return acc;
}

double FourierCurve::dy(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc += k * (-ay[k - 1] * std::sin(k * t) + by[k - 1] * std::cos(k * t));
    return acc;
}

double FourierCurve::ddx(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc -= static_cast<double>(k) * k *
               (ax[k - 1] * std::cos(k * t) + bx[k - 1] * std::sin(k * t));
    return acc;
}

double FourierCurve::ddy(double t) const {
    double acc = 0.0;
    for (int k = 1; k <= modes(); ++k)
        acc -= static_cast<double>(k) * k *
               (ay[k - 1] * std::cos(k * t) + by[k - 1] * std::sin(k * t));
    return acc;
}

double analytic_curvature(const FourierCurve& curve, double t) {
    const double xd = curve.dx(t), yd = curve.dy(t);
    const double speed_sq = xd * xd + yd * yd;
    if (speed_sq < 1e-12)
        throw CuspError("vanishing speed; curvature undefined");
    const double num = std::fabs(xd * curve.ddy(t) - yd * curve.ddx(t));
    return num / (speed_sq * std::sqrt(speed_sq));
}

std::vector<double> arc_length_parameters(const FourierCurve& curve,
                                          int points, int grid,
                                          std::vector<double>* arc_positions) {
    const double two_pi = 2.0 * std::numbers::pi;
    // cumulative arc length over a dense grid, trapezoidal speeds
    std::vector<double> cum(grid + 1, 0.0);
    double prev_speed = std::hypot(curve.dx(0.0), curve.dy(0.0));
    for (int i = 1; i <= grid; ++i) {
        const double t = two_pi * i / grid;
        const double speed = std::hypot(curve.dx(t), curve.dy(t));
        cum[i] = cum[i - 1] + 0.5 * (prev_speed + speed) * (two_pi / grid);
        prev_speed = speed;
    }
    const double total = cum[grid];
    if (total <= 0.0) throw CuspError("degenerate curve with zero length");

    std::vector<double> params(points);
    if (arc_positions) arc_positions->assign(points, 0.0);
    int seg = 0;
    for (int j = 0; j < points; ++j) {
        const double s = total * j / points;
        while (seg + 1 <= grid && cum[seg + 1] <= s) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double f = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
        params[j] = two_pi * (seg + f) / grid;
        if (arc_positions) (*arc_positions)[j] = s;
    }
    return params;
}

GenResult generate_curvature_dataset(int count, std::uint64_t seed,
                                     GenOptions opts) {
    if (count < 1) throw ShapeError("dataset size must be >= 1");
    GenResult result;
    result.records.reserve(count);

    for (int idx = 0; idx < count; ++idx) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(idx)));
        bool emitted = false;
        for (int attempt = 0; attempt < opts.max_redraws; ++attempt) {
            const int m = static_cast<int>(
                rng.uniform_int(opts.min_modes, opts.max_modes));
            FourierCurve curve;
            curve.ax.resize(m);
            curve.bx.resize(m);
            curve.ay.resize(m);
            curve.by.resize(m);
            for (int k = 0; k < m; ++k) {
                curve.ax[k] = rng.uniform(-1.0, 1.0);
                curve.bx[k] = rng.uniform(-1.0, 1.0);
                curve.ay[k] = rng.uniform(-1.0, 1.0);
                curve.by[k] = rng.uniform(-1.0, 1.0);
            }
            try {
                const std::vector<double> params =
                    arc_length_parameters(curve, opts.points, opts.grid);
                std::vector<cplx> samples(opts.points);
                std::vector<double> kappa(opts.points);
                double max_kappa = 0.0;
                for (int j = 0; j < opts.points; ++j) {
                    samples[j] = {curve.x(params[j]), curve.y(params[j])};
                    kappa[j] = analytic_curvature(curve, params[j]);
                    max_kappa = std::max(max_kappa, kappa[j]);
                }
                if (max_kappa > opts.max_curvature) {
                    ++result.rejected;
                    continue;
                }
                DatasetRecord rec;
                rec.id = "curve-" + std::to_string(idx);
                rec.contour = Contour::from_channel(std::move(samples));
                if (opts.normalized) rec.contour = normalize(rec.contour);
                if (opts.with_curvature) rec.node_targets = std::move(kappa);
                if (opts.label_modes) rec.label = m - opts.min_modes;
                result.records.push_back(std::move(rec));
                emitted = true;
                break;
            } catch (const CuspError&) {
                ++result.rejected;
            }
        }
        if (!emitted)
            throw Error("curve generator exceeded redraw budget for record " +
                        std::to_string(idx));
    }
    return result;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

void write_jsonl(const std::vector<DatasetRecord>& records,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset: " + path);
    std::string line;
    for (const DatasetRecord& rec : records) {
        line.clear();
        line += "{\"id\":\"";
        line += rec.id;  // ids are generated tokens; no escaping needed
        line += "\",\"channels\":[";
        for (int c = 0; c < rec.contour.k(); ++c) {
            if (c) line += ',';
            line += '[';
            auto ch = rec.contour.channel(c);
            for (int q = 0; q < rec.contour.n(); ++q) {
                if (q) line += ',';
                line += '[';
                append_double(line, ch[q].real());
                line += ',';
                append_double(line, ch[q].imag());
                line += ']';
            }
            line += ']';
        }
        line += ']';
        if (rec.label) {
            line += ",\"label\":";
            line += std::to_string(*rec.label);
        }
        if (rec.node_targets) {
            line += ",\"node_targets\":[";
            for (std::size_t i = 0; i < rec.node_targets->size(); ++i) {
                if (i) line += ',';
                append_double(line, (*rec.node_targets)[i]);
            }
            line += ']';
        }
        if (rec.features) {
            line += ",\"features\":[";
            for (std::size_t i = 0; i < rec.features->size(); ++i) {
                if (i) line += ',';
                append_double(line, (*rec.features)[i]);
            }
            line += ']';
        }
        line += "}\n";
        out << line;
    }
    if (!out) throw IoError("failed writing dataset: " + path);
}

std::vector<DatasetRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read dataset: " + path);
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed record at " + path + ":" +
                          std::to_string(line_no) + ": " + e.what());
        }
        try {
            DatasetRecord rec;
            rec.id = j.at("id").get<std::string>();
            const auto& chans = j.at("channels");
            const int k = static_cast<int>(chans.size());
            if (k < 1) throw IoError("record without channels");
            const int n = static_cast<int>(chans[0].size());
            std::vector<cplx> data;
            data.reserve(static_cast<std::size_t>(k) * n);
            for (const auto& ch : chans) {
                if (static_cast<int>(ch.size()) != n)
                    throw IoError("ragged channels");
                for (const auto& z : ch)
                    data.emplace_back(z.at(0).get<double>(),
                                      z.at(1).get<double>());
            }
            rec.contour = Contour(k, n, std::move(data));
            if (j.contains("label")) rec.label = j["label"].get<int>();
            if (j.contains("node_targets"))
                rec.node_targets =
                    j["node_targets"].get<std::vector<double>>();
            if (j.contains("features"))
                rec.features = j["features"].get<std::vector<double>>();
            records.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed record at " + path + ":" +
                          std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("truncated IDX file: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) |
           (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

}  // namespace

std::pair<std::vector<GrayImage>, std::vector<int>> read_idx(
    const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError("cannot open IDX images: " + images_path);
    if (read_be32(imgs, images_path) != 0x00000803u)
        throw IoError("bad IDX image magic: " + images_path);
    const std::uint32_t count = read_be32(imgs, images_path);
    const std::uint32_t rows = read_be32(imgs, images_path);
    const std::uint32_t cols = read_be32(imgs, images_path);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IoError("cannot open IDX labels: " + labels_path);
    if (read_be32(labs, labels_path) != 0x00000801u)
        throw IoError("bad IDX label magic: " + labels_path);
    const std::uint32_t label_count = read_be32(labs, labels_path);
    if (label_count != count)
        throw IoError("IDX image/label count mismatch: " +
                      std::to_string(count) + " vs " +
                      std::to_string(label_count));

    std::vector<GrayImage> images;
    images.reserve(count);
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        GrayImage img(static_cast<int>(cols), static_cast<int>(rows));
        imgs.read(reinterpret_cast<char*>(img.pixels.data()),
                  static_cast<std::streamsize>(img.pixels.size()));
        if (!imgs) throw IoError("truncated IDX payload: " + images_path);
        images.push_back(std::move(img));
        unsigned char l;
        labs.read(reinterpret_cast<char*>(&l), 1);
        if (!labs) throw IoError("truncated IDX payload: " + labels_path);
        labels[i] = l;
    }
    return {std::move(images), std::move(labels)};
}

std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>>
split_train_val(const std::vector<DatasetRecord>& records, SplitSpec spec) {
    if (records.size() < 2)
        throw ShapeError("need at least two records to split");
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0))
        throw ShapeError("validation fraction must be in (0, 1)");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(order);
    const std::size_t val_count = static_cast<std::size_t>(
        std::llround(spec.fraction * static_cast<double>(records.size())));
    std::pair<std::vector<DatasetRecord>, std::vector<DatasetRecord>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const DatasetRecord& rec = records[order[i]];
        if (i < val_count)
            out.second.push_back(rec);
        else
            out.first.push_back(rec);
    }
    return out;
}

}  // namespace cnet
