#include "cnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace cnet {

TrainConfig TrainConfig::defaults(TaskKind task) {
    TrainConfig cfg;
    cfg.task = task;
    switch (task) {
        case TaskKind::Classify:
            cfg.lr = 5e-4;
            cfg.batch_size = 128;
            cfg.epochs = 200;
            break;
        case TaskKind::Regress:
            cfg.lr = 1e-3;
            cfg.batch_size = 32;
            cfg.epochs = 100;
            break;
        case TaskKind::Autoencode:
            cfg.lr = 1e-3;
            cfg.batch_size = 32;
            cfg.epochs = 200;
            break;
    }
    return cfg;
}

LossSpec loss_for_task(TaskKind task) {
    switch (task) {
        case TaskKind::Classify: return {LossKind::CrossEntropy};
        case TaskKind::Regress: return {LossKind::MaeReal};
        case TaskKind::Autoencode: return {LossKind::MseComplex};
    }
    return {};
}

namespace {

LossTarget target_for(TaskKind task, const DatasetRecord& rec) {
    switch (task) {
        case TaskKind::Classify:
            if (!rec.label)
                throw TrainError("record '" + rec.id + "' has no label");
            return *rec.label;
        case TaskKind::Regress:
            if (!rec.node_targets)
                throw TrainError("record '" + rec.id + "' has no node targets");
            return *rec.node_targets;
        case TaskKind::Autoencode:
            return rec.contour;
    }
    throw TrainError("unknown task");
}

const std::vector<double>& aux_for(const Model& model,
                                   const DatasetRecord& rec) {
    static const std::vector<double> empty;
    if (model.aux_dim == 0) return empty;
    if (!rec.features ||
        static_cast<int>(rec.features->size()) != model.aux_dim)
        throw TrainError("record '" + rec.id +
                         "' lacks the auxiliary features the model expects");
    return *rec.features;
}

double dataset_loss(Tape& tape, const Model& model, const LossSpec& loss,
                    TaskKind task, const std::vector<DatasetRecord>& records) {
    double acc = 0.0;
    for (const DatasetRecord& rec : records)
        acc += compute_loss(loss,
                            tape.forward(model, rec.contour,
                                         aux_for(model, rec)),
                            target_for(task, rec));
    return acc / static_cast<double>(records.size());
}

}  // namespace

History fit(Model& model, const std::vector<DatasetRecord>& records,
            const TrainConfig& cfg) {
    if (records.empty()) throw TrainError("no training records");
    if (cfg.batch_size < 1) throw TrainError("batch size must be >= 1");
    if (cfg.epochs < 0) throw TrainError("epochs must be >= 0");

    const LossSpec loss = loss_for_task(cfg.task);

    // Validation split; tiny datasets may end up without one.
    std::vector<DatasetRecord> train = records, val;
    if (records.size() >= 2 && cfg.val_fraction > 0.0) {
        auto parts = split_train_val(records, {cfg.val_fraction, cfg.seed});
        if (!parts.second.empty() && !parts.first.empty()) {
            train = std::move(parts.first);
            val = std::move(parts.second);
        }
    }

    Tape tape;
    AdamState adam(model.params.values.size(), cfg.lr);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x7261696eULL));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    History history;
    std::vector<double> grad(model.params.values.size());
    std::vector<double> batch_grad(model.params.values.size());
    std::vector<double> best_params = model.params.values;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            const std::size_t stop =
                std::min(order.size(), start + cfg.batch_size);
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const DatasetRecord& rec = train[order[i]];
                batch_loss += tape.forward_backward(
                    model, rec.contour, aux_for(model, rec), loss,
                    target_for(cfg.task, rec), grad);
                for (std::size_t p = 0; p < grad.size(); ++p)
                    batch_grad[p] += grad[p];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss))
                throw TrainError("non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(start / cfg.batch_size));
            for (double& g : batch_grad) g *= inv;
            adam_step(adam, model.params.values, batch_grad);
            model.clamp_constrained();
            epoch_loss += batch_loss * static_cast<double>(stop - start);
            seen += stop - start;
        }
        history.train_loss.push_back(epoch_loss /
                                     static_cast<double>(seen));

        const double vloss =
            val.empty() ? history.train_loss.back()
                        : dataset_loss(tape, model, loss, cfg.task, val);
        if (!std::isfinite(vloss))
            throw TrainError("non-finite validation loss at epoch " +
                             std::to_string(epoch));
        history.val_loss.push_back(vloss);
        if (vloss < best_val) {
            best_val = vloss;
            best_params = model.params.values;
            history.best_epoch = epoch;
        }
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << " train "
                      << history.train_loss.back() << " val " << vloss
                      << "\n";
    }
    if (history.best_epoch >= 0) model.params.values = best_params;
    return history;
}

double evaluate(const Model& model, const std::vector<DatasetRecord>& records,
                MetricKind metric, int iou_raster) {
    if (records.empty()) throw TrainError("cannot evaluate on empty records");
    Tape tape;
    double acc = 0.0;
    for (const DatasetRecord& rec : records) {
        const ModelOutput& out =
            tape.forward(model, rec.contour, aux_for(model, rec));
        switch (metric) {
            case MetricKind::Accuracy:
            case MetricKind::TestErrorPct: {
                if (!rec.label) throw TrainError("record without label");
                const auto it =
                    std::max_element(out.reals.begin(), out.reals.end());
                acc += (static_cast<int>(it - out.reals.begin()) ==
                        *rec.label)
                           ? 1.0
                           : 0.0;
                break;
            }
            case MetricKind::Mae: {
                if (!rec.node_targets)
                    throw TrainError("record without node targets");
                double e = 0.0;
                for (std::size_t i = 0; i < out.reals.size(); ++i)
                    e += std::fabs(out.reals[i] - (*rec.node_targets)[i]);
                acc += e / static_cast<double>(out.reals.size());
                break;
            }
            case MetricKind::Mse: {
                acc += compute_loss({LossKind::MseComplex}, out, rec.contour);
                break;
            }
            case MetricKind::Iou:
                acc += iou(rec.contour, out.contour, iou_raster);
                break;
        }
    }
    const double mean = acc / static_cast<double>(records.size());
    if (metric == MetricKind::TestErrorPct) return 100.0 * (1.0 - mean);
    return mean;
}

std::vector<double> baseline_finite_difference(const Contour& contour) {
    const int n = contour.n();
    if (n < 3) throw ShapeError("finite differences need n >= 3");
    auto ch = contour.channel(0);
    double chord = 0.0;
    for (int q = 0; q < n; ++q) chord += std::abs(ch[(q + 1) % n] - ch[q]);
    const double h = chord / n;
    std::vector<double> kappa(n, 0.0);
    if (h <= 0.0) return kappa;
    for (int q = 0; q < n; ++q) {
        const cplx prev = ch[(q - 1 + n) % n];
        const cplx next = ch[(q + 1) % n];
        const cplx d1 = (next - prev) / (2.0 * h);
        const cplx d2 = (next - 2.0 * ch[q] + prev) / (h * h);
        const double speed_sq = std::norm(d1);
        if (speed_sq < 1e-12) continue;
        const double num =
            std::fabs(d1.real() * d2.imag() - d1.imag() * d2.real());
        kappa[q] = num / (speed_sq * std::sqrt(speed_sq));
    }
    return kappa;
}

std::vector<double> baseline_circle_fit(const Contour& contour) {
    const int n = contour.n();
    if (n < 3) throw ShapeError("circle fitting needs n >= 3");
    auto ch = contour.channel(0);
    std::vector<double> kappa(n, 0.0);
    for (int q = 0; q < n; ++q) {
        const cplx A = ch[(q - 1 + n) % n];
        const cplx B = ch[q];
        const cplx C = ch[(q + 1) % n];
        const double a = std::abs(B - A);
        const double b = std::abs(C - B);
        const double c = std::abs(A - C);
        const double abc = a * b * c;
        if (abc == 0.0) continue;  // duplicate consecutive points
        const cplx u = B - A, v = C - A;
        const double area =
            0.5 * std::fabs(u.real() * v.imag() - u.imag() * v.real());
        if (area < 1e-14 * abc) continue;  // collinear
        kappa[q] = 4.0 * area / abc;
    }
    return kappa;
}

double evaluate_baseline(BaselineFn fn,
                         const std::vector<DatasetRecord>& records,
                         MetricKind metric) {
    if (records.empty()) throw TrainError("cannot evaluate on empty records");
    if (metric != MetricKind::Mae && metric != MetricKind::Mse)
        throw TrainError("baselines support mae/mse metrics");
    double acc = 0.0;
    for (const DatasetRecord& rec : records) {
        if (!rec.node_targets) throw TrainError("record without node targets");
        const std::vector<double> pred = fn(rec.contour);
        double e = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - (*rec.node_targets)[i];
            e += metric == MetricKind::Mae ? std::fabs(d) : d * d;
        }
        acc += e / static_cast<double>(pred.size());
    }
    return acc / static_cast<double>(records.size());
}

namespace {

// even-odd point-in-polygon on pixel centers
bool inside(const std::vector<std::pair<double, double>>& poly, double px,
            double py) {
    bool in = false;
    const std::size_t v = poly.size();
    for (std::size_t i = 0, j = v - 1; i < v; j = i++) {
        const auto& [xi, yi] = poly[i];
        const auto& [xj, yj] = poly[j];
        if ((yi > py) != (yj > py) &&
            px < (xj - xi) * (py - yi) / (yj - yi) + xi)
            in = !in;
    }
    return in;
}

std::vector<std::pair<double, double>> polygon_of(const Contour& c) {
    std::vector<std::pair<double, double>> poly(c.n());
    auto ch = c.channel(0);
    for (int q = 0; q < c.n(); ++q) poly[q] = {ch[q].real(), ch[q].imag()};
    return poly;
}

}  // namespace

double iou(const Contour& a, const Contour& b, int raster) {
    if (raster < 16) throw ShapeError("iou raster must be >= 16");
    const auto pa = polygon_of(a);
    const auto pb = polygon_of(b);

    double min_x = pa[0].first, max_x = pa[0].first;
    double min_y = pa[0].second, max_y = pa[0].second;
    for (const auto& poly : {&pa, &pb}) {
        for (const auto& [x, y] : *poly) {
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    const double margin_x = 0.05 * (max_x - min_x);
    const double margin_y = 0.05 * (max_y - min_y);
    min_x -= margin_x;
    max_x += margin_x;
    min_y -= margin_y;
    max_y += margin_y;
    if (max_x <= min_x || max_y <= min_y) return 0.0;

    std::int64_t inter = 0, uni = 0;
    for (int gy = 0; gy < raster; ++gy) {
        const double py = min_y + (max_y - min_y) * (gy + 0.5) / raster;
        for (int gx = 0; gx < raster; ++gx) {
            const double px = min_x + (max_x - min_x) * (gx + 0.5) / raster;
            const bool ia = inside(pa, px, py);
            const bool ib = inside(pb, px, py);
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cnet
