#include "cnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace cnet {

namespace {

// is a*a/b > c*c/d for nonnegative integers, exact. Magnitudes here stay
// well inside __int128 for images up to ~400k pixels.
bool frac_greater(std::int64_t a, std::int64_t b, std::int64_t c,
                  std::int64_t d) {
    if (b == 0) return false;
    if (d == 0) return true;
    const __int128 lhs = static_cast<__int128>(a) * a * d;
    const __int128 rhs = static_cast<__int128>(c) * c * b;
    return lhs > rhs;
}

}  // namespace

int otsu_threshold_hist(const std::vector<std::uint64_t>& hist) {
    if (hist.size() != 256) throw ShapeError("otsu expects a 256-bin histogram");
    std::int64_t total = 0, total_sum = 0;
    for (int i = 0; i < 256; ++i) {
        total += static_cast<std::int64_t>(hist[i]);
        total_sum += static_cast<std::int64_t>(hist[i]) * i;
    }
    if (total == 0) throw ShapeError("otsu on empty histogram");

    int lo = 0, hi = 255;
    while (hist[lo] == 0 && lo < 255) ++lo;
    while (hist[hi] == 0 && hi > 0) --hi;
    if (lo == hi) return lo;  // constant image: foreground (> t) stays empty

    // Between-class variance at t is A^2 / B with
    //   A = S0 * w1 - S1 * w0,  B = w0 * w1
    // where w0/S0 count pixels <= t. Integer comparison keeps the argmax
    // exact; ties resolve to the lowest t.
    int best_t = lo;
    std::int64_t best_a = 0, best_b = 0;
    std::int64_t w0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += static_cast<std::int64_t>(hist[t]);
        s0 += static_cast<std::int64_t>(hist[t]) * t;
        const std::int64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const std::int64_t a = s0 * w1 - (total_sum - s0) * w0;
        const std::int64_t b = w0 * w1;
        if (frac_greater(std::llabs(a), b, best_a, best_b)) {
            best_t = t;
            best_a = std::llabs(a);
            best_b = b;
        }
    }
    return best_t;
}

int otsu_threshold(const GrayImage& img) {
    if (img.pixels.empty()) throw ShapeError("otsu on empty image");
    std::vector<std::uint64_t> hist(256, 0);
    for (std::uint8_t p : img.pixels) ++hist[p];
    return otsu_threshold_hist(hist);
}

BinaryImage binarize(const GrayImage& img, int threshold, bool invert) {
    BinaryImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const int v = invert ? 255 - img.pixels[i] : img.pixels[i];
        out.bits[i] = v > threshold ? 1 : 0;
    }
    return out;
}

namespace {

// Clockwise Moore neighbourhood starting west (image coords, y down).
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int dir_index(int dx, int dy) {
    for (int i = 0; i < 8; ++i)
        if (kDx[i] == dx && kDy[i] == dy) return i;
    throw Error("internal: invalid trace direction");
}

// Moore-neighbour tracing from the component's row-major-first pixel, with
// Jacob's stopping criterion (stop on re-entering the start pixel from the
// same backtrack position).
std::vector<std::pair<int, int>> trace_boundary(const BinaryImage& img,
                                                int sx, int sy) {
    const auto fg = [&](int x, int y) {
        return x >= 0 && x < img.width && y >= 0 && y < img.height &&
               img.at(x, y) != 0;
    };
    std::vector<std::pair<int, int>> boundary{{sx, sy}};
    int px = sx, py = sy;      // current boundary pixel
    int bx = sx - 1, by = sy;  // backtrack (background; may be out of bounds)
    const int b0x = bx, b0y = by;
    const std::size_t cap = 8ULL * img.width * img.height + 16;

    for (std::size_t iter = 0; iter < cap; ++iter) {
        const int bi = dir_index(bx - px, by - py);
        int cx = 0, cy = 0;
        int prevx = bx, prevy = by;
        bool found = false;
        for (int step = 1; step <= 8; ++step) {
            const int d = (bi + step) % 8;
            const int qx = px + kDx[d], qy = py + kDy[d];
            if (fg(qx, qy)) {
                cx = qx;
                cy = qy;
                found = true;
                break;
            }
            prevx = qx;
            prevy = qy;
        }
        if (!found) break;  // isolated pixel
        if (cx == sx && cy == sy && prevx == b0x && prevy == b0y)
            break;  // full loop closed
        boundary.emplace_back(cx, cy);
        bx = prevx;
        by = prevy;
        px = cx;
        py = cy;
    }
    return boundary;
}

}  // namespace

double shoelace_area(const PixelChain& chain) {
    double acc = 0.0;
    const std::size_t v = chain.points.size();
    for (std::size_t i = 0; i < v; ++i) {
        const auto& [x0, y0] = chain.points[i];
        const auto& [x1, y1] = chain.points[(i + 1) % v];
        acc += x0 * y1 - x1 * y0;
    }
    return 0.5 * acc;
}

double chain_length(const PixelChain& chain) {
    double acc = 0.0;
    const std::size_t v = chain.points.size();
    for (std::size_t i = 0; i < v; ++i) {
        const auto& [x0, y0] = chain.points[i];
        const auto& [x1, y1] = chain.points[(i + 1) % v];
        acc += std::hypot(x1 - x0, y1 - y0);
    }
    return acc;
}

PixelChain extract_largest_contour(const BinaryImage& img) {
    std::vector<std::uint8_t> seen(img.bits.size(), 0);
    PixelChain best;
    double best_area = -1.0;

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
            if (img.bits[idx] == 0 || seen[idx]) continue;

            // flood-fill the 8-connected component, remembering this pixel
            // as its row-major-first (so the west neighbour is background)
            std::deque<std::pair<int, int>> queue{{x, y}};
            seen[idx] = 1;
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                for (int d = 0; d < 8; ++d) {
                    const int nx = cx + kDx[d], ny = cy + kDy[d];
                    if (nx < 0 || nx >= img.width || ny < 0 || ny >= img.height)
                        continue;
                    const std::size_t nidx =
                        static_cast<std::size_t>(ny) * img.width + nx;
                    if (img.bits[nidx] == 0 || seen[nidx]) continue;
                    seen[nidx] = 1;
                    queue.emplace_back(nx, ny);
                }
            }

            const auto boundary = trace_boundary(img, x, y);
            if (boundary.size() < 3) continue;
            PixelChain chain;
            chain.points.reserve(boundary.size());
            for (const auto& [bx, by] : boundary)
                chain.points.emplace_back(static_cast<double>(bx),
                                          static_cast<double>(by));
            const double area = std::fabs(shoelace_area(chain));
            if (area > best_area) {
                best_area = area;
                best = std::move(chain);
            }
        }
    }
    if (best.points.size() < 3)
        throw NoContour("no foreground boundary with nonzero area");
    if (shoelace_area(best) < 0.0)
        std::reverse(best.points.begin() + 1, best.points.end());
    return best;
}

Contour resample_equidistant(const PixelChain& chain, int n) {
    if (n < 3) throw ShapeError("resampling needs n >= 3");
    const std::size_t v = chain.points.size();
    if (v < 3) throw NoContour("chain too short to resample");

    std::vector<double> cum(v + 1, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
        const auto& [x0, y0] = chain.points[i];
        const auto& [x1, y1] = chain.points[(i + 1) % v];
        cum[i + 1] = cum[i] + std::hypot(x1 - x0, y1 - y0);
    }
    const double total = cum[v];
    if (total <= 0.0) throw DegenerateContour("zero-length chain");

    std::vector<cplx> samples(n);
    std::size_t seg = 0;
    for (int j = 0; j < n; ++j) {
        const double s = total * j / n;
        while (seg + 1 < v && cum[seg + 1] <= s) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double f = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
        const auto& [x0, y0] = chain.points[seg];
        const auto& [x1, y1] = chain.points[(seg + 1) % v];
        samples[j] = {x0 + f * (x1 - x0), y0 + f * (y1 - y0)};
    }
    return Contour::from_channel(std::move(samples));
}

std::vector<double> radial_histogram(const GrayImage& img, int bins,
                                     RadialWeight weight) {
    if (bins < 1) throw ShapeError("radial histogram needs bins >= 1");
    std::vector<double> out(bins, 0.0);

    double total = 0.0, cx = 0.0, cy = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double w = img.at(x, y);
            total += w;
            cx += w * x;
            cy += w * y;
        }
    }
    if (total == 0.0) return out;  // all-zero image
    cx /= total;
    cy /= total;

    double rmax = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (img.at(x, y) > 0)
                rmax = std::max(rmax, std::hypot(x - cx, y - cy));

    double mass = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (img.at(x, y) == 0) continue;
            const double w =
                weight == RadialWeight::Intensity ? img.at(x, y) : 1.0;
            int bin = 0;
            if (rmax > 0.0) {
                const double r = std::hypot(x - cx, y - cy);
                bin = std::min(static_cast<int>(r / rmax * bins), bins - 1);
            }
            out[bin] += w;
            mass += w;
        }
    }
    for (double& b : out) b /= mass;
    return out;
}

Contour image_to_contour_raw(const GrayImage& img, int n, bool invert) {
    GrayImage work = img;
    if (invert)
        for (std::uint8_t& p : work.pixels) p = static_cast<std::uint8_t>(255 - p);
    const int t = otsu_threshold(work);
    const BinaryImage bin = binarize(work, t, false);
    return resample_equidistant(extract_largest_contour(bin), n);
}

Contour image_to_contour(const GrayImage& img, int n, bool invert) {
    return normalize(image_to_contour_raw(img, n, invert));
}

namespace {

int pgm_token(std::istream& in) {
    // skips whitespace and '#' comments
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value;
    if (!(in >> value)) throw IoError("malformed PGM header");
    return value;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw IoError("not a binary PGM (P5): " + path);
    const int w = pgm_token(in);
    const int h = pgm_token(in);
    const int maxval = pgm_token(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw IoError("unsupported PGM dimensions/maxval: " + path);
    in.get();  // single whitespace before payload
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw IoError("truncated PGM payload: " + path);
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

GrayImage read_raw_with_sidecar(const std::string& path) {
    std::ifstream dims(path + ".dims");
    if (!dims) throw IoError("missing sidecar dimensions: " + path + ".dims");
    int w = 0, h = 0;
    if (!(dims >> w >> h) || w < 1 || h < 1)
        throw IoError("malformed sidecar dimensions: " + path + ".dims");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw IoError("raw image shorter than sidecar dimensions: " + path);
    return img;
}

}  // namespace cnet
