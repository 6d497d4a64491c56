#include "fpaint/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpaint {

// ---------------------------------------------------------------------------
// affine helpers
// ---------------------------------------------------------------------------

Affine Affine::inverse() const {
    const double det = a * d - b * c;
    if (std::fabs(det) < 1e-12) throw std::invalid_argument("degenerate affine transform");
    const double inv = 1.0 / det;
    Affine r;
    r.a = d * inv;
    r.b = -b * inv;
    r.c = -c * inv;
    r.d = a * inv;
    r.tx = -(r.a * tx + r.b * ty);
    r.ty = -(r.c * tx + r.d * ty);
    return r;
}

Affine Affine::trs(double angle, double scale, double x, double y) {
    Affine t;
    t.a = std::cos(angle) * scale;
    t.b = -std::sin(angle) * scale;
    t.c = std::sin(angle) * scale;
    t.d = std::cos(angle) * scale;
    t.tx = x;
    t.ty = y;
    return t;
}

void SyntheticScene::validate() const {
    if (width <= 0 || height <= 0 || frame_count <= 0) {
        throw std::invalid_argument("scene: bad dimensions");
    }
    for (const auto& obj : objects) {
        if (static_cast<int>(obj.frames.size()) != frame_count) {
            throw std::invalid_argument("scene: object trajectory length != frame_count");
        }
        for (const auto& t : obj.frames) {
            if (std::fabs(t.det()) < 1e-12) throw std::invalid_argument("scene: degenerate transform");
        }
    }
}

// ---------------------------------------------------------------------------
// procedural texture: two-octave value noise, smooth and deterministic
// ---------------------------------------------------------------------------

namespace {

double lattice_value(std::uint64_t seed, std::int64_t i, std::int64_t j) {
    std::uint64_t s = seed ^ (static_cast<std::uint64_t>(i) * 0x8da6b343u) ^
                      (static_cast<std::uint64_t>(j) * 0xd8163841u);
    return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double u, double v) {
    const double fu = std::floor(u), fv = std::floor(v);
    const std::int64_t iu = static_cast<std::int64_t>(fu), iv = static_cast<std::int64_t>(fv);
    const double du = u - fu, dv = v - fv;
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
    const double su = smooth(du), sv = smooth(dv);
    const double v00 = lattice_value(seed, iu, iv);
    const double v10 = lattice_value(seed, iu + 1, iv);
    const double v01 = lattice_value(seed, iu, iv + 1);
    const double v11 = lattice_value(seed, iu + 1, iv + 1);
    return (v00 * (1 - su) + v10 * su) * (1 - sv) + (v01 * (1 - su) + v11 * su) * sv;
}

double octave_noise(std::uint64_t seed, double u, double v, double scale) {
    return 0.65 * value_noise(seed, u / scale, v / scale) +
           0.35 * value_noise(seed ^ 0x9d2c5680u, 2.0 * u / scale, 2.0 * v / scale);
}

std::array<float, 3> textured_color(const std::array<float, 3>& base, std::uint64_t seed, double u,
                                    double v, double scale, double amp) {
    const double n = octave_noise(seed, u, v, scale);
    const double m = value_noise(seed ^ 0xb5297a4du, u / scale * 1.7, v / scale * 1.7);
    std::array<float, 3> out;
    for (int c = 0; c < 3; ++c) {
        const double val = base[c] * (1.0 - 0.65 * amp + amp * n) + 0.16 * amp * (m - 0.5);
        out[c] = static_cast<float>(std::clamp(val, 0.0, 1.0));
    }
    return out;
}

bool inside_shape(const SceneObject& obj, double u, double v) {
    switch (obj.shape) {
        case ShapeKind::rect:
            return std::fabs(u) <= obj.half_w && std::fabs(v) <= obj.half_h;
        case ShapeKind::disk:
            return u * u + v * v <= obj.half_w * obj.half_w;
        case ShapeKind::triangle:
            if (v < -obj.half_h || v > obj.half_h) return false;
            return std::fabs(u) <= obj.half_w * (v + obj.half_h) / (2.0 * obj.half_h);
    }
    return false;
}

// topmost object containing the canvas point, -1 for background
int owner_at(const SyntheticScene& scene, int frame, double cx, double cy) {
    for (int k = static_cast<int>(scene.objects.size()) - 1; k >= 0; --k) {
        const auto& obj = scene.objects[k];
        auto [u, v] = obj.frames[frame].inverse().apply(cx, cy);
        if (inside_shape(obj, u, v)) return k;
    }
    return -1;
}

}  // namespace

std::vector<int> ownership_map(const SyntheticScene& scene, int frame) {
    std::vector<int> out(static_cast<std::size_t>(scene.width) * scene.height, -1);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x)
            out[static_cast<std::size_t>(y) * scene.width + x] =
                owner_at(scene, frame, x + 0.5, y + 0.5);
    return out;
}

Tensor<float> render_frame(const SyntheticScene& scene, int frame) {
    scene.validate();
    if (frame < 0 || frame >= scene.frame_count) throw std::invalid_argument("render_frame: index out of range");
    const int w = scene.width, h = scene.height;
    Tensor<float> img = Tensor<float>::zeros({3, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            std::array<float, 3> col;
            const int k = owner_at(scene, frame, cx, cy);
            if (k < 0) {
                col = textured_color(scene.bg_color, scene.bg_texture_seed, cx, cy,
                                     scene.bg_texture_scale, scene.bg_texture_amp);
            } else {
                const auto& obj = scene.objects[k];
                auto [u, v] = obj.frames[frame].inverse().apply(cx, cy);
                col = textured_color(obj.color, obj.texture_seed, u, v, obj.texture_scale, obj.texture_amp);
            }
            for (int c = 0; c < 3; ++c) {
                (*img.data)[(static_cast<std::size_t>(c) * h + y) * w + x] = col[c];
            }
        }
    }
    return img;
}

SceneRender render_scene(const SyntheticScene& scene) {
    SceneRender out;
    out.frames.reserve(scene.frame_count);
    for (int f = 0; f < scene.frame_count; ++f) out.frames.push_back(render_frame(scene, f));
    return out;
}

FlowField analytic_flow(const SyntheticScene& scene, int from_frame, int to_frame,
                        FlowField::Direction label) {
    scene.validate();
    const int w = scene.width, h = scene.height;
    FlowField flow;
    flow.width = w;
    flow.height = h;
    flow.direction = label;
    flow.dx.assign(static_cast<std::size_t>(w) * h, 0.f);
    flow.dy.assign(static_cast<std::size_t>(w) * h, 0.f);
    flow.valid.assign(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double cx = x + 0.5, cy = y + 0.5;
            const int k = owner_at(scene, from_frame, cx, cy);
            double qx = cx, qy = cy;
            if (k >= 0) {
                const auto& obj = scene.objects[k];
                auto [u, v] = obj.frames[from_frame].inverse().apply(cx, cy);
                std::tie(qx, qy) = obj.frames[to_frame].apply(u, v);
            }
            const bool in_canvas = qx >= 0.0 && qx < w && qy >= 0.0 && qy < h;
            const bool visible = in_canvas && owner_at(scene, to_frame, qx, qy) == k;
            if (visible) {
                flow.dx[i] = static_cast<float>(qx - cx);
                flow.dy[i] = static_cast<float>(qy - cy);
                flow.valid[i] = 1;
            }
        }
    }
    return flow;
}

TrackSet analytic_tracks(const SyntheticScene& scene, int query_frame, int other_frame) {
    const FlowField flow = analytic_flow(scene, query_frame, other_frame,
                                         FlowField::Direction::target_to_source);
    TrackSet tracks;
    tracks.width = flow.width;
    tracks.height = flow.height;
    const std::size_t n = flow.dx.size();
    tracks.px.resize(n);
    tracks.py.resize(n);
    tracks.visible.resize(n);
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * flow.width + x;
            tracks.px[i] = static_cast<float>(x) + flow.dx[i];
            tracks.py[i] = static_cast<float>(y) + flow.dy[i];
            tracks.visible[i] = flow.valid[i];
        }
    }
    return tracks;
}

// ---------------------------------------------------------------------------
// block-matching flow
// ---------------------------------------------------------------------------

FlowField estimate_flow_block_matching(const Tensor<float>& src, const Tensor<float>& tgt, int block,
                                       int radius) {
    if (src.shape != tgt.shape || src.ndim() != 3) {
        throw std::invalid_argument("estimate_flow_block_matching: images must share [C,H,W] dims");
    }
    const int c = src.dim(0), h = src.dim(1), w = src.dim(2);
    if (block < 1) throw std::invalid_argument("estimate_flow_block_matching: block must be >= 1");
    if (radius < 0 || radius >= std::min(h, w)) {
        throw std::invalid_argument("estimate_flow_block_matching: radius must be < min image dim");
    }

    // candidate displacements ordered by magnitude so ties resolve toward zero
    std::vector<std::pair<int, int>> candidates;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) candidates.emplace_back(dx, dy);
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        const int ma = a.first * a.first + a.second * a.second;
        const int mb = b.first * b.first + b.second * b.second;
        if (ma != mb) return ma < mb;
        if (a.second != b.second) return a.second < b.second;
        return a.first < b.first;
    });

    FlowField flow;
    flow.width = w;
    flow.height = h;
    flow.direction = FlowField::Direction::target_to_source;
    flow.dx.assign(static_cast<std::size_t>(w) * h, 0.f);
    flow.dy.assign(static_cast<std::size_t>(w) * h, 0.f);
    flow.valid.assign(static_cast<std::size_t>(w) * h, 1);

    const float* sp = src.ptr();
    const float* tp = tgt.ptr();
    for (int by = 0; by < h; by += block) {
        const int bh = std::min(block, h - by);
        for (int bx = 0; bx < w; bx += block) {
            const int bw = std::min(block, w - bx);
            double best = -1.0;
            int best_dx = 0, best_dy = 0;
            for (const auto& [dx, dy] : candidates) {
                if (bx + dx < 0 || bx + bw + dx > w || by + dy < 0 || by + bh + dy > h) continue;
                double cost = 0.0;
                for (int ch = 0; ch < c; ++ch) {
                    const std::size_t splane = static_cast<std::size_t>(ch) * h;
                    for (int y = 0; y < bh; ++y) {
                        const float* trow = tp + (splane + by + y) * w + bx;
                        const float* srow = sp + (splane + by + y + dy) * w + bx + dx;
                        for (int x = 0; x < bw; ++x) {
                            const double d = static_cast<double>(trow[x]) - srow[x];
                            cost += d * d;
                        }
                    }
                    if (best >= 0.0 && cost >= best) break;
                }
                if (best < 0.0 || cost < best) {
                    best = cost;
                    best_dx = dx;
                    best_dy = dy;
                }
            }
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x) {
                    const std::size_t i = static_cast<std::size_t>(by + y) * w + bx + x;
                    flow.dx[i] = static_cast<float>(best_dx);
                    flow.dy[i] = static_cast<float>(best_dy);
                }
        }
    }
    return flow;
}

// ---------------------------------------------------------------------------
// pair filter
// ---------------------------------------------------------------------------

double mean_moving_flow(const FlowField& flow) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            const double m = flow.magnitude(x, y);
            if (m > 0.5) {
                sum += m;
                ++count;
            }
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

bool accept_pair(int src_frame, int tgt_frame, const FlowField& flow_t2s, const PairFilter& filter) {
    if (std::abs(tgt_frame - src_frame) <= filter.min_interval) return false;
    const double mean = mean_moving_flow(flow_t2s);
    return mean >= filter.tau_lo && mean <= filter.tau_hi;
}

// ---------------------------------------------------------------------------
// signal extraction
// ---------------------------------------------------------------------------

Tensor<float> sketch_from_flow(const FlowField& flow_t2s, double threshold_frac) {
    const int w = flow_t2s.width, h = flow_t2s.height;
    std::vector<double> mag(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            mag[static_cast<std::size_t>(y) * w + x] = flow_t2s.magnitude(x, y);

    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return mag[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<double> grad(static_cast<std::size_t>(w) * h);
    double max_grad = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                              (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            const double g = std::sqrt(gx * gx + gy * gy);
            grad[static_cast<std::size_t>(y) * w + x] = g;
            max_grad = std::max(max_grad, g);
        }
    }
    Tensor<float> sketch = Tensor<float>::zeros({1, h, w});
    if (max_grad <= 0.0) return sketch;
    const double threshold = threshold_frac * max_grad;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        (*sketch.data)[i] = grad[i] > threshold ? 1.f : 0.f;
    }
    return sketch;
}

DragPointSet sample_drag_points(const FlowField& flow_t2s, const TrackSet& tracks, int k,
                                std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("sample_drag_points: k must be >= 1");
    if (flow_t2s.width != tracks.width || flow_t2s.height != tracks.height) {
        throw std::invalid_argument("sample_drag_points: flow and tracks disagree on dims");
    }
    const int w = flow_t2s.width, h = flow_t2s.height;
    std::vector<double> cdf(static_cast<std::size_t>(w) * h);
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            total += flow_t2s.magnitude(x, y);
            cdf[static_cast<std::size_t>(y) * w + x] = total;
        }
    }
    if (total <= 0.0) {
        throw std::runtime_error("sample_drag_points: no moving pixels in the flow field");
    }

    DragPointSet out;
    out.image_w = w;
    out.image_h = h;
    Rng rng(seed);
    std::vector<std::uint8_t> chosen(cdf.size(), 0);
    const int max_tries = 1000 * k;
    int tries = 0;
    while (static_cast<int>(out.points.size()) < k) {
        if (++tries > max_tries) {
            throw std::runtime_error("sample_drag_points: not enough visible moving pixels");
        }
        const double u = rng.uniform() * total;
        const std::size_t idx = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= cdf.size() || chosen[idx]) continue;
        if (!tracks.visible[idx]) continue;
        chosen[idx] = 1;
        DragPoint p;
        p.tx = static_cast<int>(idx % w);
        p.ty = static_cast<int>(idx / w);
        p.sx = std::clamp(static_cast<int>(std::lround(tracks.px[idx])), 0, w - 1);
        p.sy = std::clamp(static_cast<int>(std::lround(tracks.py[idx])), 0, h - 1);
        out.points.push_back(p);
    }
    out.validate();
    return out;
}

Tensor<float> softmax_splat(const Tensor<float>& source, const FlowField& flow_s2t,
                            const Tensor<float>& importance) {
    if (source.ndim() != 3 || source.dim(0) != 3) throw std::invalid_argument("softmax_splat: need [3,H,W]");
    const int h = source.dim(1), w = source.dim(2);
    if (flow_s2t.direction != FlowField::Direction::source_to_target) {
        throw std::invalid_argument("softmax_splat: flow must be source_to_target");
    }
    if (flow_s2t.width != w || flow_s2t.height != h) {
        throw std::invalid_argument("softmax_splat: flow dims mismatch");
    }
    if (importance.ndim() != 2 || importance.dim(0) != h || importance.dim(1) != w) {
        throw std::invalid_argument("softmax_splat: importance must be [H,W]");
    }

    float max_imp = (*importance.data)[0];
    for (float v : *importance.data) max_imp = std::max(max_imp, v);

    std::vector<double> num(static_cast<std::size_t>(3) * h * w, 0.0);
    std::vector<double> den(static_cast<std::size_t>(h) * w, 0.0);
    const float* sp = source.ptr();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!flow_s2t.valid[i]) continue;
            const double dest_x = x + flow_s2t.dx[i];
            const double dest_y = y + flow_s2t.dy[i];
            const double wexp = std::exp(static_cast<double>((*importance.data)[i]) - max_imp);
            const int x0 = static_cast<int>(std::floor(dest_x));
            const int y0 = static_cast<int>(std::floor(dest_y));
            const double fx = dest_x - x0, fy = dest_y - y0;
            const double wcell[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const int cx[4] = {x0, x0 + 1, x0, x0 + 1};
            const int cy[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int q = 0; q < 4; ++q) {
                if (cx[q] < 0 || cx[q] >= w || cy[q] < 0 || cy[q] >= h || wcell[q] <= 0.0) continue;
                const std::size_t j = static_cast<std::size_t>(cy[q]) * w + cx[q];
                const double ww = wexp * wcell[q];
                den[j] += ww;
                for (int ch = 0; ch < 3; ++ch) {
                    num[static_cast<std::size_t>(ch) * h * w + j] +=
                        ww * sp[static_cast<std::size_t>(ch) * h * w + i];
                }
            }
        }
    }

    Tensor<float> out = Tensor<float>::zeros({3, h, w});
    for (std::size_t j = 0; j < den.size(); ++j) {
        for (int ch = 0; ch < 3; ++ch) {
            const std::size_t idx = static_cast<std::size_t>(ch) * h * w + j;
            (*out.data)[idx] = den[j] > 1e-12 ? static_cast<float>(num[idx] / den[j]) : sp[idx];
        }
    }
    return out;
}

std::map<int, Correspondence> build_correspondence(const TrackSet& tracks,
                                                   const std::vector<int>& strides) {
    std::map<int, Correspondence> out;
    for (int s : strides) {
        if (s < 1 || tracks.width % s != 0 || tracks.height % s != 0) {
            throw std::invalid_argument("build_correspondence: image dims not divisible by stride " +
                                        std::to_string(s));
        }
        Correspondence corr;
        corr.h_tokens = tracks.height / s;
        corr.w_tokens = tracks.width / s;
        const int n = corr.count();
        corr.src_index.assign(n, kNoCorrespondence);
        corr.visible.assign(n, 0);
        for (int r = 0; r < corr.h_tokens; ++r) {
            for (int c = 0; c < corr.w_tokens; ++c) {
                const int px = c * s + s / 2;
                const int py = r * s + s / 2;
                const std::size_t qi = static_cast<std::size_t>(py) * tracks.width + px;
                if (!tracks.visible[qi]) continue;
                // center coordinate of the matched position
                const double mx = tracks.px[qi] + 0.5;
                const double my = tracks.py[qi] + 0.5;
                const int sc = static_cast<int>(std::floor(mx / s));
                const int sr = static_cast<int>(std::floor(my / s));
                if (sc < 0 || sc >= corr.w_tokens || sr < 0 || sr >= corr.h_tokens) continue;
                const int i = r * corr.w_tokens + c;
                corr.src_index[i] = static_cast<std::uint32_t>(sr * corr.w_tokens + sc);
                corr.visible[i] = 1;
            }
        }
        corr.validate();
        out[s] = std::move(corr);
    }
    return out;
}

// ---------------------------------------------------------------------------
// scene randomization and sample assembly
// ---------------------------------------------------------------------------

SyntheticScene make_random_scene(int width, int height, int frame_count, Rng& rng) {
    SyntheticScene scene;
    scene.width = width;
    scene.height = height;
    scene.frame_count = frame_count;
    scene.seed = rng.next_u64();
    scene.bg_texture_seed = rng.next_u64();
    for (auto& c : scene.bg_color) c = static_cast<float>(rng.uniform(0.3, 0.8));
    scene.bg_texture_scale = rng.uniform(7.0, 12.0);

    const int object_count = 1 + rng.below_int(2);
    for (int k = 0; k < object_count; ++k) {
        SceneObject obj;
        const int shape = rng.below_int(3);
        obj.shape = shape == 0 ? ShapeKind::rect : (shape == 1 ? ShapeKind::disk : ShapeKind::triangle);
        obj.half_w = rng.uniform(7.0, 13.0);
        obj.half_h = rng.uniform(7.0, 13.0);
        if (obj.shape == ShapeKind::disk) obj.half_h = obj.half_w;
        for (auto& c : obj.color) c = static_cast<float>(rng.uniform(0.2, 1.0));
        obj.texture_seed = rng.next_u64();
        obj.texture_scale = rng.uniform(4.0, 7.0);

        const double speed = (k == 0) ? rng.uniform(0.45, 0.9) : rng.uniform(0.3, 0.9);
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double vx = speed * std::cos(angle);
        const double vy = speed * std::sin(angle);
        const bool rotates = rng.uniform() < 0.25;
        const double omega = rotates ? rng.uniform(-0.006, 0.006) : 0.0;

        const double travel = speed * frame_count;
        const double margin_x = std::min(obj.half_w + travel + 1.0, width / 2.0 - 1.0);
        const double margin_y = std::min(obj.half_h + travel + 1.0, height / 2.0 - 1.0);
        const double x0 = rng.uniform(margin_x, width - margin_x);
        const double y0 = rng.uniform(margin_y, height - margin_y);

        for (int f = 0; f < frame_count; ++f) {
            obj.frames.push_back(Affine::trs(omega * f, 1.0, x0 + vx * f, y0 + vy * f));
        }
        scene.objects.push_back(std::move(obj));
    }
    scene.validate();
    return scene;
}

SamplePairData generate_pair(const DatagenOptions& opt, std::uint64_t seed) {
    Rng rng(seed);
    for (int attempt = 0; attempt < opt.max_scene_attempts; ++attempt) {
        SyntheticScene scene = make_random_scene(opt.width, opt.height, opt.frame_count, rng);

        // candidate (src, tgt) orderings honoring the interval filter
        std::vector<std::pair<int, int>> accepted;
        std::vector<FlowField> accepted_flow;
        for (int i = 0; i < opt.frame_count; ++i) {
            for (int j = i + opt.filter.min_interval + 1; j < opt.frame_count; ++j) {
                FlowField flow = analytic_flow(scene, j, i, FlowField::Direction::target_to_source);
                if (accept_pair(i, j, flow, opt.filter)) {
                    accepted.emplace_back(i, j);
                    accepted_flow.push_back(std::move(flow));
                }
            }
        }
        if (accepted.empty()) continue;
        const int pick = rng.below_int(static_cast<int>(accepted.size()));
        const auto [src_idx, tgt_idx] = accepted[pick];

        SamplePairData sample;
        sample.source = render_frame(scene, src_idx);
        sample.target = render_frame(scene, tgt_idx);
        sample.flow_t2s = std::move(accepted_flow[pick]);
        sample.flow_s2t = analytic_flow(scene, src_idx, tgt_idx, FlowField::Direction::source_to_target);
        sample.tracks = analytic_tracks(scene, tgt_idx, src_idx);
        sample.corr = build_correspondence(sample.tracks, opt.corr_strides);

        sample.signal.kind = opt.signal;
        switch (opt.signal) {
            case SignalKind::sketch:
                sample.signal.raster = sketch_from_flow(sample.flow_t2s);
                break;
            case SignalKind::drag: {
                const int k = 1 + rng.below_int(4);
                sample.signal.drags = sample_drag_points(sample.flow_t2s, sample.tracks, k, rng.next_u64());
                break;
            }
            case SignalKind::coarse: {
                Tensor<float> importance = Tensor<float>::zeros({opt.height, opt.width});
                sample.signal.raster = softmax_splat(sample.source, sample.flow_s2t, importance);
                break;
            }
        }
        return sample;
    }
    throw std::runtime_error("generate_pair: no acceptable pair after max scene attempts");
}

}  // namespace fpaint
