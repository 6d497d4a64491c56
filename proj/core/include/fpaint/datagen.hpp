#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "fpaint/control.hpp"
#include "fpaint/correspondence.hpp"
#include "fpaint/rng.hpp"
#include "fpaint/sampler.hpp"
#include "fpaint/tensor.hpp"

namespace fpaint {

// ---------------------------------------------------------------------------
// synthetic scenes with analytic motion ground truth
// ---------------------------------------------------------------------------

// row-major 2x3 affine [a b tx; c d ty], mapping object-local coords to canvas
struct Affine {
    double a = 1, b = 0, tx = 0;
    double c = 0, d = 1, ty = 0;

    std::pair<double, double> apply(double x, double y) const {
        return {a * x + b * y + tx, c * x + d * y + ty};
    }
    Affine inverse() const;
    static Affine translation(double x, double y) { return Affine{1, 0, x, 0, 1, y}; }
    static Affine trs(double angle, double scale, double x, double y);
    double det() const { return a * d - b * c; }
};

enum class ShapeKind { rect, disk, triangle };

struct SceneObject {
    ShapeKind shape = ShapeKind::rect;
    double half_w = 8, half_h = 8;  // local extents; disk uses half_w as radius
    std::array<float, 3> color{1.f, 1.f, 1.f};
    std::uint64_t texture_seed = 0;
    double texture_scale = 6.0;
    double texture_amp = 0.75;  // contrast; low values give near-band-limited imagery
    std::vector<Affine> frames;  // local -> canvas per frame
};

struct SyntheticScene {
    int width = 64, height = 64;
    int frame_count = 0;
    std::uint64_t seed = 0;
    std::array<float, 3> bg_color{0.5f, 0.5f, 0.5f};
    std::uint64_t bg_texture_seed = 0;
    double bg_texture_scale = 9.0;
    double bg_texture_amp = 0.75;
    std::vector<SceneObject> objects;  // later entries render on top

    void validate() const;
};

struct FlowField {
    enum class Direction { target_to_source, source_to_target };
    int width = 0, height = 0;
    Direction direction = Direction::target_to_source;
    std::vector<float> dx, dy;          // zero where invalid
    std::vector<std::uint8_t> valid;

    float magnitude(int x, int y) const {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        return std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
    }
};

// per query pixel of one frame: matched position in the other frame
struct TrackSet {
    int width = 0, height = 0;
    std::vector<float> px, py;
    std::vector<std::uint8_t> visible;
};

struct SceneRender {
    std::vector<Tensor<float>> frames;  // [3,H,W] each
};

// scene construction and rendering
SyntheticScene make_random_scene(int width, int height, int frame_count, Rng& rng);
Tensor<float> render_frame(const SyntheticScene& scene, int frame);
SceneRender render_scene(const SyntheticScene& scene);
// topmost object index per pixel, -1 for background
std::vector<int> ownership_map(const SyntheticScene& scene, int frame);

// analytic motion between two frames; the flow maps each pixel of
// `from_frame` to its position in `to_frame`, flagged invalid when occluded
// there or off canvas
FlowField analytic_flow(const SyntheticScene& scene, int from_frame, int to_frame,
                        FlowField::Direction label);
TrackSet analytic_tracks(const SyntheticScene& scene, int query_frame, int other_frame);

// ---------------------------------------------------------------------------
// estimated flow (exhaustive block matching)
// ---------------------------------------------------------------------------

// per-block SSD search within +-radius; ties break toward the smaller
// displacement so identical images give exactly zero flow
FlowField estimate_flow_block_matching(const Tensor<float>& src, const Tensor<float>& tgt, int block,
                                       int radius);

// ---------------------------------------------------------------------------
// pair filtering and signal extraction
// ---------------------------------------------------------------------------

struct PairFilter {
    double tau_lo = 2.0;    // px
    double tau_hi = 16.0;   // px
    int min_interval = 5;   // frames; strictly greater than
};

// mean flow magnitude over pixels moving > 0.5 px; empty set counts as 0
double mean_moving_flow(const FlowField& flow);
bool accept_pair(int src_frame, int tgt_frame, const FlowField& flow_t2s, const PairFilter& filter);

// Sobel edges of the flow-magnitude field, thresholded at
// threshold_frac * max gradient magnitude; empty when the flow is zero
Tensor<float> sketch_from_flow(const FlowField& flow_t2s, double threshold_frac = 0.5);

// k target pixels drawn without replacement with probability proportional to
// flow magnitude, paired through the tracks; invisible picks are redrawn
DragPointSet sample_drag_points(const FlowField& flow_t2s, const TrackSet& tracks, int k,
                                std::uint64_t seed);

// forward-warp the source with softmax-weighted bilinear splatting; cells
// nobody reaches are filled from the source image
Tensor<float> softmax_splat(const Tensor<float>& source, const FlowField& flow_s2t,
                            const Tensor<float>& importance);

// target-token-center tracks quantized to source tokens, one Correspondence
// per requested pixel stride
std::map<int, Correspondence> build_correspondence(const TrackSet& tracks,
                                                   const std::vector<int>& strides);

// ---------------------------------------------------------------------------
// full sample assembly
// ---------------------------------------------------------------------------

struct SamplePairData {
    Tensor<float> source, target;  // [3,H,W]
    EditSignal signal;
    std::map<int, Correspondence> corr;  // keyed by token stride
    FlowField flow_t2s, flow_s2t;
    TrackSet tracks;  // target -> source
};

struct DatagenOptions {
    int width = 64, height = 64;
    int frame_count = 12;
    SignalKind signal = SignalKind::sketch;
    PairFilter filter;
    std::vector<int> corr_strides = {8, 16};
    int max_scene_attempts = 64;
};

// one accepted sample; deterministic given the seed
SamplePairData generate_pair(const DatagenOptions& opt, std::uint64_t seed);

}  // namespace fpaint
