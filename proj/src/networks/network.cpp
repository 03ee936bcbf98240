#include "stylestruct/network.hpp"

#include <algorithm>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_map>

#include "stylestruct/error.hpp"

namespace stylestruct {

Scale Scale::parse(const std::string& text) {
    if (text == "1" || text == "1.0") return {1};
    if (text == "0.5" || text == "1/2") return {2};
    if (text == "0.25" || text == "1/4") return {4};
    throw ConfigError("unsupported scale '" + text + "' (expected 1, 1/2 or 1/4)");
}

std::string Scale::str() const {
    return divisor == 1 ? "1" : "1/" + std::to_string(divisor);
}

Index Scale::channels(Index full) const {
    return std::max<Index>(8, full / divisor);
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Input: return "input";
        case LayerKind::FullyConnected: return "fc";
        case LayerKind::Reshape: return "reshape";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Conv: return "conv";
        case LayerKind::UConv: return "uconv";
        case LayerKind::BatchNorm: return "bn";
        case LayerKind::Act: return "act";
        case LayerKind::Upsample: return "upsample";
        case LayerKind::MaxPool: return "pool";
        case LayerKind::Concat: return "concat";
    }
    return "?";
}

const char* network_kind_name(NetworkKind k) {
    switch (k) {
        case NetworkKind::StructureGenerator: return "structure_g";
        case NetworkKind::StructureDiscriminator: return "structure_d";
        case NetworkKind::StyleGenerator: return "style_g";
        case NetworkKind::StyleDiscriminator: return "style_d";
        case NetworkKind::Fcn: return "fcn";
    }
    return "?";
}

std::size_t NetworkSpec::count(LayerKind k) const {
    return static_cast<std::size_t>(
        std::count_if(layers.begin(), layers.end(), [k](const LayerSpec& l) { return l.kind == k; }));
}

const LayerSpec& NetworkSpec::layer(const std::string& n) const {
    for (const auto& l : layers)
        if (l.name == n) return l;
    throw ConfigError(name() + ": no layer named '" + n + "'");
}

namespace {

// Small fluent helper so the builders read like the architecture tables.
class Builder {
public:
    Builder(NetworkKind kind, Scale scale) {
        spec_.kind = kind;
        spec_.scale = scale;
    }

    Builder& input(const std::string& name, Index channels, Index side = 0) {
        LayerSpec l;
        l.kind = LayerKind::Input;
        l.name = name;
        l.channels = channels;
        l.height = l.width = side;
        return push(l);
    }
    Builder& fc(const std::string& name, Index out) {
        LayerSpec l;
        l.kind = LayerKind::FullyConnected;
        l.name = name;
        l.channels = out;
        return push(l);
    }
    Builder& reshape(Index c, Index side) {
        LayerSpec l;
        l.kind = LayerKind::Reshape;
        l.name = "reshape" + std::to_string(++counter_);
        l.channels = c;
        l.height = l.width = side;
        l.expect_size = side;
        return push(l);
    }
    Builder& flatten() {
        LayerSpec l;
        l.kind = LayerKind::Flatten;
        l.name = "flatten" + std::to_string(++counter_);
        return push(l);
    }
    Builder& conv(const std::string& name, Index out, int k, int stride, Index expect, int pad = -1) {
        LayerSpec l;
        l.kind = LayerKind::Conv;
        l.name = name;
        l.channels = out;
        l.kernel = k;
        l.stride = stride;
        l.padding = pad >= 0 ? pad : k / 2;
        l.expect_size = expect;
        return push(l);
    }
    // k4 / pad 1 is the combination that yields exactly 2x resolution.
    Builder& uconv(const std::string& name, Index out, Index expect, int k = 4, int pad = 1) {
        LayerSpec l;
        l.kind = LayerKind::UConv;
        l.name = name;
        l.channels = out;
        l.kernel = k;
        l.stride = 2;
        l.padding = pad;
        l.expect_size = expect;
        return push(l);
    }
    Builder& bn() {
        LayerSpec l;
        l.kind = LayerKind::BatchNorm;
        l.name = "bn_" + spec_.layers.back().name;
        return push(l);
    }
    Builder& act(Activation a) {
        LayerSpec l;
        l.kind = LayerKind::Act;
        l.act = a;
        l.name = std::string(activation_name(a)) + "_" + last_weight_;
        return push(l);
    }
    Builder& upsample(const std::string& name, Index side) {
        LayerSpec l;
        l.kind = LayerKind::Upsample;
        l.name = name;
        l.height = l.width = side;
        l.expect_size = side;
        return push(l);
    }
    Builder& pool(const std::string& name, Index expect) {
        LayerSpec l;
        l.kind = LayerKind::MaxPool;
        l.name = name;
        l.kernel = 3;
        l.stride = 2;
        l.padding = 1;
        l.expect_size = expect;
        return push(l);
    }
    Builder& concat(const std::string& name, const std::string& a, const std::string& b, Index expect) {
        LayerSpec l;
        l.kind = LayerKind::Concat;
        l.name = name;
        l.source = a;
        l.source2 = b;
        l.expect_size = expect;
        return push(l);
    }
    // Following layer reads `stream` instead of the previous layer.
    Builder& from(const std::string& stream) {
        pending_source_ = stream;
        return *this;
    }
    Builder& reconstructed() {
        spec_.layers.back().reconstructed = true;
        return *this;
    }
    NetworkSpec build() { return std::move(spec_); }

private:
    Builder& push(LayerSpec l) {
        if (!pending_source_.empty()) {
            l.source = pending_source_;
            pending_source_.clear();
        }
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::UConv || l.kind == LayerKind::FullyConnected)
            last_weight_ = l.name;
        spec_.layers.push_back(std::move(l));
        return *this;
    }

    NetworkSpec spec_;
    std::string pending_source_;
    std::string last_weight_;
    int counter_ = 0;
};

}  // namespace

NetworkSpec build_structure_generator(Scale s) {
    struct Row {
        bool up;
        Index channels;
        int kernel;
    };
    // Columns 2..10 of the generator table.
    const Row table[] = {{true, 128, 4},  {false, 128, 3}, {false, 256, 3}, {false, 512, 3}, {false, 512, 3},
                         {true, 256, 4},  {false, 128, 3}, {true, 64, 4},   {false, 3, 5}};
    // The fc block stays 9x9; below full scale the earliest upsampling layers
    // become stride-1 3x3 convolutions so the output side is 72*s.
    int to_demote = s.divisor == 1 ? 0 : s.divisor == 2 ? 1 : 2;

    Builder b(NetworkKind::StructureGenerator, s);
    const Index c0 = s.channels(64);
    b.input("z", kNoiseDim).fc("fc1", 9 * 9 * c0).reshape(c0, 9).bn().act(Activation::Relu);
    Index side = 9;
    int idx = 2;
    for (const Row& r : table) {
        const bool last = idx == 10;
        const Index ch = last ? 3 : s.channels(r.channels);
        const std::string n = std::to_string(idx);
        if (r.up && to_demote > 0) {
            --to_demote;
            b.conv("conv" + n, ch, 3, 1, side).reconstructed();
        } else if (r.up) {
            side *= 2;
            b.uconv("uconv" + n, ch, side);
        } else {
            b.conv("conv" + n, ch, r.kernel, 1, side);
        }
        if (last) {
            b.act(Activation::Tanh);
        } else {
            b.bn().act(Activation::Relu);
        }
        ++idx;
    }
    return b.build();
}

namespace {

NetworkSpec discriminator(NetworkKind kind, Scale s, bool conditional, const int strides[5]) {
    const Index full_channels[5] = {64, 128, 256, 512, 128};
    const int kernels[5] = {5, 5, 3, 3, 3};
    Builder b(kind, s);
    Index side = conditional ? s.image_size() : s.structure_size();
    if (conditional) {
        b.input("normals", 3, side).input("image", 3, side).concat("concat", "normals", "image", side);
    } else {
        b.input("normals", 3, side);
    }
    for (int i = 0; i < 5; ++i) {
        side = conv_out_size(side, kernels[i], strides[i], kernels[i] / 2);
        b.conv("conv" + std::to_string(i + 1), s.channels(full_channels[i]), kernels[i], strides[i], side)
            .act(Activation::LeakyRelu);
    }
    b.flatten().fc("fc6", 1).act(Activation::Sigmoid);
    return b.build();
}

}  // namespace

NetworkSpec build_structure_discriminator(Scale s) {
    const int strides[5] = {2, 1, 2, 2, 1};
    return discriminator(NetworkKind::StructureDiscriminator, s, false, strides);
}

NetworkSpec build_style_discriminator(Scale s) {
    const int strides[5] = {2, 2, 2, 2, 1};
    return discriminator(NetworkKind::StyleDiscriminator, s, true, strides);
}

NetworkSpec build_style_generator(Scale s) {
    // Only the 32x32x192 concatenation and the 128x128x3 output are fixed by
    // the published figure; per-layer kernels and widths are a reconstruction.
    const Index img = s.image_size();
    const Index mid = img / 4;
    const Index seed_side = mid / 4;
    Builder b(NetworkKind::StyleGenerator, s);
    b.input("normals", 3, img).input("z", kNoiseDim);
    b.from("normals").conv("cond1", s.channels(64), 5, 2, img / 2).reconstructed().bn().act(Activation::Relu);
    b.conv("cond2", s.channels(128), 3, 2, mid).reconstructed().bn().act(Activation::Relu);
    b.from("z").fc("noise1", seed_side * seed_side * s.channels(256)).reconstructed();
    b.reshape(s.channels(256), seed_side).bn().act(Activation::Relu);
    b.uconv("noise2", s.channels(128), seed_side * 2).reconstructed().bn().act(Activation::Relu);
    b.uconv("noise3", s.channels(64), mid).reconstructed().bn().act(Activation::Relu);
    b.concat("concat", "relu_cond2", "relu_noise3", mid);
    b.conv("conv1", s.channels(256), 3, 1, mid).reconstructed().bn().act(Activation::Relu);
    b.conv("conv2", s.channels(256), 3, 1, mid).reconstructed().bn().act(Activation::Relu);
    b.uconv("uconv3", s.channels(256), mid * 2).reconstructed().bn().act(Activation::Relu);
    b.conv("conv4", s.channels(128), 3, 1, mid * 2).reconstructed().bn().act(Activation::Relu);
    b.uconv("uconv5", s.channels(64), img).reconstructed().bn().act(Activation::Relu);
    b.conv("conv6", s.channels(32), 3, 1, img).reconstructed().bn().act(Activation::Relu);
    b.conv("conv7", 3, 5, 1, img).reconstructed().act(Activation::Tanh);
    return b.build();
}

NetworkSpec build_fcn(Scale s) {
    // AlexNet trunk on the 4x upsampled image; the two layers before the
    // scorer are narrowed to 1024 and 512; a stride-2 deconvolution scores
    // the 40 classes and a final 4x bilinear upsampling restores K x K.
    const Index img = s.image_size();
    const Index big = img * 4;
    Builder b(NetworkKind::Fcn, s);
    b.input("image", 3, img).upsample("upsample_in", big);
    b.conv("conv1", s.channels(96), 11, 4, big / 4, 4).bn().act(Activation::Relu);
    b.pool("pool1", big / 8);
    b.conv("conv2", s.channels(256), 5, 1, big / 8).bn().act(Activation::Relu);
    b.pool("pool2", big / 16);
    b.conv("conv3", s.channels(384), 3, 1, big / 16).bn().act(Activation::Relu);
    b.conv("conv4", s.channels(384), 3, 1, big / 16).bn().act(Activation::Relu);
    b.conv("conv5", s.channels(256), 3, 1, big / 16).bn().act(Activation::Relu);
    b.pool("pool5", big / 32);
    b.conv("fc6", s.channels(1024), 3, 1, big / 32).bn().act(Activation::Relu);
    b.conv("fc7", s.channels(512), 1, 1, big / 32).bn().act(Activation::Relu);
    b.uconv("score", kNormalClasses, big / 16);
    b.upsample("upsample_out", img);
    return b.build();
}

NetworkSpec build_network(NetworkKind kind, Scale scale) {
    switch (kind) {
        case NetworkKind::StructureGenerator: return build_structure_generator(scale);
        case NetworkKind::StructureDiscriminator: return build_structure_discriminator(scale);
        case NetworkKind::StyleGenerator: return build_style_generator(scale);
        case NetworkKind::StyleDiscriminator: return build_style_discriminator(scale);
        case NetworkKind::Fcn: return build_fcn(scale);
    }
    throw ConfigError("unknown network kind");
}

namespace {

[[noreturn]] void audit_fail(const NetworkSpec& spec, const LayerSpec& l, const std::string& what) {
    throw ConfigError(spec.name() + " layer '" + l.name + "' (" + layer_kind_name(l.kind) + "): " + what);
}

}  // namespace

std::vector<AuditRow> shape_audit(const NetworkSpec& spec) {
    std::unordered_map<std::string, Shape> streams;
    std::vector<AuditRow> rows;
    std::string prev;
    for (const auto& l : spec.layers) {
        Shape in;
        if (l.kind != LayerKind::Input) {
            const std::string& src = l.source.empty() ? prev : l.source;
            auto it = streams.find(src);
            if (it == streams.end()) audit_fail(spec, l, "reads unknown stream '" + src + "'");
            in = it->second;
        }
        const bool spatial = in.size() == 3;
        Shape out;
        switch (l.kind) {
            case LayerKind::Input:
                out = l.height > 0 ? Shape{l.channels, l.height, l.width} : Shape{l.channels};
                break;
            case LayerKind::FullyConnected:
                if (in.size() != 1) audit_fail(spec, l, "expects a flat input, got " + shape_str(in));
                out = {l.channels};
                break;
            case LayerKind::Reshape:
                if (numel(in) != l.channels * l.height * l.width)
                    audit_fail(spec, l, "cannot reshape " + shape_str(in));
                out = {l.channels, l.height, l.width};
                break;
            case LayerKind::Flatten: out = {numel(in)}; break;
            case LayerKind::Conv: {
                if (!spatial) audit_fail(spec, l, "expects a feature map, got " + shape_str(in));
                if (l.stride < 1) audit_fail(spec, l, "stride must be positive");
                if (in[1] + 2 * l.padding < l.kernel) audit_fail(spec, l, "kernel larger than padded input");
                out = {l.channels, conv_out_size(in[1], l.kernel, l.stride, l.padding),
                       conv_out_size(in[2], l.kernel, l.stride, l.padding)};
                break;
            }
            case LayerKind::UConv: {
                if (!spatial) audit_fail(spec, l, "expects a feature map, got " + shape_str(in));
                if (l.stride != 2) audit_fail(spec, l, "stride " + std::to_string(l.stride) + " where 2(up) is required");
                if (l.kernel - 2 * l.padding != 2)
                    audit_fail(spec, l, "kernel/padding cannot give exact 2x resolution");
                out = {l.channels, in[1] * 2, in[2] * 2};
                break;
            }
            case LayerKind::BatchNorm:
            case LayerKind::Act: out = in; break;
            case LayerKind::Upsample:
                if (!spatial) audit_fail(spec, l, "expects a feature map");
                if (l.height < in[1] || l.width < in[2]) audit_fail(spec, l, "target smaller than input");
                out = {in[0], l.height, l.width};
                break;
            case LayerKind::MaxPool:
                if (!spatial) audit_fail(spec, l, "expects a feature map");
                out = {in[0], conv_out_size(in[1], l.kernel, l.stride, l.padding),
                       conv_out_size(in[2], l.kernel, l.stride, l.padding)};
                break;
            case LayerKind::Concat: {
                auto it = streams.find(l.source2);
                if (it == streams.end()) audit_fail(spec, l, "reads unknown stream '" + l.source2 + "'");
                const Shape& other = it->second;
                if (in.size() != 3 || other.size() != 3 || in[1] != other[1] || in[2] != other[2])
                    audit_fail(spec, l, "spatial mismatch " + shape_str(in) + " vs " + shape_str(other));
                out = {in[0] + other[0], in[1], in[2]};
                break;
            }
        }
        if (l.expect_size > 0 && (out.size() != 3 || out[1] != l.expect_size || out[2] != l.expect_size))
            audit_fail(spec, l, "produces " + shape_str(out) + ", expected side " + std::to_string(l.expect_size));
        rows.push_back({l.name, l.kind, in, out});
        streams[l.name] = out;
        prev = l.name;
    }
    return rows;
}

Shape output_shape(const NetworkSpec& spec) {
    return shape_audit(spec).back().out_shape;
}

std::string format_spec_table(const NetworkSpec& spec) {
    const auto rows = shape_audit(spec);
    std::vector<std::vector<std::string>> cols;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        if (l.kind != LayerKind::Conv && l.kind != LayerKind::UConv && l.kind != LayerKind::FullyConnected)
            continue;
        const auto& r = rows[i];
        const bool fc = l.kind == LayerKind::FullyConnected;
        std::string knum = std::to_string(l.channels);
        if (fc && i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::Reshape) {
            const auto& rs = spec.layers[i + 1];
            knum = std::to_string(rs.height) + "x" + std::to_string(rs.width) + "x" + std::to_string(rs.channels);
        }
        cols.push_back({std::string(layer_kind_name(l.kind)) + (l.reconstructed ? "*" : ""),
                        fc ? "-" : std::to_string(r.in_shape[1]), knum, fc ? "-" : std::to_string(l.kernel),
                        fc ? "-" : (l.kind == LayerKind::UConv ? "2(up)" : std::to_string(l.stride)),
                        fc ? "-" : std::to_string(l.padding), l.name});
    }
    const char* heads[] = {"Layer", "Input Size", "Kernel Number", "Kernel Size", "Stride", "Padding", "Name"};
    std::ostringstream os;
    os << spec.name() << " (scale " << spec.scale.str() << ")\n";
    for (int r = 0; r < 7; ++r) {
        os << std::left << std::setw(14) << heads[r];
        for (const auto& c : cols) os << ' ' << std::setw(9) << c[static_cast<std::size_t>(r)];
        os << '\n';
    }
    return os.str();
}

std::string format_audit(const std::vector<AuditRow>& rows) {
    std::ostringstream os;
    for (const auto& r : rows)
        os << std::left << std::setw(18) << r.layer << std::setw(9) << layer_kind_name(r.kind) << std::setw(16)
           << shape_str(r.in_shape) << " -> " << shape_str(r.out_shape) << '\n';
    return os.str();
}

template <typename T>
Tensor<T>& NetworkParams<T>::at(const std::string& name) {
    for (auto& [n, t] : tensors)
        if (n == name) return t;
    throw ConfigError("no parameter named '" + name + "'");
}

template <typename T>
const Tensor<T>& NetworkParams<T>::at(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw ConfigError("no parameter named '" + name + "'");
}

template <typename T>
bool NetworkParams<T>::contains(const std::string& name) const {
    return std::any_of(tensors.begin(), tensors.end(), [&](const auto& p) { return p.first == name; });
}

template <typename T>
Index NetworkParams<T>::count() const {
    Index n = 0;
    for (const auto& [name, t] : tensors) n += t.size();
    return n;
}

template <typename T>
void NetworkParams<T>::set_trainable(bool on) {
    for (auto& [n, t] : tensors) t.set_requires_grad(on);
}

template <typename T>
void NetworkParams<T>::zero_grad() {
    for (auto& [n, t] : tensors) t.zero_grad();
}

template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
    const auto rows = shape_audit(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.02);
    auto gaussian = [&](Shape shape) {
        std::vector<T> v(static_cast<std::size_t>(numel(shape)));
        for (auto& x : v) x = static_cast<T>(gauss(rng));
        return Tensor<T>(std::move(shape), std::move(v), true);
    };
    NetworkParams<T> p;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        const auto& in = rows[i].in_shape;
        switch (l.kind) {
            case LayerKind::FullyConnected:
                p.tensors.emplace_back(l.name + ".weight", gaussian({in[0], l.channels}));
                p.tensors.emplace_back(l.name + ".bias", Tensor<T>({l.channels}, true));
                break;
            case LayerKind::Conv:
                p.tensors.emplace_back(l.name + ".weight", gaussian({l.channels, in[0], l.kernel, l.kernel}));
                p.tensors.emplace_back(l.name + ".bias", Tensor<T>({l.channels}, true));
                break;
            case LayerKind::UConv:
                p.tensors.emplace_back(l.name + ".weight", gaussian({in[0], l.channels, l.kernel, l.kernel}));
                p.tensors.emplace_back(l.name + ".bias", Tensor<T>({l.channels}, true));
                break;
            case LayerKind::BatchNorm: {
                const Index c = in[0];
                p.tensors.emplace_back(l.name + ".gamma",
                                       Tensor<T>({c}, std::vector<T>(static_cast<std::size_t>(c), T(1)), true));
                p.tensors.emplace_back(l.name + ".beta", Tensor<T>({c}, true));
                p.bn_stats.emplace(l.name, BatchNormStats<T>(c));
                break;
            }
            default: break;
        }
    }
    return p;
}

template <typename T>
Tensor<T> forward(const NetworkSpec& spec, NetworkParams<T>& params,
                  const std::map<std::string, Tensor<T>>& inputs, Mode mode) {
    std::unordered_map<std::string, Tensor<T>> streams;
    std::string prev;
    const Tensor<T> none;
    for (const auto& l : spec.layers) {
        Tensor<T> x;
        if (l.kind != LayerKind::Input) {
            const std::string& src = l.source.empty() ? prev : l.source;
            auto it = streams.find(src);
            if (it == streams.end())
                throw ConfigError(spec.name() + " layer '" + l.name + "' reads unknown stream '" + src + "'");
            x = it->second;
        }
        Tensor<T> y;
        switch (l.kind) {
            case LayerKind::Input: {
                auto it = inputs.find(l.name);
                if (it == inputs.end()) throw ConfigError(spec.name() + ": missing input '" + l.name + "'");
                const Tensor<T>& in = it->second;
                const Shape want = l.height > 0 ? Shape{in.dim(0), l.channels, l.height, l.width}
                                                : Shape{in.dim(0), l.channels};
                if (in.shape() != want)
                    throw ConfigError(spec.name() + ": input '" + l.name + "' has shape " + shape_str(in.shape()) +
                                      ", expected " + shape_str(want));
                y = in;
                break;
            }
            case LayerKind::FullyConnected:
                y = linear(x, params.at(l.name + ".weight"), params.at(l.name + ".bias"));
                break;
            case LayerKind::Reshape: y = reshape(x, {x.dim(0), l.channels, l.height, l.width}); break;
            case LayerKind::Flatten: y = reshape(x, {x.dim(0), x.size() / x.dim(0)}); break;
            case LayerKind::Conv:
                y = conv2d(x, params.at(l.name + ".weight"), params.at(l.name + ".bias"), l.stride, l.padding);
                break;
            case LayerKind::UConv:
                y = conv_transpose2d(x, params.at(l.name + ".weight"), params.at(l.name + ".bias"), l.stride,
                                     l.padding);
                break;
            case LayerKind::BatchNorm:
                y = batch_norm(x, params.at(l.name + ".gamma"), params.at(l.name + ".beta"),
                               params.bn_stats.at(l.name), mode == Mode::Train);
                break;
            case LayerKind::Act: y = activate(x, l.act); break;
            case LayerKind::Upsample: y = resize_bilinear(x, l.height, l.width); break;
            case LayerKind::MaxPool: y = max_pool2d(x, l.kernel, l.stride, l.padding); break;
            case LayerKind::Concat: {
                auto it = streams.find(l.source2);
                if (it == streams.end())
                    throw ConfigError(spec.name() + " layer '" + l.name + "' reads unknown stream '" + l.source2 + "'");
                y = concat_channels(x, it->second);
                break;
            }
        }
        streams[l.name] = y;
        prev = l.name;
    }
    return streams.at(prev);
}

template struct NetworkParams<float>;
template struct NetworkParams<double>;
template NetworkParams<float> init_params<float>(const NetworkSpec&, std::uint64_t);
template NetworkParams<double> init_params<double>(const NetworkSpec&, std::uint64_t);
template Tensor<float> forward(const NetworkSpec&, NetworkParams<float>&, const std::map<std::string, Tensor<float>>&,
                               Mode);
template Tensor<double> forward(const NetworkSpec&, NetworkParams<double>&,
                                const std::map<std::string, Tensor<double>>&, Mode);

}  // namespace stylestruct
